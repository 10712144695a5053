//! Deterministic binary sequence sources: the fixed sequence `x` that a Dirac
//! measure sits on and that parameterises the chain-induced measure.

use std::fmt;
use std::path::{Path, PathBuf};

use rand::RngCore;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use crate::alphabet::{Symbol, Word};
use crate::error::{domain, Error, Result};

/// A rule for an infinite (or, for files, finite) binary sequence, indexed from 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SequenceSource {
    /// `pattern` repeated forever.
    Periodic(Word),
    /// Binary expansions of 0, 1, 2, 3, ... concatenated: `0 1 10 11 100 ...`.
    Champernowne,
    /// Fair coin flips from a ChaCha8 stream; random access by position.
    CoinFlips { seed: u64 },
    /// Symbols read from a file (see [`SequenceSource::from_file`]).
    File { path: PathBuf, symbols: Word },
    /// A finite word held in memory, e.g. a constructed adversarial sequence.
    Explicit(Word),
}

impl SequenceSource {
    pub fn periodic(pattern: Word) -> Result<Self> {
        if pattern.is_empty() {
            return domain("periodic pattern must be non-empty");
        }
        Ok(SequenceSource::Periodic(pattern))
    }

    /// Loads a sequence file: one ASCII `'0'`/`'1'` per symbol, lines joined,
    /// anything but digits and `'\n'` rejected.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read(path)?;
        let symbols = parse_sequence_bytes(&text)?;
        Ok(SequenceSource::File {
            path: path.to_path_buf(),
            symbols,
        })
    }

    /// Number of available symbols, `None` when unbounded.
    pub fn len(&self) -> Option<u64> {
        match self {
            SequenceSource::File { symbols, .. } | SequenceSource::Explicit(symbols) => {
                Some(symbols.len() as u64)
            }
            _ => None,
        }
    }

    /// True only for a finite source with no symbols.
    pub fn is_empty(&self) -> bool {
        self.len() == Some(0)
    }

    /// `x_t` for `t >= 1`.
    pub fn symbol_at(&self, t: u64) -> Result<Symbol> {
        if t == 0 {
            return domain("sequence positions start at 1");
        }
        let i = t - 1;
        Ok(match self {
            SequenceSource::Periodic(p) => p[(i % p.len() as u64) as usize],
            SequenceSource::Champernowne => champernowne_bit(i),
            SequenceSource::CoinFlips { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                rng.set_word_pos(u128::from(i / 32));
                Symbol::from_bit(rng.next_u32() >> (i % 32) & 1 == 1)
            }
            SequenceSource::File { symbols, .. } | SequenceSource::Explicit(symbols) => {
                *symbols.get(i as usize).ok_or(Error::SourceExhausted {
                    requested: t,
                    available: symbols.len() as u64,
                })?
            }
        })
    }

    /// `x_1 .. x_n`.
    pub fn prefix(&self, n: usize) -> Result<Word> {
        match self {
            SequenceSource::CoinFlips { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let mut out = Vec::with_capacity(n);
                while out.len() < n {
                    let word = rng.next_u32();
                    let take = (n - out.len()).min(32);
                    out.extend((0..take).map(|b| Symbol::from_bit(word >> b & 1 == 1)));
                }
                Ok(out.into())
            }
            SequenceSource::File { symbols, .. } | SequenceSource::Explicit(symbols) => {
                if symbols.len() < n {
                    return Err(Error::SourceExhausted {
                        requested: n as u64,
                        available: symbols.len() as u64,
                    });
                }
                Ok(symbols.prefix(n))
            }
            _ => (1..=n as u64).map(|t| self.symbol_at(t)).collect(),
        }
    }
}

impl fmt::Display for SequenceSource {
    /// Same grammar the CLI parses: `periodic:<bits>`, `champernowne`,
    /// `coin:<seed>`, `file:<path>`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SequenceSource::Periodic(p) => write!(f, "periodic:{p}"),
            SequenceSource::Champernowne => write!(f, "champernowne"),
            SequenceSource::CoinFlips { seed } => write!(f, "coin:{seed}"),
            SequenceSource::File { path, .. } => write!(f, "file:{}", path.display()),
            SequenceSource::Explicit(w) => write!(f, "explicit:{}", w.len()),
        }
    }
}

fn parse_sequence_bytes(bytes: &[u8]) -> Result<Word> {
    let mut out = Vec::with_capacity(bytes.len());
    for (offset, &b) in bytes.iter().enumerate() {
        match b {
            b'0' => out.push(Symbol::Zero),
            b'1' => out.push(Symbol::One),
            b'\n' => {}
            other => {
                return Err(Error::InvalidSymbol {
                    found: other as char,
                    offset,
                })
            }
        }
    }
    Ok(out.into())
}

/// Bit `i` (0-based) of the binary Champernowne word.
fn champernowne_bit(i: u64) -> Symbol {
    // "0" occupies position 0; then 2^(k-1) numbers of k bits each.
    if i == 0 {
        return Symbol::Zero;
    }
    let mut rest = i - 1;
    let mut k: u32 = 1;
    loop {
        let block = (1u128 << (k - 1)) * u128::from(k);
        if u128::from(rest) < block {
            let number = (1u64 << (k - 1)) + rest / u64::from(k);
            let bit = k - 1 - (rest % u64::from(k)) as u32;
            return Symbol::from_bit(number >> bit & 1 == 1);
        }
        rest -= block as u64;
        k += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    #[test]
    fn periodic_prefix() {
        let src = SequenceSource::periodic(w("01")).unwrap();
        assert_eq!(src.prefix(4).unwrap(), w("0101"));
        assert_eq!(src.prefix(0).unwrap(), Word::empty());
        assert!(SequenceSource::periodic(Word::empty()).is_err());
    }

    #[test]
    fn champernowne_matches_concatenation() {
        let expected: String = (0u32..300).map(|k| format!("{k:b}")).collect();
        let got = SequenceSource::Champernowne.prefix(expected.len()).unwrap();
        assert_eq!(got.to_string(), expected);
        assert_eq!(SequenceSource::Champernowne.symbol_at(3).unwrap(), Symbol::One);
    }

    #[test]
    fn coin_random_access_matches_stream() {
        let src = SequenceSource::CoinFlips { seed: 11 };
        let prefix = src.prefix(200).unwrap();
        for t in 1..=200u64 {
            assert_eq!(src.symbol_at(t).unwrap(), prefix[t as usize - 1]);
        }
    }

    #[test]
    fn coin_seed_7_regression_anchor() {
        let src = SequenceSource::CoinFlips { seed: 7 };
        assert_eq!(src.prefix(5).unwrap().to_string(), COIN_SEED_7_PREFIX_5);
    }

    const COIN_SEED_7_PREFIX_5: &str = "11011";

    #[test]
    fn file_source_rules() {
        let dir = tempfile::tempdir().unwrap();
        let good = dir.path().join("x.txt");
        std::fs::write(&good, "0110\n10\n").unwrap();
        let src = SequenceSource::from_file(&good).unwrap();
        assert_eq!(src.prefix(6).unwrap(), w("011010"));
        assert_eq!(src.len(), Some(6));
        assert!(matches!(
            src.prefix(7),
            Err(Error::SourceExhausted { requested: 7, available: 6 })
        ));
        assert!(matches!(src.symbol_at(7), Err(Error::SourceExhausted { .. })));

        let bad = dir.path().join("bad.txt");
        std::fs::write(&bad, "01\r\n").unwrap();
        assert!(matches!(
            SequenceSource::from_file(&bad),
            Err(Error::InvalidSymbol { found: '\r', offset: 2 })
        ));
    }

    #[test]
    fn zero_position_is_rejected() {
        assert!(SequenceSource::Champernowne.symbol_at(0).is_err());
    }

    #[test]
    fn independent_instances_agree_on_long_prefixes() {
        for make in [
            || SequenceSource::Champernowne,
            || SequenceSource::CoinFlips { seed: 3 },
            || SequenceSource::Periodic(Word::from(vec![Symbol::One, Symbol::Zero, Symbol::Zero])),
        ] {
            assert_eq!(make().prefix(100_000).unwrap(), make().prefix(100_000).unwrap());
        }
    }
}
