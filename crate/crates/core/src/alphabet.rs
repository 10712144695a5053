//! Binary alphabet and finite words over it.

use std::fmt;
use std::ops::Deref;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Symbol {
    Zero,
    One,
}

impl Symbol {
    pub const ALL: [Symbol; 2] = [Symbol::Zero, Symbol::One];

    pub fn from_bit(bit: bool) -> Self {
        if bit {
            Symbol::One
        } else {
            Symbol::Zero
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn complement(self) -> Self {
        match self {
            Symbol::Zero => Symbol::One,
            Symbol::One => Symbol::Zero,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Symbol::Zero => '0',
            Symbol::One => '1',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            '0' => Some(Symbol::Zero),
            '1' => Some(Symbol::One),
            _ => None,
        }
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

/// A finite sequence `x_1 .. x_n` of symbols; the empty word is a valid past.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(Vec<Symbol>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn push(&mut self, s: Symbol) {
        self.0.push(s);
    }

    /// `self` followed by `s`.
    pub fn extended(&self, s: Symbol) -> Word {
        let mut w = self.clone();
        w.push(s);
        w
    }

    pub fn prefix(&self, n: usize) -> Word {
        Word(self.0[..n.min(self.0.len())].to_vec())
    }

    pub fn as_slice(&self) -> &[Symbol] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<Symbol> {
        self.0
    }

    /// Every word of length `n`, in lexicographic order.
    pub fn all_of_length(n: usize) -> impl Iterator<Item = Word> {
        assert!(n < 64, "word enumeration limited to n < 64");
        (0u64..1 << n).map(move |bits| {
            (0..n)
                .map(|i| Symbol::from_bit(bits >> (n - 1 - i) & 1 == 1))
                .collect()
        })
    }
}

impl Deref for Word {
    type Target = [Symbol];

    fn deref(&self) -> &[Symbol] {
        &self.0
    }
}

impl From<Vec<Symbol>> for Word {
    fn from(v: Vec<Symbol>) -> Self {
        Word(v)
    }
}

impl FromIterator<Symbol> for Word {
    fn from_iter<I: IntoIterator<Item = Symbol>>(iter: I) -> Self {
        Word(iter.into_iter().collect())
    }
}

impl<'a> IntoIterator for &'a Word {
    type Item = &'a Symbol;
    type IntoIter = std::slice::Iter<'a, Symbol>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.0 {
            write!(f, "{}", s.as_char())?;
        }
        Ok(())
    }
}

impl FromStr for Word {
    type Err = Error;

    /// Parses a bitstring such as `"0110"`; the empty string is the empty word.
    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .enumerate()
            .map(|(i, c)| Symbol::from_char(c).ok_or(Error::InvalidSymbol { found: c, offset: i }))
            .collect()
    }
}
