//! Base-2 log-probabilities and certified probability enclosures.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Mul;

use serde::{Deserialize, Serialize};

/// `log2` of a probability, in bits. Probability zero is the distinguished
/// [`LogProb::IMPOSSIBLE`] value (negative infinity).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogProb(f64);

impl LogProb {
    pub const IMPOSSIBLE: LogProb = LogProb(f64::NEG_INFINITY);
    pub const CERTAIN: LogProb = LogProb(0.0);

    /// Wraps a `log2` value; positive values are clamped to 0.
    pub fn from_log2(value: f64) -> Self {
        assert!(!value.is_nan(), "log-probability must not be NaN");
        LogProb(value.min(0.0))
    }

    pub fn from_prob(p: f64) -> Self {
        assert!((0.0..=1.0).contains(&p), "probability {p} outside [0, 1]");
        LogProb(p.log2())
    }

    pub fn log2(self) -> f64 {
        self.0
    }

    pub fn prob(self) -> f64 {
        self.0.exp2()
    }

    /// Information content `-log2 p`, in bits; `+inf` for the impossible event.
    pub fn surprisal(self) -> f64 {
        -self.0
    }

    pub fn is_impossible(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }

    /// `log2(2^a + 2^b)`; the impossible element is the identity.
    pub fn sum(self, other: LogProb) -> LogProb {
        let (hi, lo) = if self.0 >= other.0 {
            (self.0, other.0)
        } else {
            (other.0, self.0)
        };
        if lo == f64::NEG_INFINITY {
            return LogProb(hi);
        }
        LogProb::from_log2(hi + (lo - hi).exp2().ln_1p() / std::f64::consts::LN_2)
    }
}

impl Mul for LogProb {
    type Output = LogProb;

    /// Product of probabilities; impossible is absorbing.
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn mul(self, rhs: LogProb) -> LogProb {
        LogProb(self.0 + rhs.0)
    }
}

impl PartialOrd for LogProb {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.0.partial_cmp(&other.0)
    }
}

impl fmt::Display for LogProb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "2^{}", self.0)
    }
}

/// Certified enclosure `[lower, upper]` of a probability. The width is kept
/// in linear space alongside the log bounds, since it is usually far below
/// the rounding of `2^upper`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogInterval {
    lower: LogProb,
    upper: LogProb,
    width: f64,
}

impl LogInterval {
    pub fn new(lower: LogProb, upper: LogProb) -> Self {
        let width = upper.prob() - lower.prob();
        Self::with_width(lower, upper, width)
    }

    pub fn with_width(lower: LogProb, upper: LogProb, width: f64) -> Self {
        assert!(lower <= upper, "enclosure lower {lower} exceeds upper {upper}");
        Self {
            lower,
            upper,
            width: width.max(0.0),
        }
    }

    /// Enclosure from linear-space bounds; `upper` is clamped to 1.
    pub fn from_probs(lower: f64, upper: f64) -> Self {
        let (lower, upper) = (lower.max(0.0), upper.min(1.0));
        Self::with_width(LogProb::from_prob(lower), LogProb::from_prob(upper), upper - lower)
    }

    pub fn lower(&self) -> LogProb {
        self.lower
    }

    pub fn upper(&self) -> LogProb {
        self.upper
    }

    /// `upper - lower` in probability space.
    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower.prob() + self.upper.prob())
    }

    pub fn contains(&self, p: f64) -> bool {
        self.lower.prob() <= p && p <= self.upper.prob()
    }

    pub fn intersects(&self, other: &LogInterval) -> bool {
        self.lower <= other.upper && other.lower <= self.upper
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn impossible_is_saturating() {
        let half = LogProb::from_prob(0.5);
        assert_eq!(half.sum(LogProb::IMPOSSIBLE), half);
        assert_eq!(LogProb::IMPOSSIBLE.sum(half), half);
        assert!((half * LogProb::IMPOSSIBLE).is_impossible());
        assert!(LogProb::IMPOSSIBLE.sum(LogProb::IMPOSSIBLE).is_impossible());
        assert_eq!(LogProb::IMPOSSIBLE.surprisal(), f64::INFINITY);
    }

    #[test]
    fn halves_sum_to_certain() {
        let half = LogProb::from_prob(0.5);
        assert_eq!(half.sum(half), LogProb::CERTAIN);
    }

    proptest! {
        #[test]
        fn complementary_pair_sums_to_one(p in 0.0f64..=1.0) {
            let s = LogProb::from_prob(p).sum(LogProb::from_prob(1.0 - p));
            prop_assert!((s.prob() - 1.0).abs() <= 2f64.powi(-40));
        }

        #[test]
        fn interval_contains_its_midpoint(a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            let iv = LogInterval::from_probs(a.min(b), a.max(b));
            prop_assert!(iv.width() >= 0.0);
            prop_assert!(iv.contains(iv.midpoint()) || iv.width() < 1e-15);
        }
    }
}
