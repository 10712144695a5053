//! The up-or-reset chain on states `1, 2, 3, ...`.
//!
//! From state `j` the chain moves to `j + 1` with probability
//! `p_j = j^2 / (j + 1)^2` and back to `1` otherwise. The first return to
//! state 1 after exactly `n` steps has probability
//! `f(n) = (1 - p_n) * prod_{i<n} p_i = (2n + 1) / (n^2 (n + 1)^2)`, the
//! expected return time is `pi^2 / 6`, and the stationary law is
//! `pi_j = pi_1 / j^2` with `pi_1 = 6 / pi^2` (expected visits to `j` per
//! excursion from 1 equal `prod_{i<j} p_i = 1 / j^2`).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{domain, Result};
use crate::scalar::{compensated_sum, CompensatedSum, Real, Scalar};

fn from_u64<T: Scalar>(v: u64) -> T {
    T::from_u64(v).expect("u64 converts into every supported scalar")
}

fn check_state(j: u64) -> Result<()> {
    if j < 1 {
        return domain("chain states start at 1");
    }
    Ok(())
}

/// `p_j = j^2 / (j + 1)^2`, the probability of stepping from `j` to `j + 1`.
pub fn transition_prob<T: Scalar>(j: u64) -> Result<T> {
    check_state(j)?;
    let r = from_u64::<T>(j) / from_u64::<T>(j + 1);
    Ok(r.clone() * r)
}

/// `1 - p_j = (2j + 1) / (j + 1)^2`, the probability of resetting to state 1.
pub fn reset_prob<T: Scalar>(j: u64) -> Result<T> {
    check_state(j)?;
    let jp1 = from_u64::<T>(j + 1);
    Ok(from_u64::<T>(2 * j + 1) / jp1.clone() / jp1)
}

/// Probability that the chain started at 1 first returns to 1 after exactly `n` steps.
pub fn first_return_prob<T: Scalar>(n: u64) -> Result<T> {
    if n < 1 {
        return domain("first-return time must be at least 1");
    }
    let nn = from_u64::<T>(n);
    Ok(reset_prob::<T>(n)? / nn.clone() / nn)
}

/// `pi_j / pi_1 = 1 / j^2`; exact for rational scalars.
pub fn relative_stationary_weight<T: Scalar>(j: u64) -> Result<T> {
    check_state(j)?;
    let jj = from_u64::<T>(j);
    Ok(T::one() / jj.clone() / jj)
}

/// `pi_1 = 6 / pi^2`.
pub fn stationary_first<T: Real>() -> T {
    let six = T::from_u64(6).unwrap();
    six / (T::PI() * T::PI())
}

/// Truncated sum of `n f(n)` with two remainder certificates.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MeanReturnTime<T> {
    pub terms: u64,
    pub partial_sum: T,
    /// `sum_{n>N} 3 / n^2 <= 3 / N`, from `n f(n) < 3 / n^2`.
    pub remainder_bound: T,
    /// Integral-test enclosure of the exact remainder (the summand decreases).
    pub tail_lower: T,
    pub tail_upper: T,
}

impl<T: Real> MeanReturnTime<T> {
    pub fn estimate(&self) -> T {
        self.partial_sum + (self.tail_lower + self.tail_upper) / (T::one() + T::one())
    }

    /// `[partial + tail_lower, partial + tail_upper]`.
    pub fn enclosure(&self) -> (T, T) {
        (self.partial_sum + self.tail_lower, self.partial_sum + self.tail_upper)
    }
}

/// `sum_{n=1}^{N} n f(n)`; the limit is `pi^2 / 6`.
pub fn mean_return_time<T: Real>(terms: u64) -> Result<MeanReturnTime<T>> {
    if terms < 1 {
        return domain("mean return time needs at least one term");
    }
    let partial_sum = compensated_sum((1..=terms).map(|n| {
        let nf = T::from_u64(n).unwrap();
        nf * first_return_prob::<T>(n).unwrap()
    }));
    // int_a^inf n f(n) dn = ln(1 + 1/a) + 1/(a + 1)
    let tail_integral = |a: u64| {
        let a = T::from_u64(a).unwrap();
        (T::one() / a).ln_1p() + T::one() / (a + T::one())
    };
    let n = T::from_u64(terms).unwrap();
    Ok(MeanReturnTime {
        terms,
        partial_sum,
        remainder_bound: T::from_u64(3).unwrap() / n,
        tail_lower: tail_integral(terms + 1),
        tail_upper: tail_integral(terms),
    })
}

/// `sum_{n=1}^{N} f(n)`, which equals `1 - 1/(N+1)^2`.
pub fn first_return_mass<T: Real>(terms: u64) -> T {
    compensated_sum((1..=terms).map(|n| first_return_prob::<T>(n).unwrap()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Origin {
    StationaryStart,
    FixedStart(u64),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StatePath {
    pub states: Vec<u64>,
    pub origin: Origin,
}

impl StatePath {
    /// Gaps between consecutive visits to state 1.
    pub fn return_times(&self) -> Vec<u64> {
        let visits: Vec<usize> = self
            .states
            .iter()
            .enumerate()
            .filter(|(_, &s)| s == 1)
            .map(|(i, _)| i)
            .collect();
        visits.windows(2).map(|w| (w[1] - w[0]) as u64).collect()
    }

    pub fn obeys_support(&self) -> bool {
        self.states.iter().all(|&s| s >= 1)
            && self.states.windows(2).all(|w| w[1] == w[0] + 1 || w[1] == 1)
    }
}

/// The chain together with the truncation level used for enclosures and for
/// stationary-start sampling.
#[derive(Debug, Clone)]
pub struct ChainSpec<T: Real = f64> {
    truncation: usize,
    _scalar: std::marker::PhantomData<T>,
}

impl<T: Real> ChainSpec<T> {
    pub const DEFAULT_MEASURE_TRUNCATION: usize = 10_000;
    pub const DEFAULT_CONSTANT_TRUNCATION: usize = 1_000_000;

    pub fn new(truncation: usize) -> Result<Self> {
        if truncation < 1 {
            return domain("truncation level must be at least 1");
        }
        Ok(Self {
            truncation,
            _scalar: std::marker::PhantomData,
        })
    }

    /// Largest explicitly represented state `J`.
    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn transition_prob(&self, j: u64) -> Result<T> {
        transition_prob(j)
    }

    pub fn reset_prob(&self, j: u64) -> Result<T> {
        reset_prob(j)
    }

    pub fn first_return_prob(&self, n: u64) -> Result<T> {
        first_return_prob(n)
    }

    pub fn pi1(&self) -> T {
        stationary_first()
    }

    /// `pi_j = pi_1 / j^2`.
    pub fn stationary_weight(&self, j: u64) -> Result<T> {
        Ok(self.pi1() * relative_stationary_weight::<T>(j)?)
    }

    /// Upper bound `pi_1 / J` on the stationary mass above `J`
    /// (`sum_{j>J} j^-2 < 1/J`, with slack `~1/(2J^2)` that dwarfs rounding).
    pub fn tail_mass_bound(&self) -> T {
        self.pi1() / T::from_usize_lossy(self.truncation)
    }

    /// `|pi_1 - sum_{j<=J} pi_j (1 - p_j)|`, the inflow balance at state 1.
    pub fn reset_balance_residual(&self) -> T {
        let inflow = compensated_sum((1..=self.truncation as u64).map(|j| {
            self.stationary_weight(j).unwrap() * reset_prob::<T>(j).unwrap()
        }));
        (self.pi1() - inflow).abs()
    }

    /// `|pi_{j+1} - pi_j p_j|`, the balance at state `j + 1`.
    pub fn step_balance_residual(&self, j: u64) -> Result<T> {
        Ok((self.stationary_weight(j + 1)? - self.stationary_weight(j)? * transition_prob::<T>(j)?).abs())
    }

    /// Sum of `pi_j` over `j <= J`.
    pub fn truncated_mass(&self) -> T {
        compensated_sum((1..=self.truncation as u64).map(|j| self.stationary_weight(j).unwrap()))
    }

    /// Enclosure of `pi_1 = 1 / E[return time]` from the mean-return-time enclosure.
    pub fn pi1_from_return_time(&self, terms: u64) -> Result<(T, T)> {
        let (lo, hi) = mean_return_time::<T>(terms)?.enclosure();
        Ok((T::one() / hi, T::one() / lo))
    }

    pub fn stationary_sampler(&self) -> StationarySampler {
        StationarySampler::new(self.truncation)
    }

    /// A path of `steps` states, deterministic given `seed`.
    pub fn sample_path(&self, origin: Origin, steps: usize, seed: u64) -> Result<StatePath> {
        if steps < 1 {
            return domain("a path has at least one state");
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let first = match origin {
            Origin::FixedStart(j) => {
                check_state(j)?;
                j
            }
            Origin::StationaryStart => self.stationary_sampler().sample(&mut rng),
        };
        let mut states = Vec::with_capacity(steps);
        states.push(first);
        let mut s = first;
        for _ in 1..steps {
            s = step(s, &mut rng);
            states.push(s);
        }
        Ok(StatePath { states, origin })
    }
}

/// One transition from state `s`.
pub fn step<R: Rng>(s: u64, rng: &mut R) -> u64 {
    let p: f64 = transition_prob(s).unwrap();
    if rng.gen::<f64>() < p {
        s + 1
    } else {
        1
    }
}

/// Draws states from `pi`: inverse CDF over `1..=J`, and an exact rejection
/// sampler for the lumped tail `j > J`.
#[derive(Debug, Clone)]
pub struct StationarySampler {
    cdf: Vec<f64>,
}

impl StationarySampler {
    pub fn new(truncation: usize) -> Self {
        let pi1 = stationary_first::<f64>();
        let mut acc = CompensatedSum::new();
        let cdf = (1..=truncation as u64)
            .map(|j| {
                acc.add(pi1 / (j as f64 * j as f64));
                acc.total()
            })
            .collect();
        Self { cdf }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> u64 {
        let u: f64 = rng.gen();
        let idx = self.cdf.partition_point(|&c| c <= u);
        if idx < self.cdf.len() {
            return idx as u64 + 1;
        }
        self.sample_tail(rng)
    }

    /// `j > J` with probability proportional to `1/j^2`. Proposal
    /// `q(j) = J / ((j-1) j)` has `P(j > m) = J/m`; accept with `(j-1)/j`.
    fn sample_tail<R: Rng>(&self, rng: &mut R) -> u64 {
        let big_j = self.cdf.len() as f64;
        loop {
            let u: f64 = 1.0 - rng.gen::<f64>();
            let j = (big_j / u).ceil().max(big_j + 1.0);
            if j >= u64::MAX as f64 {
                continue;
            }
            if rng.gen::<f64>() * j < j - 1.0 {
                return j as u64;
            }
        }
    }
}
