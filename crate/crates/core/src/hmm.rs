//! The stationary measure `mu_x`: the chain started from its stationary law,
//! observed through `g_x(j) = x_j`.
//!
//! Marginals come from a forward recursion over states `1..=J + t`. Initial
//! states above `J` are dropped and their stationary mass, at most
//! `pi_1 / J`, is carried as `dropped` so every marginal is enclosed in
//! `[sum w, sum w + dropped]`.

use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::alphabet::{Symbol, Word};
use crate::chain::{self, ChainSpec, StationarySampler};
use crate::error::{domain, Error, Result};
use crate::logprob::{LogInterval, LogProb};
use crate::predictor::{NextDist, Predictor};
use crate::scalar::{CompensatedSum, Real};
use crate::source::SequenceSource;

#[derive(Debug)]
struct Tables<T> {
    /// `x_1 ..= x_cap`
    emissions: Vec<Symbol>,
    /// `pi_j` for `j <= J`
    prior: Vec<T>,
    /// `p_j` and `1 - p_j` for `j <= cap`
    advance: Vec<T>,
    reset: Vec<T>,
}

/// `mu_x` for a fixed source `x`, with emissions materialized for queries of
/// length up to `horizon`.
#[derive(Debug, Clone)]
pub struct MuX<T: Real = f64> {
    source: Arc<SequenceSource>,
    chain: ChainSpec<T>,
    tables: Arc<Tables<T>>,
}

impl<T: Real> MuX<T> {
    /// Needs `x_1 ..= x_{J + horizon + 1}`; errs if the source cannot serve them.
    pub fn new(source: Arc<SequenceSource>, chain: ChainSpec<T>, horizon: usize) -> Result<Self> {
        let cap = chain.truncation() + horizon + 1;
        let emissions = source.prefix(cap)?.into_vec();
        let prior = (1..=chain.truncation() as u64)
            .map(|j| chain.stationary_weight(j))
            .collect::<Result<_>>()?;
        let advance = (1..=cap as u64).map(chain::transition_prob).collect::<Result<_>>()?;
        let reset = (1..=cap as u64).map(chain::reset_prob).collect::<Result<_>>()?;
        Ok(Self {
            source,
            chain,
            tables: Arc::new(Tables {
                emissions,
                prior,
                advance,
                reset,
            }),
        })
    }

    pub fn source(&self) -> &Arc<SequenceSource> {
        &self.source
    }

    pub fn chain(&self) -> &ChainSpec<T> {
        &self.chain
    }

    /// Largest state with a materialized emission.
    pub fn capacity(&self) -> usize {
        self.tables.emissions.len()
    }

    /// `g_x(j) = x_j`.
    pub fn emission(&self, j: u64) -> Result<Symbol> {
        match self.tables.emissions.get(j as usize - 1) {
            Some(&s) => Ok(s),
            None => self.source.symbol_at(j),
        }
    }

    pub fn forward(&self) -> ForwardState<T> {
        ForwardState::prior(self)
    }

    /// Certified enclosure of `mu_x(y_1 .. y_n)`, `n >= 1`.
    pub fn marginal(&self, y: &Word) -> Result<LogInterval> {
        if y.is_empty() {
            return domain("marginal of the empty word is 1 by definition; query needs |y| >= 1");
        }
        let mut state = self.forward();
        for &s in y {
            state.observe(self, s);
        }
        Ok(state.enclosure())
    }

    /// Forward lower bound on `mu_x(y)` in linear space: the sum over initial
    /// states `<= J`.
    pub fn forward_lower(&self, y: &Word) -> f64 {
        let mut state = self.forward();
        for &s in y {
            state.observe(self, s);
        }
        state.lower_prob()
    }

    /// Enclosures of `mu_x(next = a | past)` for `a = 0, 1`, plus the point predictor.
    pub fn conditional_next(&self, past: &Word) -> ConditionalEnclosure {
        let mut state = self.forward();
        for &s in past {
            state.observe(self, s);
        }
        state.conditional(self)
    }

    pub fn trajectory_sampler(&self) -> TrajectorySampler<T> {
        TrajectorySampler {
            mu: self.clone(),
            sampler: self.chain.stationary_sampler(),
        }
    }

    /// A length-`n` word emitted along a stationary-start chain path.
    pub fn sample_trajectory(&self, n: usize, seed: u64) -> Result<Word> {
        self.trajectory_sampler().sample(n, seed)
    }

    /// Exact sum over all state paths with initial state `<= max_init_state`
    /// that emit `y`. Independent of the forward recursion: walks every path
    /// and uses the closed-form chain probabilities and the source directly.
    pub fn brute_force_marginal(&self, y: &Word, max_init_state: u64) -> Result<f64> {
        if y.len() > 14 || max_init_state > 64 {
            return Err(Error::TooLarge(format!(
                "path enumeration limited to |y| <= 14 and J0 <= 64 (got {} and {max_init_state})",
                y.len()
            )));
        }
        if y.is_empty() {
            return domain("brute-force marginal needs |y| >= 1");
        }
        fn walk(src: &SequenceSource, y: &[Symbol], state: u64, weight: f64) -> Result<f64> {
            let Some((&next, rest)) = y.split_first() else {
                return Ok(weight);
            };
            let mut total = 0.0;
            if src.symbol_at(state + 1)? == next {
                let p: f64 = chain::transition_prob(state)?;
                total += walk(src, rest, state + 1, weight * p)?;
            }
            if src.symbol_at(1)? == next {
                let r: f64 = chain::reset_prob(state)?;
                total += walk(src, rest, 1, weight * r)?;
            }
            Ok(total)
        }
        let pi1 = 6.0 / (std::f64::consts::PI * std::f64::consts::PI);
        let mut total = 0.0;
        for j in 1..=max_init_state {
            if self.source.symbol_at(j)? == y[0] {
                total += walk(&self.source, &y[1..], j, pi1 / (j * j) as f64)?;
            }
        }
        Ok(total)
    }

    pub fn predictor(&self) -> MuXPredictor<T> {
        MuXPredictor {
            mu: self.clone(),
            state: self.forward(),
        }
    }
}

/// `-log2 pi_1 + 2 log2(n + 1)`: bits that `mu_x` can lose on `x_1 .. x_n`,
/// from the single path that starts at state 1 and never resets.
pub fn proof_upper_bound(n: u64) -> f64 {
    -chain::stationary_first::<f64>().log2() + 2.0 * ((n + 1) as f64).log2()
}

/// Forward weights after observing `y_1 .. y_t`, stored scaled by
/// `2^-scale_exp` to survive underflow.
#[derive(Debug, Clone)]
pub struct ForwardState<T> {
    t: usize,
    weights: Vec<T>,
    dropped: T,
    scale_exp: i32,
    prune_ratio: Option<T>,
}

impl<T: Real> ForwardState<T> {
    /// Before any observation: `w_j = pi_j`, `j <= J`.
    pub fn prior(mu: &MuX<T>) -> Self {
        Self {
            t: 0,
            weights: mu.tables.prior.clone(),
            dropped: mu.chain.tail_mass_bound(),
            scale_exp: 0,
            prune_ratio: None,
        }
    }

    /// Drop live states whose weight is below `ratio` times the live total;
    /// their weight moves into `dropped`.
    pub fn with_pruning(mut self, ratio: T) -> Self {
        self.prune_ratio = Some(ratio);
        self
    }

    pub fn time(&self) -> usize {
        self.t
    }

    /// Number of represented states.
    pub fn frontier(&self) -> usize {
        self.weights.len()
    }

    fn scale(&self) -> f64 {
        (self.scale_exp as f64).exp2()
    }

    /// Lower bound on the marginal, unscaled.
    pub fn lower_mass(&self) -> T {
        self.weights.iter().copied().collect::<CompensatedSum<T>>().total()
    }

    /// Certified bound on mass excluded by truncation, unscaled.
    pub fn dropped_mass(&self) -> T {
        self.dropped
    }

    pub fn enclosure(&self) -> LogInterval {
        let lower = self.lower_mass();
        let upper = lower + self.dropped;
        let to_log = |v: T| LogProb::from_log2(v.to_f64().unwrap().log2() + self.scale_exp as f64);
        let width = self.dropped.to_f64().unwrap() * self.scale();
        LogInterval::with_width(to_log(lower), to_log(upper), width)
    }

    /// Lower masses `[L_0, L_1]` of the next step split by emitted symbol, and
    /// the mass that would leave the represented states.
    fn next_split(&self, mu: &MuX<T>) -> ([T; 2], T) {
        let em = &mu.tables.emissions;
        let mut split = [CompensatedSum::new(), CompensatedSum::new()];
        let mut clipped = T::zero();
        if self.t == 0 {
            for (w, s) in self.weights.iter().zip(em) {
                split[s.index()].add(*w);
            }
        } else {
            let mut reset = CompensatedSum::new();
            for (i, &w) in self.weights.iter().enumerate() {
                if w == T::zero() {
                    continue;
                }
                reset.add(w * mu.tables.reset[i]);
                let moved = w * mu.tables.advance[i];
                match em.get(i + 1) {
                    Some(s) => split[s.index()].add(moved),
                    None => clipped = clipped + moved,
                }
            }
            split[em[0].index()].add(reset.total());
        }
        ([split[0].total(), split[1].total()], clipped)
    }

    pub fn conditional(&self, mu: &MuX<T>) -> ConditionalEnclosure {
        let ([l0, l1], clipped) = self.next_split(mu);
        let dropped = self.dropped + clipped;
        let denom = (l0 + l1 + dropped).to_f64().unwrap();
        let (l0f, l1f, df) = (l0.to_f64().unwrap(), l1.to_f64().unwrap(), dropped.to_f64().unwrap());
        let iv = |la: f64| LogInterval::from_probs(la / denom, ((la + df) / denom).min(1.0));
        ConditionalEnclosure {
            zero: iv(l0f),
            one: iv(l1f),
            point: NextDist::from_weights(l0f, l1f),
        }
    }

    /// Advance by one observed symbol.
    pub fn observe(&mut self, mu: &MuX<T>, a: Symbol) {
        let em = &mu.tables.emissions;
        if self.t == 0 {
            for (w, &s) in self.weights.iter_mut().zip(em) {
                if s != a {
                    *w = T::zero();
                }
            }
        } else {
            let cap = em.len();
            let len = (self.weights.len() + 1).min(cap);
            let mut next = vec![T::zero(); len];
            let mut reset = CompensatedSum::new();
            for (i, &w) in self.weights.iter().enumerate() {
                if w == T::zero() {
                    continue;
                }
                reset.add(w * mu.tables.reset[i]);
                let moved = w * mu.tables.advance[i];
                if i + 1 < len {
                    if em[i + 1] == a {
                        next[i + 1] = moved;
                    }
                } else {
                    self.dropped = self.dropped + moved;
                }
            }
            if em[0] == a {
                next[0] = reset.total();
            }
            self.weights = next;
        }
        self.t += 1;
        self.prune();
        self.rescale();
    }

    fn prune(&mut self) {
        let Some(ratio) = self.prune_ratio else {
            return;
        };
        let cutoff = self.lower_mass() * ratio;
        for w in self.weights.iter_mut() {
            if *w > T::zero() && *w < cutoff {
                self.dropped = self.dropped + *w;
                *w = T::zero();
            }
        }
    }

    fn rescale(&mut self) {
        let total = self.lower_mass();
        let threshold = T::min_positive_value().sqrt();
        if total > T::zero() && total < threshold {
            let shift = (-total.log2().floor().to_i32().unwrap()).min(100);
            let factor = T::from_f64((shift as f64).exp2()).unwrap();
            for w in self.weights.iter_mut() {
                *w = *w * factor;
            }
            self.dropped = self.dropped * factor;
            self.scale_exp -= shift;
        }
    }

    /// Lower bound on the marginal in linear space (may underflow to 0).
    pub fn lower_prob(&self) -> f64 {
        self.lower_mass().to_f64().unwrap() * self.scale()
    }
}

/// Next-symbol enclosures and the point predictor `L_a / (L_0 + L_1)`, the
/// conditional of the `J`-truncated measure, which always lies inside them.
#[derive(Debug, Clone, Copy)]
pub struct ConditionalEnclosure {
    pub zero: LogInterval,
    pub one: LogInterval,
    pub point: NextDist,
}

impl ConditionalEnclosure {
    pub fn get(&self, s: Symbol) -> LogInterval {
        match s {
            Symbol::Zero => self.zero,
            Symbol::One => self.one,
        }
    }

    pub fn max_width(&self) -> f64 {
        self.zero.width().max(self.one.width())
    }
}

/// `mu_x` as an incremental [`Predictor`].
#[derive(Debug, Clone)]
pub struct MuXPredictor<T: Real = f64> {
    mu: MuX<T>,
    state: ForwardState<T>,
}

impl<T: Real> MuXPredictor<T> {
    pub fn measure(&self) -> &MuX<T> {
        &self.mu
    }

    pub fn enclosure(&self) -> ConditionalEnclosure {
        self.state.conditional(&self.mu)
    }

    pub fn state(&self) -> &ForwardState<T> {
        &self.state
    }
}

impl<T: Real> Predictor for MuXPredictor<T> {
    fn name(&self) -> String {
        format!("mux:{}", self.mu.source)
    }

    fn next_dist(&self) -> NextDist {
        self.enclosure().point
    }

    fn observe(&mut self, symbol: Symbol) {
        self.state.observe(&self.mu, symbol);
    }

    fn reset(&mut self) {
        self.state = self.mu.forward();
    }

    fn box_clone(&self) -> Box<dyn Predictor> {
        Box::new(self.clone())
    }
}

/// Reusable stationary-start sampler for `mu_x` trajectories.
#[derive(Debug, Clone)]
pub struct TrajectorySampler<T: Real = f64> {
    mu: MuX<T>,
    sampler: StationarySampler,
}

impl<T: Real> TrajectorySampler<T> {
    pub fn sample(&self, n: usize, seed: u64) -> Result<Word> {
        self.sample_with(&mut ChaCha8Rng::seed_from_u64(seed), n)
    }

    pub fn sample_with<R: Rng>(&self, rng: &mut R, n: usize) -> Result<Word> {
        if n < 1 {
            return domain("trajectory length must be at least 1");
        }
        let mut state = self.sampler.sample(rng);
        let mut out = Vec::with_capacity(n);
        out.push(self.mu.emission(state)?);
        for _ in 1..n {
            state = chain::step(state, rng);
            out.push(self.mu.emission(state)?);
        }
        Ok(out.into())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    fn mux(src: SequenceSource, trunc: usize, horizon: usize) -> MuX<f64> {
        MuX::new(Arc::new(src), ChainSpec::new(trunc).unwrap(), horizon).unwrap()
    }

    fn alternating() -> SequenceSource {
        SequenceSource::periodic(w("01")).unwrap()
    }

    fn zeros() -> SequenceSource {
        SequenceSource::periodic(w("0")).unwrap()
    }

    #[test]
    fn alternating_first_symbol_is_three_quarters() {
        // sum over odd j of pi_1 / j^2 = (6/pi^2)(pi^2/8)
        let mu = mux(alternating(), 10_000, 4);
        let iv = mu.marginal(&w("0")).unwrap();
        assert!(iv.contains(0.75));
        assert!(iv.width() <= mu.chain().tail_mass_bound());
    }

    #[test]
    fn zeros_never_emit_one() {
        let mu = mux(zeros(), 1000, 4);
        let iv = mu.marginal(&w("1")).unwrap();
        assert!(iv.lower().is_impossible());
        assert!(iv.upper().prob() <= mu.chain().tail_mass_bound() * (1.0 + 1e-12));
        assert_eq!(mu.brute_force_marginal(&w("1"), 50).unwrap(), 0.0);
    }

    #[test]
    fn empty_query_is_a_domain_error() {
        let mu = mux(zeros(), 10, 4);
        assert!(mu.marginal(&Word::empty()).is_err());
        assert!(mu.brute_force_marginal(&Word::empty(), 5).is_err());
    }

    #[test]
    fn single_path_lower_bound_on_own_prefix() {
        for src in [alternating(), SequenceSource::Champernowne, SequenceSource::CoinFlips { seed: 3 }] {
            let mu = mux(src.clone(), 500, 64);
            for n in [1usize, 5, 20, 64] {
                let y = src.prefix(n).unwrap();
                let lower = mu.marginal(&y).unwrap().lower().prob();
                let bound = chain::stationary_first::<f64>() / ((n + 1) * (n + 1)) as f64;
                assert!(lower >= bound, "{src} n={n}: {lower} < {bound}");
            }
        }
    }

    #[test]
    fn conditional_examples() {
        let mu = mux(alternating(), 10_000, 8);
        let c = mu.conditional_next(&Word::empty());
        assert!(c.zero.contains(0.75));
        assert!((c.point.prob(Symbol::Zero) - 0.75).abs() < 1e-4);

        let mu = mux(zeros(), 1000, 8);
        let c = mu.conditional_next(&w("000"));
        assert!(c.zero.contains(1.0));
        assert_eq!(c.point.prob(Symbol::Zero), 1.0);
    }

    #[test]
    fn impossible_past_falls_back_to_uniform() {
        let mu = mux(alternating(), 1000, 8);
        let c = mu.conditional_next(&w("11"));
        assert_eq!(c.point, NextDist::UNIFORM);
        assert!(c.zero.lower().is_impossible());
    }

    #[test]
    fn proof_bound_values() {
        assert!((proof_upper_bound(1) - 2.718_029_758_223_481).abs() < 1e-12);
        assert!((proof_upper_bound(10) - 7.636_892_995_498_076).abs() < 1e-12);
        assert!((proof_upper_bound(1000) / 1000.0 - 0.020_652_482_275_895_47).abs() < 1e-12);
    }

    #[test]
    fn brute_force_two_symbol_case() {
        let mu = mux(alternating(), 50, 4);
        let forward = mu.forward_lower(&w("01"));
        let brute = mu.brute_force_marginal(&w("01"), 50).unwrap();
        assert!((forward - brute).abs() <= 1e-12 * brute);
    }

    #[test]
    fn brute_force_single_symbol_is_a_stationary_sum() {
        let mu = mux(SequenceSource::Champernowne, 30, 4);
        let expected: f64 = (1..=30u64)
            .filter(|&j| mu.emission(j).unwrap() == Symbol::One)
            .map(|j| mu.chain().stationary_weight(j).unwrap())
            .sum();
        let brute = mu.brute_force_marginal(&w("1"), 30).unwrap();
        assert!((brute - expected).abs() < 1e-15);
    }

    #[test]
    fn brute_force_refuses_large_requests() {
        let mu = mux(zeros(), 10, 20);
        assert!(matches!(mu.brute_force_marginal(&w("000000000000000"), 10), Err(Error::TooLarge(_))));
        assert!(matches!(mu.brute_force_marginal(&w("0"), 65), Err(Error::TooLarge(_))));
    }

    #[test]
    fn frontier_grows_by_one_per_step() {
        let mu = mux(SequenceSource::Champernowne, 100, 30);
        let mut st = mu.forward();
        assert_eq!(st.frontier(), 100);
        for (t, &s) in SequenceSource::Champernowne.prefix(30).unwrap().iter().enumerate() {
            st.observe(&mu, s);
            assert!(st.frontier() <= 100 + t);
        }
    }

    #[test]
    fn short_file_source_is_refused() {
        let err = MuX::<f64>::new(
            Arc::new(SequenceSource::Explicit(w("0101"))),
            ChainSpec::new(10).unwrap(),
            2,
        );
        assert!(matches!(err, Err(Error::SourceExhausted { .. })));
    }

    #[test]
    fn pruning_stays_sound() {
        let src = SequenceSource::CoinFlips { seed: 8 };
        let mu = mux(src.clone(), 200, 12);
        let y = src.prefix(12).unwrap();
        let exact = mu.marginal(&y).unwrap();
        let mut st = mu.forward().with_pruning(1e-3);
        for &s in &y {
            st.observe(&mu, s);
        }
        let pruned = st.enclosure();
        assert!(pruned.lower() <= exact.lower());
        assert!(pruned.upper() >= exact.upper());
    }

    #[test]
    fn rescaling_tracks_tiny_weights() {
        // alternating x read as all-ones: only reset-free stretches survive
        let mu = mux(SequenceSource::Champernowne, 50, 3000);
        let mut st = mu.forward();
        let y = SequenceSource::CoinFlips { seed: 1 }.prefix(3000).unwrap();
        for &s in &y {
            st.observe(&mu, s);
        }
        let iv = st.enclosure();
        assert!(iv.lower().log2() < -1100.0 || iv.lower().is_impossible());
        assert!(iv.lower() <= iv.upper());
    }

    #[test]
    fn zeros_trajectory_is_constant() {
        let mu = mux(zeros(), 100, 4);
        let y = mu.sample_trajectory(500, 3).unwrap();
        assert!(y.iter().all(|&s| s == Symbol::Zero));
        assert!(mu.sample_trajectory(0, 3).is_err());
    }

    #[test]
    fn predictor_tracks_stateless_queries() {
        let mu = mux(SequenceSource::Champernowne, 300, 40);
        let mut p = mu.predictor();
        for &s in &SequenceSource::Champernowne.prefix(40).unwrap() {
            p.observe(s);
        }
        let past = SequenceSource::Champernowne.prefix(40).unwrap();
        assert_eq!(p.next_dist(), mu.predictor().predict_after(&past));
        assert_eq!(p.next_dist(), mu.conditional_next(&past).point);
    }

    #[test]
    fn single_precision_marginal() {
        let mu = MuX::<f32>::new(Arc::new(alternating()), ChainSpec::new(2000).unwrap(), 4).unwrap();
        let iv = mu.marginal(&w("0")).unwrap();
        assert!(iv.lower().prob() <= 0.75 + 1e-6 && iv.upper().prob() >= 0.75 - 1e-6);
    }
}
