//! Reference predictors: uniform, Krichevsky–Trofimov, order-`k` KT context
//! models and their Bayesian mixture over orders `0..=K`.

use std::collections::HashMap;

use crate::alphabet::Symbol;
use crate::error::{domain, Error, Result};
use crate::predictor::{NextDist, Predictor};

#[derive(Debug, Clone, Copy, Default)]
pub struct UniformPredictor;

pub fn uniform_predictor() -> UniformPredictor {
    UniformPredictor
}

impl Predictor for UniformPredictor {
    fn name(&self) -> String {
        "uniform".into()
    }

    fn next_dist(&self) -> NextDist {
        NextDist::UNIFORM
    }

    fn observe(&mut self, _symbol: Symbol) {}

    fn reset(&mut self) {}

    fn box_clone(&self) -> Box<dyn Predictor> {
        Box::new(*self)
    }
}

/// Per-context symbol counts for contexts of length up to `order`.
///
/// Contexts are keyed as `(1 << len) | bits` so contexts of different lengths
/// never collide. Before `order` symbols have been seen the context is the
/// whole (shorter) past.
#[derive(Debug, Clone, Default)]
pub struct CountStatistics {
    order: usize,
    counts: HashMap<u32, [u32; 2]>,
    recent: u32,
    seen: usize,
}

impl CountStatistics {
    pub const MAX_ORDER: usize = 16;

    pub fn new(order: usize) -> Result<Self> {
        if order > Self::MAX_ORDER {
            return Err(Error::TooLarge(format!(
                "context order {order} exceeds {}",
                Self::MAX_ORDER
            )));
        }
        Ok(Self {
            order,
            ..Default::default()
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    fn context_key(&self) -> u32 {
        let len = self.order.min(self.seen);
        (1 << len) | (self.recent & ((1u32 << len) - 1))
    }

    /// Counts `[n_0, n_1]` in the current context.
    pub fn current(&self) -> [u32; 2] {
        self.counts.get(&self.context_key()).copied().unwrap_or([0, 0])
    }

    pub fn record(&mut self, s: Symbol) {
        let key = self.context_key();
        self.counts.entry(key).or_default()[s.index()] += 1;
        self.recent = (self.recent << 1) | s.index() as u32;
        self.seen += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.values().map(|c| u64::from(c[0] + c[1])).sum()
    }

    pub fn clear(&mut self) {
        self.counts.clear();
        self.recent = 0;
        self.seen = 0;
    }
}

/// Add-half estimate from counts.
fn kt_dist([n0, n1]: [u32; 2]) -> NextDist {
    NextDist::from_weights(f64::from(n0) + 0.5, f64::from(n1) + 0.5)
}

/// KT estimator over contexts of length `order`; order 0 is the plain KT
/// estimator `P(1 | past) = (n_1 + 1/2) / (n + 1)`.
#[derive(Debug, Clone)]
pub struct ContextKt {
    stats: CountStatistics,
    log2_joint: f64,
}

impl ContextKt {
    pub fn new(order: usize) -> Result<Self> {
        Ok(Self {
            stats: CountStatistics::new(order)?,
            log2_joint: 0.0,
        })
    }

    /// `log2` of the probability assigned to everything observed so far.
    pub fn log2_joint(&self) -> f64 {
        self.log2_joint
    }
}

pub fn kt_predictor() -> ContextKt {
    ContextKt::new(0).expect("order 0 is always valid")
}

impl Predictor for ContextKt {
    fn name(&self) -> String {
        match self.stats.order() {
            0 => "kt".into(),
            k => format!("kt{k}"),
        }
    }

    fn next_dist(&self) -> NextDist {
        kt_dist(self.stats.current())
    }

    fn observe(&mut self, symbol: Symbol) {
        self.log2_joint += self.next_dist().prob(symbol).log2();
        self.stats.record(symbol);
    }

    fn reset(&mut self) {
        self.stats.clear();
        self.log2_joint = 0.0;
    }

    fn box_clone(&self) -> Box<dyn Predictor> {
        Box::new(self.clone())
    }
}

/// Mixture over orders `0..=K` of [`ContextKt`] components. Component joint
/// probabilities are mixed; conditionals are ratios of consecutive mixtures.
#[derive(Debug, Clone)]
pub struct FiniteOrderMixture {
    components: Vec<ContextKt>,
    log2_weights: Vec<f64>,
}

impl FiniteOrderMixture {
    /// Default prior `w_k ∝ 2^-k`, normalized over `0..=K`.
    pub fn new(max_order: usize) -> Result<Self> {
        let weights: Vec<f64> = (0..=max_order.min(64)).map(|k| (-(k as f64)).exp2()).collect();
        let total: f64 = weights.iter().sum();
        Self::with_weights(max_order, weights.iter().map(|w| w / total).collect())
    }

    /// Weights must be positive and sum to at most 1.
    pub fn with_weights(max_order: usize, weights: Vec<f64>) -> Result<Self> {
        if max_order > CountStatistics::MAX_ORDER {
            return Err(Error::TooLarge(format!(
                "mixture order {max_order} exceeds {}",
                CountStatistics::MAX_ORDER
            )));
        }
        if weights.len() != max_order + 1 {
            return domain(format!("need {} weights, got {}", max_order + 1, weights.len()));
        }
        if weights.iter().any(|&w| w.is_nan() || w <= 0.0) || weights.iter().sum::<f64>() > 1.0 + 1e-12 {
            return domain("mixture weights must be positive and sum to at most 1");
        }
        Ok(Self {
            components: (0..=max_order).map(ContextKt::new).collect::<Result<_>>()?,
            log2_weights: weights.iter().map(|w| w.log2()).collect(),
        })
    }

    pub fn max_order(&self) -> usize {
        self.components.len() - 1
    }

    pub fn components(&self) -> &[ContextKt] {
        &self.components
    }

    pub fn log2_weights(&self) -> &[f64] {
        &self.log2_weights
    }
}

pub fn finite_order_mixture(max_order: usize) -> Result<FiniteOrderMixture> {
    FiniteOrderMixture::new(max_order)
}

impl Predictor for FiniteOrderMixture {
    fn name(&self) -> String {
        format!("mix:{}", self.max_order())
    }

    fn next_dist(&self) -> NextDist {
        let posterior: Vec<f64> = self
            .components
            .iter()
            .zip(&self.log2_weights)
            .map(|(c, lw)| lw + c.log2_joint())
            .collect();
        let top = posterior.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut mass = [0.0; 2];
        for (c, lp) in self.components.iter().zip(&posterior) {
            let w = (lp - top).exp2();
            let d = c.next_dist();
            for s in Symbol::ALL {
                mass[s.index()] += w * d.prob(s);
            }
        }
        NextDist::from_weights(mass[0], mass[1])
    }

    fn observe(&mut self, symbol: Symbol) {
        for c in &mut self.components {
            c.observe(symbol);
        }
    }

    fn reset(&mut self) {
        for c in &mut self.components {
            c.reset();
        }
    }

    fn box_clone(&self) -> Box<dyn Predictor> {
        Box::new(self.clone())
    }
}
