//! The predictor contract: a deterministic rule giving the conditional
//! distribution of the next symbol given the past. Data sources and
//! forecasters both implement it.

use std::sync::Arc;

use crate::alphabet::{Symbol, Word};
use crate::logprob::LogProb;
use crate::source::SequenceSource;

/// Conditional distribution of the next binary symbol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NextDist {
    probs: [f64; 2],
}

impl NextDist {
    pub const UNIFORM: NextDist = NextDist { probs: [0.5, 0.5] };

    /// Normalizes two nonnegative weights. Each probability is a single
    /// correctly-rounded division, so the smaller one never exceeds 1/2 and
    /// equal weights give an exact tie. Two zero weights give the uniform pair.
    pub fn from_weights(zero: f64, one: f64) -> Self {
        assert!(zero >= 0.0 && one >= 0.0, "negative weight ({zero}, {one})");
        let total = zero + one;
        if total == 0.0 {
            return Self::UNIFORM;
        }
        NextDist {
            probs: [zero / total, one / total],
        }
    }

    /// All mass on `s`.
    pub fn certain(s: Symbol) -> Self {
        let mut probs = [0.0; 2];
        probs[s.index()] = 1.0;
        NextDist { probs }
    }

    pub fn prob(&self, s: Symbol) -> f64 {
        self.probs[s.index()]
    }

    pub fn log_prob(&self, s: Symbol) -> LogProb {
        LogProb::from_prob(self.prob(s))
    }

    /// The less likely symbol, ties going to `Zero`.
    pub fn less_likely(&self) -> Symbol {
        if self.probs[1] < self.probs[0] {
            Symbol::One
        } else {
            Symbol::Zero
        }
    }
}

/// A sequential probability forecaster over `{0, 1}`.
///
/// Implementations hold whatever sufficient statistics they need and advance
/// them in [`Predictor::observe`]. [`Predictor::predict_after`] is the
/// stateless form; both must agree.
pub trait Predictor: Send {
    fn name(&self) -> String;

    /// Distribution of the next symbol given everything observed since the
    /// last reset.
    fn next_dist(&self) -> NextDist;

    fn observe(&mut self, symbol: Symbol);

    /// Forget all observations.
    fn reset(&mut self);

    fn box_clone(&self) -> Box<dyn Predictor>;

    fn predict_after(&self, past: &Word) -> NextDist {
        let mut p = self.box_clone();
        p.reset();
        for &s in past {
            p.observe(s);
        }
        p.next_dist()
    }
}

impl Clone for Box<dyn Predictor> {
    fn clone(&self) -> Self {
        self.box_clone()
    }
}

/// The Dirac measure on a fixed sequence `x`: predicts `x_{t+1}` with
/// certainty after any past of length `t`, on or off the support. Past the end
/// of a finite file source it is uniform.
#[derive(Debug, Clone)]
pub struct DiracPredictor {
    source: Arc<SequenceSource>,
    seen: u64,
}

impl DiracPredictor {
    pub fn new(source: Arc<SequenceSource>) -> Self {
        Self { source, seen: 0 }
    }

    pub fn source(&self) -> &Arc<SequenceSource> {
        &self.source
    }
}

pub fn dirac_predictor(source: Arc<SequenceSource>) -> DiracPredictor {
    DiracPredictor::new(source)
}

impl Predictor for DiracPredictor {
    fn name(&self) -> String {
        format!("dirac:{}", self.source)
    }

    fn next_dist(&self) -> NextDist {
        match self.source.symbol_at(self.seen + 1) {
            Ok(s) => NextDist::certain(s),
            Err(_) => NextDist::UNIFORM,
        }
    }

    fn observe(&mut self, _symbol: Symbol) {
        self.seen += 1;
    }

    fn reset(&mut self) {
        self.seen = 0;
    }

    fn box_clone(&self) -> Box<dyn Predictor> {
        Box::new(self.clone())
    }
}
