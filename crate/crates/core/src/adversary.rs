//! Sequences that defeat a given predictor, and the full demonstration that
//! such a sequence is nevertheless predicted by a stationary measure.

use std::sync::Arc;

use serde::Serialize;

use crate::alphabet::Word;
use crate::chain::ChainSpec;
use crate::error::{domain, Result};
use crate::hmm::{proof_upper_bound, MuX};
use crate::logprob::LogInterval;
use crate::loss::LossTrace;
use crate::predictor::{NextDist, Predictor};
use crate::source::SequenceSource;

/// The greedy adversary's output together with the conditionals it queried.
#[derive(Debug, Clone)]
pub struct Adversarial {
    pub word: Word,
    /// `rho(. | x_1 .. x_{t-1})` as returned to the adversary at step `t`.
    pub queried: Vec<NextDist>,
}

impl Adversarial {
    /// Trace of `rho` on the sequence, built from the queried conditionals.
    pub fn trace(&self, n: usize) -> LossTrace {
        let mut t = LossTrace::new();
        for (d, &s) in self.queried.iter().zip(self.word.iter()).take(n) {
            t.record(d, s);
        }
        t
    }
}

/// At each step pick the symbol `rho` finds less likely, ties to 0, so that
/// `rho(x_t | x_{<t}) <= 1/2` and every step costs at least one bit.
pub fn build_adversarial(rho: &dyn Predictor, n: usize) -> Adversarial {
    let mut rho = rho.box_clone();
    rho.reset();
    let mut word = Word::empty();
    let mut queried = Vec::with_capacity(n);
    for _ in 0..n {
        let d = rho.next_dist();
        let s = d.less_likely();
        queried.push(d);
        word.push(s);
        rho.observe(s);
    }
    Adversarial { word, queried }
}

pub fn adversarial_sequence(rho: &dyn Predictor, n: usize) -> Result<Word> {
    if n < 1 {
        return domain("adversarial sequence length must be at least 1");
    }
    Ok(build_adversarial(rho, n).word)
}

#[derive(Debug, Clone)]
pub struct AdversarialRun {
    pub predictor: String,
    pub truncation: usize,
    /// `x_1 .. x_n`.
    pub sequence: Word,
    pub rho_trace: LossTrace,
    pub mux_trace: LossTrace,
    /// `proof_upper_bound(t) / t` for `t = 1..=n`.
    pub bound_trace: Vec<f64>,
    /// Largest width of `mu_x`'s two conditional enclosures at each step.
    pub mux_widths: Vec<f64>,
    /// Certified enclosure of `mu_x(x_1 .. x_n)`.
    pub mux_marginal: LogInterval,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunSummary {
    pub rho_cesaro_final: f64,
    pub mux_cesaro_final: f64,
    pub bound_final: f64,
    pub per_step_min_rho_loss: f64,
    /// `-log2` of the certified lower bound on `mu_x(x_1..x_n)`: an upper bound
    /// on `mu_x`'s cumulative loss.
    pub mux_certified_loss_upper: f64,
    pub mux_max_width: f64,
}

impl AdversarialRun {
    pub fn summary(&self) -> RunSummary {
        let n = self.sequence.len();
        RunSummary {
            rho_cesaro_final: self.rho_trace.last().map_or(f64::NAN, |r| r.cesaro_kl),
            mux_cesaro_final: self.mux_trace.last().map_or(f64::NAN, |r| r.cesaro_kl),
            bound_final: proof_upper_bound(n as u64) / n as f64,
            per_step_min_rho_loss: self.rho_trace.rows().iter().map(|r| r.kl_bits).fold(f64::INFINITY, f64::min),
            mux_certified_loss_upper: self.mux_marginal.lower().surprisal(),
            mux_max_width: self.mux_widths.iter().copied().fold(0.0, f64::max),
        }
    }
}

/// Builds `x` against `rho`, scores `rho` and `mu_x` on it, and records the
/// bound curve.
///
/// `mu_x` reads `x_j` for `j` up to `J + n + 1`, so the adversarial sequence
/// is continued to that length; only `x_1 .. x_n` is scored.
pub fn theorem1_experiment(rho: &dyn Predictor, n: usize, truncation: usize) -> Result<AdversarialRun> {
    if n < 1 {
        return domain("horizon must be at least 1");
    }
    let chain = ChainSpec::<f64>::new(truncation)?;
    let adv = build_adversarial(rho, truncation + n + 1);
    let rho_trace = adv.trace(n);
    let sequence = adv.word.prefix(n);

    let mu = MuX::new(Arc::new(SequenceSource::Explicit(adv.word)), chain, n)?;
    let mut predictor = mu.predictor();
    let mut mux_trace = LossTrace::new();
    let mut mux_widths = Vec::with_capacity(n);
    for &s in &sequence {
        let enc = predictor.enclosure();
        mux_widths.push(enc.max_width());
        mux_trace.record(&enc.point, s);
        predictor.observe(s);
    }
    let mux_marginal = predictor.state().enclosure();

    Ok(AdversarialRun {
        predictor: rho.name(),
        truncation,
        sequence,
        rho_trace,
        mux_trace,
        bound_trace: (1..=n as u64).map(|t| proof_upper_bound(t) / t as f64).collect(),
        mux_widths,
        mux_marginal,
    })
}
