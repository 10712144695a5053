//! Prediction-loss functionals: cumulative KL (in bits), absolute and
//! squared (Brier) losses, Cesàro averages, and word frequencies.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::alphabet::{Symbol, Word};
use crate::error::{domain, Result};
use crate::hmm::MuXPredictor;
use crate::predictor::{DiracPredictor, NextDist, Predictor};
use crate::scalar::{CompensatedSum, Real};
use crate::source::SequenceSource;

/// One CSV row of a [`LossTrace`]. Infinite KL is the IEEE `inf` sentinel and
/// propagates to the cumulative and Cesàro columns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub step: u64,
    pub kl_bits: f64,
    pub cum_kl_bits: f64,
    pub cesaro_kl: f64,
    pub abs: f64,
    pub cesaro_abs: f64,
    pub sq: f64,
    pub cesaro_sq: f64,
}

#[derive(Debug, Clone, Default)]
struct Running {
    sum: CompensatedSum<f64>,
    infinite: bool,
}

impl Running {
    fn add(&mut self, v: f64) -> f64 {
        if v.is_infinite() {
            self.infinite = true;
        } else {
            self.sum.add(v);
        }
        self.total()
    }

    fn total(&self) -> f64 {
        if self.infinite {
            f64::INFINITY
        } else {
            self.sum.total()
        }
    }
}

/// Per-step and cumulative losses of one predictor along one sequence.
#[derive(Debug, Clone, Default)]
pub struct LossTrace {
    rows: Vec<TraceRow>,
    kl: Running,
    abs: Running,
    sq: Running,
}

impl LossTrace {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records the loss of `dist` on the realized symbol `actual`.
    pub fn record(&mut self, dist: &NextDist, actual: Symbol) {
        let p = dist.prob(actual);
        let kl = dist.log_prob(actual).surprisal();
        let off = 1.0 - p;
        let abs = off;
        let sq = 2.0 * off * off;
        let step = self.rows.len() as u64 + 1;
        let t = step as f64;
        let cum = self.kl.add(kl);
        let cum_abs = self.abs.add(abs);
        let cum_sq = self.sq.add(sq);
        self.rows.push(TraceRow {
            step,
            kl_bits: kl,
            cum_kl_bits: cum,
            cesaro_kl: cum / t,
            abs,
            cesaro_abs: cum_abs / t,
            sq,
            cesaro_sq: cum_sq / t,
        });
    }

    pub fn rows(&self) -> &[TraceRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    pub fn cumulative_kl_bits(&self) -> f64 {
        self.kl.total()
    }

    /// Minimum of `d_t / t` over `t` in `[n/2, n]`: an upper estimate of the
    /// liminf of the Cesàro KL at horizon `n`.
    pub fn d_estimate(&self) -> Option<f64> {
        let n = self.rows.len();
        if n == 0 {
            return None;
        }
        let from = (n / 2).max(1);
        self.rows[from - 1..]
            .iter()
            .map(|r| r.cesaro_kl)
            .reduce(f64::min)
    }

    /// CSV with header `step,kl_bits,cum_kl_bits,cesaro_kl,abs,cesaro_abs,sq,cesaro_sq`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        if self.rows.is_empty() {
            w.write_record([
                "step",
                "kl_bits",
                "cum_kl_bits",
                "cesaro_kl",
                "abs",
                "cesaro_abs",
                "sq",
                "cesaro_sq",
            ])?;
        }
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Tidy plot data: one `(t, metric, value)` row per metric and step,
    /// prefixed with a `series` column.
    pub fn write_tidy_rows<W: Write>(&self, series: &str, out: &mut csv::Writer<W>) -> Result<()> {
        for r in &self.rows {
            for (metric, value) in [
                ("kl_bits", r.kl_bits),
                ("cum_kl_bits", r.cum_kl_bits),
                ("cesaro_kl", r.cesaro_kl),
                ("abs", r.abs),
                ("cesaro_abs", r.cesaro_abs),
                ("sq", r.sq),
                ("cesaro_sq", r.cesaro_sq),
            ] {
                out.serialize((series, r.step, metric, value))?;
            }
        }
        Ok(())
    }
}

/// Scores `rho` (from a fresh reset) on the given word.
pub fn score_word(x: &Word, rho: &dyn Predictor) -> LossTrace {
    let mut rho = rho.box_clone();
    rho.reset();
    let mut trace = LossTrace::new();
    for &s in x {
        trace.record(&rho.next_dist(), s);
        rho.observe(s);
    }
    trace
}

/// Loss of `rho` on the Dirac measure `delta_x` over `n` steps. The KL per
/// step is `-log2 rho(x_t | x_{<t})`, since `delta_x` puts all mass on `x_t`.
pub fn dirac_kl(x: &SequenceSource, rho: &dyn Predictor, n: usize) -> Result<LossTrace> {
    if n < 1 {
        return domain("horizon must be at least 1");
    }
    Ok(score_word(&x.prefix(n)?, rho))
}

/// Absolute and squared losses along `x`; the same trace as [`dirac_kl`],
/// which carries every metric.
pub fn other_losses(x: &SequenceSource, rho: &dyn Predictor, n: usize) -> Result<LossTrace> {
    dirac_kl(x, rho, n)
}

/// A predictor that can also draw trajectories from the measure it defines.
pub trait SampledPredictor: Predictor {
    fn sample(&self, n: usize, seed: u64) -> Result<Word>;
}

impl SampledPredictor for DiracPredictor {
    fn sample(&self, n: usize, _seed: u64) -> Result<Word> {
        self.source().prefix(n)
    }
}

impl<T: Real> SampledPredictor for MuXPredictor<T> {
    fn sample(&self, n: usize, seed: u64) -> Result<Word> {
        self.measure().sample_trajectory(n, seed)
    }
}

/// Monte-Carlo estimate of `d_n(mu, rho)` with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KlEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}

/// `sum_a mu(a) log2(mu(a) / rho(a))` with `0 log 0 = 0`.
pub fn step_kl(mu: &NextDist, rho: &NextDist) -> f64 {
    Symbol::ALL
        .iter()
        .map(|&a| {
            let m = mu.prob(a);
            if m == 0.0 {
                0.0
            } else {
                m * (mu.log_prob(a).log2() - rho.log_prob(a).log2())
            }
        })
        .sum()
}

/// `sum_t KL(mu(.|y_<t) || rho(.|y_<t))` along one word.
pub fn kl_along(y: &Word, mu: &dyn Predictor, rho: &dyn Predictor) -> f64 {
    let (mut mu, mut rho) = (mu.box_clone(), rho.box_clone());
    mu.reset();
    rho.reset();
    let mut acc = Running::default();
    for &s in y {
        acc.add(step_kl(&mu.next_dist(), &rho.next_dist()));
        mu.observe(s);
        rho.observe(s);
    }
    acc.total()
}

fn trajectory_seed(seed: u64, i: u64) -> u64 {
    seed.wrapping_add(i.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

pub fn expected_kl(
    mu: &dyn SampledPredictor,
    rho: &dyn Predictor,
    n: usize,
    num_samples: usize,
    seed: u64,
) -> Result<KlEstimate> {
    if num_samples < 1 {
        return domain("need at least one sample");
    }
    let legs = (0..num_samples as u64)
        .map(|i| Ok((mu.sample(n, trajectory_seed(seed, i))?, mu.box_clone(), rho.box_clone())))
        .collect::<Result<Vec<_>>>()?;
    let values: Vec<f64> = legs
        .into_par_iter()
        .map(|(y, m, r)| kl_along(&y, m.as_ref(), r.as_ref()))
        .collect();
    let count = values.len() as f64;
    let mean = values.iter().sum::<f64>() / count;
    let stderr = if values.len() < 2 || mean.is_infinite() {
        if mean.is_infinite() {
            f64::INFINITY
        } else {
            0.0
        }
    } else {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1.0);
        (var / count).sqrt()
    };
    Ok(KlEstimate {
        mean,
        stderr,
        samples: values.len(),
    })
}

/// Overlapping occurrences of `w` in `seq` over the `|seq| - |w| + 1` windows.
pub fn word_frequency(w: &Word, seq: &Word) -> Result<f64> {
    if w.is_empty() {
        return domain("word must be non-empty");
    }
    if seq.len() < w.len() {
        return domain(format!("sequence of length {} shorter than word of length {}", seq.len(), w.len()));
    }
    let windows = seq.len() - w.len() + 1;
    let hits = seq.windows(w.len()).filter(|win| *win == w.as_slice()).count();
    Ok(hits as f64 / windows as f64)
}
