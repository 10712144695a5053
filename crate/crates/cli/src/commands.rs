use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

use seqlab::adversary::theorem1_experiment;
use seqlab::chain::{first_return_mass, mean_return_time};
use seqlab::hmm::proof_upper_bound;
use seqlab::loss::{dirac_kl, expected_kl, word_frequency, LossTrace};
use seqlab::{Chain, MuX, Word};

use crate::spec::{parse_source, PredictorSpec};
use crate::{ChainInfoArgs, ErgodicityArgs, LossArgs, MarginalArgs, SampleArgs, Theorem1Args};

/// The enclosure budget was exceeded.
#[derive(Debug)]
pub struct BudgetExceeded(pub String);

impl std::fmt::Display for BudgetExceeded {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "numeric budget exceeded: {}", self.0)
    }
}

impl std::error::Error for BudgetExceeded {}

pub fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<BudgetExceeded>().is_some() {
        return 3;
    }
    for cause in e.chain() {
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return 1;
        }
        if let Some(seqlab::Error::Io(_) | seqlab::Error::Csv(_)) = cause.downcast_ref::<seqlab::Error>() {
            return 1;
        }
    }
    2
}

/// Written into every JSON output.
#[derive(Debug, Default, Serialize)]
struct ExperimentConfig {
    command: &'static str,
    predictor: Option<String>,
    source: Option<String>,
    horizon: Option<usize>,
    truncation: Option<usize>,
    seed: Option<u64>,
    output_dir: Option<String>,
}

/// JSON number, with non-finite values as the strings `inf`, `-inf`, `nan`.
fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x.is_nan() {
        json!("nan")
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

fn print_json(v: &Value) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v)?;
    writeln!(out)?;
    Ok(())
}

fn write_json(path: &Path, v: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(v)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn write_trace(path: &Path, trace: &LossTrace) -> Result<()> {
    let file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    trace.write_csv(std::io::BufWriter::new(file))?;
    Ok(())
}

fn write_plot(path: &Path, series: &[(&str, &LossTrace)]) -> Result<()> {
    let file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
    w.write_record(["series", "t", "metric", "value"])?;
    for (name, trace) in series {
        trace.write_tidy_rows(name, &mut w)?;
    }
    w.flush()?;
    Ok(())
}

fn table(rows: u64, f: impl Fn(u64) -> seqlab::Result<f64>) -> Result<Value> {
    let mut m = serde_json::Map::new();
    for j in 1..=rows {
        m.insert(j.to_string(), num(f(j)?));
    }
    Ok(Value::Object(m))
}

pub fn chain_info(a: &ChainInfoArgs) -> Result<()> {
    let chain = Chain::new(a.trunc)?;
    let mrt = mean_return_time::<f64>(a.trunc as u64)?;
    let (pi1_lo, pi1_hi) = chain.pi1_from_return_time(a.trunc as u64)?;
    let mass = first_return_mass::<f64>(a.trunc as u64);
    let config = ExperimentConfig {
        command: "chain info",
        horizon: Some(a.max_n as usize),
        truncation: Some(a.trunc),
        ..Default::default()
    };
    print_json(&json!({
        "config": config,
        "p_j": table(a.max_n, |j| chain.transition_prob(j))?,
        "f11": table(a.max_n, |n| chain.first_return_prob(n))?,
        "pi": table(a.max_n, |j| chain.stationary_weight(j))?,
        "mean_return_time": {
            "terms": mrt.terms,
            "partial_sum": num(mrt.partial_sum),
            "remainder_bound": num(mrt.remainder_bound),
            "tail_lower": num(mrt.tail_lower),
            "tail_upper": num(mrt.tail_upper),
            "estimate": num(mrt.estimate()),
        },
        "certified": {
            "pi1_closed_form": num(chain.pi1()),
            "pi1_from_return_time": [num(pi1_lo), num(pi1_hi)],
            "tail_mass_bound": num(chain.tail_mass_bound()),
            "reset_balance_residual": num(chain.reset_balance_residual()),
            "first_return_mass": num(mass),
        },
    }))
}

pub fn mux_marginal(a: &MarginalArgs) -> Result<()> {
    let query: Word = a.query.parse()?;
    let mu = MuX::new(Arc::new(parse_source(&a.target)?), Chain::new(a.trunc)?, query.len())?;
    let iv = mu.marginal(&query)?;
    let config = ExperimentConfig {
        command: "mux marginal",
        source: Some(a.target.clone()),
        horizon: Some(query.len()),
        truncation: Some(a.trunc),
        ..Default::default()
    };
    print_json(&json!({
        "config": config,
        "query": a.query,
        "lower_log2": num(iv.lower().log2()),
        "upper_log2": num(iv.upper().log2()),
        "width": num(iv.width()),
        "trunc": a.trunc,
    }))
}

pub fn mux_sample(a: &SampleArgs) -> Result<()> {
    let mu = MuX::new(Arc::new(parse_source(&a.target)?), Chain::new(a.trunc)?, 0)?;
    let y = mu.sample_trajectory(a.n, a.seed)?;
    println!("{y}");
    Ok(())
}

pub fn loss(a: &LossArgs) -> Result<()> {
    let source = parse_source(&a.target)?;
    let rho = a.rho.parse::<PredictorSpec>()?.build(a.trunc, a.n)?;
    let trace = dirac_kl(&source, rho.as_ref(), a.n)?;
    let last = *trace.last().expect("horizon is at least 1");
    let expected = if a.samples > 0 {
        let mu = MuX::new(Arc::new(source), Chain::new(a.trunc)?, a.n)?;
        let e = expected_kl(&mu.predictor(), rho.as_ref(), a.n, a.samples, a.seed)?;
        json!({ "mean": num(e.mean), "stderr": num(e.stderr), "samples": e.samples })
    } else {
        Value::Null
    };
    let config = ExperimentConfig {
        command: "loss",
        predictor: Some(a.rho.clone()),
        source: Some(a.target.clone()),
        horizon: Some(a.n),
        truncation: Some(a.trunc),
        seed: Some(a.seed),
        output_dir: a.out.as_ref().map(|p| p.display().to_string()),
    };
    let summary = json!({
        "config": config,
        "cumulative_kl_bits": num(last.cum_kl_bits),
        "cesaro_kl_final": num(last.cesaro_kl),
        "d_estimate": num(trace.d_estimate().unwrap_or(f64::NAN)),
        "cesaro_abs_final": num(last.cesaro_abs),
        "cesaro_sq_final": num(last.cesaro_sq),
        "expected_kl_under_mux": expected,
    });
    match &a.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            write_trace(&dir.join("trace.csv"), &trace)?;
            write_plot(&dir.join("plot.csv"), &[("rho", &trace)])?;
            write_json(&dir.join("summary.json"), &summary)
        }
        None => print_json(&summary),
    }
}

pub fn theorem1(a: &Theorem1Args) -> Result<()> {
    let horizon = a.trunc + a.n + 1;
    let rho = a.rho.parse::<PredictorSpec>()?.build(a.trunc, horizon)?;
    let run = theorem1_experiment(rho.as_ref(), a.n, a.trunc)?;
    let s = run.summary();

    fs::create_dir_all(&a.out)?;
    fs::write(a.out.join("x.txt"), format!("{}\n", run.sequence))?;
    write_trace(&a.out.join("rho_trace.csv"), &run.rho_trace)?;
    write_trace(&a.out.join("mux_trace.csv"), &run.mux_trace)?;
    write_plot(&a.out.join("plot.csv"), &[("rho", &run.rho_trace), ("mux", &run.mux_trace)])?;

    let config = ExperimentConfig {
        command: "theorem1",
        predictor: Some(a.rho.clone()),
        source: Some("adversarial".into()),
        horizon: Some(a.n),
        truncation: Some(a.trunc),
        seed: Some(a.seed),
        output_dir: Some(a.out.display().to_string()),
    };
    write_json(
        &a.out.join("summary.json"),
        &json!({
            "config": config,
            "rho_cesaro_final": num(s.rho_cesaro_final),
            "mux_cesaro_final": num(s.mux_cesaro_final),
            "bound_final": num(s.bound_final),
            "bound_bits_final": num(proof_upper_bound(a.n as u64)),
            "per_step_min_rho_loss": num(s.per_step_min_rho_loss),
            "mux_certified_loss_upper": num(s.mux_certified_loss_upper),
            "mux_max_width": num(s.mux_max_width),
        }),
    )?;
    if let Some(budget) = a.max_width {
        if s.mux_max_width > budget {
            bail!(BudgetExceeded(format!(
                "conditional enclosure width {:e} > {budget:e}; raise --trunc",
                s.mux_max_width
            )));
        }
    }
    Ok(())
}

pub fn ergodicity(a: &ErgodicityArgs) -> Result<()> {
    if a.word_len == 0 || a.word_len > 12 {
        bail!("--word-len must be in 1..=12");
    }
    let mu = MuX::new(Arc::new(parse_source(&a.target)?), Chain::new(a.trunc)?, a.word_len)?;
    let y = mu.sample_trajectory(a.n, a.seed)?;
    if y.len() < a.word_len {
        bail!("trajectory shorter than --word-len");
    }
    let mut words = Vec::new();
    for len in 1..=a.word_len {
        for w in Word::all_of_length(len) {
            let iv = mu.marginal(&w)?;
            words.push(json!({
                "word": w.to_string(),
                "frequency": num(word_frequency(&w, &y)?),
                "marginal_lower": num(iv.lower().prob()),
                "marginal_upper": num(iv.upper().prob()),
            }));
        }
    }
    let config = ExperimentConfig {
        command: "ergodicity",
        source: Some(a.target.clone()),
        horizon: Some(a.n),
        truncation: Some(a.trunc),
        seed: Some(a.seed),
        ..Default::default()
    };
    print_json(&json!({
        "config": config,
        "n": a.n,
        "freq_0": num(word_frequency(&"0".parse()?, &y)?),
        "freq_1": num(word_frequency(&"1".parse()?, &y)?),
        "words": words,
    }))
}
