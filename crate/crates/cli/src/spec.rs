//! Source and predictor spec strings.
//!
//! Sources: `periodic:<bits>`, `champernowne`, `coin:<seed>`, `file:<path>`.
//! Predictors: `uniform`, `kt`, `mix:<K>`, `mux:<source>`, `dirac:<source>`.

use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use seqlab::baselines::{finite_order_mixture, kt_predictor, uniform_predictor};
use seqlab::{Chain, DiracPredictor, MuX, Predictor, SequenceSource, Word};

pub fn parse_source(spec: &str) -> Result<SequenceSource> {
    let (kind, arg) = spec.split_once(':').unwrap_or((spec, ""));
    Ok(match kind {
        "periodic" => {
            let pattern: Word = arg.parse().with_context(|| format!("bad periodic pattern {arg:?}"))?;
            SequenceSource::periodic(pattern)?
        }
        "champernowne" if arg.is_empty() => SequenceSource::Champernowne,
        "coin" => SequenceSource::CoinFlips {
            seed: arg.parse().with_context(|| format!("bad coin seed {arg:?}"))?,
        },
        "file" if !arg.is_empty() => {
            SequenceSource::from_file(arg).with_context(|| format!("reading source file {arg}"))?
        }
        _ => bail!("unknown source spec {spec:?} (expected periodic:<bits>, champernowne, coin:<seed>, file:<path>)"),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PredictorSpec {
    Uniform,
    Kt,
    Mix(usize),
    Mux(String),
    Dirac(String),
}

impl std::str::FromStr for PredictorSpec {
    type Err = anyhow::Error;

    fn from_str(spec: &str) -> Result<Self> {
        let (kind, arg) = spec.split_once(':').unwrap_or((spec, ""));
        Ok(match (kind, arg) {
            ("uniform", "") => PredictorSpec::Uniform,
            ("kt", "") => PredictorSpec::Kt,
            ("mix", k) => PredictorSpec::Mix(k.parse().with_context(|| format!("bad mixture order {k:?}"))?),
            ("mux", src) if !src.is_empty() => PredictorSpec::Mux(src.to_string()),
            ("dirac", src) if !src.is_empty() => PredictorSpec::Dirac(src.to_string()),
            _ => return Err(anyhow!("unknown predictor spec {spec:?} (expected uniform, kt, mix:K, mux:<source>, dirac:<source>)")),
        })
    }
}

impl PredictorSpec {
    /// `mux` predictors are built at truncation `trunc` with emissions for
    /// `horizon` steps.
    pub fn build(&self, trunc: usize, horizon: usize) -> Result<Box<dyn Predictor>> {
        Ok(match self {
            PredictorSpec::Uniform => Box::new(uniform_predictor()),
            PredictorSpec::Kt => Box::new(kt_predictor()),
            PredictorSpec::Mix(k) => Box::new(finite_order_mixture(*k)?),
            PredictorSpec::Mux(src) => {
                let mu = MuX::new(Arc::new(parse_source(src)?), Chain::new(trunc)?, horizon)?;
                Box::new(mu.predictor())
            }
            PredictorSpec::Dirac(src) => Box::new(DiracPredictor::new(Arc::new(parse_source(src)?))),
        })
    }
}
