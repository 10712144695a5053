//! A laboratory for sequential prediction on binary sequences.
//!
//! * [`predictor`]: the forecaster contract and Dirac measures;
//! * [`chain`]: the up-or-reset chain on the positive integers;
//! * [`hmm`]: the stationary measure `mu_x` obtained by reading a fixed
//!   sequence `x` along that chain, with certified marginals;
//! * [`loss`]: cumulative KL, absolute and squared losses;
//! * [`adversary`]: sequences on which a given predictor loses at least one
//!   bit per step, and the experiment pairing them with `mu_x`;
//! * [`baselines`]: uniform, KT and finite-order mixture predictors.
//!
//! Chain formulas are generic over [`Scalar`] and numerics over [`Real`];
//! the aliases below fix the usual choices.

pub mod adversary;
pub mod alphabet;
pub mod baselines;
pub mod chain;
pub mod error;
pub mod hmm;
pub mod logprob;
pub mod loss;
pub mod predictor;
pub mod scalar;
pub mod source;

pub use alphabet::{Symbol, Word};
pub use error::{Error, Result};
pub use logprob::{LogInterval, LogProb};
pub use predictor::{DiracPredictor, NextDist, Predictor};
pub use scalar::{Real, Scalar};
pub use source::SequenceSource;

/// Exact rational scalar for the closed-form chain formulas.
pub type Exact = num_rational::Ratio<i128>;

pub type Chain = chain::ChainSpec<f64>;
pub type Chain32 = chain::ChainSpec<f32>;
pub type MuX = hmm::MuX<f64>;
pub type MuX32 = hmm::MuX<f32>;
pub type MuXPredictor = hmm::MuXPredictor<f64>;
pub type ForwardState = hmm::ForwardState<f64>;
