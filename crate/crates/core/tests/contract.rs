//! Predictor-contract properties over every predictor in the crate, the
//! chain rule against independently computed joint probabilities, mixture
//! dominance and the Pinsker corollary.

use std::sync::Arc;

use proptest::prelude::*;
use seqlab::adversary::build_adversarial;
use seqlab::baselines::{finite_order_mixture, kt_predictor, uniform_predictor, ContextKt};
use seqlab::chain::ChainSpec;
use seqlab::MuX;
use seqlab::loss::{score_word, LossTrace};
use seqlab::{DiracPredictor, Predictor, SequenceSource, Symbol, Word};
use statrs::function::gamma::ln_gamma;

fn battery() -> Vec<Box<dyn Predictor>> {
    let alt = Arc::new(SequenceSource::Periodic("01".parse().unwrap()));
    let mu = MuX::new(alt.clone(), ChainSpec::new(500).unwrap(), 64).unwrap();
    vec![
        Box::new(uniform_predictor()),
        Box::new(kt_predictor()),
        Box::new(ContextKt::new(2).unwrap()),
        Box::new(finite_order_mixture(3).unwrap()),
        Box::new(DiracPredictor::new(alt)),
        Box::new(mu.predictor()),
    ]
}

fn word_strategy(max: usize) -> impl Strategy<Value = Word> {
    prop::collection::vec(any::<bool>(), 0..=max).prop_map(|b| b.into_iter().map(Symbol::from_bit).collect())
}

/// KT block probability `Γ(a+½)Γ(b+½) / (π Γ(a+b+1))`, in bits.
fn kt_block_log2(a: u32, b: u32) -> f64 {
    let (a, b) = (f64::from(a), f64::from(b));
    (ln_gamma(a + 0.5) + ln_gamma(b + 0.5) - std::f64::consts::PI.ln() - ln_gamma(a + b + 1.0))
        / std::f64::consts::LN_2
}

/// Joint log2-probability of an order-k KT context model, counting contexts
/// directly (shorter pasts use the whole past as context).
fn context_kt_joint_log2(x: &Word, k: usize) -> f64 {
    let mut counts = std::collections::HashMap::<Vec<Symbol>, [u32; 2]>::new();
    for t in 0..x.len() {
        let ctx = x[t.saturating_sub(k)..t].to_vec();
        counts.entry(ctx).or_default()[x[t].index()] += 1;
    }
    counts.values().map(|&[a, b]| kt_block_log2(a, b)).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn normalized_deterministic_and_incremental(past in word_strategy(40)) {
        for p in battery() {
            let stateless = p.predict_after(&past);
            prop_assert_eq!(stateless, p.predict_after(&past));
            let total = stateless.prob(Symbol::Zero) + stateless.prob(Symbol::One);
            prop_assert!((total - 1.0).abs() <= 2f64.powi(-40));
            prop_assert!(stateless.prob(Symbol::Zero) >= 0.0 && stateless.prob(Symbol::One) >= 0.0);

            let mut inc = p.box_clone();
            inc.reset();
            for &s in &past {
                inc.observe(s);
            }
            prop_assert_eq!(inc.next_dist(), stateless, "{}", p.name());
        }
    }

    #[test]
    fn chain_rule_for_kt_models(x in word_strategy(300), k in 0usize..4) {
        let trace = score_word(&x, &ContextKt::new(k).unwrap());
        let oracle = -context_kt_joint_log2(&x, k);
        prop_assert!((trace.cumulative_kl_bits() - oracle).abs() <= 1e-9);
    }

    #[test]
    fn chain_rule_for_mixture(x in word_strategy(300)) {
        let k = 3;
        let mix = finite_order_mixture(k).unwrap();
        let wsum: f64 = (0..=k).map(|i| (-(i as f64)).exp2()).sum();
        let comps: Vec<f64> = (0..=k)
            .map(|i| (-(i as f64)).exp2().log2() - wsum.log2() + context_kt_joint_log2(&x, i))
            .collect();
        let top = comps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let joint = top + comps.iter().map(|c| (c - top).exp2()).sum::<f64>().log2();
        let trace = score_word(&x, &mix);
        prop_assert!((trace.cumulative_kl_bits() + joint).abs() <= 1e-9);
        // dominance: mixture loss <= component loss - log2 w_k
        for c in &comps {
            prop_assert!(trace.cumulative_kl_bits() <= -c + 1e-9);
        }
    }

    #[test]
    fn pinsker_on_every_trace(x in word_strategy(200)) {
        for p in battery() {
            let trace = score_word(&x, p.as_ref());
            check_pinsker(&trace);
        }
    }
}

fn check_pinsker(trace: &LossTrace) {
    for r in trace.rows() {
        let bound = (r.cesaro_kl * std::f64::consts::LN_2 / 2.0).sqrt() + 1e-6;
        assert!(r.cesaro_abs <= bound, "step {}: abs {} > {}", r.step, r.cesaro_abs, bound);
        assert!((0.0..=1.0).contains(&r.abs), "step {}: abs {}", r.step, r.abs);
        assert!((0.0..=2.0).contains(&r.sq), "step {}: sq {}", r.step, r.sq);
        assert!((r.sq - 2.0 * r.abs * r.abs).abs() < 1e-12);
    }
}

#[test]
fn chain_rule_for_mux_on_own_sequence() {
    for src in [SequenceSource::Champernowne, SequenceSource::CoinFlips { seed: 5 }] {
        let n = 1000;
        let mu = MuX::new(Arc::new(src.clone()), ChainSpec::new(2000).unwrap(), n).unwrap();
        let x = src.prefix(n).unwrap();
        let trace = score_word(&x, &mu.predictor());
        // truncated measure: L(x) / L(empty)
        let joint = mu.forward_lower(&x).log2() - mu.chain().truncated_mass().log2();
        assert!((trace.cumulative_kl_bits() + joint).abs() <= 1e-9);
    }
}

#[test]
fn mixture_learns_alternation() {
    let x = SequenceSource::Periodic("01".parse().unwrap()).prefix(1000).unwrap();
    let trace = score_word(&x, &finite_order_mixture(2).unwrap());
    assert!(trace.last().unwrap().cesaro_kl < 0.05);
}

#[test]
fn baselines_lose_a_bit_per_step_on_their_adversary() {
    for p in battery() {
        let adv = build_adversarial(p.as_ref(), 300);
        let trace = adv.trace(300);
        assert!(trace.rows().iter().all(|r| r.kl_bits >= 1.0), "{}", p.name());
    }
}

#[test]
fn mux_abs_loss_decreases_on_own_sequence() {
    let x = SequenceSource::Periodic("01".parse().unwrap());
    let mu = MuX::new(Arc::new(x.clone()), ChainSpec::new(10_000).unwrap(), 1000).unwrap();
    let trace = score_word(&x.prefix(1000).unwrap(), &mu.predictor());
    assert!(trace.rows()[999].cesaro_abs < trace.rows()[99].cesaro_abs);
    check_pinsker(&trace);
}
