use std::path::Path;
use std::process::{Command, Output};

fn seqlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_seqlab"))
        .args(args)
        .output()
        .expect("spawn seqlab")
}

fn json_stdout(args: &[&str]) -> serde_json::Value {
    let out = seqlab(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn chain_info_reports_pi1() {
    let v = json_stdout(&["chain", "info", "--max-n", "4", "--trunc", "10000"]);
    let pi1 = v["pi"]["1"].as_f64().unwrap();
    assert!((pi1 - 0.6079271).abs() < 1e-7);
    assert!((v["p_j"]["2"].as_f64().unwrap() - 4.0 / 9.0).abs() < 1e-15);
    assert!((v["f11"]["1"].as_f64().unwrap() - 0.75).abs() < 1e-15);
    let est = v["mean_return_time"]["estimate"].as_f64().unwrap();
    assert!((est - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-6);
    assert_eq!(v["config"]["command"], "chain info");
}

#[test]
fn theorem1_against_kt_costs_a_bit_per_step() {
    let dir = tempfile::tempdir().unwrap();
    let out = seqlab(&[
        "theorem1", "--rho", "kt", "-n", "200", "--trunc", "1000", "--seed", "1",
        "--out", dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let s = read_json(&dir.path().join("summary.json"));
    assert!(s["rho_cesaro_final"].as_f64().unwrap() >= 1.0);
    assert!(s["per_step_min_rho_loss"].as_f64().unwrap() >= 1.0);
    assert!(s["mux_cesaro_final"].as_f64().unwrap() <= s["bound_final"].as_f64().unwrap());
    for f in ["x.txt", "rho_trace.csv", "mux_trace.csv", "plot.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let x = std::fs::read_to_string(dir.path().join("x.txt")).unwrap();
    assert_eq!(x.trim().len(), 200);
    let plot = std::fs::read_to_string(dir.path().join("plot.csv")).unwrap();
    assert!(plot.starts_with("series,t,metric,value\n"));
}

#[test]
fn theorem1_width_budget_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = seqlab(&[
        "theorem1", "--rho", "uniform", "-n", "10", "--trunc", "100", "--max-width", "1e-12",
        "--out", dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn ergodicity_frequency_matches_marginal() {
    let v = json_stdout(&["ergodicity", "--target", "periodic:01", "-n", "100000", "--seed", "3"]);
    let f0 = v["freq_0"].as_f64().unwrap();
    assert!((0.73..=0.77).contains(&f0), "freq_0 = {f0}");
}

#[test]
fn marginal_of_zero_is_three_quarters() {
    let v = json_stdout(&["mux", "marginal", "--target", "periodic:01", "--query", "0"]);
    let lo = v["lower_log2"].as_f64().unwrap().exp2();
    let hi = v["upper_log2"].as_f64().unwrap().exp2();
    assert!(lo <= 0.75 && 0.75 <= hi);
    assert!(hi - lo < 1e-3);
}

#[test]
fn invalid_input_exits_2() {
    for args in [
        &["chain", "info", "--bogus"][..],
        &["loss", "--rho", "nonsense", "--target", "periodic:01", "-n", "5"],
        &["loss", "--rho", "kt", "--target", "periodic:2", "-n", "5"],
        &["mux", "marginal", "--target", "periodic:01", "--query", "0a"],
        &["loss", "--rho", "mix:99", "--target", "periodic:01", "-n", "5"],
    ] {
        assert_eq!(seqlab(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn missing_file_exits_1() {
    let out = seqlab(&["loss", "--rho", "kt", "--target", "file:/definitely/not/here", "-n", "3"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/definitely/not/here"));
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let a = seqlab(&["mux", "sample", "--target", "champernowne", "-n", "300", "--seed", "9"]);
    let b = seqlab(&["mux", "sample", "--target", "champernowne", "-n", "300", "--seed", "9"]);
    assert_eq!(a.stdout, b.stdout);

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let run = || {
        let o = seqlab(&["loss", "--rho", "mix:3", "--target", "coin:4", "-n", "64",
            "--samples", "8", "--seed", "2", "--out", out]);
        assert!(o.status.success());
        ["trace.csv", "plot.csv", "summary.json"]
            .map(|f| std::fs::read(dir.path().join(f)).unwrap())
    };
    assert_eq!(run(), run());
}
