//! End-to-end runs of the `bellnoise` binary.

use std::process::{Command, Output};

use bellnoise::bell::{Binarize, ChExperiment, ChSettings, Source};
use bellnoise::measurement::format_g12;
use bellnoise::oracle::symbolic_spin_expand;
use bellnoise::states::{SchmidtState, DEFAULT_TAIL_TOL};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bellnoise"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

/// Data rows as string fields, skipping the comment and column header.
fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn fig2_alpha_ten_has_linear_cutoff() {
    let csv = stdout(&["fig2", "--alpha", "10"]);
    assert!(csv.starts_with("# bellnoise "));
    assert!(csv.lines().nth(1).unwrap() == "alpha,s_exact,sigma_c_exact,s_quadrature,sigma_c_quadrature_scaled");
    let r = &rows(&csv)[0];
    let sc: f64 = r[2].parse().unwrap();
    assert!((0.24..=0.28).contains(&(sc / 10.0)), "{sc}");
}

#[test]
fn fig2_alpha_three_row_matches_library() {
    let csv = stdout(&["fig2", "--alpha", "3"]);
    let r = &rows(&csv)[0];
    let st = SchmidtState::pair_coherent(1.1, 3.0, 3.0, DEFAULT_TAIL_TOL).unwrap();
    let exp = ChExperiment::prepare(&Source::Exact(st), ChSettings::pair_coherent_default(), 1.0).unwrap();
    let c = exp.sigma_cutoff(1e-5).unwrap();
    assert_eq!(r[1], format_g12(c.s_at_zero));
    assert_eq!(r[2], format_g12(c.sigma_c));
}

#[test]
fn large_alpha_leaves_exact_columns_empty() {
    let r = &rows(&stdout(&["fig2", "--alpha", "20"]))[0];
    assert_eq!(r[1], "");
    assert_eq!(r[2], "");
    assert!(!r[4].is_empty());
}

#[test]
fn empty_list_is_a_usage_error() {
    assert_eq!(run(&["fig2", "--alpha", ""]).status.code(), Some(2));
    assert_eq!(run(&["fig4", "--n", "0"]).status.code(), Some(2));
    assert_eq!(run(&["eval", "--mode", "exact", "--alpha", "13"]).status.code(), Some(2));
    assert_eq!(run(&["eval", "--mode", "exact", "--eta", "0.9"]).status.code(), Some(2));
    assert_eq!(run(&["eval", "--angles", "0,1,2"]).status.code(), Some(2));
}

#[test]
fn fig3_is_nonincreasing_and_consistent_with_fig2() {
    let f3 = rows(&stdout(&["fig3", "--sigma", "0:40:1"]));
    let f2 = rows(&stdout(&["fig2", "--alpha", "10"]));
    assert_eq!(f3[0][1], f2[0][1]);
    let ex: Vec<f64> = f3.iter().map(|r| r[1].parse().unwrap()).collect();
    let q: Vec<f64> = f3.iter().map(|r| r[2].parse().unwrap()).collect();
    for w in ex.windows(2).chain(q.windows(2)) {
        assert!(w[1] <= w[0] + 1e-12);
    }
    let far = rows(&stdout(&["fig3", "--sigma", "1e7"]));
    assert!((far[0][1].parse::<f64>().unwrap() - 0.5).abs() < 1e-5);
}

#[test]
fn fig4_violates_and_matches_oracle() {
    let f4 = rows(&stdout(&["fig4", "--n", "1,2,5"]));
    for r in &f4 {
        assert!(r[2].parse::<f64>().unwrap() > 1.0);
    }
    let psi: f64 = f4[0][1].parse().unwrap();
    let s: f64 = f4[0][2].parse().unwrap();
    // N = 1 from the symbolic expansion at the reported ψ
    let set = ChSettings::from_psi(psi);
    let p = |t: f64, f: f64| symbolic_spin_expand(1, t, f).unwrap().binarize(0.0);
    let ab = p(set.theta, set.phi);
    let num = ab.p_pp - p(set.theta, set.phi_prime).p_pp + p(set.theta_prime, set.phi).p_pp
        + p(set.theta_prime, set.phi_prime).p_pp;
    let s_oracle = num / (p(set.theta_prime, set.phi).p_a + ab.p_b);
    assert!((s - s_oracle).abs() < 1e-10);
}

#[test]
fn output_is_byte_identical_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    stdout(&["--jobs", "1", "--out", a.to_str().unwrap(), "fig2", "--alpha", "3,5"]);
    stdout(&["--jobs", "3", "--out", b.to_str().unwrap(), "fig2", "--alpha", "3,5"]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let mc = ["eval", "--mode", "spin", "--n", "2", "--psi-scan", "--sigma", "0.5", "--mc-samples", "20000", "--seed", "9"];
    assert_eq!(stdout(&mc), stdout(&mc));
}

#[test]
fn eval_dumps_every_field() {
    let out = stdout(&["eval", "--mode", "quadrature"]);
    let fields: Vec<&str> = out.lines().filter(|l| !l.starts_with('#')).map(|l| l.split(',').next().unwrap()).collect();
    for f in ["mode", "p_pp_theta_phi", "p_a_theta_prime", "p_b_phi", "s", "sigma_c", "n_max"] {
        assert!(fields.contains(&f), "missing {f}");
    }
    let s: f64 = out.lines().find(|l| l.starts_with("s,")).unwrap()[2..].parse().unwrap();
    assert!((s - 1.0157).abs() < 0.002);
    let washed = stdout(&["eval", "--mode", "quadrature", "--sigma", "1e9"]);
    let s: f64 = washed.lines().find(|l| l.starts_with("s,")).unwrap()[2..].parse().unwrap();
    assert!((s - 0.5).abs() < 1e-6);
}
