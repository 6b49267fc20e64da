//! End-to-end paths through the public API: files in, bounds out.

use entacc::eat::{self, EatConfig};
use entacc::operator::reg;
use entacc::sim::{self, ProcessSpec};
use entacc::state::Event;
use entacc::verify::{self, Suite, VerifyOptions};
use entacc::{entropy, io, random, smooth, Operator};

#[test]
fn state_file_to_entropies() {
    let mut rng = random::rng(5);
    let rho = Operator::new(vec![reg("A", 2), reg("B", 2)], random::density(&mut rng, 4, 3)).unwrap();
    let rho = io::state_from_json(&io::state_to_json(&rho)).unwrap();
    let h = entropy::von_neumann_conditional(&rho, &["B"]).unwrap();
    let hmin = smooth::h_min(&rho, &["B"]).unwrap();
    let hmax = smooth::h_max(&rho, &["B"]).unwrap();
    let h2 = entropy::h_alpha(&rho, &["B"], 2.0).unwrap();
    assert!(hmin.lower <= hmin.upper && hmin.certified_gap < 1e-6);
    assert!(hmin.upper <= h2 + 1e-7 && h2 <= h + 1e-9 && h <= hmax.upper + 1e-7);
    // Smoothing only helps.
    let smoothed = smooth::h_min_smooth(&rho, &["B"], 0.05).unwrap();
    assert!(smoothed.upper >= hmin.lower - 1e-9);
}

#[test]
fn process_spec_to_soundness() {
    let spec: ProcessSpec = serde_json::from_str(r#"{"n": 2, "step": {"kind": "e91-round", "p_depol": 0.05, "mu": 0.5}}"#).unwrap();
    let process = spec.build().unwrap();
    let out = sim::run_process(&process).unwrap();
    let f = sim::sampled_min_tradeoff(&process, 8, &mut random::rng(1)).unwrap();
    let rep = sim::soundness_experiment(&out, &f, 0.1, &Event::Full).unwrap();
    assert!(rep.markov.iter().all(|m| *m < 1e-9));
    assert!(rep.exact_hmin >= rep.eat_bound);
    assert!(rep.slack >= 0.0);
}

#[test]
fn iid_spec_bound_is_the_aep_bound() {
    let spec: ProcessSpec = serde_json::from_str(
        r#"{"n": 2, "step": {"kind": "classical-table", "table": [[0.4, 0.1], [0.1, 0.4]]}}"#,
    )
    .unwrap();
    let process = spec.build().unwrap();
    let out = sim::run_process(&process).unwrap();
    let nu = Operator::new(
        vec![entacc::Register::classical("A", 2), entacc::Register::classical("B", 2)],
        entacc::linalg::diag(&[0.4, 0.1, 0.1, 0.4]),
    )
    .unwrap();
    let h = entropy::von_neumann_conditional(&nu, &["B"]).unwrap();
    let f = eat::TradeoffSpec::constant(h, eat::TradeoffKind::Min);
    let rep = sim::soundness_experiment(&out, &f, 0.1, &Event::Full).unwrap();
    let aep = eat::aep_bound(&nu, &["B"], 2, 0.1).unwrap();
    assert!((rep.eat_bound - aep).abs() <= 1e-12 * aep.abs().max(1.0));
    assert!(rep.exact_hmin >= rep.eat_bound);
}

#[test]
fn config_file_to_bound() {
    let cfg: EatConfig = serde_json::from_str(
        r#"{"alphabet": ["0", "1"], "kind": "min", "vertex_values": [0.2, 0.9], "n": 5000, "d_a": 2, "epsilon": 0.05}"#,
    )
    .unwrap();
    let (params, f) = cfg.build().unwrap();
    let bound = eat::eat_min_bound(&params, &f).unwrap();
    assert_eq!(params.h, 0.2);
    assert_eq!(bound.grad_norm, 0.35);
    let star = eat::eat_alpha_star(&params, &f).unwrap();
    let smooth = eat::eat_smooth_bound_at(&params, &f, star.alpha).unwrap();
    assert!((smooth - bound.value).abs() < 1.0);
}

#[test]
fn verify_reports_are_reproducible() {
    let o = VerifyOptions { seed: 42, trials: 3, n: None };
    let a = verify::run(Suite::Lemmas, &o).unwrap();
    let b = verify::run(Suite::Lemmas, &o).unwrap();
    assert!(a.passed());
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}
