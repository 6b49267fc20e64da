//! Randomized invariants. Random matrices come from the library's seeded generators,
//! so proptest only has to search over seeds and scalar parameters.

use entacc::apps::{self, FQRACParams, QKDParams};
use entacc::eat::{self, EATParams, TradeoffKind, TradeoffSpec};
use entacc::entropy;
use entacc::linalg::{self, c, max_abs, CMat};
use entacc::operator::{reg, Operator, Register};
use entacc::random::{self, SimRng};
use entacc::state::{self, CQState, Channel, Event};
use entacc::{chain, io};
use proptest::prelude::*;

fn state(rng: &mut SimRng, regs: &[(&str, usize)], rank: usize) -> Operator {
    let regs: Vec<Register> = regs.iter().map(|(l, d)| reg(l, *d)).collect();
    let d = regs.iter().map(|r| r.dim).product();
    Operator::new(regs, random::density(rng, d, rank.min(d))).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

fn config() -> ProptestConfig {
    ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn frac_power_composes(seed: u64, rank in 1usize..=4, p in -1.5f64..2.0, q in -1.5f64..2.0) {
        let m = random::density(&mut random::rng(seed), 4, rank);
        let lhs = linalg::frac_power(&linalg::frac_power(&m, p).unwrap(), q).unwrap();
        let rhs = linalg::frac_power(&m, p * q).unwrap();
        // Composition holds on the support; p·q = 0 gives the support projector either way.
        prop_assume!(p.abs() > 1e-3 && q.abs() > 1e-3);
        let scale = max_abs(&rhs).max(1.0);
        prop_assert!(max_abs(&(lhs - &rhs)) <= 1e-9 * scale * 10.0);
    }

    #[test]
    fn generalized_inverse(seed: u64, rank in 1usize..=3) {
        let m = random::density(&mut random::rng(seed), 3, rank);
        let inv = linalg::frac_power(&m, -1.0).unwrap();
        prop_assert!(max_abs(&(&m * &inv * &m - &m)) < 1e-9);
    }

    #[test]
    fn schatten_norms(seed: u64, a in 0.3f64..4.0, b in 0.3f64..4.0) {
        let mut rng = random::rng(seed);
        let x = random::density(&mut rng, 3, 3);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(linalg::schatten(&x, hi) <= linalg::schatten(&x, lo) * (1.0 + 1e-12));
        let g = random::ginibre(&mut rng, 3, 3);
        let two = linalg::schatten(&g, 2.0 * a).powi(2);
        prop_assert!(rel(two, linalg::schatten(&(g.adjoint() * &g), a)) < 1e-9);
        prop_assert!(rel(two, linalg::schatten(&(&g * g.adjoint()), a)) < 1e-9);
    }

    #[test]
    fn partial_trace_of_product(seed: u64) {
        let mut rng = random::rng(seed);
        let x = random::ginibre(&mut rng, 2, 2);
        let s = random::density(&mut rng, 3, 2) * c(0.7);
        let out = linalg::partial_trace(&linalg::kron(&x, &s), &[2, 3], &[0]);
        prop_assert!(max_abs(&(out - x * c(0.7))) < 1e-12);
    }

    #[test]
    fn conditional_operator_reconstructs(seed: u64, rank in 1usize..=6) {
        let rho = state(&mut random::rng(seed), &[("A", 2), ("B", 3)], rank);
        let cond = state::conditional_operator(&rho, &["B"]).unwrap();
        let half = rho.ptrace_keep(&["B"]).unwrap().frac_power(0.5).unwrap();
        let back = cond.conj_by(&half).unwrap();
        prop_assert!(max_abs(&(back.matrix() - rho.matrix())) < 1e-9);
    }

    #[test]
    fn channel_cond_state_round_trip(seed: u64) {
        let mut rng = random::rng(seed);
        let kraus = random::kraus_channel(&mut rng, 2, 3, 2);
        let ch = Channel::from_kraus(vec![reg("R", 2)], vec![reg("X", 3)], kraus).unwrap();
        let again = Channel::from_cond_state(vec![reg("R", 2)], vec![reg("X", 3)], ch.cond_state().clone()).unwrap();
        prop_assert!(max_abs(&(again.cond_state() - ch.cond_state())) < 1e-10);
        let rho = state(&mut rng, &[("R", 2), ("E", 2)], 4);
        let a = ch.apply(&rho).unwrap();
        let b = again.apply(&rho).unwrap();
        prop_assert!(max_abs(&(a.matrix() - b.matrix())) < 1e-10);
    }

    #[test]
    fn extraction_map_keeps_pinched_marginal(seed: u64) {
        let mut rng = random::rng(seed);
        let w = state(&mut rng, &[("Y", 2), ("Z", 2)], 4);
        let t = state::extraction_map(
            (&reg("Y", 2), &state::computational_projectors(2)),
            (&reg("Z", 2), &state::computational_projectors(2)),
            Register::classical("X", 2),
            |y, z| y ^ z,
        ).unwrap();
        let once = t.apply(&w).unwrap();
        let pinched = state::pinch(&w, &["Y", "Z"]).unwrap();
        let marg = once.ptrace_keep(&["Y", "Z"]).unwrap();
        prop_assert!(max_abs(&(marg.matrix() - pinched.matrix())) < 1e-12);
        // Idempotent on its image once the old X is discarded.
        let twice = t.apply(&marg).unwrap();
        prop_assert!(max_abs(&(twice.matrix() - once.matrix())) < 1e-12);
    }

    #[test]
    fn event_and_complement_reconstruct(seed: u64, member in 0usize..3) {
        let mut rng = random::rng(seed);
        let w = random::probability_vector(&mut rng, 3);
        let mut branches = std::collections::BTreeMap::new();
        for (x, wx) in w.iter().enumerate() {
            branches.insert(vec![x], random::density(&mut rng, 2, 2) * c(*wx));
        }
        let st = CQState::new(vec![Register::classical("X", 3)], vec![reg("B", 2)], branches).unwrap();
        let omega = Event::Subset { registers: vec!["X".into()], members: vec![vec![member]] };
        let (a, pa) = st.condition_on_event(&omega).unwrap();
        let (b, pb) = st.condition_on_event(&omega.clone().complement()).unwrap();
        prop_assert!((pa + pb - 1.0).abs() < 1e-12);
        let mix = a.scale(pa).add(&b.scale(pb)).unwrap();
        prop_assert!(max_abs(&(mix.to_operator().matrix() - st.to_operator().matrix())) < 1e-12);
    }

    #[test]
    fn markov_violation_local_unitary_invariance(seed: u64) {
        let mut rng = random::rng(seed);
        let rho = state(&mut rng, &[("A", 2), ("B", 2), ("C", 2)], 3);
        let before = state::markov_violation(&rho, &["A"], &["B"], &["C"]).unwrap();
        let u = linalg::kron_all(&[random::unitary(&mut rng, 2), linalg::identity(2), random::unitary(&mut rng, 2)]);
        let rotated = rho.with_matrix(&u * rho.matrix() * u.adjoint()).unwrap();
        let after = state::markov_violation(&rotated, &["A"], &["B"], &["C"]).unwrap();
        prop_assert!((before - after).abs() < 1e-9);
    }

    #[test]
    fn renyi_entropy_non_increasing_in_alpha(seed: u64, rank in 1usize..=4) {
        let rho = state(&mut random::rng(seed), &[("A", 2), ("B", 2)], rank);
        let grid = [0.5, 0.75, 1.0, 1.5, 2.0, 3.0];
        let h: Vec<f64> = grid.iter().map(|&a| entropy::h_alpha(&rho, &["B"], a).unwrap()).collect();
        for w in h.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-9, "{:?}", h);
        }
    }

    #[test]
    fn optimized_entropy_dominates(seed: u64, alpha in 0.6f64..3.0) {
        let rho = state(&mut random::rng(seed), &[("A", 2), ("B", 2)], 4);
        let up = entropy::h_alpha_up(&rho, &["B"], alpha).unwrap();
        prop_assert!(up.upper >= entropy::h_alpha(&rho, &["B"], alpha).unwrap() - 1e-9);
    }

    #[test]
    fn sandwich_around_von_neumann(seed: u64, t in 0.05f64..0.95) {
        let rho = state(&mut random::rng(seed), &[("A", 2), ("B", 2)], 4);
        let l = 5f64.log2();
        let alpha = 1.0 + t / l;
        let h = entropy::von_neumann_conditional(&rho, &["B"]).unwrap();
        let ha = entropy::h_alpha(&rho, &["B"], alpha).unwrap();
        let hinv = entropy::h_alpha(&rho, &["B"], 1.0 / alpha).unwrap();
        let slack = (alpha - 1.0) * l * l;
        prop_assert!(h - slack < ha && ha <= hinv + 1e-12 && hinv < h + slack);
    }

    #[test]
    fn data_processing(seed: u64, alpha in 0.5f64..3.0) {
        let mut rng = random::rng(seed);
        let rho = random::density(&mut rng, 3, 3);
        let sigma = random::full_rank_density(&mut rng, 3);
        let ch = Channel::from_kraus(vec![reg("R", 3)], vec![reg("S", 2)], random::kraus_channel(&mut rng, 3, 2, 3)).unwrap();
        let apply = |m: &CMat| ch.apply(&Operator::new(vec![reg("R", 3)], m.clone()).unwrap()).unwrap().into_matrix();
        let before = entropy::d_alpha(&rho, &sigma, alpha).unwrap();
        let after = entropy::d_alpha(&apply(&rho), &apply(&sigma), alpha).unwrap();
        prop_assert!(after <= before + 1e-9);
    }

    #[test]
    fn markov_input_drops_conditioning(seed: u64, alpha in 0.6f64..3.0) {
        let rho = entacc::verify::markov_instance(&mut random::rng(seed)).unwrap();
        prop_assert!(state::markov_violation(&rho, &["A1"], &["B1"], &["B2"]).unwrap() < 1e-9);
        prop_assert!(chain::markov_conditioning_gap(&rho, &["A1"], &["B1"], &["B2"], alpha).unwrap() < 1e-8);
    }

    #[test]
    fn state_file_round_trip_is_bit_exact(seed: u64) {
        let rho = state(&mut random::rng(seed), &[("A", 2), ("B", 3)], 6);
        let back = io::state_from_json(&io::state_to_json(&rho)).unwrap();
        prop_assert_eq!(back.matrix(), rho.matrix());
        prop_assert_eq!(back.registers(), rho.registers());
    }

    #[test]
    fn min_bound_monotone(h in -1.0f64..2.0, dh in 0.0f64..1.0, eps in 1e-6f64..0.5, p in 0.05f64..1.0, n in 1u64..1_000_000) {
        let f = TradeoffSpec::affine(vec!["0".into(), "1".into()], TradeoffKind::Min, vec![h, h + 0.5]).unwrap();
        let base = EATParams { n, d_a: 2, epsilon: eps, p_omega: p, h };
        let b = |q: EATParams| eat::eat_min_bound(&q, &f).unwrap().value;
        let v = b(base);
        let higher_h = b(EATParams { h: h + dh, ..base });
        let larger_eps = b(EATParams { epsilon: (eps * 1.5).min(0.99), ..base });
        let larger_p = b(EATParams { p_omega: (p * 1.5).min(1.0), ..base });
        prop_assert!(higher_h >= v && larger_eps >= v && larger_p >= v);
    }

    #[test]
    fn constant_tradeoff_is_aep(h in -1.0f64..3.0, d_a in 2usize..10, n in 1u64..10_000_000, eps in 1e-9f64..0.9) {
        let f = TradeoffSpec::constant(h, TradeoffKind::Min);
        let p = EATParams { n, d_a, epsilon: eps, p_omega: 1.0, h };
        let eat = eat::eat_min_bound(&p, &f).unwrap().value;
        let aep = eat::aep_bound_value(h, d_a, n, eps).unwrap();
        prop_assert!((eat - aep).abs() <= 1e-12 * aep.abs().max(1.0));
    }

    #[test]
    fn key_length_monotone(e in 0.005f64..0.12, de in 0.0f64..0.05, theta in 0.0f64..0.3, k in 0u32..6) {
        let p = QKDParams { n: 10u64.pow(8 + k / 2), mu: 0.05, e, theta_ec: theta, r: 0.0, epsilon: 1e-6, p_omega: 0.5 };
        let key = |q: QKDParams| apps::qkd_finite_key_length(&q).unwrap().0;
        let base = key(p);
        let longer = key(QKDParams { n: p.n * 3, ..p });
        let noisier = key(QKDParams { e: e + de, ..p });
        let leakier = key(QKDParams { theta_ec: theta + de, ..p });
        let slack = 1e-9 * base.abs().max(1.0);
        prop_assert!(longer >= base && noisier <= base + slack && leakier <= base + slack);
    }

    #[test]
    fn fqrac_necessary_condition_implies_violation(m in 10u64..5000, nf in 0.0f64..1.0, kf in 0.01f64..1.0, eps in 0.0f64..0.99) {
        let k = ((m as f64 * kf) as u64).max(1);
        let n = ((m - k + 1) as f64 * nf) as u64;
        prop_assume!(n >= 1);
        let r = apps::fqrac_bound(&FQRACParams { m, n, k, epsilon: eps }).unwrap();
        if !r.necessary_condition_holds {
            prop_assert!(r.condition_violated);
        }
    }
}
