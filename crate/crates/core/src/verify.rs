//! Seeded property suites: each check is run on random instances and reports its
//! worst residual (how far the instance is from satisfying the property) together
//! with the seed of the instance that produced it.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::Serialize;

use crate::apps;
use crate::chain;
use crate::eat::{self, TradeoffKind, TradeoffSpec};
use crate::entropy;
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat};
use crate::operator::{Operator, Register};
use crate::optim;
use crate::random::{self, SimRng};
use crate::sim;
use crate::smooth;
use crate::state::{self, CQState, Channel, Event, FreqConstraint, TOL_MARKOV};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    ChainRule,
    Lemmas,
    EatSoundness,
    Counterexample,
    All,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::ChainRule => "chain_rule",
            Suite::Lemmas => "lemmas",
            Suite::EatSoundness => "eat_soundness",
            Suite::Counterexample => "counterexample",
            Suite::All => "all",
        }
    }
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.replace('-', "_").as_str() {
            "chain_rule" => Suite::ChainRule,
            "lemmas" => Suite::Lemmas,
            "eat_soundness" => Suite::EatSoundness,
            "counterexample" => Suite::Counterexample,
            "all" => Suite::All,
            _ => return Err(Error::Parse(format!("unknown suite `{s}`"))),
        })
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Worst case of one property over its instances. A residual is "how much the
/// property is violated" (zero or an absolute error); it passes when `≤ tolerance`.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub label: String,
    pub tolerance: f64,
    pub instances: usize,
    pub worst: f64,
    /// Seed of the instance with the worst residual.
    pub worst_seed: Option<u64>,
    pub failures: usize,
    /// First error raised by an instance, if any (counted as a failure).
    pub error: Option<String>,
}

impl Check {
    fn new(label: &str, tolerance: f64) -> Self {
        Check {
            label: label.into(),
            tolerance,
            instances: 0,
            worst: 0.0,
            worst_seed: None,
            failures: 0,
            error: None,
        }
    }

    fn record(&mut self, r: Result<f64>, seed: u64) {
        self.instances += 1;
        let v = match r {
            Ok(v) if !v.is_nan() => v,
            Ok(_) => f64::INFINITY,
            Err(e) => {
                self.error.get_or_insert_with(|| e.to_string());
                f64::INFINITY
            }
        };
        if v > self.tolerance {
            self.failures += 1;
        }
        if self.worst_seed.is_none() || v > self.worst {
            self.worst = v;
            self.worst_seed = Some(seed);
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub suite: Suite,
    pub seed: u64,
    pub trials: usize,
    pub checks: Vec<Check>,
    /// Named values worth printing alongside the checks.
    pub values: Vec<(String, f64)>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn first_failure(&self) -> Option<&Check> {
        self.checks.iter().find(|c| !c.passed())
    }

    pub fn check(&self, label: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.label == label)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct VerifyOptions {
    pub seed: u64,
    pub trials: usize,
    /// Restrict the counterexample suite to one `n`.
    pub n: Option<usize>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { seed: 0, trials: 50, n: None }
    }
}

/// Seed of instance `i` of check number `k`, so any instance can be rerun alone.
pub fn instance_seed(seed: u64, k: u64, i: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(k << 32).wrapping_add(i as u64)
}

fn run_check(
    label: &str,
    tol: f64,
    k: u64,
    o: &VerifyOptions,
    mut f: impl FnMut(&mut SimRng) -> Result<f64>,
) -> Check {
    let mut ch = Check::new(label, tol);
    for i in 0..o.trials {
        let s = instance_seed(o.seed, k, i);
        ch.record(f(&mut random::rng(s)), s);
    }
    ch
}

pub fn run(suite: Suite, o: &VerifyOptions) -> Result<VerifyReport> {
    let mut checks = Vec::new();
    let mut values = Vec::new();
    let suites: &[Suite] = match suite {
        Suite::All => &[Suite::ChainRule, Suite::Lemmas, Suite::EatSoundness, Suite::Counterexample],
        _ => std::slice::from_ref(&suite),
    };
    for s in suites {
        match s {
            Suite::ChainRule => checks.extend(chain_rule_suite(o)),
            Suite::Lemmas => checks.extend(lemma_suite(o)),
            Suite::EatSoundness => checks.extend(eat_soundness_suite(o)),
            Suite::Counterexample => {
                let (c, v) = counterexample_suite(o)?;
                checks.extend(c);
                values.extend(v);
            }
            Suite::All => unreachable!(),
        }
    }
    Ok(VerifyReport { suite, seed: o.seed, trials: o.trials, checks, values })
}

// ---------------------------------------------------------------------------
// Instance generators

fn state_on(rng: &mut SimRng, labels: &[(&str, usize)]) -> Operator {
    let regs: Vec<Register> = labels.iter().map(|(l, d)| Register::new(*l, *d)).collect();
    let d: usize = labels.iter().map(|x| x.1).product();
    Operator::new(regs, random::density(rng, d, d)).expect("dimensions match")
}

fn pick<T: Copy>(rng: &mut SimRng, xs: &[T]) -> T {
    xs[rng.random_range(0..xs.len())]
}

/// `ρ_{A₁B₁A₂B₂}` with `A₁ ↔ B₁ ↔ B₂`: `B₁` classical, copied into `R`, then `R → A₂B₂`.
pub fn markov_instance(rng: &mut SimRng) -> Result<Operator> {
    let mut a1b1 = CMat::zeros(4, 4);
    let w = random::probability_vector(rng, 2);
    for (b, wb) in w.iter().enumerate() {
        a1b1 += linalg::kron(&(random::density(rng, 2, 2) * c(*wb)), &linalg::basis_projector(2, b));
    }
    let rho0 = Operator::new(vec![Register::new("A1", 2), Register::new("B1", 2)], a1b1)?;
    let copy = Channel::from_kraus(
        vec![Register::new("B1", 2)],
        vec![Register::new("B1", 2), Register::new("R", 2)],
        vec![CMat::from_fn(4, 2, |o, i| if o == i * 3 { c(1.0) } else { c(0.0) })],
    )?;
    let m = Channel::from_kraus(
        vec![Register::new("R", 2)],
        vec![Register::new("A2", 2), Register::new("B2", 2)],
        random::kraus_channel(rng, 2, 4, 2),
    )?;
    m.apply(&copy.apply(&rho0)?)
}

const ALPHAS: [f64; 4] = [0.6, 1.5, 2.0, 3.0];

fn chain_rule_suite(o: &VerifyOptions) -> Vec<Check> {
    let exact = run_check("chain_rule_exact", 1e-7, 1, o, |rng| {
        let rho = state_on(rng, &[("A1", 2), ("A2", 2), ("B", 2)]);
        let mut worst: f64 = 0.0;
        for a in ALPHAS {
            worst = worst.max(chain::chain_rule_exact_check(&rho, &["A1"], &["B"], a)?.residual);
        }
        Ok(worst)
    });
    let bounds = run_check("chain_rule_markov_bounds", 1e-7, 2, o, |rng| {
        let rho = markov_instance(rng)?;
        let a = pick(rng, &ALPHAS);
        let b = chain::chain_rule_markov_bounds(&rho, &["A1"], &["B1"], &["A2"], &["B2"], a, 10, rng)?;
        Ok((b.inf_estimate - b.exact_delta).max(b.exact_delta - b.sup_estimate).max(0.0))
    });
    let witness = run_check("chain_rule_conditional_match", 1e-8, 3, o, |rng| {
        let rho = markov_instance(rng)?;
        let a = pick(rng, &ALPHAS);
        let b = chain::chain_rule_markov_bounds(&rho, &["A1"], &["B1"], &["A2"], &["B2"], a, 0, rng)?;
        Ok(b.witness_conditional_residual)
    });
    let cond = run_check("markov_drops_conditioning", 1e-8, 4, o, |rng| {
        let rho = markov_instance(rng)?;
        chain::markov_conditioning_gap(&rho, &["A1"], &["B1"], &["B2"], pick(rng, &ALPHAS))
    });
    vec![exact, bounds, witness, cond]
}

// ---------------------------------------------------------------------------
// Lemmas

fn lemma_suite(o: &VerifyOptions) -> Vec<Check> {
    vec![
        run_check("chainprep_identity", 1e-8, 10, o, |rng| {
            let rho = state_on(rng, &[("A1", 2), ("A2", 2), ("B", 2)]);
            let sigma = random::density(rng, 2, 2);
            let (l, r) = chain::chainprep_identity(&rho, &["A1"], &["B"], &sigma, pick(rng, &ALPHAS))?;
            Ok((l - r).abs())
        }),
        run_check("classical_side_information", 1e-8, 11, o, classical_side_information),
        run_check("purification_formula", 1e-5, 12, o, purification_formula),
        run_check("duality", 1e-5, 13, o, |rng| {
            let psi = random::pure_vector(rng, 8);
            let op = Operator::new(
                vec![Register::new("A", 2), Register::new("B", 2), Register::new("C", 2)],
                linalg::outer(&psi),
            )?;
            Ok(entropy::h_alpha_dual(&op, &["A"], &["B"], pick(rng, &[0.6, 1.5, 2.0]))?.residual)
        }),
        run_check("renyi_von_neumann_sandwich", 1e-8, 14, o, renyi_sandwich),
        run_check("smooth_renyi_bounds", 1e-5, 15, o, smooth_renyi_bounds),
        run_check("deterministic_function", 1e-5, 16, o, deterministic_function),
        run_check("conditioning_on_x_up", 1e-5, 17, o, conditioning_up),
        run_check("conditioning_on_x", 1e-8, 18, o, conditioning_plain),
        run_check("norm_duality", 1e-5, 19, o, norm_duality),
        run_check("petz_relative_entropy_bound", 1e-8, 20, o, petz_bound),
    ]
}

fn random_cq(rng: &mut SimRng, nx: usize, dims: &[(&str, usize)]) -> Result<CQState> {
    let w = random::probability_vector(rng, nx);
    let d: usize = dims.iter().map(|x| x.1).product();
    let mut b = std::collections::BTreeMap::new();
    for (x, wx) in w.iter().enumerate() {
        b.insert(vec![x], random::density(rng, d, d) * c(*wx));
    }
    CQState::new(
        vec![Register::classical("X", nx)],
        dims.iter().map(|(l, d)| Register::new(*l, *d)).collect(),
        b,
    )
}

fn classical_side_information(rng: &mut SimRng) -> Result<f64> {
    let st = random_cq(rng, 3, &[("A", 2), ("B", 2)])?;
    let a = pick(rng, &[0.6, 1.5, 2.0, 3.0]);
    let mix = entropy::h_alpha_classical_mixture(&st, &["B"], a)?;
    let direct = entropy::h_alpha(&st.to_operator(), &["X", "B"], a)?;
    Ok((mix - direct).abs())
}

/// `D_α(ρ‖σ) = sup_τ (1/α') log ‖(σ^{−α'/2} ⊗ τ^{α'/2})|ψ⟩‖²` with `τ` optimized on the
/// purifying system.
fn purification_formula(rng: &mut SimRng) -> Result<f64> {
    let rho = random::full_rank_density(rng, 2);
    let sigma = random::full_rank_density(rng, 2);
    let a = pick(rng, &[0.6, 1.5, 2.0, 3.0]);
    let ap = (a - 1.0) / a;
    let (psi, dr) = linalg::purify(&rho)?;
    let s = linalg::kron(&linalg::frac_power(&sigma, -ap / 2.0)?, &linalg::identity(dr));
    let v = &s * &psi;
    let value = |tau: &CMat| -> f64 {
        let t = linalg::frac_power(tau, ap / 2.0).expect("full-rank τ");
        let w = linalg::kron(&linalg::identity(2), &t) * &v;
        w.norm_squared().log2() / ap
    };
    let np = optim::density_param_count(dr);
    let mut best = f64::NEG_INFINITY;
    for _ in 0..3 {
        let x0: Vec<f64> = (0..np).map(|_| rng.random_range(-1.0..1.0)).collect();
        let m = optim::nelder_mead_restarts(
            &mut |x| -value(&regularized(optim::density_from_params(x, dr))),
            &x0,
            0.3,
            1e-13,
            4000,
            6,
        );
        best = best.max(-m.value);
    }
    let direct = entropy::d_alpha(&rho, &sigma, a)?;
    // The supremum is never exceeded; the optimizer gets within its tolerance.
    Ok((direct - best).abs())
}

fn regularized(t: CMat) -> CMat {
    let d = t.nrows();
    (t + linalg::identity(d) * c(1e-14)) / c(1.0 + d as f64 * 1e-14)
}

fn renyi_sandwich(rng: &mut SimRng) -> Result<f64> {
    let rho = state_on(rng, &[("A", 2), ("B", 2)]);
    let l = 5f64.log2();
    let a = 1.0 + rng.random_range(0.01..0.99) / l;
    let h = entropy::von_neumann_conditional(&rho, &["B"])?;
    let ha = entropy::h_alpha(&rho, &["B"], a)?;
    let hinv = entropy::h_alpha(&rho, &["B"], 1.0 / a)?;
    let slack = (a - 1.0) * l * l;
    Ok((h - slack - ha).max(ha - hinv).max(hinv - h - slack).max(0.0))
}

fn smooth_renyi_bounds(rng: &mut SimRng) -> Result<f64> {
    let rho = state_on(rng, &[("A", 2), ("B", 2)]);
    let eps = pick(rng, &[0.05, 0.1, 0.2]);
    let a = pick(rng, &[1.5, 2.0, 3.0]);
    let g = entropy::g_eps(eps) / (a - 1.0);
    let hmin = smooth::h_min_smooth(&rho, &["B"], eps)?;
    let up = entropy::h_alpha_up(&rho, &["B"], a)?;
    let hmax = smooth::h_max_smooth(&rho, &["B"], eps)?;
    let hinv = entropy::h_alpha(&rho, &["B"], 1.0 / a)?;
    Ok((up.lower - g - hmin.upper).max(hmax.lower - hinv - g).max(0.0))
}

/// Appending `X = t(y, z)` through an extraction map changes neither `H_α` nor `H↑_α`.
fn deterministic_function(rng: &mut SimRng) -> Result<f64> {
    let pa = vec![linalg::diag(&[1.0, 1.0, 0.0, 0.0]), linalg::diag(&[0.0, 0.0, 1.0, 1.0])];
    let pb = state::computational_projectors(2);
    let (ra, rb) = (Register::new("A", 4), Register::new("B", 2));
    let t = state::extraction_map((&ra, &pa), (&rb, &pb), Register::classical("X", 2), |y, z| y ^ z)?;
    let rho = t.apply(&state_on(rng, &[("A", 4), ("B", 2)]))?;
    let a = pick(rng, &[0.5, 0.8, 1.5, 2.0, 3.0]);
    let without_x = rho.ptrace(&["X"])?;
    let h1 = entropy::h_alpha(&rho, &["B"], a)?;
    let h2 = entropy::h_alpha(&without_x, &["B"], a)?;
    let u1 = entropy::h_alpha_up(&rho, &["B"], a)?.value;
    let u2 = entropy::h_alpha_up(&without_x, &["B"], a)?.value;
    Ok((h1 - h2).abs().max((u1 - u2).abs()))
}

fn mixture(rng: &mut SimRng) -> (Vec<f64>, Vec<Operator>, Operator) {
    let w = random::probability_vector(rng, 3);
    let parts: Vec<Operator> = (0..3).map(|_| state_on(rng, &[("A", 2), ("B", 2)])).collect();
    let mut m = CMat::zeros(4, 4);
    for (p, r) in w.iter().zip(&parts) {
        m += r.matrix() * c(*p);
    }
    let total = parts[0].with_matrix(m).expect("same registers");
    (w, parts, total)
}

fn conditioning_up(rng: &mut SimRng) -> Result<f64> {
    let (w, parts, rho) = mixture(rng);
    let x = rng.random_range(0..3);
    let a = pick(rng, &[0.5, 0.8, 1.5, 2.0, 3.0]);
    let lhs = entropy::h_alpha_up(&rho, &["B"], a)?.value - a / (a - 1.0) * (1.0 / w[x]).log2();
    let rhs = entropy::h_alpha_up(&parts[x], &["B"], a)?.value;
    Ok(if a > 1.0 { lhs - rhs } else { rhs - lhs }.max(0.0))
}

fn conditioning_plain(rng: &mut SimRng) -> Result<f64> {
    let (w, parts, rho) = mixture(rng);
    let x = rng.random_range(0..3);
    let a: f64 = rng.random_range(1.05..=2.0);
    let lhs = entropy::h_alpha(&rho, &["B"], 1.0 / a)? + a / (a - 1.0) * (1.0 / w[x]).log2();
    let rhs = entropy::h_alpha(&parts[x], &["B"], 1.0 / a)?;
    Ok((rhs - lhs).max(0.0))
}

fn bloch(r: [f64; 3]) -> CMat {
    let mut m = CMat::identity(2, 2) * c(0.5);
    m[(0, 0)] += c(0.5 * r[2]);
    m[(1, 1)] -= c(0.5 * r[2]);
    m[(0, 1)] += num_complex::Complex64::new(0.5 * r[0], -0.5 * r[1]);
    m[(1, 0)] += num_complex::Complex64::new(0.5 * r[0], 0.5 * r[1]);
    m
}

/// `‖X‖_α = sup_Z tr(X Z^{α'})` (`α' ≥ 0`) or `inf_Z` (`α' < 0`) over qubit states:
/// dense Bloch-ball grid, then local refinement.
fn norm_duality(rng: &mut SimRng) -> Result<f64> {
    let x = random::density(rng, 2, 2) * c(rng.random_range(0.2..2.0));
    let a = pick(rng, &[0.5, 0.8, 1.5, 2.0, 3.0]);
    let ap = (a - 1.0) / a;
    let sign = if ap >= 0.0 { 1.0 } else { -1.0 };
    let value = |z: &CMat| -> f64 {
        match linalg::frac_power(z, ap) {
            Ok(p) => sign * linalg::trace_prod(&x, &p).re,
            Err(_) => f64::NEG_INFINITY,
        }
    };
    let mut best = (f64::NEG_INFINITY, CMat::identity(2, 2));
    let steps = 16;
    for i in 0..=steps {
        let rr = 0.999 * i as f64 / steps as f64;
        for j in 0..=steps {
            let th = std::f64::consts::PI * j as f64 / steps as f64;
            for k in 0..2 * steps {
                let ph = std::f64::consts::PI * k as f64 / steps as f64;
                let z = bloch([rr * th.sin() * ph.cos(), rr * th.sin() * ph.sin(), rr * th.cos()]);
                let v = value(&z);
                if v > best.0 {
                    best = (v, z);
                }
            }
        }
    }
    // Refine over Z = GG†/tr(GG†), which reaches eigenvalues near zero smoothly.
    let x0 = optim::params_from_density(&best.1);
    let m = optim::nelder_mead_restarts(&mut |p| -value(&optim::density_from_params(p, 2)), &x0, 0.1, 1e-15, 6000, 8);
    let refined = sign * (-m.value).max(best.0);
    let norm = linalg::schatten(&x, a);
    // Sup case: the grid can never exceed the norm; both cases converge to it.
    Ok((refined - norm).abs())
}

/// `D'_α(ρ‖σ) < D(ρ‖σ) + (α−1) log² η` for `α ∈ (1, 1 + 1/log η)`.
fn petz_bound(rng: &mut SimRng) -> Result<f64> {
    let d = pick(rng, &[2usize, 3]);
    let rho = random::full_rank_density(rng, d);
    let sigma = random::full_rank_density(rng, d) * c(rng.random_range(0.5..2.0));
    let d2 = entropy::d_alpha_petz(&rho, &sigma, 2.0)?;
    let proj = linalg::support_projector(&rho)?;
    let d0 = -linalg::trace_prod(&proj, &sigma).re.log2();
    let eta = 4f64.max(d2.exp2() + (-d0).exp2() + 1.0);
    let l = eta.log2();
    let a = 1.0 + rng.random_range(0.01..0.99) / l;
    let lhs = entropy::d_alpha_petz(&rho, &sigma, a)?;
    let rhs = entropy::relative_entropy(&rho, &sigma)? + (a - 1.0) * l * l;
    Ok((lhs - rhs).max(0.0))
}

// ---------------------------------------------------------------------------
// Soundness of the accumulation bound on exact small processes

fn eat_soundness_suite(o: &VerifyOptions) -> Vec<Check> {
    let mut sound = Check::new("eat_min_bound_sound", 0.0);
    let mut markov = Check::new("markov_conditions", TOL_MARKOV);
    for i in 0..o.trials {
        let s = instance_seed(o.seed, 30, i);
        let n = 1 + i % 3;
        let mut rng = random::rng(s);
        let r = (|| -> Result<(f64, f64)> {
            let p = sim::random_markov_process(n, &mut rng)?;
            let out = sim::run_process(&p)?;
            let mv = sim::check_markov_chain_conditions(&out)?.into_iter().fold(0.0, f64::max);
            let f = sim::sampled_min_tradeoff(&p, 8, &mut rng)?;
            let eps = pick(&mut rng, &[0.01, 0.1, 0.5]);
            let rep = sim::soundness_experiment(&out, &f, eps, &Event::Full)?;
            Ok(((rep.eat_bound - rep.exact_hmin).max(0.0), mv))
        })();
        match r {
            Ok((v, mv)) => {
                sound.record(Ok(v), s);
                markov.record(Ok(mv), s);
            }
            Err(e) => {
                let msg = e.to_string();
                sound.record(Err(e), s);
                markov.record(Err(Error::Precondition(msg)), s);
            }
        }
    }
    // E91 rounds with the tangent of the uncertainty tradeoff.
    let mut e91 = Check::new("eat_min_bound_sound_e91", 0.0);
    if o.trials > 0 {
        for (k, p) in [0.0, 0.1, 0.25].into_iter().enumerate() {
            let r = (|| -> Result<f64> {
                let out = sim::run_process(&sim::e91_process(2, p, 0.5)?)?;
                let (f, _) = apps::qkd_tangent(0.5, 0.1)?;
                let omega = Event::Frequency {
                    registers: vec!["X1".into(), "X2".into()],
                    alphabet: 3,
                    constraints: vec![FreqConstraint::at_most(3, 1, 0.5)],
                };
                let rep = sim::soundness_experiment(&out, &f, 0.1, &omega)?;
                Ok((rep.eat_bound - rep.exact_hmin).max(0.0))
            })();
            e91.record(r, k as u64);
        }
    }
    // Constant tradeoff on IID inputs: the bound is the AEP bound. (n ≤ 2 keeps the
    // exact side cheap; the bound itself does not depend on it.)
    let aep = run_check("aep_consistency", 1e-12, 31, o, |rng| {
        let nu = state_on(rng, &[("A", 2), ("B", 2)]);
        let n = rng.random_range(1..=2);
        let out = sim::run_process(&sim::iid_process(&nu, &["A"], n)?)?;
        let h = entropy::von_neumann_conditional(&nu, &["B"])?;
        let f = TradeoffSpec::constant(h, TradeoffKind::Min);
        let rep = sim::soundness_experiment(&out, &f, 0.1, &Event::Full)?;
        let a = eat::aep_bound(&nu, &["B"], n as u64, 0.1)?;
        Ok((rep.eat_bound - a).abs() / a.abs().max(1.0))
    });
    vec![sound, markov, e91, aep]
}

// ---------------------------------------------------------------------------
// Counterexample without the Markov conditions

fn counterexample_suite(o: &VerifyOptions) -> Result<(Vec<Check>, Vec<(String, f64)>)> {
    let eps = 0.01;
    let ns: Vec<usize> = match o.n {
        Some(n) => vec![n],
        None => (3..=8).collect(),
    };
    let mut cap = Check::new("counterexample_hmin_eps_bounded", 0.0);
    let mut half = Check::new("counterexample_sum_at_least_half_n", 0.0);
    let mut gap = Check::new("counterexample_sum_exceeds_hmin_eps", 0.0);
    let mut values = Vec::new();
    for &n in &ns {
        let r = sim::markov_counterexample(n, eps)?;
        cap.record(Ok((r.hmin_eps - 1.2).max(0.0)), n as u64);
        half.record(Ok((n as f64 / 2.0 - r.per_step_sum).max(0.0)), n as u64);
        gap.record(Ok((r.hmin_eps - r.per_step_sum).max(0.0)), n as u64);
        values.push((format!("n{n}.hmin_eps"), r.hmin_eps));
        values.push((format!("n{n}.per_step_sum"), r.per_step_sum));
        values.push((format!("n{n}.eat_rhs"), r.eat_rhs));
        if n == *ns.last().unwrap() {
            values.push(("crossover_n".into(), r.crossover_n));
        }
    }
    let mut violated = Check::new("counterexample_markov_violated", 0.0);
    let out = sim::counterexample_output(2)?;
    let v = sim::check_markov_chain_conditions(&out)?.into_iter().fold(0.0, f64::max);
    violated.record(Ok((TOL_MARKOV - v).max(0.0)), 2);
    values.push(("n2.markov_violation".into(), v));
    Ok((vec![cap, half, gap, violated], values))
}
