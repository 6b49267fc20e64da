//! Entropies and divergences (base-2 logarithms throughout).
//!
//! Conditional quantities take the conditioning labels `cond`; every other register
//! of the input is the conditioned system `A`.

use crate::error::{precondition, Error, Result};
use crate::linalg::{self, c, CMat};
use crate::operator::Operator;
use crate::optim;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    ClosedForm,
    Eigensolve,
    Optimized,
    Bisection,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::ClosedForm => "closed_form",
            Method::Eigensolve => "eigensolve",
            Method::Optimized => "optimized",
            Method::Bisection => "bisection",
        }
    }
}

/// A value in bits. `lower <= true value <= upper`; `certified_gap = upper - lower`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntropyResult {
    pub value: f64,
    pub method: Method,
    pub certified_gap: f64,
    pub lower: f64,
    pub upper: f64,
}

impl EntropyResult {
    pub fn exact(value: f64, method: Method) -> Self {
        EntropyResult { value, method, certified_gap: 0.0, lower: value, upper: value }
    }

    pub fn interval(value: f64, method: Method, lower: f64, upper: f64) -> Self {
        EntropyResult { value, method, certified_gap: (upper - lower).max(0.0), lower, upper }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlphaParam {
    pub alpha: f64,
    pub alpha_prime: f64,
}

impl AlphaParam {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) || alpha == 1.0 || !alpha.is_finite() {
            return precondition(format!("alpha must lie in (0,1)∪(1,∞), got {alpha}"));
        }
        Ok(AlphaParam { alpha, alpha_prime: (alpha - 1.0) / alpha })
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return precondition(format!("alpha must be positive and finite, got {alpha}"));
    }
    Ok(())
}

pub fn xlog2x(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.log2()
    }
}

pub fn shannon(p: &[f64]) -> f64 {
    -p.iter().map(|&x| xlog2x(x)).sum::<f64>()
}

pub fn h_shannon_binary(e: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&e) {
        return precondition(format!("binary entropy argument {e} outside [0,1]"));
    }
    Ok(shannon(&[e, 1.0 - e]))
}

/// `g(ε) = −log(1 − √(1 − ε²))`.
pub fn g_eps(eps: f64) -> f64 {
    -(1.0 - (1.0 - eps * eps).max(0.0).sqrt()).log2()
}

pub fn von_neumann(rho: &CMat) -> f64 {
    -linalg::eigh(rho).values.iter().map(|&x| xlog2x(x)).sum::<f64>()
}

/// `(matrix in A⊗B order, d_A, d_B, B marginal)` with `B = cond`.
pub(crate) struct Split {
    pub rho: CMat,
    pub da: usize,
    pub db: usize,
}

pub(crate) fn split(rho: &Operator, cond: &[&str]) -> Result<Split> {
    for l in cond {
        rho.position(l)?;
    }
    let a: Vec<&str> = rho.labels().into_iter().filter(|l| !cond.contains(l)).collect();
    let order: Vec<&str> = a.iter().chain(cond.iter()).cloned().collect();
    let r = rho.reorder(&order)?;
    let da = rho.subdim(&a)?;
    let db = rho.subdim(cond)?;
    Ok(Split { rho: r.into_matrix(), da, db })
}

pub(crate) fn marginal_b(s: &Split) -> CMat {
    linalg::partial_trace(&s.rho, &[s.da, s.db], &[1])
}

pub(crate) fn lift_b(x: &CMat, da: usize) -> CMat {
    linalg::kron(&linalg::identity(da), x)
}

/// `H(A|B) = H(AB) − H(B)`.
pub fn von_neumann_conditional(rho: &Operator, cond: &[&str]) -> Result<f64> {
    let s = split(rho, cond)?;
    Ok(von_neumann(&s.rho) - von_neumann(&marginal_b(&s)))
}

/// `I(A:C|B)` for disjoint label sets.
pub fn conditional_mutual_information(rho: &Operator, a: &[&str], c_: &[&str], b: &[&str]) -> Result<f64> {
    let join = |x: &[&str], y: &[&str]| -> Vec<String> {
        x.iter().chain(y.iter()).map(|s| s.to_string()).collect()
    };
    let h = |labels: Vec<String>| -> Result<f64> {
        if labels.is_empty() {
            return Ok(0.0);
        }
        let l: Vec<&str> = labels.iter().map(|s| s.as_str()).collect();
        Ok(von_neumann(rho.ptrace_keep(&l)?.matrix()))
    };
    let abc: Vec<String> = join(&join(a, b).iter().map(|s| s.as_str()).collect::<Vec<_>>(), c_);
    Ok(h(join(a, b))? + h(join(b, c_))? - h(b.iter().map(|s| s.to_string()).collect())? - h(abc)?)
}

fn support_excess(rho: &CMat, sigma: &CMat) -> Result<f64> {
    let p = linalg::support_projector(sigma)?;
    let q = linalg::identity(p.nrows()) - p;
    Ok(linalg::trace_re(&(&q * rho * &q)).abs())
}

fn support_violated(rho: &CMat, sigma: &CMat) -> Result<bool> {
    let scale = linalg::trace_re(rho).abs().max(1e-300);
    Ok(support_excess(rho, sigma)? > 1e-10 * scale)
}

/// Umegaki relative entropy in bits; `+∞` when the support condition fails.
pub fn relative_entropy(rho: &CMat, sigma: &CMat) -> Result<f64> {
    if support_violated(rho, sigma)? {
        return Ok(f64::INFINITY);
    }
    let er = linalg::eigh(rho);
    let es = linalg::eigh(sigma);
    let cut = linalg::tolerances().eig_clip * es.max();
    let log_sigma = es.map(|x| if x > cut { x.log2() } else { 0.0 });
    let t1: f64 = er.values.iter().map(|&x| xlog2x(x)).sum();
    Ok(t1 - linalg::trace_prod(rho, &log_sigma).re)
}

/// Sandwiched Rényi divergence `D_α(ρ‖σ)`; `+∞` when it diverges.
pub fn d_alpha(rho: &CMat, sigma: &CMat, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if alpha == 1.0 {
        return relative_entropy(rho, sigma);
    }
    if alpha > 1.0 && support_violated(rho, sigma)? {
        return Ok(f64::INFINITY);
    }
    let ap = (alpha - 1.0) / alpha;
    let s = linalg::frac_power(sigma, -ap / 2.0)?;
    let m = &s * rho * &s;
    let q = linalg::trace_power(&m, alpha)?;
    if q <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(q.log2() / (alpha - 1.0))
}

/// Petz Rényi divergence `D'_α(ρ‖σ) = log tr(ρ^α σ^{1−α}) / (α−1)`.
pub fn d_alpha_petz(rho: &CMat, sigma: &CMat, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if alpha == 1.0 {
        return relative_entropy(rho, sigma);
    }
    if alpha > 1.0 && support_violated(rho, sigma)? {
        return Ok(f64::INFINITY);
    }
    let q = linalg::trace_prod(&linalg::frac_power(rho, alpha)?, &linalg::frac_power(sigma, 1.0 - alpha)?).re;
    if q <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(q.log2() / (alpha - 1.0))
}

/// `H_α(A|B) = −D_α(ρ_AB ‖ id_A ⊗ ρ_B)`; `α = 1` dispatches to von Neumann.
pub fn h_alpha(rho: &Operator, cond: &[&str], alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if alpha == 1.0 {
        return von_neumann_conditional(rho, cond);
    }
    let s = split(rho, cond)?;
    let rb = marginal_b(&s);
    let p = lift_b(&linalg::frac_power(&rb, (1.0 - alpha) / (2.0 * alpha))?, s.da);
    let m = &p * &s.rho * &p;
    let q = linalg::trace_power(&m, alpha)?;
    Ok(q.log2() / (1.0 - alpha))
}

/// `H_α(A|BX)` for `X` classical, from the branches:
/// `1/(1−α) · log Σ_x p_x 2^{(1−α) H_α(A|B)_{ρ|x}}`. `cond` lists the quantum `B` registers.
pub fn h_alpha_classical_mixture(state: &crate::state::CQState, cond: &[&str], alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let regs = state.quantum_registers().to_vec();
    let mut terms = Vec::new();
    for m in state.branches().values() {
        let p = linalg::trace_re(m);
        if p <= 0.0 {
            continue;
        }
        let h = h_alpha(&Operator::new(regs.clone(), m * c(1.0 / p))?, cond, alpha)?;
        terms.push((p, h));
    }
    if alpha == 1.0 {
        return Ok(terms.iter().map(|(p, h)| p * h).sum());
    }
    let s: f64 = terms.iter().map(|(p, h)| p * ((1.0 - alpha) * h).exp2()).sum();
    Ok(s.log2() / (1.0 - alpha))
}

/// Closed form `H'_α(A|B) = −inf_σ D'_α(ρ_AB‖id⊗σ_B) = α/(1−α) · log tr[(tr_A ρ^α)^{1/α}]`.
pub fn h_prime_alpha(rho: &Operator, cond: &[&str], alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if alpha == 1.0 {
        return von_neumann_conditional(rho, cond);
    }
    let s = split(rho, cond)?;
    let pa = linalg::frac_power(&s.rho, alpha)?;
    let y = linalg::partial_trace(&pa, &[s.da, s.db], &[1]);
    let t = linalg::trace_power(&y, 1.0 / alpha)?;
    Ok(alpha / (1.0 - alpha) * t.log2())
}

/// `H'_α(A|B)` by direct derivative-free minimization of `D'_α` over `σ_B`.
pub fn h_prime_alpha_optimized(rho: &Operator, cond: &[&str], alpha: f64) -> Result<EntropyResult> {
    AlphaParam::new(alpha)?;
    let s = split(rho, cond)?;
    let pa = linalg::frac_power(&s.rho, alpha)?;
    let y = linalg::partial_trace(&pa, &[s.da, s.db], &[1]);
    let db = s.db;
    let mut obj = |x: &[f64]| -> f64 {
        let sigma = optim::density_from_params(x, db);
        match linalg::frac_power(&sigma, 1.0 - alpha) {
            Ok(p) => {
                let q = linalg::trace_prod(&y, &p).re;
                if q > 0.0 {
                    q.log2() / (alpha - 1.0)
                } else {
                    f64::INFINITY
                }
            }
            Err(_) => f64::INFINITY,
        }
    };
    let starts = [optim::params_from_density(&marginal_b(&s)), optim::params_from_density(&linalg::maximally_mixed(db))];
    let mut best: Option<optim::Minimum> = None;
    for x0 in starts.iter() {
        let m = optim::nelder_mead_restarts(&mut obj, x0, 0.3, 1e-15, 40_000, 6);
        if best.as_ref().map_or(true, |b| m.value < b.value) {
            best = Some(m);
        }
    }
    let b = best.expect("at least one start");
    Ok(EntropyResult { value: -b.value, method: Method::Optimized, certified_gap: b.spread, lower: -b.value - b.spread, upper: -b.value + b.spread })
}

/// `D_max(ρ‖σ) = log λ_max(σ^{−1/2} ρ σ^{−1/2})`; `+∞` on support violation.
pub fn d_max(rho: &CMat, sigma: &CMat) -> Result<f64> {
    if support_violated(rho, sigma)? {
        return Ok(f64::INFINITY);
    }
    let s = linalg::frac_power(sigma, -0.5)?;
    let l = linalg::eigh(&(&s * rho * &s)).max();
    Ok(if l > 0.0 { l.log2() } else { f64::NEG_INFINITY })
}

#[derive(Clone, Debug)]
pub struct SmoothingCertificate {
    pub lambda: f64,
    pub rho_tilde: CMat,
    /// Purified-distance radius `√(2 tr Δ − (tr Δ)²)`.
    pub epsilon: f64,
    pub delta_trace: f64,
    /// Directly evaluated `P(ρ, ρ̃)`.
    pub distance: f64,
    /// `λ_max(ρ̃ − 2^λ σ)`, should be ≤ 0.
    pub domination_excess: f64,
}

/// Smoothed candidate for `D_max^ε`: `ρ̃ = G ρ G†` with `G = (2^λσ)^{1/2} (2^λσ + Δ)^{−1/2}`,
/// `Δ = {ρ − 2^λ σ}_+`, which satisfies `ρ̃ ≤ 2^λ σ`.
pub fn d_max_smooth_certificate(rho: &CMat, sigma: &CMat, lambda: f64) -> Result<SmoothingCertificate> {
    if support_violated(rho, sigma)? {
        return Err(Error::Precondition("supp(rho) is not contained in supp(sigma)".into()));
    }
    let scaled = sigma * c(2f64.powf(lambda));
    let e = linalg::eigh(&(rho - &scaled));
    let delta = e.map(|x| x.max(0.0));
    let td = linalg::trace_re(&delta).max(0.0);
    let g = linalg::frac_power(&scaled, 0.5)? * linalg::frac_power(&linalg::hermitize(&(&scaled + &delta)), -0.5)?;
    let rho_tilde = linalg::hermitize(&(&g * rho * g.adjoint()));
    let epsilon = (2.0 * td - td * td).max(0.0).sqrt();
    let distance = linalg::purified_distance(rho, &rho_tilde)?;
    let domination_excess = linalg::eigh(&(&rho_tilde - &scaled)).max();
    Ok(SmoothingCertificate { lambda, rho_tilde, epsilon, delta_trace: td, distance, domination_excess })
}

/// Smallest `λ` (to bisection accuracy) whose certificate radius is at most `eps`.
pub fn d_max_smooth_lambda(rho: &CMat, sigma: &CMat, eps: f64) -> Result<SmoothingCertificate> {
    let hi = d_max(rho, sigma)?;
    if !hi.is_finite() {
        return precondition("D_max is not finite");
    }
    let radius = |l: f64| -> f64 {
        let scaled = sigma * c(2f64.powf(l));
        let td = linalg::trace_re(&linalg::eigh(&(rho - &scaled)).map(|x| x.max(0.0))).max(0.0);
        (2.0 * td - td * td).max(0.0).sqrt()
    };
    let mut lo = hi - 1.0;
    while radius(lo) <= eps && lo > hi - 200.0 {
        lo -= 1.0 + (hi - lo);
    }
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if radius(m) <= eps {
            b = m;
        } else {
            a = m;
        }
        if b - a < 1e-13 {
            break;
        }
    }
    d_max_smooth_certificate(rho, sigma, b)
}

/// Result of the fixed-point / derivative-free search for `H↑_α`.
#[derive(Clone, Debug)]
pub struct UpOptimum {
    pub result: EntropyResult,
    pub sigma: CMat,
    pub iterations: usize,
    pub used_fallback: bool,
}

struct UpProblem {
    rho: CMat,
    da: usize,
    db: usize,
    alpha: f64,
}

struct UpEval {
    q: f64,
    /// `tr_A[(S ρ S)^α]` with `S = id ⊗ σ^{−α'/2}`.
    t: CMat,
    grad: CMat,
}

impl UpProblem {
    fn ap(&self) -> f64 {
        (self.alpha - 1.0) / self.alpha
    }

    /// Divergence `D_α(ρ‖id⊗σ)` in bits.
    fn d_of_q(&self, q: f64) -> f64 {
        if q <= 0.0 {
            return f64::INFINITY;
        }
        q.log2() / (self.alpha - 1.0)
    }

    fn q(&self, sigma: &CMat) -> f64 {
        let e = linalg::eigh(sigma);
        if e.min() <= 0.0 {
            return if self.alpha > 1.0 { f64::INFINITY } else { 0.0 };
        }
        let s = lift_b(&e.map(|x| x.powf(-self.ap() / 2.0)), self.da);
        let m = &s * &self.rho * &s;
        linalg::eigh(&m).values.iter().map(|&x| if x > 0.0 { x.powf(self.alpha) } else { 0.0 }).sum()
    }

    fn eval(&self, sigma: &CMat) -> UpEval {
        let a = self.alpha;
        let p = -self.ap() / 2.0;
        let es = linalg::eigh(sigma);
        let s_b = es.map(|x| x.max(1e-300).powf(p));
        let s = lift_b(&s_b, self.da);
        let m = linalg::hermitize(&(&s * &self.rho * &s));
        let em = linalg::eigh(&m);
        let cut = linalg::tolerances().eig_clip * em.max();
        let q: f64 = em.values.iter().map(|&x| if x > cut { x.powf(a) } else { 0.0 }).sum();
        let ma = em.map(|x| if x > cut { x.powf(a) } else { 0.0 });
        let t = linalg::hermitize(&linalg::partial_trace(&ma, &[self.da, self.db], &[1]));
        let w = em.map(|x| if x > cut { x.powf(a - 1.0) } else { 0.0 });
        let k = &self.rho * &s * &w;
        let k = &k + k.adjoint();
        let kb = linalg::partial_trace(&k, &[self.da, self.db], &[1]);
        let u = &es.vectors;
        let kt = u.adjoint() * kb * u;
        let vals: Vec<f64> = es.values.iter().map(|x| x.max(1e-300)).collect();
        let gam = linalg::divided_differences(&vals, |x| x.powf(p), |x| p * x.powf(p - 1.0));
        let gt = CMat::from_fn(self.db, self.db, |i, j| kt[(i, j)] * c(gam[(i, j)]));
        let grad = linalg::hermitize(&(u * gt * u.adjoint() * c(a)));
        UpEval { q, t, grad }
    }

    /// Frank–Wolfe bound on the distance to the optimum, converted to bits.
    fn gap_bits(&self, sigma: &CMat, ev: &UpEval) -> f64 {
        let e = linalg::eigh(&ev.grad);
        let lin = linalg::trace_prod(&ev.grad, sigma).re;
        let q = ev.q;
        if self.alpha > 1.0 {
            let gap = (lin - e.min()).max(0.0);
            if gap >= q {
                return f64::INFINITY;
            }
            (q.log2() - (q - gap).log2()) / (self.alpha - 1.0)
        } else {
            let gap = (e.max() - lin).max(0.0);
            ((q + gap).log2() - q.log2()) / (1.0 - self.alpha)
        }
    }

    fn fixed_point_step(&self, sigma: &CMat, ev: &UpEval) -> Option<CMat> {
        let a = self.alpha;
        let half = linalg::frac_power(sigma, (a - 1.0) / 2.0).ok()?;
        let inner = linalg::hermitize(&(&half * &ev.t * &half));
        let next = linalg::frac_power(&inner, 1.0 / a).ok()?;
        let tr = linalg::trace_re(&next);
        if !(tr > 0.0) || !tr.is_finite() {
            return None;
        }
        Some(regularize(&(next / c(tr))))
    }
}

fn regularize(sigma: &CMat) -> CMat {
    let d = sigma.nrows();
    let e = linalg::eigh(sigma);
    let floor = 1e-14;
    let m = e.map(|x| x.max(floor));
    let t = linalg::trace_re(&m);
    let _ = d;
    linalg::hermitize(&(m / c(t)))
}

struct UpIterate {
    sigma: CMat,
    ev: UpEval,
    d: f64,
    gap: f64,
}

impl UpIterate {
    fn new(prob: &UpProblem, sigma: CMat) -> Self {
        let ev = prob.eval(&sigma);
        let d = prob.d_of_q(ev.q);
        let gap = prob.gap_bits(&sigma, &ev);
        UpIterate { sigma, ev, d, gap }
    }
}

/// Damped fixed-point iteration: the full step is tried first, then convex combinations
/// with the current point. Near the optimum D is flat to roundoff while σ still moves, so
/// such steps are accepted. Returns the number of accepted steps.
fn descend(prob: &UpProblem, it: &mut UpIterate, max_iter: usize, tol: f64) -> usize {
    let mut steps = 0;
    while steps < max_iter && it.gap > tol {
        let Some(next) = prob.fixed_point_step(&it.sigma, &it.ev) else { break };
        let mut accepted = None;
        let mut s = 1.0;
        for _ in 0..14 {
            let cand = if s == 1.0 { next.clone() } else { regularize(&(&it.sigma * c(1.0 - s) + &next * c(s))) };
            let cit = UpIterate::new(prob, cand);
            if cit.d <= it.d + 1e-13 * (1.0 + it.d.abs()) {
                accepted = Some(cit);
                break;
            }
            s *= 0.5;
        }
        let Some(cit) = accepted else { break };
        let moved = linalg::max_abs(&(&cit.sigma - &it.sigma));
        let d = it.d.min(cit.d);
        *it = cit;
        it.d = d;
        steps += 1;
        if moved < 1e-15 {
            break;
        }
    }
    steps
}

/// `H↑_α(A|B) = −inf_σ D_α(ρ_AB‖id_A⊗σ_B)` over normalized `σ_B`, with the optimizer.
pub fn h_alpha_up_full(rho: &Operator, cond: &[&str], alpha: f64) -> Result<UpOptimum> {
    check_alpha(alpha)?;
    if alpha == 1.0 {
        let v = von_neumann_conditional(rho, cond)?;
        let s = split(rho, cond)?;
        return Ok(UpOptimum { result: EntropyResult::exact(v, Method::Eigensolve), sigma: marginal_b(&s), iterations: 0, used_fallback: false });
    }
    let s = split(rho, cond)?;
    let tol = linalg::tolerances();
    let prob = UpProblem { rho: s.rho.clone(), da: s.da, db: s.db, alpha };
    let rb = marginal_b(&s);
    let rb = rb.clone() / c(linalg::trace_re(&rb));
    let sigma = regularize(&(rb * c(1.0 - 1e-9) + linalg::maximally_mixed(s.db) * c(1e-9)));
    let mut it = UpIterate::new(&prob, sigma);
    let mut iterations = descend(&prob, &mut it, tol.max_iter, tol.opt);
    let mut used_fallback = false;
    if it.gap > tol.opt {
        used_fallback = true;
        // Slow linear convergence is the common case; keep iterating before searching.
        iterations += descend(&prob, &mut it, 20 * tol.max_iter, tol.opt);
    }
    if it.gap > tol.opt {
        let db = s.db;
        let mut obj = |x: &[f64]| -> f64 { prob.d_of_q(prob.q(&optim::density_from_params(x, db))) };
        let starts = [it.sigma.clone(), linalg::maximally_mixed(db)];
        for st in starts.iter() {
            let m = optim::nelder_mead_restarts(&mut obj, &optim::params_from_density(st), 0.2, 1e-15, 5_000, 2);
            if m.value < it.d {
                let cand = UpIterate::new(&prob, regularize(&optim::density_from_params(&m.x, db)));
                if cand.d < it.d {
                    it = cand;
                }
            }
        }
        iterations += descend(&prob, &mut it, 20 * tol.max_iter, tol.opt);
    }
    let (sigma, d, gap) = (it.sigma, it.d, it.gap);
    let value = -d;
    // Any σ gives a lower bound on H↑; the Frank–Wolfe gap bounds the distance to the
    // optimum when Q_α is convex (α > 1) or concave (1/2 ≤ α < 1) in σ.
    let upper = if alpha >= 0.5 { value + gap } else { f64::INFINITY };
    Ok(UpOptimum {
        result: EntropyResult::interval(value, Method::Optimized, value, upper),
        sigma,
        iterations,
        used_fallback,
    })
}

pub fn h_alpha_up(rho: &Operator, cond: &[&str], alpha: f64) -> Result<EntropyResult> {
    Ok(h_alpha_up_full(rho, cond, alpha)?.result)
}

/// `D_α(ρ_AB ‖ id_A ⊗ σ_B)` for a given `σ_B`.
pub fn d_alpha_cond(rho: &Operator, cond: &[&str], sigma_b: &CMat, alpha: f64) -> Result<f64> {
    let s = split(rho, cond)?;
    if sigma_b.nrows() != s.db {
        return Err(Error::Dimension("sigma_B has the wrong dimension".into()));
    }
    d_alpha(&s.rho, &lift_b(sigma_b, s.da), alpha)
}

/// Both sides of `H_α(A|B) = −H'_{1/α}(A|C)` on a pure tripartite state.
#[derive(Clone, Copy, Debug)]
pub struct DualityCheck {
    pub h_alpha_ab: f64,
    pub h_prime_ac: f64,
    pub h_prime_ac_closed_form: f64,
    pub residual: f64,
}

pub fn h_alpha_dual(psi: &Operator, a: &[&str], b: &[&str], alpha: f64) -> Result<DualityCheck> {
    AlphaParam::new(alpha)?;
    let purity = linalg::trace_power(psi.matrix(), 2.0)?;
    if (purity - 1.0).abs() > 1e-8 || (psi.trace() - 1.0).abs() > 1e-8 {
        return precondition("input must be a normalized pure state");
    }
    let c_labels: Vec<&str> = psi.labels().into_iter().filter(|l| !a.contains(l) && !b.contains(l)).collect();
    let ab: Vec<&str> = a.iter().chain(b.iter()).cloned().collect();
    let ac: Vec<&str> = a.iter().chain(c_labels.iter()).cloned().collect();
    let rho_ab = psi.ptrace_keep(&ab)?;
    let rho_ac = psi.ptrace_keep(&ac)?;
    let lhs = h_alpha(&rho_ab, b, alpha)?;
    let (hp, hp_closed) = if c_labels.is_empty() {
        let v = h_prime_alpha(&rho_ac, &[], 1.0 / alpha)?;
        (v, v)
    } else {
        (h_prime_alpha_optimized(&rho_ac, &c_labels, 1.0 / alpha)?.value, h_prime_alpha(&rho_ac, &c_labels, 1.0 / alpha)?)
    };
    Ok(DualityCheck { h_alpha_ab: lhs, h_prime_ac: hp, h_prime_ac_closed_form: hp_closed, residual: (lhs + hp).abs() })
}
