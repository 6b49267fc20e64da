//! E91 key rates and FQRAC fidelity bounds.

use serde::{Deserialize, Serialize};

use crate::eat::{self, ConvexForm, EATParams, EatBound, TradeoffKind, TradeoffSpec};
use crate::entropy::h_shannon_binary;
use crate::error::{precondition, Result};

/// Per-round output dimension of `A_i Ā_i` (each in `{0, 1, ⊥}`).
pub const QKD_D_A: usize = 9;
/// Output dimension of `Ā_i` alone.
pub const QKD_D_ABAR: usize = 3;
pub const DEFAULT_P_OMEGA: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QKDParams {
    pub n: u64,
    pub mu: f64,
    pub e: f64,
    pub theta_ec: f64,
    #[serde(default)]
    pub r: f64,
    pub epsilon: f64,
    #[serde(default = "default_p_omega")]
    pub p_omega: f64,
}

fn default_p_omega() -> f64 {
    DEFAULT_P_OMEGA
}

fn check_mu(mu: f64) -> Result<()> {
    if !(mu > 0.0 && mu < 1.0) {
        return precondition(format!("μ must lie in (0,1), got {mu}"));
    }
    Ok(())
}

impl QKDParams {
    pub fn validate(&self) -> Result<()> {
        check_mu(self.mu)?;
        if self.n < 1 {
            return precondition("n must be at least 1");
        }
        if !(self.e > 0.0 && self.e <= 0.5) {
            return precondition(format!("e must lie in (0,1/2], got {}", self.e));
        }
        if !(0.0..=1.0).contains(&self.theta_ec) {
            return precondition(format!("θ_EC must lie in [0,1], got {}", self.theta_ec));
        }
        if !(0.0..=1.0).contains(&self.r) {
            return precondition(format!("r must lie in [0,1], got {}", self.r));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return precondition(format!("ε must lie in (0,1), got {}", self.epsilon));
        }
        if !(self.p_omega > 0.0 && self.p_omega <= 1.0) {
            return precondition(format!("p_Ω must lie in (0,1], got {}", self.p_omega));
        }
        Ok(())
    }
}

/// `1 − H_Sh(e) − θ_EC − 2μ`.
pub fn qkd_asymptotic_threshold(e: f64, theta_ec: f64, mu: f64) -> Result<f64> {
    check_mu(mu)?;
    if !(0.0..=1.0).contains(&theta_ec) {
        return precondition(format!("θ_EC must lie in [0,1], got {theta_ec}"));
    }
    Ok(1.0 - h_shannon_binary(e)? - theta_ec - 2.0 * mu)
}

/// Convex tradeoff over `{0, 1, ⊥}`: `1 − 2μ + μ² − H_Sh(q(1)/μ²)`.
///
/// Every achievable statistics vector has `q(0) + q(1) = μ²`; off that slice the
/// evaluator is extended as a function of `q(1)` alone, so its gradient is
/// `(0, −log((1−x)/x)/μ², 0)` with `x = q(1)/μ²`.
pub fn qkd_tradeoff(mu: f64) -> Result<TradeoffSpec> {
    check_mu(mu)?;
    let m2 = mu * mu;
    let base = 1.0 - 2.0 * mu + m2;
    let eval = move |q: &[f64]| {
        let x = q[1] / m2;
        match h_shannon_binary(x) {
            Ok(h) => base - h,
            Err(_) => f64::NAN,
        }
    };
    let grad = move |q: &[f64]| {
        let x = q[1] / m2;
        vec![0.0, -((1.0 - x) / x).log2() / m2, 0.0]
    };
    Ok(TradeoffSpec::convex(
        vec!["0".into(), "1".into(), "⊥".into()],
        TradeoffKind::Min,
        ConvexForm::new(eval, grad),
    ))
}

/// `q₀ = ((1−e)μ², eμ², 1−μ²)`.
pub fn qkd_q0(mu: f64, e: f64) -> Result<Vec<f64>> {
    check_mu(mu)?;
    if !(e > 0.0 && e < 1.0) {
        return precondition(format!("e must lie in (0,1) for a finite tangent, got {e}"));
    }
    let m2 = mu * mu;
    Ok(vec![(1.0 - e) * m2, e * m2, 1.0 - m2])
}

/// Affine tangent of [`qkd_tradeoff`] at `q₀` and `h = 1 − 2μ + μ² − H_Sh(e)`.
pub fn qkd_tangent(mu: f64, e: f64) -> Result<(TradeoffSpec, f64)> {
    eat::tangent_tradeoff(&qkd_tradeoff(mu)?, &qkd_q0(mu, e)?)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KeyBreakdown {
    /// `n h − c√n` for `H_min^{ε/4}(A Ā | B B̄ E)`.
    pub eat_term: f64,
    /// Tangent value at the observed statistics.
    pub h: f64,
    /// Error rate at which the tangent of the tradeoff is taken.
    pub tangent_e: f64,
    pub eat_c: f64,
    pub tradeoff_gradient: f64,
    /// `μ² n + c_max √n` bounding `H_max^{ε/4}(Ā | B B̄)`.
    pub max_entropy_term: f64,
    pub max_entropy_c: f64,
    /// `n θ_EC`.
    pub ec_leakage: f64,
    /// Additive constant of the smooth-entropy chain rule, `log(8/ε²)`.
    pub chain_rule_slack: f64,
    /// Privacy-amplification slack, `2 log(1/ε) + 2`.
    pub pa_slack: f64,
    /// Key length before clamping at zero.
    pub raw_key_bits: f64,
    pub rate: f64,
    pub asymptotic_threshold: f64,
    /// `r n ≤ key_bits`.
    pub rate_admissible: bool,
    pub vacuous: bool,
}

/// Tangent points worth trying for observed error rate `e`: for every integer value `G`
/// of the ceiled gradient norm, the smallest `e' ≥ e` whose tangent has norm at most `G`.
/// Moving the tangent towards `e` only raises its value at `e`, so nothing is lost by
/// skipping the points in between.
pub fn qkd_tangent_candidates(mu: f64, e: f64) -> Result<Vec<f64>> {
    let m2 = mu * mu;
    let grad = |x: f64| ((1.0 - x) / x).log2() / (2.0 * m2);
    qkd_q0(mu, e)?;
    let top = (grad(e) - 1e-12).ceil().max(0.0) as u64;
    let mut out = vec![e];
    for g in (0..top).rev() {
        // Nudged up so the gradient lands safely below g after rounding.
        let root = (1.0 / (1.0 + (2.0 * m2 * g as f64).exp2()) * (1.0 + 1e-12)).min(0.5);
        if root > e {
            out.push(root);
        }
    }
    Ok(out)
}

/// Key length with the tangent taken at `tangent_e`, evaluated at the observed `e`.
fn key_with_tangent(p: &QKDParams, tangent_e: f64) -> Result<(f64, f64, EatBound)> {
    let (t, _) = qkd_tangent(p.mu, tangent_e)?;
    // The tangent decreases in q(1), so its minimum over the accepted statistics sits at e.
    let h = t.affine_value(&qkd_q0(p.mu, p.e)?)?;
    let eat_params = EATParams { n: p.n, d_a: QKD_D_A, epsilon: p.epsilon / 4.0, p_omega: p.p_omega, h };
    Ok((h, tangent_e, eat::eat_min_bound(&eat_params, &t)?))
}

/// Finite-size key length `max(0, eat − max_entropy − ec − chain − pa)` and its terms,
/// maximized over the tangent point `e' ≥ e` of the tradeoff.
pub fn qkd_finite_key_length(p: &QKDParams) -> Result<(f64, KeyBreakdown)> {
    p.validate()?;
    let n = p.n as f64;
    let eps4 = p.epsilon / 4.0;
    let threshold = qkd_asymptotic_threshold(p.e, p.theta_ec, p.mu)?;
    let m2 = p.mu * p.mu;
    let fmax = TradeoffSpec::constant(m2, TradeoffKind::Max);
    let upper = eat::eat_max_bound(&EATParams { n: p.n, d_a: QKD_D_ABAR, epsilon: eps4, p_omega: p.p_omega, h: m2 }, &fmax)?;
    let ec_leakage = n * p.theta_ec;
    let chain_rule_slack = (8.0 / (p.epsilon * p.epsilon)).log2();
    let pa_slack = 2.0 * (1.0 / p.epsilon).log2() + 2.0;
    let mut best: Option<(f64, f64, EatBound)> = None;
    for e_t in qkd_tangent_candidates(p.mu, p.e)? {
        let cand = key_with_tangent(p, e_t)?;
        if best.as_ref().is_none_or(|b| cand.2.value > b.2.value) {
            best = Some(cand);
        }
    }
    let (h, tangent_e, lower) = best.expect("at least one candidate");
    let raw = lower.value - upper.value - ec_leakage - chain_rule_slack - pa_slack;
    let key = raw.max(0.0);
    let b = KeyBreakdown {
        eat_term: lower.value,
        h,
        tangent_e,
        eat_c: lower.c,
        tradeoff_gradient: lower.grad_norm,
        max_entropy_term: upper.value,
        max_entropy_c: upper.c,
        ec_leakage,
        chain_rule_slack,
        pa_slack,
        raw_key_bits: raw,
        rate: key / n,
        asymptotic_threshold: threshold,
        rate_admissible: p.r * n <= key,
        vacuous: raw <= 0.0,
    };
    Ok((key, b))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FQRACParams {
    pub m: u64,
    pub n: u64,
    pub k: u64,
    /// `ε` with `f² = 1 − ε`.
    pub epsilon: f64,
}

impl FQRACParams {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 || self.k == 0 {
            return precondition("m, n, k must be positive");
        }
        if self.k > self.m {
            return precondition(format!("k = {} exceeds m = {}", self.k, self.m));
        }
        if !(self.epsilon >= 0.0 && self.epsilon < 1.0) {
            return precondition(format!("ε must lie in [0,1), got {}", self.epsilon));
        }
        Ok(())
    }

    pub fn f_squared(&self) -> f64 {
        1.0 - self.epsilon
    }

    /// `(m − n − k + 1)/m`.
    fn x(&self) -> f64 {
        (self.m as f64 - self.n as f64 - self.k as f64 + 1.0) / self.m as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FqracReport {
    /// Upper bound on `f²`: `2^{−k((m−n−k+1)/(5m))² + 3}`.
    pub bound_fsq: f64,
    /// The bound is at least 1 and excludes nothing.
    pub vacuous: bool,
    /// The supplied fidelity violates the derived condition, i.e. no such code exists.
    pub condition_violated: bool,
    pub necessary_condition_holds: bool,
    pub condition_lhs: f64,
    pub condition_rhs: f64,
}

/// `√(4k log(8/f²))·log 5 ≥ k(m−n−k+1)/m − log(3/f³)`, as `(lhs, rhs)`.
pub fn fqrac_condition(p: &FQRACParams) -> (f64, f64) {
    let fsq = p.f_squared();
    let k = p.k as f64;
    let lhs = (4.0 * k * (8.0 / fsq).log2()).sqrt() * 5f64.log2();
    let rhs = k * p.x() - (3.0 / fsq.powf(1.5)).log2();
    (lhs, rhs)
}

/// `log(8/f²) > k((m−n−k+1)/(5m))²`.
pub fn fqrac_necessary_condition(p: &FQRACParams) -> bool {
    let y = p.x() / 5.0;
    (8.0 / p.f_squared()).log2() > p.k as f64 * y * y
}

pub fn fqrac_bound(p: &FQRACParams) -> Result<FqracReport> {
    p.validate()?;
    let y = p.x() / 5.0;
    let bound = 2f64.powf(-(p.k as f64) * y * y + 3.0);
    let (lhs, rhs) = fqrac_condition(p);
    Ok(FqracReport {
        bound_fsq: bound,
        vacuous: bound >= 1.0,
        condition_violated: lhs < rhs,
        necessary_condition_holds: fqrac_necessary_condition(p),
        condition_lhs: lhs,
        condition_rhs: rhs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qkd(n: u64, e: f64, theta: f64) -> QKDParams {
        QKDParams { n, mu: 0.05, e, theta_ec: theta, r: 0.0, epsilon: 1e-6, p_omega: 0.5 }
    }

    #[test]
    fn threshold_examples() {
        assert!((qkd_asymptotic_threshold(0.05, 0.2, 0.01).unwrap() - 0.4936).abs() < 1e-4);
        assert!((qkd_asymptotic_threshold(1e-300, 0.0, 1e-12).unwrap() - 1.0).abs() < 1e-9);
        assert!(qkd_asymptotic_threshold(0.5, 0.0, 0.01).unwrap() < 0.0);
    }

    #[test]
    fn tradeoff_values_and_tangent() {
        let mu = 0.05;
        let f = qkd_tradeoff(mu).unwrap();
        let m2 = mu * mu;
        let base = 1.0 - 2.0 * mu + m2;
        assert!((f.value(&[m2 / 2.0, m2 / 2.0, 1.0 - m2]).unwrap() - (base - 1.0)).abs() < 1e-12);
        assert!((f.value(&[m2, 0.0, 1.0 - m2]).unwrap() - base).abs() < 1e-12);
        let (t, h) = qkd_tangent(mu, 0.05).unwrap();
        assert!((h - 0.6161).abs() < 1e-4, "{h}");
        let q0 = qkd_q0(mu, 0.05).unwrap();
        assert!(f.gradient_fd_residual(&q0, 1e-9).unwrap() < 1e-5);
        // Tangent vertex differences match the finite-difference slope along the slice.
        let s = 1e-9;
        let fd = (f.value(&[q0[0] - s, q0[1] + s, q0[2]]).unwrap() - f.value(&[q0[0] + s, q0[1] - s, q0[2]]).unwrap()) / (2.0 * s);
        let slope = t.vertex_values[1] - t.vertex_values[0];
        assert!((fd - slope).abs() < 1e-5 * slope.abs(), "{fd} {slope}");
        for k in 0..=50 {
            let q1 = m2 * k as f64 / 50.0;
            let q = [m2 - q1, q1, 1.0 - m2];
            assert!(t.affine_value(&q).unwrap() <= f.value(&q).unwrap() + 1e-9);
        }
    }

    #[test]
    fn tradeoff_convex_on_slice() {
        let mu = 0.2;
        let f = qkd_tradeoff(mu).unwrap();
        let m2 = mu * mu;
        let pt = |x: f64| [m2 * (1.0 - x), m2 * x, 1.0 - m2];
        for i in 0..=20 {
            for j in 0..=20 {
                let (a, b) = (i as f64 / 20.0, j as f64 / 20.0);
                let mid = f.value(&pt(0.5 * (a + b))).unwrap();
                let avg = 0.5 * (f.value(&pt(a)).unwrap() + f.value(&pt(b)).unwrap());
                assert!(mid <= avg + 1e-12);
            }
        }
    }

    #[test]
    fn key_length_fixture_and_monotonicity() {
        // Frozen from oracles/qkd_key.py (key_opt). At n = 10⁶ every tangent is vacuous and
        // the flat one at e' = 1/2 loses least; the key turns positive between 10⁸ and 10¹⁰.
        let (k, b) = qkd_finite_key_length(&qkd(1_000_000, 0.05, 0.2)).unwrap();
        assert!(k == 0.0 && b.vacuous);
        assert!((b.raw_key_bits + 396680.93442861193).abs() < 1e-6 * 396680.0);
        assert_eq!(b.tangent_e, 0.5);
        assert_eq!(b.tradeoff_gradient, 0.0);
        let (k, b) = qkd_finite_key_length(&qkd(100_000_000, 0.05, 0.2)).unwrap();
        assert!((b.raw_key_bits + 21815515.362697165).abs() < 1e-6 * 21815515.0);
        assert!((b.tangent_e - 0.32415630394761255).abs() < 1e-9);
        let (k2, b) = qkd_finite_key_length(&qkd(10_000_000_000, 0.05, 0.2)).unwrap();
        assert!(k == 0.0 && (k2 - 3061450009.0264097).abs() < 1e-9 * k2 && !b.vacuous);
        assert!((b.tangent_e - 0.077414841573534133).abs() < 1e-9);
        assert!((b.eat_c - 9847.4615517963936).abs() < 1e-6);
        let k = k2;
        let terms = b.eat_term - b.max_entropy_term - b.ec_leakage - b.chain_rule_slack - b.pa_slack;
        assert!((terms - k).abs() < 1e-6 * k);
        let mut last = 0.0;
        for i in 0..10 {
            let n = 10u64.pow(6 + i / 2) * if i % 2 == 0 { 1 } else { 3 };
            let (k, _) = qkd_finite_key_length(&qkd(n, 0.05, 0.2)).unwrap();
            assert!(k >= last);
            last = k;
        }
        for n in [10, 1_000, 1_000_000, 100_000_000] {
            assert_eq!(qkd_finite_key_length(&qkd(n, 0.5, 0.0)).unwrap().0, 0.0);
        }
        let (k1, _) = qkd_finite_key_length(&qkd(10_000_000, 0.03, 0.1)).unwrap();
        let (k2, _) = qkd_finite_key_length(&qkd(10_000_000, 0.05, 0.1)).unwrap();
        let (k3, _) = qkd_finite_key_length(&qkd(10_000_000, 0.05, 0.2)).unwrap();
        assert!(k1 >= k2 && k2 >= k3);
        assert!(qkd_finite_key_length(&QKDParams { mu: 1.0, ..qkd(10, 0.1, 0.1) }).is_err());
    }

    #[test]
    fn fqrac_examples() {
        let r = fqrac_bound(&FQRACParams { m: 1000, n: 100, k: 500, epsilon: 0.0 }).unwrap();
        assert!((r.bound_fsq - 0.861).abs() < 1e-3, "{}", r.bound_fsq);
        let v = fqrac_bound(&FQRACParams { m: 20, n: 6, k: 15, epsilon: 0.1 }).unwrap();
        assert_eq!(v.bound_fsq, 8.0);
        assert!(v.vacuous);
        let mut last = 0.0;
        for n in 1..400 {
            let b = fqrac_bound(&FQRACParams { m: 1000, n, k: 500, epsilon: 0.0 }).unwrap().bound_fsq;
            assert!(b >= last);
            last = b;
        }
    }
}
