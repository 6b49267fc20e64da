//! Tradeoff functions and the entropy-accumulation bounds.
//!
//! Affine tradeoffs are stored by their values on the vertices `δ_x` of the
//! probability simplex. A vertex whose feasible set of states is empty carries the
//! sentinel `+∞` (the infimum over an empty set); such vertices are ignored when the
//! gradient norm is taken.
//!
//! Two gradient norms are exposed. [`grad_inf_norm`] is the literal vertex-coordinate
//! norm `max_x |f(δ_x)|`. The bounds themselves use [`eat_gradient_norm`], the
//! smallest sup-norm over all representatives `f(δ_x) + t` of the same affine function
//! on the simplex, i.e. half the spread of the vertex values. Every step of the
//! accumulation argument only needs `|ḡ − f(δ_x)| ≤ ‖∇f‖∞`, which this quantity meets
//! with equality, and a constant tradeoff then has zero gradient as it should.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::entropy;
use crate::error::{precondition, Error, Result};
use crate::linalg::{self, c};
use crate::operator::{Operator, Register};
use crate::optim;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TradeoffKind {
    Min,
    Max,
}

type Eval = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type Grad = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// A convex (min kind) or concave (max kind) tradeoff given by an evaluator and
/// its gradient. The evaluator may return `NaN` outside its domain.
#[derive(Clone)]
pub struct ConvexForm {
    pub eval: Eval,
    pub grad: Grad,
}

impl ConvexForm {
    pub fn new(
        eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        grad: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        ConvexForm { eval: Arc::new(eval), grad: Arc::new(grad) }
    }
}

impl fmt::Debug for ConvexForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ConvexForm")
    }
}

#[derive(Clone, Debug)]
pub struct TradeoffSpec {
    pub alphabet: Vec<String>,
    pub kind: TradeoffKind,
    /// `f(δ_x)` in bits, `+∞` for vertices with an empty feasible set.
    pub vertex_values: Vec<f64>,
    pub convex: Option<ConvexForm>,
}

impl TradeoffSpec {
    pub fn affine(alphabet: Vec<String>, kind: TradeoffKind, vertex_values: Vec<f64>) -> Result<Self> {
        if alphabet.is_empty() || alphabet.len() != vertex_values.len() {
            return Err(Error::Dimension("alphabet and vertex values differ in length".into()));
        }
        if vertex_values.iter().any(|v| v.is_nan()) {
            return precondition("vertex values must not be NaN");
        }
        if !vertex_values.iter().any(|v| v.is_finite()) {
            return precondition("at least one vertex value must be finite");
        }
        Ok(TradeoffSpec { alphabet, kind, vertex_values, convex: None })
    }

    /// Constant tradeoff `f ≡ h` on a one-letter alphabet.
    pub fn constant(h: f64, kind: TradeoffKind) -> Self {
        TradeoffSpec { alphabet: vec!["*".into()], kind, vertex_values: vec![h], convex: None }
    }

    /// Convex form only; vertex values are the `+∞` sentinel.
    pub fn convex(alphabet: Vec<String>, kind: TradeoffKind, form: ConvexForm) -> Self {
        let n = alphabet.len();
        TradeoffSpec { alphabet, kind, vertex_values: vec![f64::INFINITY; n], convex: Some(form) }
    }

    pub fn is_affine(&self) -> bool {
        self.convex.is_none()
    }

    pub fn symbol_index(&self, x: &str) -> Result<usize> {
        self.alphabet
            .iter()
            .position(|s| s == x)
            .ok_or_else(|| Error::Precondition(format!("symbol `{x}` not in alphabet")))
    }

    fn finite_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.vertex_values.iter().copied().filter(|v| v.is_finite())
    }

    pub fn g_min(&self) -> f64 {
        self.finite_values().fold(f64::INFINITY, f64::min)
    }

    pub fn g_max(&self) -> f64 {
        self.finite_values().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Affine evaluation `Σ_x q(x) f(δ_x)`; symbols with `q(x) = 0` do not contribute.
    pub fn affine_value(&self, q: &[f64]) -> Result<f64> {
        if q.len() != self.vertex_values.len() {
            return Err(Error::Dimension("distribution length differs from alphabet".into()));
        }
        Ok(q.iter().zip(&self.vertex_values).filter(|(p, _)| **p != 0.0).map(|(p, v)| p * v).sum())
    }

    /// `f(q)`: the convex form when present, the affine extension otherwise.
    pub fn value(&self, q: &[f64]) -> Result<f64> {
        match &self.convex {
            Some(form) => {
                if q.len() != self.alphabet.len() {
                    return Err(Error::Dimension("distribution length differs from alphabet".into()));
                }
                Ok((form.eval)(q))
            }
            None => self.affine_value(q),
        }
    }

    pub fn gradient(&self, q: &[f64]) -> Result<Vec<f64>> {
        match &self.convex {
            Some(form) => Ok((form.grad)(q)),
            None => Ok(self.vertex_values.clone()),
        }
    }

    /// Largest deviation between the supplied gradient and central differences at `q`.
    pub fn gradient_fd_residual(&self, q: &[f64], step: f64) -> Result<f64> {
        let g = self.gradient(q)?;
        let mut worst: f64 = 0.0;
        for i in 0..q.len() {
            let mut up = q.to_vec();
            let mut dn = q.to_vec();
            up[i] += step;
            dn[i] -= step;
            let fd = (self.value(&up)? - self.value(&dn)?) / (2.0 * step);
            if fd.is_finite() && g[i].is_finite() {
                worst = worst.max((fd - g[i]).abs());
            }
        }
        Ok(worst)
    }
}

/// `max_x |f(δ_x)|` over the finite vertex values.
pub fn grad_inf_norm(f: &TradeoffSpec) -> f64 {
    f.finite_values().fold(0.0, |m, v| m.max(v.abs()))
}

/// Minimal-representative gradient norm `(g_max − g_min)/2` used by the bounds.
pub fn eat_gradient_norm(f: &TradeoffSpec) -> f64 {
    let (lo, hi) = (f.g_min(), f.g_max());
    if lo.is_finite() && hi.is_finite() {
        0.5 * (hi - lo)
    } else {
        0.0
    }
}

fn ceil_bits(g: f64) -> f64 {
    // Guard against values such as 1.0000000000000002 that are integers up to rounding.
    (g - 1e-12).ceil().max(0.0)
}

pub fn eat_v_from(grad_norm: f64, d_a: usize) -> f64 {
    2.0 * ceil_bits(grad_norm) + 2.0 * (1.0 + 2.0 * d_a as f64).log2()
}

pub fn eat_v(f: &TradeoffSpec, d_a: usize) -> f64 {
    eat_v_from(eat_gradient_norm(f), d_a)
}

/// `c = 2(log(1+2d_A) + ⌈g⌉)·√(1 − 2 log(ε p_Ω))`.
pub fn eat_c_from(grad_norm: f64, d_a: usize, eps_p: f64) -> Result<f64> {
    if !(eps_p > 0.0 && eps_p < 1.0) {
        return precondition(format!("ε·p_Ω must lie in (0,1), got {eps_p}"));
    }
    Ok(2.0 * ((1.0 + 2.0 * d_a as f64).log2() + ceil_bits(grad_norm)) * (1.0 - 2.0 * eps_p.log2()).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EATParams {
    pub n: u64,
    pub d_a: usize,
    pub epsilon: f64,
    pub p_omega: f64,
    pub h: f64,
}

impl EATParams {
    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return precondition("n must be at least 1");
        }
        if self.d_a < 2 {
            return precondition("d_A must be at least 2");
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return precondition(format!("ε must lie in (0,1), got {}", self.epsilon));
        }
        if !(self.p_omega > 0.0 && self.p_omega <= 1.0) {
            return precondition(format!("p_Ω must lie in (0,1], got {}", self.p_omega));
        }
        if !self.h.is_finite() {
            return precondition("h must be finite");
        }
        Ok(())
    }

    /// `log(2/(p_Ω² ε²))`.
    pub fn log_term(&self) -> f64 {
        1.0 - 2.0 * (self.epsilon * self.p_omega).log2()
    }
}

pub fn eat_c(f: &TradeoffSpec, params: &EATParams) -> Result<f64> {
    params.validate()?;
    eat_c_from(eat_gradient_norm(f), params.d_a, params.epsilon * params.p_omega)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EatBound {
    pub value: f64,
    pub c: f64,
    pub v: f64,
    pub grad_norm: f64,
    /// The bound carries no information (`≤ 0` for the min bound, at least
    /// `n log d_A` for the max bound).
    pub vacuous: bool,
}

fn check_kind(f: &TradeoffSpec, kind: TradeoffKind) -> Result<()> {
    if f.kind != kind {
        return precondition(format!("tradeoff kind {:?} does not match the {:?} bound", f.kind, kind));
    }
    Ok(())
}

/// `n h − c√n`.
pub fn eat_min_bound(params: &EATParams, f: &TradeoffSpec) -> Result<EatBound> {
    check_kind(f, TradeoffKind::Min)?;
    let c = eat_c(f, params)?;
    let n = params.n as f64;
    let value = n * params.h - c * n.sqrt();
    Ok(EatBound { value, c, v: eat_v(f, params.d_a), grad_norm: eat_gradient_norm(f), vacuous: value <= 0.0 })
}

/// `n h + c√n`.
pub fn eat_max_bound(params: &EATParams, f: &TradeoffSpec) -> Result<EatBound> {
    check_kind(f, TradeoffKind::Max)?;
    let c = eat_c(f, params)?;
    let n = params.n as f64;
    let value = n * params.h + c * n.sqrt();
    let vacuous = value >= n * (params.d_a as f64).log2();
    Ok(EatBound { value, c, v: eat_v(f, params.d_a), grad_norm: eat_gradient_norm(f), vacuous })
}

fn check_alpha_range(alpha: f64, v: f64) -> Result<()> {
    if !(alpha > 1.0 && alpha < 1.0 + 2.0 / v) {
        return precondition(format!("α = {alpha} outside (1, 1 + 2/V) = (1, {})", 1.0 + 2.0 / v));
    }
    Ok(())
}

/// Rényi-level bound `n h − n(α−1)V²/4 − α/(α−1)·log(1/p_Ω)` on `H↑_α(A₁ⁿ|B₁ⁿE)`.
pub fn eat_renyi_bound(params: &EATParams, f: &TradeoffSpec, alpha: f64) -> Result<f64> {
    check_kind(f, TradeoffKind::Min)?;
    params.validate()?;
    let v = eat_v(f, params.d_a);
    check_alpha_range(alpha, v)?;
    let n = params.n as f64;
    Ok(n * params.h - n * (alpha - 1.0) / 4.0 * v * v - alpha / (alpha - 1.0) * (1.0 / params.p_omega).log2())
}

/// Smooth bound at a given α after the conversion to `H_min^ε`, with the
/// smoothing and normalization terms merged into `log(2/(p_Ω²ε²))/(α−1)`.
pub fn eat_smooth_bound_at(params: &EATParams, f: &TradeoffSpec, alpha: f64) -> Result<f64> {
    check_kind(f, TradeoffKind::Min)?;
    params.validate()?;
    let v = eat_v(f, params.d_a);
    check_alpha_range(alpha, v)?;
    let n = params.n as f64;
    Ok(n * params.h - n * (alpha - 1.0) / 4.0 * v * v - params.log_term() / (alpha - 1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AlphaStar {
    pub alpha: f64,
    /// `n ≤ log(2/(p_Ω²ε²))`: α* leaves the admissible range and the bound is trivial.
    pub vacuous: bool,
}

pub fn eat_alpha_star(params: &EATParams, f: &TradeoffSpec) -> Result<AlphaStar> {
    params.validate()?;
    let v = eat_v(f, params.d_a);
    let l = params.log_term();
    let n = params.n as f64;
    Ok(AlphaStar { alpha: 1.0 + 2.0 * l.sqrt() / (n.sqrt() * v), vacuous: n <= l })
}

/// Tangent hyperplane of a convex tradeoff at `q`, returned as an affine spec together
/// with `h = f(q)`.
pub fn tangent_tradeoff(f: &TradeoffSpec, q: &[f64]) -> Result<(TradeoffSpec, f64)> {
    if q.len() != f.alphabet.len() {
        return Err(Error::Dimension("distribution length differs from alphabet".into()));
    }
    let form = match &f.convex {
        None => {
            let h = f.affine_value(q)?;
            return Ok((f.clone(), h));
        }
        Some(form) => form,
    };
    let h = (form.eval)(q);
    let g = (form.grad)(q);
    if !h.is_finite() || g.len() != q.len() || g.iter().any(|x| !x.is_finite()) {
        return precondition("tradeoff value or gradient not finite at the tangent point");
    }
    let gq: f64 = g.iter().zip(q).map(|(a, b)| a * b).sum();
    let vertex_values = g.iter().map(|gx| h + gx - gq).collect();
    Ok((TradeoffSpec::affine(f.alphabet.clone(), f.kind, vertex_values)?, h))
}

/// `n H(A|B) − 2√(n(1 − 2 log ε))·log(1 + 2d_A)` from the entropy and `d_A`.
pub fn aep_bound_value(h: f64, d_a: usize, n: u64, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return precondition(format!("ε must lie in (0,1), got {eps}"));
    }
    let n = n as f64;
    Ok(n * h - 2.0 * (n * (1.0 - 2.0 * eps.log2())).sqrt() * (1.0 + 2.0 * d_a as f64).log2())
}

/// AEP lower bound on `H_min^ε(A₁ⁿ|B₁ⁿ)` for `ν^{⊗n}`.
pub fn aep_bound(nu: &Operator, cond: &[&str], n: u64, eps: f64) -> Result<f64> {
    if (nu.trace() - 1.0).abs() > 1e-9 {
        return precondition("ν must be normalized");
    }
    let h = entropy::von_neumann_conditional(nu, cond)?;
    let da = nu.dim() / nu.subdim(cond)?;
    aep_bound_value(h, da, n, eps)
}

/// Constant of the per-step-infimum form, `3 log(1+2d_A)·√(1 − 2 log ε)`.
pub fn per_step_c(d_a: usize, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return precondition(format!("ε must lie in (0,1), got {eps}"));
    }
    Ok(3.0 * (1.0 + 2.0 * d_a as f64).log2() * (1.0 - 2.0 * eps.log2()).sqrt())
}

/// Affine tradeoff over positions `1..n` whose vertex values are per-step infima.
/// Under the uniform distribution it evaluates to their mean.
pub fn per_step_tradeoff(infima: &[f64]) -> Result<TradeoffSpec> {
    let alphabet = (1..=infima.len()).map(|i| i.to_string()).collect();
    TradeoffSpec::affine(alphabet, TradeoffKind::Min, infima.to_vec())
}

// ---------------------------------------------------------------------------
// Dilution gadget

/// Isotropic state `p Φ + (1−p) id/d²` on `D ⊗ D̄`.
pub fn isotropic_state(d: usize, p: f64) -> Operator {
    let phi = linalg::outer(&(linalg::max_entangled_vector(d) * c(1.0 / (d as f64).sqrt())));
    let m = phi * c(p) + linalg::maximally_mixed(d * d) * c(1.0 - p);
    Operator::new(vec![Register::new("D", d), Register::new("Dbar", d)], m).expect("dimensions match")
}

/// `H_α(D|D̄)` of the isotropic state from its spectrum; `D̄` is maximally mixed.
pub fn isotropic_h_alpha(d: usize, p: f64, alpha: f64) -> f64 {
    let dd = (d * d) as f64;
    let top = p + (1.0 - p) / dd;
    let rest = (1.0 - p) / dd;
    let pw = |x: f64| if x <= 0.0 { 0.0 } else { x.powf(alpha) };
    let s = pw(top) + (dd - 1.0) * pw(rest);
    -(d as f64).log2() + s.log2() / (1.0 - alpha)
}

#[derive(Clone, Debug, Serialize)]
pub struct DilutionEntry {
    pub symbol: String,
    pub target: f64,
    pub p: f64,
    /// `H_α(D|D̄)` evaluated directly on the constructed state.
    pub achieved: f64,
    pub residual: f64,
    pub marginal_residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DilutionGadget {
    pub d_d: usize,
    pub alpha: f64,
    pub g_bar: f64,
    pub g_min: f64,
    pub g_max: f64,
    /// Entries for the finite vertices, in alphabet order.
    pub entries: Vec<DilutionEntry>,
}

impl DilutionGadget {
    pub fn mixing_weights(&self) -> Vec<(String, f64)> {
        self.entries.iter().map(|e| (e.symbol.clone(), e.p)).collect()
    }

    pub fn max_residual(&self) -> f64 {
        self.entries.iter().map(|e| e.residual).fold(0.0, f64::max)
    }

    pub fn max_marginal_residual(&self) -> f64 {
        self.entries.iter().map(|e| e.marginal_residual).fold(0.0, f64::max)
    }
}

/// `d_D = ⌈2^{‖∇f‖∞}⌉`.
pub fn dilution_dimension(f: &TradeoffSpec) -> usize {
    (2f64.powf(eat_gradient_norm(f)) - 1e-12).ceil().max(1.0) as usize
}

/// `log(1 + 2 d_A d_D) ≤ V/2`.
pub fn dilution_dimension_fits(f: &TradeoffSpec, d_a: usize) -> bool {
    let dd = dilution_dimension(f) as f64;
    (1.0 + 2.0 * d_a as f64 * dd).log2() <= eat_v(f, d_a) / 2.0 + 1e-12
}

/// Mixing weight `p` with `H_α(D|D̄)_{τ} = target`, by bisection on the decreasing map
/// `p ↦ H_α`.
pub fn isotropic_weight_for(d: usize, target: f64, alpha: f64) -> Result<f64> {
    entropy::AlphaParam::new(alpha)?;
    let l = (d as f64).log2();
    if d == 1 {
        if target.abs() > 1e-12 {
            return precondition("a one-dimensional gadget only reaches target 0");
        }
        return Ok(0.0);
    }
    if target > l + 1e-12 || target < -l - 1e-12 {
        return precondition(format!("target {target} outside [−log d_D, log d_D] = [−{l}, {l}]"));
    }
    if target >= l {
        return Ok(0.0);
    }
    if target <= -l {
        return Ok(1.0);
    }
    Ok(optim::bisect(|p| isotropic_h_alpha(d, p, alpha) - target, 0.0, 1.0, 1e-16, 200))
}

pub fn dilution_tau(f: &TradeoffSpec, x: &str, alpha: f64) -> Result<DilutionEntry> {
    if !f.is_affine() {
        return precondition("dilution gadget needs an affine tradeoff");
    }
    let i = f.symbol_index(x)?;
    let fx = f.vertex_values[i];
    if !fx.is_finite() {
        return precondition(format!("vertex `{x}` has an empty feasible set"));
    }
    let d = dilution_dimension(f);
    let g_bar = 0.5 * (f.g_min() + f.g_max());
    let target = g_bar - fx;
    let p = isotropic_weight_for(d, target, alpha)?;
    let tau = isotropic_state(d, p);
    let achieved = entropy::h_alpha(&tau, &["Dbar"], alpha)?;
    let marginal = tau.ptrace_keep(&["Dbar"])?;
    let marginal_residual = linalg::max_abs(&(marginal.matrix() - linalg::maximally_mixed(d)));
    Ok(DilutionEntry {
        symbol: x.to_string(),
        target,
        p,
        achieved,
        residual: (achieved - target).abs(),
        marginal_residual,
    })
}

pub fn dilution_gadget(f: &TradeoffSpec, alpha: f64) -> Result<DilutionGadget> {
    let mut entries = Vec::new();
    for (x, v) in f.alphabet.iter().zip(&f.vertex_values) {
        if v.is_finite() {
            entries.push(dilution_tau(f, x, alpha)?);
        }
    }
    Ok(DilutionGadget {
        d_d: dilution_dimension(f),
        alpha,
        g_bar: 0.5 * (f.g_min() + f.g_max()),
        g_min: f.g_min(),
        g_max: f.g_max(),
        entries,
    })
}

// ---------------------------------------------------------------------------
// Config file

/// Serializable tradeoff. Vertex values may be `null` for the `+∞` sentinel; a
/// `tangent` entry replaces the vertex values by the tangent of a named convex family.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TradeoffConfig {
    pub alphabet: Vec<String>,
    pub kind: TradeoffKind,
    #[serde(default)]
    pub vertex_values: Option<Vec<Option<f64>>>,
    #[serde(default)]
    pub tangent: Option<TangentConfig>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum TangentConfig {
    /// The QKD tradeoff at `q₀ = ((1−e)μ², eμ², 1−μ²)`.
    Qkd { mu: f64, e: f64 },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EatConfig {
    #[serde(flatten)]
    pub tradeoff: TradeoffConfig,
    pub n: u64,
    pub d_a: usize,
    pub epsilon: f64,
    #[serde(default = "one")]
    pub p_omega: f64,
    /// Defaults to the tangent value, or to the smallest finite vertex value.
    #[serde(default)]
    pub h: Option<f64>,
}

fn one() -> f64 {
    1.0
}

impl EatConfig {
    pub fn build(&self) -> Result<(EATParams, TradeoffSpec)> {
        let t = &self.tradeoff;
        let (spec, h_default) = match (&t.tangent, &t.vertex_values) {
            (Some(TangentConfig::Qkd { mu, e }), _) => {
                let f = crate::apps::qkd_tradeoff(*mu)?;
                tangent_tradeoff(&f, &crate::apps::qkd_q0(*mu, *e)?)?
            }
            (None, Some(vals)) => {
                let vals: Vec<f64> = vals.iter().map(|v| v.unwrap_or(f64::INFINITY)).collect();
                let spec = TradeoffSpec::affine(t.alphabet.clone(), t.kind, vals)?;
                let h = match t.kind {
                    TradeoffKind::Min => spec.g_min(),
                    TradeoffKind::Max => spec.g_max(),
                };
                (spec, h)
            }
            (None, None) => return Err(Error::Parse("config needs `vertex_values` or `tangent`".into())),
        };
        let params = EATParams {
            n: self.n,
            d_a: self.d_a,
            epsilon: self.epsilon,
            p_omega: self.p_omega,
            h: self.h.unwrap_or(h_default),
        };
        params.validate()?;
        Ok((params, spec))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits(vals: &[f64]) -> TradeoffSpec {
        let alphabet = (0..vals.len()).map(|i| i.to_string()).collect();
        TradeoffSpec::affine(alphabet, TradeoffKind::Min, vals.to_vec()).unwrap()
    }

    fn params(n: u64, h: f64, eps: f64, p: f64) -> EATParams {
        EATParams { n, d_a: 2, epsilon: eps, p_omega: p, h }
    }

    #[test]
    fn grad_norm_examples() {
        assert_eq!(grad_inf_norm(&TradeoffSpec::constant(-0.7, TradeoffKind::Min)), 0.7);
        assert_eq!(grad_inf_norm(&bits(&[0.0, 1.0])), 1.0);
        assert_eq!(eat_gradient_norm(&TradeoffSpec::constant(-0.7, TradeoffKind::Min)), 0.0);
        assert_eq!(eat_gradient_norm(&bits(&[0.0, 1.0])), 0.5);
        // The sentinel is ignored.
        assert_eq!(grad_inf_norm(&bits(&[f64::INFINITY, -2.0, 1.0])), 2.0);
        assert_eq!(eat_gradient_norm(&bits(&[f64::INFINITY, -2.0, 1.0])), 1.5);
    }

    #[test]
    fn v_examples() {
        assert!((eat_v_from(1.0, 2) - 6.6439).abs() < 1e-4);
        assert!((eat_v_from(0.0, 2) - 4.6439).abs() < 1e-4);
        assert!((eat_v_from(0.3, 2) - 6.6439).abs() < 1e-4);
    }

    #[test]
    fn c_examples() {
        let c = eat_c_from(1.0, 2, 0.01).unwrap();
        assert!((c - 25.12).abs() < 0.01, "{c}");
        let lim = eat_c_from(1.0, 2, 1.0 - 1e-12).unwrap();
        assert!((lim - 2.0 * (5f64.log2() + 1.0)).abs() < 1e-5);
        assert!(eat_c_from(1.0, 2, 1.0).is_err());
        for d in 2..10 {
            assert!(eat_c_from(1.0, d + 1, 0.1).unwrap() > eat_c_from(1.0, d, 0.1).unwrap());
        }
    }

    #[test]
    fn min_bound_example_and_vacuity() {
        // Vertex values {0.5 − 1, 0.5 + 1}: half-range 1, so ⌈‖∇f‖∞⌉ = 1.
        let f = bits(&[-0.5, 1.5]);
        let b = eat_min_bound(&params(10_000, 0.5, 0.01, 1.0), &f).unwrap();
        assert!((b.value - 2488.0).abs() < 1.0, "{}", b.value);
        assert!(!b.vacuous);
        assert!(eat_min_bound(&params(100, 0.5, 0.01, 1.0), &f).unwrap().vacuous);
        let mut g = f.clone();
        g.kind = TradeoffKind::Max;
        assert!(eat_min_bound(&params(100, 0.5, 0.01, 1.0), &g).is_err());
        let up = eat_max_bound(&params(10_000, 0.5, 0.01, 1.0), &g).unwrap();
        assert!((up.value - 7512.0).abs() < 1.0);
    }

    #[test]
    fn renyi_bound_and_alpha_star() {
        let f = bits(&[-0.5, 1.5]);
        let p = params(10_000, 0.5, 0.01, 1.0);
        let a = eat_alpha_star(&p, &f).unwrap();
        assert!((a.alpha - 1.01138).abs() < 1e-5, "{}", a.alpha);
        assert!(!a.vacuous);
        let v = eat_v(&f, 2);
        assert!(a.alpha > 1.0 && a.alpha < 1.0 + 2.0 / v);
        let r = eat_renyi_bound(&p, &f, 1.01).unwrap();
        assert!((r - (5000.0 - 10_000.0 * 0.01 / 4.0 * v * v)).abs() < 1e-9);
        let p9 = params(10_000, 0.5, 0.01, 0.9);
        let expect = 5000.0 - 10_000.0 * 0.0025 * v * v - 101.0 * (1.0f64 / 0.9).log2();
        assert!((eat_renyi_bound(&p9, &f, 1.01).unwrap() - expect).abs() < 1e-8);
        assert!(eat_renyi_bound(&p, &f, 1.0).is_err());
        assert!(eat_renyi_bound(&p, &f, 1.0 + 2.0 / v).is_err());
        // Near α = 1 the normalization term dominates.
        assert!(eat_renyi_bound(&p9, &f, 1.0 + 1e-9).unwrap() < -1e7);
        assert!(eat_alpha_star(&params(10, 0.5, 0.01, 1.0), &f).unwrap().vacuous);
    }

    #[test]
    fn alpha_star_recovers_c_sqrt_n() {
        let f = bits(&[-0.5, 1.5]);
        for &(n, eps, p) in &[(10_000u64, 0.01, 1.0), (5_000, 0.1, 0.5), (1_000_000, 1e-6, 0.3)] {
            let pr = params(n, 0.5, eps, p);
            let a = eat_alpha_star(&pr, &f).unwrap().alpha;
            let at = eat_smooth_bound_at(&pr, &f, a).unwrap();
            let b = eat_min_bound(&pr, &f).unwrap().value;
            assert!((at - b).abs() < 1.0, "{at} vs {b}");
            // The merged form never exceeds the unmerged chain.
            let unmerged = eat_renyi_bound(&pr, &f, a).unwrap() - entropy::g_eps(eps) / (a - 1.0);
            assert!(unmerged >= at - 1e-9);
        }
    }

    #[test]
    fn tangent_of_quadratic() {
        let form = ConvexForm::new(|q| q[1] * q[1], |q| vec![0.0, 2.0 * q[1]]);
        let f = TradeoffSpec::convex(vec!["0".into(), "1".into()], TradeoffKind::Min, form);
        let (t, h) = tangent_tradeoff(&f, &[0.5, 0.5]).unwrap();
        assert!((h - 0.25).abs() < 1e-15);
        assert!((t.affine_value(&[0.5, 0.5]).unwrap() - 0.25).abs() < 1e-15);
        assert!((t.vertex_values[1] - t.vertex_values[0] - 1.0).abs() < 1e-15);
        assert!(f.gradient_fd_residual(&[0.5, 0.5], 1e-6).unwrap() < 1e-5);
        for k in 0..=20 {
            let q1 = k as f64 / 20.0;
            let q = [1.0 - q1, q1];
            assert!(t.affine_value(&q).unwrap() <= f.value(&q).unwrap() + 1e-15);
        }
        let aff = bits(&[0.2, 0.9]);
        let (same, h) = tangent_tradeoff(&aff, &[0.3, 0.7]).unwrap();
        assert_eq!(same.vertex_values, aff.vertex_values);
        assert!((h - 0.69).abs() < 1e-15);
        assert!(tangent_tradeoff(&f, &[1.0]).is_err());
    }

    #[test]
    fn aep_examples() {
        let phi = crate::linalg::outer(&(crate::linalg::max_entangled_vector(2) * c(0.5f64.sqrt())));
        let nu = Operator::new(vec![Register::new("A", 2), Register::new("B", 2)], phi).unwrap();
        let b = aep_bound(&nu, &["B"], 100, 0.1).unwrap();
        assert!((b + 228.4).abs() < 0.5, "{b}");
        assert!(aep_bound_value(-1.0, 2, 100, 0.5).unwrap() > b);
        // Constant tradeoff reproduces the AEP.
        let f = TradeoffSpec::constant(-1.0, TradeoffKind::Min);
        let e = eat_min_bound(&EATParams { n: 100, d_a: 2, epsilon: 0.1, p_omega: 1.0, h: -1.0 }, &f).unwrap();
        assert!((e.value - b).abs() <= 1e-12 * b.abs());
    }

    #[test]
    fn per_step_constant_dominates_at_qubits() {
        for &eps in &[0.5, 0.1, 1e-3, 1e-9] {
            let c3 = per_step_c(2, eps).unwrap();
            let c = eat_c_from((2f64).log2(), 2, eps).unwrap();
            assert!(c <= c3);
        }
        let f = per_step_tradeoff(&[0.2, 0.4, 0.9]).unwrap();
        assert!((f.affine_value(&[1.0 / 3.0; 3]).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn dilution_endpoints_and_bisection() {
        assert_eq!(isotropic_weight_for(2, 1.0, 1.5).unwrap(), 0.0);
        assert_eq!(isotropic_weight_for(2, -1.0, 1.5).unwrap(), 1.0);
        assert!(isotropic_weight_for(2, 1.5, 1.5).is_err());
        let p = isotropic_weight_for(2, 0.0, 1.5).unwrap();
        let direct = entropy::h_alpha(&isotropic_state(2, p), &["Dbar"], 1.5).unwrap();
        assert!(direct.abs() < 1e-8, "{direct}");
    }

    #[test]
    fn gadget_hits_targets() {
        let f = bits(&[-0.3, 0.4, 1.7]);
        assert_eq!(dilution_dimension(&f), 2);
        assert!(dilution_dimension_fits(&f, 2));
        let v = eat_v(&f, 2);
        for k in 1..5 {
            let alpha = 1.0 + 2.0 / v * k as f64 / 5.0;
            let g = dilution_gadget(&f, alpha).unwrap();
            assert!((g.g_bar - 0.7).abs() < 1e-15);
            assert!(g.max_residual() < 1e-8, "{}", g.max_residual());
            assert!(g.max_marginal_residual() < 1e-12);
        }
    }

    #[test]
    fn config_round_trip() {
        let text = r#"{"alphabet":["0","1","x"],"kind":"min","vertex_values":[0.0,1.0,null],
                      "n":100,"d_a":2,"epsilon":0.1}"#;
        let cfg: EatConfig = serde_json::from_str(text).unwrap();
        let (p, f) = cfg.build().unwrap();
        assert_eq!(p.h, 0.0);
        assert_eq!(p.p_omega, 1.0);
        assert!(f.vertex_values[2].is_infinite());
        let back: EatConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back.build().unwrap().0, p);
    }
}
