//! The Rényi chain rule: the `ν` construction, exact equality, and the Markov bounds.

use rand::Rng;

use crate::entropy;
use crate::error::{precondition, Error, Result};
use crate::linalg::{self, c, CMat};
use crate::operator::Operator;
use crate::random;
use crate::state::{conditional_operator, markov_violation, Channel, TOL_MARKOV};

#[derive(Clone, Debug)]
pub struct ChainRuleWitness {
    pub nu_state: Operator,
    pub lhs: f64,
    pub h_a1: f64,
    pub h_a2_nu: f64,
    pub rhs_sum: f64,
    pub residual: f64,
}

fn labels_of<'a>(op: &'a Operator, exclude: &[&str]) -> Vec<&'a str> {
    op.labels().into_iter().filter(|l| !exclude.contains(l)).collect()
}

/// `ν_{A₁A₂B} = ν_{A₁B}^{1/2} ρ_{A₂|A₁B} ν_{A₁B}^{1/2}` with
/// `ν_{A₁B} ∝ (ρ_{A₁B}^{1/2} σ_B^{(1−α)/α} ρ_{A₁B}^{1/2})^α`; `A₂` is every register not in
/// `a1` or `b`. `sigma_b` acts on `b` in the given label order.
pub fn build_nu(rho: &Operator, a1: &[&str], b: &[&str], sigma_b: &CMat, alpha: f64) -> Result<Operator> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return precondition(format!("alpha must be positive, got {alpha}"));
    }
    let a1b: Vec<&str> = a1.iter().chain(b.iter()).cloned().collect();
    let rho_a1b = rho.ptrace_keep(&a1b)?.reorder(&a1b)?;
    let sb = Operator::new(rho_a1b.registers()[a1.len()..].to_vec(), sigma_b.clone())?;
    let s_pow = sb.frac_power((1.0 - alpha) / alpha)?.lift_like(&rho_a1b)?;
    let half = rho_a1b.frac_power(0.5)?;
    let inner = half.mul(&s_pow)?.mul(&half)?;
    let inner = inner.with_matrix(linalg::hermitize(inner.matrix()))?;
    let powered = inner.frac_power(alpha)?;
    let t = powered.trace();
    if !(t > 0.0) {
        return precondition("ν_{A1B} vanishes: σ_B is orthogonal to ρ_B");
    }
    let nu_a1b = powered.scale(1.0 / t);
    let cond = conditional_operator(rho, &a1b)?;
    let nu = cond.conj_by(&nu_a1b.frac_power(0.5)?)?;
    nu.with_matrix(linalg::hermitize(nu.matrix()))
}

/// Both sides of `H_α(A₁A₂|B) = H_α(A₁|B)_ρ + H_α(A₂|A₁B)_ν` with `σ_B = ρ_B`.
pub fn chain_rule_exact_check(rho: &Operator, a1: &[&str], b: &[&str], alpha: f64) -> Result<ChainRuleWitness> {
    let a1b: Vec<&str> = a1.iter().chain(b.iter()).cloned().collect();
    let rho_b = rho.ptrace_keep(b)?.reorder(b)?;
    let nu = build_nu(rho, a1, b, rho_b.matrix(), alpha)?;
    let lhs = entropy::h_alpha(rho, b, alpha)?;
    let h_a1 = entropy::h_alpha(&rho.ptrace_keep(&a1b)?, b, alpha)?;
    let h_a2_nu = entropy::h_alpha(&nu, &a1b, alpha)?;
    let rhs_sum = h_a1 + h_a2_nu;
    Ok(ChainRuleWitness { nu_state: nu, lhs, h_a1, h_a2_nu, rhs_sum, residual: (lhs - rhs_sum).abs() })
}

/// `D_α(ρ_{A₁B}‖id⊗σ) − D_α(ρ_{A₁A₂B}‖id⊗σ)` and `H_α(A₂|A₁B)_ν` for the `ν` built from `σ`.
pub fn chainprep_identity(rho: &Operator, a1: &[&str], b: &[&str], sigma_b: &CMat, alpha: f64) -> Result<(f64, f64)> {
    let a1b: Vec<&str> = a1.iter().chain(b.iter()).cloned().collect();
    let d1 = entropy::d_alpha_cond(&rho.ptrace_keep(&a1b)?.reorder(&a1b)?, b, sigma_b, alpha)?;
    let d2 = entropy::d_alpha_cond(&reorder_b_last(rho, b)?, b, sigma_b, alpha)?;
    let nu = build_nu(rho, a1, b, sigma_b, alpha)?;
    Ok((d1 - d2, entropy::h_alpha(&nu, &a1b, alpha)?))
}

fn reorder_b_last(rho: &Operator, b: &[&str]) -> Result<Operator> {
    let mut order = labels_of(rho, b);
    order.extend_from_slice(b);
    rho.reorder(&order)
}

#[derive(Clone, Debug)]
pub struct MarkovBounds {
    pub inf_estimate: f64,
    pub exact_delta: f64,
    pub sup_estimate: f64,
    /// `H_α(A₂|A₁B₁B₂)` of the `ν` from the exact chain rule, which meets the constraint.
    pub witness_value: f64,
    /// `max |ν_{A₂B₂|A₁B₁} − ρ_{A₂B₂|A₁B₁}|` for that `ν`.
    pub witness_conditional_residual: f64,
    pub markov_violation: f64,
    pub samples: usize,
    pub contained: bool,
}

const TOL_CONTAIN: f64 = 1e-7;

/// Sampled bounds for `H_α(A₁A₂|B₁B₂) − H_α(A₁|B₁)` over `ν` with
/// `ν_{A₂B₂|A₁B₁} = ρ_{A₂B₂|A₁B₁}`, each `ν` built from a random `ν_{A₁B₁}`.
pub fn chain_rule_markov_bounds(
    rho: &Operator,
    a1: &[&str],
    b1: &[&str],
    a2: &[&str],
    b2: &[&str],
    alpha: f64,
    samples: usize,
    rng: &mut impl Rng,
) -> Result<MarkovBounds> {
    let mv = markov_violation(rho, a1, b1, b2)?;
    if mv > TOL_MARKOV {
        return precondition(format!("Markov condition A1 ↔ B1 ↔ B2 violated: I(A1:B2|B1) = {mv:e}"));
    }
    let order: Vec<&str> = a1.iter().chain(b1).chain(a2).chain(b2).cloned().collect();
    if order.len() != rho.registers().len() {
        return Err(Error::Dimension("A1, B1, A2, B2 must partition the registers".into()));
    }
    let rho = rho.reorder(&order)?;
    let b1b2: Vec<&str> = b1.iter().chain(b2).cloned().collect();
    let a1b1: Vec<&str> = a1.iter().chain(b1).cloned().collect();
    let a1b1b2: Vec<&str> = a1.iter().chain(b1).chain(b2).cloned().collect();
    let exact_delta = entropy::h_alpha(&rho, &b1b2, alpha)? - entropy::h_alpha(&rho.ptrace_keep(&a1b1)?, b1, alpha)?;

    // Witness from the exact chain rule with B = B₁B₂.
    let sigma = rho.ptrace_keep(&b1b2)?.reorder(&b1b2)?;
    let nu = build_nu(&rho, a1, &b1b2, sigma.matrix(), alpha)?;
    let witness_value = entropy::h_alpha(&nu, &a1b1b2, alpha)?;
    let cond_rho = conditional_operator(&rho, &a1b1)?;
    let cond_nu = conditional_operator(&nu, &a1b1)?;
    let witness_conditional_residual = linalg::max_abs(&(cond_rho.matrix() - cond_nu.matrix()));

    let rho_a1b1 = rho.ptrace_keep(&a1b1)?;
    let d = rho_a1b1.dim();
    let support = linalg::support_projector(rho_a1b1.matrix())?;
    let mut lo = witness_value;
    let mut hi = witness_value;
    for _ in 0..samples {
        let raw = random::density(rng, d, d);
        let restricted = linalg::hermitize(&(&support * raw * &support));
        let t = linalg::trace_re(&restricted);
        let nu_a1b1 = rho_a1b1.with_matrix(restricted / c(t))?;
        let nu_s = cond_rho.conj_by(&nu_a1b1.frac_power(0.5)?)?;
        let nu_s = nu_s.with_matrix(linalg::hermitize(nu_s.matrix()))?;
        let tr = nu_s.trace();
        let v = entropy::h_alpha(&nu_s.scale(1.0 / tr), &a1b1b2, alpha)?;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let contained = exact_delta >= lo - TOL_CONTAIN && exact_delta <= hi + TOL_CONTAIN;
    Ok(MarkovBounds {
        inf_estimate: lo,
        exact_delta,
        sup_estimate: hi,
        witness_value,
        witness_conditional_residual,
        markov_violation: mv,
        samples,
        contained,
    })
}

/// Channel form: `ρ = M(ρ⁰_{RA₁B₁})` with `M : R → A₂B₂`; the optimization runs over
/// states `ω_{RA₁B₁}`. Sampled `ω` are random; the proof's witness
/// `ω = ν^{1/2} ρ_{A₁B₁}^{−1/2} ρ⁰ ρ_{A₁B₁}^{−1/2} ν^{1/2}` is always included.
pub fn chain_rule_channel_bounds(
    rho0: &Operator,
    r: &[&str],
    a1: &[&str],
    b1: &[&str],
    map: &Channel,
    a2: &[&str],
    b2: &[&str],
    alpha: f64,
    samples: usize,
    rng: &mut impl Rng,
) -> Result<MarkovBounds> {
    let rho = map.apply(rho0)?;
    let mv = markov_violation(&rho, a1, b1, b2)?;
    if mv > TOL_MARKOV {
        return precondition(format!("Markov condition A1 ↔ B1 ↔ B2 violated: I(A1:B2|B1) = {mv:e}"));
    }
    let _ = r;
    let a1b1: Vec<&str> = a1.iter().chain(b1).cloned().collect();
    let a1b1b2: Vec<&str> = a1.iter().chain(b1).chain(b2).cloned().collect();
    let b1b2: Vec<&str> = b1.iter().chain(b2).cloned().collect();
    let order: Vec<&str> = a1.iter().chain(b1).chain(a2).chain(b2).cloned().collect();
    let rho = rho.reorder(&order)?;
    let exact_delta = entropy::h_alpha(&rho, &b1b2, alpha)? - entropy::h_alpha(&rho0.ptrace_keep(&a1b1)?, b1, alpha)?;
    let value_of = |omega: &Operator| -> Result<f64> {
        let out = map.apply(omega)?.reorder(&order)?;
        entropy::h_alpha(&out.scale(1.0 / out.trace()), &a1b1b2, alpha)
    };
    let sigma = rho.ptrace_keep(&b1b2)?.reorder(&b1b2)?;
    let nu = build_nu(&rho, a1, &b1b2, sigma.matrix(), alpha)?;
    let nu_a1b1 = nu.ptrace_keep(&a1b1)?;
    let rho_a1b1 = rho0.ptrace_keep(&a1b1)?;
    let lifted = nu_a1b1.frac_power(0.5)?.mul(&rho_a1b1.frac_power(-0.5)?)?;
    let lifted = lifted.lift_like(rho0)?;
    let omega_w = rho0.with_matrix(linalg::hermitize(&(lifted.matrix() * rho0.matrix() * lifted.matrix().adjoint())))?;
    let witness_value = value_of(&omega_w.scale(1.0 / omega_w.trace()))?;
    let cond_rho = conditional_operator(&rho, &a1b1)?;
    let cond_nu = conditional_operator(&nu, &a1b1)?;
    let witness_conditional_residual = linalg::max_abs(&(cond_rho.matrix() - cond_nu.matrix()));
    let mut lo = witness_value;
    let mut hi = witness_value;
    let d = rho0.dim();
    for _ in 0..samples {
        let w = rho0.with_matrix(random::density(rng, d, d))?;
        let v = value_of(&w)?;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let contained = exact_delta >= lo - TOL_CONTAIN && exact_delta <= hi + TOL_CONTAIN;
    Ok(MarkovBounds {
        inf_estimate: lo,
        exact_delta,
        sup_estimate: hi,
        witness_value,
        witness_conditional_residual,
        markov_violation: mv,
        samples,
        contained,
    })
}

/// `H_α(A|B₁B₂)` versus `H_α(A|B₁)`: equal under `A ↔ B₁ ↔ B₂`.
pub fn markov_conditioning_gap(rho: &Operator, a: &[&str], b1: &[&str], b2: &[&str], alpha: f64) -> Result<f64> {
    let ab1b2: Vec<&str> = a.iter().chain(b1).chain(b2).cloned().collect();
    let ab1: Vec<&str> = a.iter().chain(b1).cloned().collect();
    let b1b2: Vec<&str> = b1.iter().chain(b2).cloned().collect();
    let full = entropy::h_alpha(&rho.ptrace_keep(&ab1b2)?, &b1b2, alpha)?;
    let part = entropy::h_alpha(&rho.ptrace_keep(&ab1)?, b1, alpha)?;
    Ok((full - part).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{kron, max_abs, max_entangled_vector, outer};
    use crate::operator::reg;

    fn random_state(seed: u64, labels: &[&str]) -> Operator {
        let d = 1 << labels.len();
        let m = random::density(&mut random::rng(seed), d, d);
        Operator::new(labels.iter().map(|l| reg(l, 2)).collect(), m).unwrap()
    }

    #[test]
    fn nu_collapses_at_alpha_one() {
        let rho = random_state(1, &["A1", "A2", "B"]);
        let rb = rho.ptrace_keep(&["B"]).unwrap();
        let nu = build_nu(&rho, &["A1"], &["B"], rb.matrix(), 1.0).unwrap();
        assert!(max_abs(&(nu.matrix() - rho.matrix())) < 1e-9);
    }

    #[test]
    fn nu_marginal_consistency() {
        let rho = random_state(2, &["A1", "A2", "B"]);
        let rb = rho.ptrace_keep(&["B"]).unwrap();
        let nu = build_nu(&rho, &["A1"], &["B"], rb.matrix(), 2.0).unwrap();
        assert!((nu.trace() - 1.0).abs() < 1e-9);
        let a1b = rho.ptrace_keep(&["A1", "B"]).unwrap();
        let half = a1b.frac_power(0.5).unwrap();
        let sp = rb.frac_power(-0.5).unwrap().lift_like(&a1b).unwrap();
        let x = half.mul(&sp).unwrap().mul(&half).unwrap();
        let p = x.frac_power(2.0).unwrap();
        let expect = p.scale(1.0 / p.trace());
        assert!(max_abs(&(nu.ptrace_keep(&["A1", "B"]).unwrap().matrix() - expect.matrix())) < 1e-9);
    }

    #[test]
    fn nu_factorizes_on_products() {
        let a1b = random::density(&mut random::rng(3), 4, 4);
        let a2 = random::density(&mut random::rng(4), 2, 2);
        let rho = Operator::new(vec![reg("A1", 2), reg("B", 2), reg("A2", 2)], kron(&a1b, &a2)).unwrap();
        let rb = rho.ptrace_keep(&["B"]).unwrap();
        let nu = build_nu(&rho, &["A1"], &["B"], rb.matrix(), 1.5).unwrap();
        let nu_a1b = nu.ptrace_keep(&["A1", "B"]).unwrap();
        assert!(max_abs(&(nu.matrix() - kron(nu_a1b.matrix(), &a2))) < 1e-9);
    }

    #[test]
    fn exact_chain_rule() {
        for seed in 0..10 {
            let rho = random_state(10 + seed, &["A1", "A2", "B"]);
            for &a in &[0.6, 1.0, 1.5, 2.0, 3.0] {
                let w = chain_rule_exact_check(&rho, &["A1"], &["B"], a).unwrap();
                assert!(w.residual < 1e-7, "seed {seed} alpha {a}: {}", w.residual);
            }
        }
    }

    #[test]
    fn entangled_plus_pure() {
        let phi = outer(&(max_entangled_vector(2) * c(0.5f64.sqrt())));
        let pure = linalg::basis_projector(2, 0);
        let rho = Operator::new(vec![reg("A1", 2), reg("B", 2), reg("A2", 2)], kron(&phi, &pure)).unwrap();
        let w = chain_rule_exact_check(&rho, &["A1"], &["B"], 2.0).unwrap();
        assert!((w.lhs + 1.0).abs() < 1e-9 && (w.rhs_sum + 1.0).abs() < 1e-9);
    }

    #[test]
    fn chainprep_identity_random_sigma() {
        let rho = random_state(5, &["A1", "A2", "B"]);
        let sigma = random::density(&mut random::rng(6), 2, 2);
        for &a in &[0.7, 1.5, 2.5] {
            let (lhs, rhs) = chainprep_identity(&rho, &["A1"], &["B"], &sigma, a).unwrap();
            assert!((lhs - rhs).abs() < 1e-7, "{a}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn markov_bounds_contain_delta() {
        // B2 is generated from B1 alone, so A1 ↔ B1 ↔ B2 holds.
        let mut rng = random::rng(7);
        let mut a1b1 = CMat::zeros(4, 4);
        for b in 0..2 {
            let blk = random::density(&mut rng, 2, 2) * c(0.5);
            a1b1 += kron(&blk, &linalg::basis_projector(2, b));
        }
        let rho0 = Operator::new(vec![reg("A1", 2), reg("B1", 2)], a1b1).unwrap();
        let copy = Channel::from_kraus(
            vec![reg("B1", 2)],
            vec![reg("B1", 2), reg("R", 2)],
            vec![CMat::from_fn(4, 2, |o, i| if o == i * 3 { c(1.0) } else { c(0.0) })],
        )
        .unwrap();
        let with_r = copy.apply(&rho0).unwrap();
        let kraus = random::kraus_channel(&mut rng, 2, 4, 2);
        let m = Channel::from_kraus(vec![reg("R", 2)], vec![reg("A2", 2), reg("B2", 2)], kraus).unwrap();
        let rho = m.apply(&with_r).unwrap();
        let b = chain_rule_markov_bounds(&rho, &["A1"], &["B1"], &["A2"], &["B2"], 1.5, 50, &mut rng).unwrap();
        assert!(b.contained, "{b:?}");
        assert!((b.witness_value - b.exact_delta).abs() < 1e-7, "{b:?}");
        assert!(b.witness_conditional_residual < 1e-8, "{b:?}");
        let cb = chain_rule_channel_bounds(&with_r, &["R"], &["A1"], &["B1"], &m, &["A2"], &["B2"], 2.0, 50, &mut rng).unwrap();
        assert!(cb.contained && (cb.witness_value - cb.exact_delta).abs() < 1e-7, "{cb:?}");
    }

    #[test]
    fn non_markov_is_rejected() {
        let rho = random_state(8, &["A1", "B1", "A2", "B2"]);
        let r = chain_rule_markov_bounds(&rho, &["A1"], &["B1"], &["A2"], &["B2"], 2.0, 5, &mut random::rng(0));
        assert!(matches!(r, Err(Error::Precondition(_))));
    }
}
