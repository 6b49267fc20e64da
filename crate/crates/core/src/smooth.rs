//! Min- and max-entropies, their ε-smoothed versions, and the classical exact path.
//!
//! Quantum inputs get certified intervals: the guessing SDP brackets `H_min` at ε = 0;
//! for ε > 0 the lower end combines the Rényi bound `H↑_α − g(ε)/(α−1)` over a grid of
//! α with an explicit smoothing certificate, and the upper end comes from the SDP dual
//! (`tr(ρ̃ Z) ≥ tr(ρ Z) − ε‖Z‖∞` for every ρ̃ in the ball). Diagonal inputs are solved
//! exactly.

use crate::entropy::{self, g_eps, split, EntropyResult, Method};
use crate::error::{precondition, Result};
use crate::linalg::{self, c, CMat};
use crate::operator::{Operator, Register};
use crate::optim;
use crate::sdp::{solve_guessing, SdpBlock};

pub const MAX_QUANTUM_DIM: usize = 64;
const SDP_REL_GAP: f64 = 1e-10;
const ALPHA_GRID: [f64; 9] = [1.02, 1.05, 1.1, 1.2, 1.35, 1.5, 2.0, 3.0, 5.0];

fn check_eps(eps: f64) -> Result<()> {
    if !(0.0..1.0).contains(&eps) {
        return precondition(format!("smoothing parameter must lie in [0,1), got {eps}"));
    }
    Ok(())
}

fn check_dim(rho: &Operator) -> Result<()> {
    if rho.dim() > MAX_QUANTUM_DIM {
        return precondition(format!("total dimension {} exceeds the cap {MAX_QUANTUM_DIM}", rho.dim()));
    }
    Ok(())
}

fn is_diagonal(m: &CMat) -> bool {
    let scale = linalg::max_abs(m).max(1e-300);
    (0..m.nrows()).all(|i| (0..m.ncols()).all(|j| i == j || m[(i, j)].norm() <= 1e-14 * scale))
}

/// Atoms of one conditioning value `b`: `(probability, multiplicity)` pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalBlock {
    pub multiplicity: f64,
    pub atoms: Vec<(f64, f64)>,
}

impl ClassicalBlock {
    pub fn from_column(column: &[f64]) -> Self {
        ClassicalBlock { multiplicity: 1.0, atoms: column.iter().map(|&p| (p, 1.0)).collect() }
    }
}

/// Per-block data sorted by decreasing probability with prefix sums of `n√p` and `n`.
struct Prepared {
    m: f64,
    sqrt_p: Vec<f64>,
    n: Vec<f64>,
    s_prefix: Vec<f64>,
    n_prefix: Vec<f64>,
}

fn prepare(blocks: &[ClassicalBlock]) -> Vec<Prepared> {
    blocks
        .iter()
        .filter_map(|b| {
            let mut atoms: Vec<(f64, f64)> = b.atoms.iter().cloned().filter(|&(p, n)| p > 0.0 && n > 0.0).collect();
            if atoms.is_empty() || b.multiplicity <= 0.0 {
                return None;
            }
            atoms.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap());
            let sqrt_p: Vec<f64> = atoms.iter().map(|a| a.0.sqrt()).collect();
            let n: Vec<f64> = atoms.iter().map(|a| a.1).collect();
            let mut s_prefix = Vec::with_capacity(n.len());
            let mut n_prefix = Vec::with_capacity(n.len());
            let (mut s, mut k) = (0.0, 0.0);
            for i in 0..n.len() {
                s += n[i] * sqrt_p[i];
                k += n[i];
                s_prefix.push(s);
                n_prefix.push(k);
            }
            Some(Prepared { m: b.multiplicity, sqrt_p, n, s_prefix, n_prefix })
        })
        .collect()
}

/// `(Σ_b m_b t_b, Σ q, Σ √(p q))` at multipliers `r = κ/2` and `w = 1/√λ`.
///
/// Stationarity gives `q_ab = min(t_b, λ p_ab)` with `√t_b = r Σ_{capped} n_a(√p_a − √t_b w)`,
/// and the capped atoms form a prefix of the sorted list, so each block is solved exactly.
fn kkt_point(blocks: &[Prepared], r: f64, w: f64) -> (f64, f64, f64) {
    let (mut obj, mut mass, mut fid) = (0.0, 0.0, 0.0);
    for b in blocks {
        let k = b.n.len();
        let mut j = 0;
        let mut u = 0.0;
        while j < k {
            u = r * b.s_prefix[j] / (1.0 + r * b.n_prefix[j] * w);
            if j + 1 == k || u * w >= b.sqrt_p[j + 1] {
                break;
            }
            j += 1;
        }
        let t = u * u;
        obj += b.m * t;
        for i in 0..k {
            let p = b.sqrt_p[i] * b.sqrt_p[i];
            let q = if w > 0.0 { t.min(p / (w * w)) } else { t };
            mass += b.m * b.n[i] * q;
            fid += b.m * b.n[i] * b.sqrt_p[i] * q.sqrt();
        }
    }
    (obj, mass, fid)
}

/// The optimal `w ≥ 0` for a given `r`: zero if the unconstrained point has mass ≤ 1,
/// otherwise the root of `Σ q(w) = 1`.
fn mass_multiplier(blocks: &[Prepared], r: f64) -> f64 {
    if kkt_point(blocks, r, 0.0).1 <= 1.0 {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while kkt_point(blocks, r, hi).1 > 1.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e300 {
            break;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if kkt_point(blocks, r, mid).1 > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-16 * hi {
            break;
        }
    }
    hi
}

/// Exact `2^{−H_min^ε}` guessing value for block-structured classical distributions.
pub fn guessing_smooth_classical(blocks: &[ClassicalBlock], eps: f64) -> Result<f64> {
    check_eps(eps)?;
    let prep = prepare(blocks);
    if prep.is_empty() {
        return precondition("empty distribution");
    }
    let total: f64 = prep.iter().map(|b| b.m * b.n.iter().zip(&b.sqrt_p).map(|(n, s)| n * s * s).sum::<f64>()).sum();
    if (total - 1.0).abs() > 1e-9 {
        return precondition(format!("classical distribution must be normalized, total mass {total}"));
    }
    if eps == 0.0 {
        return Ok(prep.iter().map(|b| b.m * b.sqrt_p[0] * b.sqrt_p[0]).sum());
    }
    let target = (1.0 - eps * eps).sqrt();
    let fid = |r: f64| {
        let w = mass_multiplier(&prep, r);
        kkt_point(&prep, r, w)
    };
    let (mut lo, mut hi) = (1.0f64, 1.0f64);
    while fid(lo).2 > target {
        lo *= 0.5;
    }
    while fid(hi).2 < target {
        hi *= 2.0;
        if hi > 1e300 {
            break;
        }
    }
    for _ in 0..300 {
        let mid = (lo * hi).sqrt();
        if fid(mid).2 < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo - 1.0 < 1e-15 {
            break;
        }
    }
    // `hi` is on the feasible side of the fidelity constraint.
    Ok(fid(hi).0)
}

pub fn h_min_smooth_classical_blocks(blocks: &[ClassicalBlock], eps: f64) -> Result<f64> {
    Ok(-guessing_smooth_classical(blocks, eps)?.log2())
}

/// `H_min^ε(A|B)` for a joint distribution given as `p[a][b]`.
pub fn h_min_smooth_classical(p: &[Vec<f64>], eps: f64) -> Result<f64> {
    let nb = p.first().map_or(0, |r| r.len());
    if p.iter().any(|r| r.len() != nb) {
        return precondition("ragged probability table");
    }
    let blocks: Vec<ClassicalBlock> =
        (0..nb).map(|b| ClassicalBlock::from_column(&p.iter().map(|r| r[b]).collect::<Vec<_>>())).collect();
    h_min_smooth_classical_blocks(&blocks, eps)
}

/// Guessing SDP on `ρ_AB` (with `A` = all registers not in `cond`).
pub fn guessing(rho: &Operator, cond: &[&str]) -> Result<crate::sdp::GuessingSolution> {
    let s = split(rho, cond)?;
    solve_guessing(&[SdpBlock { rho: s.rho, da: s.da }], s.db, SDP_REL_GAP)
}

fn interval_from_guess(primal: f64, dual: f64) -> EntropyResult {
    let lower = -primal.log2();
    let upper = if dual > 0.0 { -dual.log2() } else { f64::INFINITY };
    EntropyResult::interval(lower, Method::Optimized, lower, upper.max(lower))
}

/// `H_min(A|B)` at ε = 0.
pub fn h_min(rho: &Operator, cond: &[&str]) -> Result<EntropyResult> {
    check_dim(rho)?;
    let s = split(rho, cond)?;
    if is_diagonal(&s.rho) {
        let v = h_min_smooth_classical(&table(&s.rho, s.da, s.db), 0.0)?;
        return Ok(EntropyResult::exact(v, Method::ClosedForm));
    }
    let g = guessing(rho, cond)?;
    Ok(interval_from_guess(g.primal, g.dual))
}

fn table(m: &CMat, da: usize, db: usize) -> Vec<Vec<f64>> {
    (0..da).map(|a| (0..db).map(|b| m[(a * db + b, a * db + b)].re.max(0.0)).collect()).collect()
}

/// Purification with environment `C` and the reduced state on `A ⊗ C` (A = non-`cond`).
fn complementary(rho: &Operator, cond: &[&str]) -> Result<(Operator, Vec<String>)> {
    let (psi, rank) = linalg::purify(rho.matrix())?;
    let mut regs: Vec<Register> = rho.registers().to_vec();
    let mut env = "C".to_string();
    while regs.iter().any(|r| r.label == env) {
        env.push('\'');
    }
    regs.push(Register::new(env.clone(), rank));
    let full = Operator::new(regs, linalg::outer(&psi))?;
    let keep: Vec<String> = rho.labels().iter().filter(|l| !cond.contains(l)).map(|s| s.to_string()).collect();
    let mut ac: Vec<&str> = keep.iter().map(|s| s.as_str()).collect();
    ac.push(&env);
    Ok((full.ptrace_keep(&ac)?, vec![env]))
}

/// `H_max(A|B)` at ε = 0 via `H_max(A|B)_ρ = −H_min(A|C)_ψ`.
pub fn h_max(rho: &Operator, cond: &[&str]) -> Result<EntropyResult> {
    check_dim(rho)?;
    let (rho_ac, env) = complementary(rho, cond)?;
    let envs: Vec<&str> = env.iter().map(|s| s.as_str()).collect();
    let r = h_min(&rho_ac, &envs)?;
    Ok(EntropyResult::interval(-r.value, r.method, -r.upper, -r.lower))
}

/// `log sup_σ ‖ρ_AB^{1/2} (id ⊗ σ_B)^{1/2}‖₁²` by derivative-free search; an independent
/// lower bound on `H_max(A|B)`.
pub fn h_max_direct(rho: &Operator, cond: &[&str]) -> Result<f64> {
    let s = split(rho, cond)?;
    let sq = linalg::sqrtm(&s.rho)?;
    let db = s.db;
    let da = s.da;
    let mut f = |x: &[f64]| -> f64 {
        let sigma = optim::density_from_params(x, db);
        let root = match linalg::sqrtm(&sigma) {
            Ok(r) => r,
            Err(_) => return f64::INFINITY,
        };
        -linalg::trace_norm(&(&sq * entropy::lift_b(&root, da)))
    };
    let x0 = optim::params_from_density(&linalg::maximally_mixed(db));
    let m = optim::nelder_mead_restarts(&mut f, &x0, 0.3, 1e-15, 40_000, 6);
    Ok(2.0 * (-m.value).log2())
}

/// Pieces of the quantum `H_min^ε` interval, kept for reporting.
#[derive(Clone, Debug)]
pub struct SmoothBounds {
    pub result: EntropyResult,
    pub from_hmin: f64,
    pub from_renyi: f64,
    pub best_alpha: f64,
    pub from_certificate: f64,
    pub from_dual: f64,
}

pub fn h_min_smooth_bounds(rho: &Operator, cond: &[&str], eps: f64) -> Result<SmoothBounds> {
    check_eps(eps)?;
    check_dim(rho)?;
    let s = split(rho, cond)?;
    let g = guessing(rho, cond)?;
    let from_hmin = -g.primal.log2();
    if eps == 0.0 {
        let r = interval_from_guess(g.primal, g.dual);
        return Ok(SmoothBounds { result: r, from_hmin, from_renyi: f64::NEG_INFINITY, best_alpha: f64::NAN, from_certificate: from_hmin, from_dual: r.upper });
    }
    let mut from_renyi = f64::NEG_INFINITY;
    let mut best_alpha = f64::NAN;
    let ge = g_eps(eps);
    for &a in ALPHA_GRID.iter() {
        let up = entropy::h_alpha_up(rho, cond, a)?;
        let v = up.lower - ge / (a - 1.0);
        if v > from_renyi {
            from_renyi = v;
            best_alpha = a;
        }
    }
    // Smoothing certificate against σ_B = Y*/tr Y*.
    let sigma = linalg::hermitize(&(&g.y / c(linalg::trace_re(&g.y))));
    let full = entropy::lift_b(&sigma, s.da);
    let from_certificate = match entropy::d_max_smooth_lambda(&s.rho, &full, eps) {
        Ok(cert) if cert.distance <= eps + 1e-12 && cert.domination_excess <= 1e-12 => -cert.lambda,
        _ => f64::NEG_INFINITY,
    };
    // tr(ρ̃ Z) ≥ tr(ρ Z) − ε‖Z‖∞ for the dual-feasible Z of the unsmoothed problem.
    let z = &g.z[0];
    let zn = linalg::eigh(z).max();
    let val = linalg::trace_prod(&s.rho, z).re - eps * zn;
    let trivial = (s.da as f64).log2() - (1.0 - eps * eps).log2();
    let from_dual = if val > 0.0 { (-val.log2()).min(trivial) } else { trivial };
    let lower = from_hmin.max(from_renyi).max(from_certificate);
    let upper = from_dual.max(lower);
    Ok(SmoothBounds {
        result: EntropyResult::interval(lower, Method::Optimized, lower, upper),
        from_hmin,
        from_renyi,
        best_alpha,
        from_certificate,
        from_dual,
    })
}

/// `H_min^ε(A|B)`: exact for diagonal inputs, a certified interval otherwise.
pub fn h_min_smooth(rho: &Operator, cond: &[&str], eps: f64) -> Result<EntropyResult> {
    check_eps(eps)?;
    check_dim(rho)?;
    let s = split(rho, cond)?;
    if is_diagonal(&s.rho) {
        let v = h_min_smooth_classical(&table(&s.rho, s.da, s.db), eps)?;
        let method = if eps == 0.0 { Method::ClosedForm } else { Method::Bisection };
        return Ok(EntropyResult::exact(v, method));
    }
    Ok(h_min_smooth_bounds(rho, cond, eps)?.result)
}

/// `H_max^ε(A|B)_ρ = −H_min^ε(A|C)_ψ` on a purification.
pub fn h_max_smooth(rho: &Operator, cond: &[&str], eps: f64) -> Result<EntropyResult> {
    check_eps(eps)?;
    check_dim(rho)?;
    let (rho_ac, env) = complementary(rho, cond)?;
    let envs: Vec<&str> = env.iter().map(|s| s.as_str()).collect();
    let r = h_min_smooth(&rho_ac, &envs, eps)?;
    Ok(EntropyResult::interval(-r.value, r.method, -r.upper, -r.lower))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{diag, kron, max_entangled_vector, outer};
    use crate::operator::reg;
    use crate::random;

    fn phi() -> Operator {
        let v = max_entangled_vector(2) * c(1.0 / 2f64.sqrt());
        Operator::new(vec![reg("A", 2), reg("B", 2)], outer(&v)).unwrap()
    }

    #[test]
    fn classical_uniform_closed_form() {
        for &n in &[2usize, 5, 16] {
            for &eps in &[0.0, 0.01, 0.3] {
                let p: Vec<Vec<f64>> = (0..n).map(|_| vec![1.0 / n as f64]).collect();
                let v = h_min_smooth_classical(&p, eps).unwrap();
                let expect = (n as f64).log2() - (1.0 - eps * eps).log2();
                assert!((v - expect).abs() < 1e-12, "{n} {eps}: {v} vs {expect}");
            }
        }
    }

    #[test]
    fn classical_matches_convex_solver() {
        let cases: [(&[&[f64]], f64, f64); 5] = [
            (&[&[0.5], &[0.25], &[0.25]], 0.25, 1.6362160107),
            (&[&[0.5], &[0.25], &[0.25]], 0.1, 1.3201213268),
            (&[&[0.3, 0.1], &[0.2, 0.4]], 0.2, 0.9274405838),
            (&[&[0.35, 0.05], &[0.1, 0.2], &[0.05, 0.25]], 0.05, 0.8609982138),
            (&[&[0.7], &[0.1], &[0.1], &[0.1]], 0.3, 1.3157734173),
        ];
        for (p, eps, expect) in cases {
            let p: Vec<Vec<f64>> = p.iter().map(|r| r.to_vec()).collect();
            let v = h_min_smooth_classical(&p, eps).unwrap();
            assert!((v - expect).abs() < 1e-6, "{v} vs {expect}");
        }
    }

    #[test]
    fn multiplicities_equal_expanded_blocks() {
        let block = ClassicalBlock { multiplicity: 1.0, atoms: vec![(0.35, 1.0), (0.05, 3.0)] };
        let expanded = ClassicalBlock::from_column(&[0.35, 0.05, 0.05, 0.05]);
        let grouped = ClassicalBlock { multiplicity: 2.0, atoms: block.atoms.clone() };
        let a = h_min_smooth_classical_blocks(&[grouped], 0.1).unwrap();
        let b = h_min_smooth_classical_blocks(&[expanded.clone(), expanded], 0.1).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn hmin_phi_and_product() {
        let r = h_min(&phi(), &["B"]).unwrap();
        assert!((r.lower + 1.0).abs() < 1e-8 && (r.upper + 1.0).abs() < 1e-8);
        let rho = random::density(&mut random::rng(5), 2, 2);
        let prod = Operator::new(vec![reg("A", 2), reg("B", 2)], kron(&rho, &diag(&[0.3, 0.7]))).unwrap();
        let r = h_min(&prod, &["B"]).unwrap();
        let expect = -linalg::eigh(&rho).max().log2();
        assert!((r.value - expect).abs() < 1e-8, "{} vs {expect}", r.value);
    }

    #[test]
    fn hmax_phi_and_direct() {
        let r = h_max(&phi(), &["B"]).unwrap();
        assert!((r.value + 1.0).abs() < 1e-7, "{:?}", r);
        let m = random::density(&mut random::rng(11), 4, 4);
        let rho = Operator::new(vec![reg("A", 2), reg("B", 2)], m).unwrap();
        let sdp = h_max(&rho, &["B"]).unwrap();
        let direct = h_max_direct(&rho, &["B"]).unwrap();
        assert!(direct <= sdp.upper + 1e-9 && direct >= sdp.lower - 1e-6, "{direct} {:?}", sdp);
    }

    #[test]
    fn smooth_interval_is_ordered() {
        let m = random::density(&mut random::rng(2), 4, 4);
        let rho = Operator::new(vec![reg("A", 2), reg("B", 2)], m).unwrap();
        let h0 = h_min(&rho, &["B"]).unwrap();
        let b = h_min_smooth_bounds(&rho, &["B"], 0.1).unwrap();
        assert!(b.result.lower >= h0.lower - 1e-12);
        assert!(b.result.lower <= b.result.upper + 1e-12);
        let hmax = h_max_smooth(&rho, &["B"], 0.1).unwrap();
        assert!(hmax.lower <= hmax.upper + 1e-12);
        assert!(hmax.lower <= h_max(&rho, &["B"]).unwrap().upper + 1e-9);
    }

    #[test]
    fn diagonal_quantum_input_uses_exact_path() {
        let p = [0.5, 0.25, 0.25];
        let rho = Operator::new(vec![reg("A", 3)], diag(&p)).unwrap();
        let r = h_min_smooth(&rho, &[], 0.25).unwrap();
        assert!((r.value - 1.6362160107).abs() < 1e-6);
        assert_eq!(r.certified_gap, 0.0);
    }
}
