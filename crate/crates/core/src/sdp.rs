//! Barrier-method solver for the guessing-probability SDP
//!
//! ```text
//!     minimize tr(Y)   subject to   id_{A_k} ⊗ Y − ρ_k ≥ 0   for every block k,
//! ```
//!
//! with `Y` Hermitian on `B`. The optimum equals `2^{−H_min(A|B)}` when there is a
//! single block `ρ_AB`; several blocks encode a classical `A` register (one block per
//! symbol). A dual-feasible point is rebuilt from the barrier iterate, so the optimum is
//! bracketed rigorously: `dual ≤ p* ≤ primal`.


use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat};

#[derive(Clone, Debug)]
pub struct SdpBlock {
    pub rho: CMat,
    pub da: usize,
}

#[derive(Clone, Debug)]
pub struct GuessingSolution {
    pub primal: f64,
    pub dual: f64,
    pub y: CMat,
    /// Dual-feasible operators `Z_k ≥ 0` with `Σ_k tr_A Z_k = id_B`.
    pub z: Vec<CMat>,
    pub newton_steps: usize,
}

fn hermitian_basis(d: usize) -> Vec<CMat> {
    let mut out = Vec::with_capacity(d * d);
    for i in 0..d {
        out.push(linalg::basis_projector(d, i));
    }
    let s = 1.0 / 2f64.sqrt();
    for i in 0..d {
        for j in 0..i {
            let mut re = CMat::zeros(d, d);
            re[(i, j)] = c(s);
            re[(j, i)] = c(s);
            out.push(re);
            let mut im = CMat::zeros(d, d);
            im[(i, j)] = num_complex::Complex64::new(0.0, s);
            im[(j, i)] = num_complex::Complex64::new(0.0, -s);
            out.push(im);
        }
    }
    out
}

/// Adds `K[(q,r),(s,p)] = Σ_{a,b} (M_ab)_{pq} (M_ba)_{rs}` for `M = F⁻¹` split into
/// `d_B × d_B` blocks, so that `tr(M (id⊗X) M (id⊗Y)) = vec(X)ᵀ K vec(Y)`.
fn accumulate_hessian_kernel(k: &mut CMat, inv: &CMat, da: usize, db: usize) {
    for a in 0..da {
        for b in 0..da {
            for p in 0..db {
                for q in 0..db {
                    let m_pq = inv[(a * db + p, b * db + q)];
                    for r in 0..db {
                        for s in 0..db {
                            k[(q * db + r, s * db + p)] += m_pq * inv[(b * db + r, a * db + s)];
                        }
                    }
                }
            }
        }
    }
}

fn cholesky_inverse(m: &CMat) -> Option<(CMat, f64)> {
    let ch = nalgebra::Cholesky::new(linalg::hermitize(m))?;
    // The complex square root never fails, so an indefinite input can still factor;
    // positive definiteness needs a real positive diagonal.
    if ch.l_dirty().diagonal().iter().any(|z| !(z.re > 0.0) || z.im.abs() > 1e-9 * z.re) {
        return None;
    }
    let logdet: f64 = ch.l_dirty().diagonal().iter().map(|z| 2.0 * z.re.ln()).sum();
    Some((ch.inverse(), logdet))
}

struct Problem<'a> {
    blocks: &'a [SdpBlock],
    db: usize,
    basis: Vec<CMat>,
    /// Row-major vectorizations of the basis, one per column.
    vecs: CMat,
}

impl<'a> Problem<'a> {
    fn y_of(&self, y: &[f64]) -> CMat {
        let mut m = CMat::zeros(self.db, self.db);
        for (k, e) in self.basis.iter().enumerate() {
            m += e * c(y[k]);
        }
        m
    }

    /// Inverses of `F_k` and `Σ log det F_k`, or `None` when infeasible.
    fn slack(&self, ym: &CMat) -> Option<(Vec<CMat>, f64)> {
        let mut invs = Vec::with_capacity(self.blocks.len());
        let mut ld = 0.0;
        for b in self.blocks {
            let f = linalg::kron(&linalg::identity(b.da), ym) - &b.rho;
            let (inv, l) = cholesky_inverse(&f)?;
            invs.push(inv);
            ld += l;
        }
        Some((invs, ld))
    }

    fn objective(&self, t: f64, ym: &CMat) -> Option<f64> {
        let (_, ld) = self.slack(ym)?;
        Some(t * linalg::trace_re(ym) - ld)
    }

    fn partial_a(&self, m: &CMat, da: usize) -> CMat {
        linalg::partial_trace(m, &[da, self.db], &[1])
    }
}

/// Solve the guessing SDP; `rel_gap` is the target for `(primal − dual)/primal`.
pub fn solve_guessing(blocks: &[SdpBlock], db: usize, rel_gap: f64) -> Result<GuessingSolution> {
    if blocks.is_empty() {
        return Err(Error::Precondition("no blocks given".into()));
    }
    for b in blocks {
        if b.rho.nrows() != b.da * db {
            return Err(Error::Dimension("block dimension does not match d_A·d_B".into()));
        }
    }
    let basis = hermitian_basis(db);
    let vecs = CMat::from_fn(db * db, basis.len(), |r, k| basis[k][(r / db, r % db)]);
    let prob = Problem { blocks, db, basis, vecs };
    let np = prob.basis.len();
    let m_total: f64 = blocks.iter().map(|b| (b.da * db) as f64).sum();
    let scale = blocks.iter().map(|b| linalg::eigh(&b.rho).max()).fold(0.0, f64::max).max(1e-300);
    // Start strictly feasible at Y = 2·scale·id.
    let mut y = vec![0.0; np];
    for i in 0..db {
        y[i] = 2.0 * scale + 1e-300;
    }
    let mut t = m_total / (db as f64 * scale);
    let mut newton_steps = 0;
    let mut best: Option<GuessingSolution> = None;
    for _outer in 0..200 {
        // Centering by damped Newton.
        for _ in 0..100 {
            let ym = prob.y_of(&y);
            let (invs, _) = prob.slack(&ym).ok_or_else(|| Error::NoConvergence("lost feasibility".into()))?;
            let mut grad = vec![0.0; np];
            let mut k_total = CMat::zeros(np, np);
            let mut g_total = CMat::zeros(db, db);
            for (b, inv) in blocks.iter().zip(invs.iter()) {
                g_total += prob.partial_a(inv, b.da);
                accumulate_hessian_kernel(&mut k_total, inv, b.da, db);
            }
            let hess = (prob.vecs.transpose() * &k_total * &prob.vecs).map(|z| z.re);
            for (k, e) in prob.basis.iter().enumerate() {
                grad[k] = t * linalg::trace_re(e) - linalg::trace_prod(&g_total, e).re;
            }
            let g = nalgebra::DVector::from_vec(grad.clone());
            let step = match hess.clone().cholesky() {
                Some(ch) => ch.solve(&(-&g)),
                None => hess.clone().lu().solve(&(-&g)).ok_or_else(|| Error::NoConvergence("singular Newton system".into()))?,
            };
            let decrement = -g.dot(&step);
            newton_steps += 1;
            if decrement / 2.0 < 1e-12 {
                break;
            }
            let f0 = prob.objective(t, &ym).unwrap();
            let mut s = 1.0;
            let mut accepted = false;
            for _ in 0..60 {
                let cand: Vec<f64> = y.iter().zip(step.iter()).map(|(a, d)| a + s * d).collect();
                if let Some(fc) = prob.objective(t, &prob.y_of(&cand)) {
                    if fc <= f0 - 0.25 * s * decrement {
                        y = cand;
                        accepted = true;
                        break;
                    }
                }
                s *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        let ym = prob.y_of(&y);
        let sol = certify(&prob, &ym, t, newton_steps)?;
        let done = sol.primal - sol.dual <= rel_gap * sol.primal.abs().max(1e-300);
        if best.as_ref().map_or(true, |b| sol.primal - sol.dual < b.primal - b.dual) {
            best = Some(sol);
        }
        if done || m_total / t < 1e-15 * scale {
            break;
        }
        t *= 8.0;
    }
    best.ok_or_else(|| Error::NoConvergence("guessing SDP".into()))
}

fn certify(prob: &Problem, ym: &CMat, t: f64, newton_steps: usize) -> Result<GuessingSolution> {
    let (invs, _) = prob.slack(ym).ok_or_else(|| Error::NoConvergence("lost feasibility".into()))?;
    // Positive part, so the certificate stays dual feasible even off the central path.
    let zs: Vec<CMat> = invs.iter().map(|m| linalg::eigh(m).map(|v| v.max(0.0)) / c(t)).collect();
    let mut total = CMat::zeros(prob.db, prob.db);
    for (b, z) in prob.blocks.iter().zip(zs.iter()) {
        total += prob.partial_a(z, b.da);
    }
    let norm = linalg::frac_power(&linalg::hermitize(&total), -0.5)?;
    let mut dual = 0.0;
    let mut z_out = Vec::with_capacity(zs.len());
    for (b, z) in prob.blocks.iter().zip(zs.iter()) {
        let l = linalg::kron(&linalg::identity(b.da), &norm);
        let zn = linalg::hermitize(&(&l * z * &l));
        dual += linalg::trace_prod(&b.rho, &zn).re;
        z_out.push(zn);
    }
    Ok(GuessingSolution { primal: linalg::trace_re(ym), dual, y: ym.clone(), z: z_out, newton_steps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{diag, max_entangled_vector, outer};

    #[test]
    fn maximally_entangled_guessing_is_two() {
        let phi = outer(&(max_entangled_vector(2) * c(0.5f64.sqrt())));
        let s = solve_guessing(&[SdpBlock { rho: phi, da: 2 }], 2, 1e-10).unwrap();
        assert!((s.primal - 2.0).abs() < 1e-8 && s.dual <= s.primal + 1e-12);
        assert!((s.dual - 2.0).abs() < 1e-8);
    }

    #[test]
    fn larger_maximally_entangled_guessing() {
        // Regression: an indefinite slack must be rejected as infeasible.
        let phi = outer(&(max_entangled_vector(8) * c(1.0 / 8f64.sqrt())));
        let s = solve_guessing(&[SdpBlock { rho: phi, da: 8 }], 8, 1e-10).unwrap();
        assert!((s.primal - 8.0).abs() < 1e-7 && (s.dual - 8.0).abs() < 1e-7, "{} {}", s.primal, s.dual);
    }

    #[test]
    fn classical_guessing_is_sum_of_maxima() {
        // p(a,b): rows a, columns b.
        let p = [[0.3, 0.1], [0.2, 0.4]];
        let rho = diag(&[p[0][0], p[0][1], p[1][0], p[1][1]]);
        let s = solve_guessing(&[SdpBlock { rho, da: 2 }], 2, 1e-11).unwrap();
        assert!((s.primal - 0.7).abs() < 1e-9, "{}", s.primal);
    }

    #[test]
    fn blocks_encode_classical_a() {
        let blocks = vec![SdpBlock { rho: diag(&[0.3, 0.1]), da: 1 }, SdpBlock { rho: diag(&[0.2, 0.4]), da: 1 }];
        let s = solve_guessing(&blocks, 2, 1e-11).unwrap();
        assert!((s.primal - 0.7).abs() < 1e-9);
        let mut tot = CMat::zeros(2, 2);
        for z in &s.z {
            tot += z;
        }
        assert!(linalg::max_abs(&(tot - linalg::identity(2))) < 1e-9);
    }

    #[test]
    fn trivial_conditioning_is_max_eigenvalue() {
        let rho = crate::random::density(&mut crate::random::rng(3), 3, 3);
        let s = solve_guessing(&[SdpBlock { rho: rho.clone(), da: 3 }], 1, 1e-11).unwrap();
        assert!((s.primal - linalg::eigh(&rho).max()).abs() < 1e-9);
    }
}
