//! Dense Hermitian matrix kernels on `DMatrix<Complex64>`.
//!
//! Every function here is register-agnostic; [`crate::operator`] adds labels.
//! Subsystem order is big-endian: for `A ⊗ B` the flat index is `a * d_B + b`.

use std::sync::RwLock;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Numerical tolerances shared by every solver in the crate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    /// Eigenvalues below `eig_clip * λ_max` are treated as outside the support.
    pub eig_clip: f64,
    /// Relative slack on negative eigenvalues before an input is rejected as non-PSD.
    pub psd: f64,
    /// Relative slack on `X - X†` before an input is rejected as non-Hermitian.
    pub herm: f64,
    /// Target accuracy (in bits) of iterative optimizers.
    pub opt: f64,
    pub max_iter: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { eig_clip: 1e-12, psd: 1e-9, herm: 1e-9, opt: 1e-8, max_iter: 500 }
    }
}

static TOLERANCES: RwLock<Tolerances> =
    RwLock::new(Tolerances { eig_clip: 1e-12, psd: 1e-9, herm: 1e-9, opt: 1e-8, max_iter: 500 });

pub fn tolerances() -> Tolerances {
    *TOLERANCES.read().unwrap_or_else(|e| e.into_inner())
}

pub fn set_tolerances(t: Tolerances) {
    *TOLERANCES.write().unwrap_or_else(|e| e.into_inner()) = t;
}

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn identity(d: usize) -> CMat {
    CMat::identity(d, d)
}

pub fn hermitize(m: &CMat) -> CMat {
    (m + m.adjoint()) * c(0.5)
}

pub fn trace(m: &CMat) -> Complex64 {
    m.diagonal().iter().sum()
}

pub fn trace_re(m: &CMat) -> f64 {
    trace(m).re
}

/// `tr(A B)` without forming the product.
pub fn trace_prod(a: &CMat, b: &CMat) -> Complex64 {
    let n = a.nrows();
    let mut s = ZERO;
    for i in 0..n {
        for k in 0..a.ncols() {
            s += a[(i, k)] * b[(k, i)];
        }
    }
    s
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn hermiticity_residual(m: &CMat) -> f64 {
    max_abs(&(m - m.adjoint()))
}

#[derive(Clone, Debug)]
pub struct Eigh {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

impl Eigh {
    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Rebuild `U f(Λ) U†`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMat {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for j in 0..n {
            let fj = c(f(self.values[j]));
            for i in 0..n {
                scaled[(i, j)] *= fj;
            }
        }
        &scaled * self.vectors.adjoint()
    }
}

/// Eigendecomposition of the Hermitian part of `m`.
pub fn eigh(m: &CMat) -> Eigh {
    let se = SymmetricEigen::new(hermitize(m));
    Eigh { values: se.eigenvalues.iter().cloned().collect(), vectors: se.eigenvectors }
}

pub fn eigvals(m: &CMat) -> Vec<f64> {
    let mut v = eigh(m).values;
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

/// Support threshold for a PSD spectrum: `eig_clip * λ_max`.
fn support_cut(e: &Eigh) -> f64 {
    tolerances().eig_clip * e.max().max(0.0)
}

fn check_hermitian(m: &CMat) -> Result<()> {
    let scale = max_abs(m).max(1e-300);
    let r = hermiticity_residual(m);
    if r > tolerances().herm * scale {
        return Err(Error::Precondition(format!("operator is not Hermitian (residual {r:e})")));
    }
    Ok(())
}

fn check_psd(e: &Eigh) -> Result<()> {
    let lmax = e.max().abs().max(e.min().abs());
    let lmin = e.min();
    if lmin < -tolerances().psd * lmax.max(1e-300) {
        return Err(Error::NotPsd(lmin));
    }
    Ok(())
}

pub fn is_psd(m: &CMat, tol: f64) -> bool {
    hermiticity_residual(m) <= tol.max(1e-12) * max_abs(m).max(1.0) && eigh(m).min() >= -tol
}

/// `m^p` for PSD `m`, restricted to the support: eigenvalues below the clip
/// threshold are dropped, so negative powers give the generalized inverse.
pub fn frac_power(m: &CMat, p: f64) -> Result<CMat> {
    check_hermitian(m)?;
    let e = eigh(m);
    check_psd(&e)?;
    Ok(power_of(&e, p))
}

pub(crate) fn power_of(e: &Eigh, p: f64) -> CMat {
    let cut = support_cut(e);
    e.map(|x| if x > cut { x.powf(p) } else { 0.0 })
}

pub fn sqrtm(m: &CMat) -> Result<CMat> {
    frac_power(m, 0.5)
}

pub fn support_projector(m: &CMat) -> Result<CMat> {
    frac_power(m, 0.0)
}

/// `tr(m^p)` from the spectrum; zero eigenvalues contribute nothing.
pub fn trace_power(m: &CMat, p: f64) -> Result<f64> {
    let e = eigh(m);
    check_psd(&e)?;
    let cut = support_cut(&e);
    Ok(e.values.iter().filter(|&&x| x > cut).map(|x| x.powf(p)).sum())
}

pub fn singular_values(m: &CMat) -> Vec<f64> {
    m.clone().svd(false, false).singular_values.iter().cloned().collect()
}

/// Schatten norm `‖m‖_α = (tr |m|^α)^{1/α}`; for `α < 1` the quasi-norm.
pub fn schatten(m: &CMat, alpha: f64) -> f64 {
    assert!(alpha > 0.0, "Schatten index must be positive");
    let s = singular_values(m);
    if alpha.is_infinite() {
        return s.into_iter().fold(0.0, f64::max);
    }
    let cut = tolerances().eig_clip * s.iter().cloned().fold(0.0, f64::max);
    s.iter().filter(|&&x| x > cut).map(|x| x.powf(alpha)).sum::<f64>().powf(1.0 / alpha)
}

pub fn trace_norm(m: &CMat) -> f64 {
    singular_values(m).iter().sum()
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn kron_all(ms: &[CMat]) -> CMat {
    ms.iter().skip(1).fold(ms[0].clone(), |acc, m| acc.kronecker(m))
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

/// Index map for reordering tensor factors: new factor `j` is old factor `perm[j]`.
fn permutation_map(dims: &[usize], perm: &[usize]) -> Vec<usize> {
    let total: usize = dims.iter().product();
    let old_strides = strides(dims);
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let new_strides = strides(&new_dims);
    (0..total)
        .map(|i| {
            let mut old = 0;
            for j in 0..perm.len() {
                let digit = (i / new_strides[j]) % new_dims[j];
                old += digit * old_strides[perm[j]];
            }
            old
        })
        .collect()
}

pub fn permute_subsystems(m: &CMat, dims: &[usize], perm: &[usize]) -> CMat {
    let map = permutation_map(dims, perm);
    let n = map.len();
    CMat::from_fn(n, n, |i, j| m[(map[i], map[j])])
}

pub fn permute_vector(v: &CVec, dims: &[usize], perm: &[usize]) -> CVec {
    let map = permutation_map(dims, perm);
    CVec::from_fn(map.len(), |i, _| v[map[i]])
}

/// Trace out every factor not listed in `keep`; kept factors stay in their original order.
pub fn partial_trace(m: &CMat, dims: &[usize], keep: &[usize]) -> CMat {
    let mut keep: Vec<usize> = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    let traced: Vec<usize> = (0..dims.len()).filter(|k| !keep.contains(k)).collect();
    let dk: usize = keep.iter().map(|&k| dims[k]).product();
    let dt: usize = traced.iter().map(|&k| dims[k]).product();
    let perm: Vec<usize> = keep.iter().chain(traced.iter()).cloned().collect();
    let is_identity = perm.iter().enumerate().all(|(i, &p)| i == p);
    let pm = if is_identity { m.clone() } else { permute_subsystems(m, dims, &perm) };
    let mut out = CMat::zeros(dk, dk);
    for a in 0..dk {
        for b in 0..dk {
            let mut s = ZERO;
            for t in 0..dt {
                s += pm[(a * dt + t, b * dt + t)];
            }
            out[(a, b)] = s;
        }
    }
    out
}

pub fn outer(v: &CVec) -> CMat {
    v * v.adjoint()
}

/// `op(ψ)` for `ψ ∈ A ⊗ B`: the `d_B × d_A` matrix with entries `⟨b|op|a⟩ = ψ_{ab}`.
pub fn op_from_vector(psi: &CVec, da: usize, db: usize) -> Result<CMat> {
    if psi.len() != da * db {
        return Err(Error::Dimension(format!("vector of length {} is not {}x{}", psi.len(), da, db)));
    }
    Ok(CMat::from_fn(db, da, |b, a| psi[a * db + b]))
}

/// Inverse of [`op_from_vector`].
pub fn vector_from_op(op: &CMat) -> CVec {
    let (db, da) = op.shape();
    CVec::from_fn(da * db, |i, _| op[(i % db, i / db)])
}

/// Unnormalized maximally entangled vector `Σ_i |i⟩|i⟩`.
pub fn max_entangled_vector(d: usize) -> CVec {
    let mut v = CVec::zeros(d * d);
    for i in 0..d {
        v[i * d + i] = ONE;
    }
    v
}

/// Purification `Σ_k √λ_k |e_k⟩|k⟩` on `A ⊗ R` with `d_R = rank(ρ)`.
/// Returns the vector and `d_R`.
pub fn purify(rho: &CMat) -> Result<(CVec, usize)> {
    check_hermitian(rho)?;
    let e = eigh(rho);
    check_psd(&e)?;
    let cut = support_cut(&e);
    let support: Vec<usize> = (0..e.values.len()).filter(|&k| e.values[k] > cut).collect();
    let d = rho.nrows();
    let r = support.len().max(1);
    let mut v = CVec::zeros(d * r);
    for (slot, &k) in support.iter().enumerate() {
        let w = e.values[k].sqrt();
        for a in 0..d {
            v[a * r + slot] += e.vectors[(a, k)] * w;
        }
    }
    Ok((v, r))
}

/// `‖√ρ √σ‖₁`.
pub fn fidelity(rho: &CMat, sigma: &CMat) -> Result<f64> {
    Ok(trace_norm(&(sqrtm(rho)? * sqrtm(sigma)?)))
}

/// Generalized fidelity for subnormalized arguments.
pub fn generalized_fidelity(rho: &CMat, sigma: &CMat) -> Result<f64> {
    let tr = trace_re(rho);
    let ts = trace_re(sigma);
    Ok(fidelity(rho, sigma)? + ((1.0 - tr).max(0.0) * (1.0 - ts).max(0.0)).sqrt())
}

pub fn purified_distance(rho: &CMat, sigma: &CMat) -> Result<f64> {
    let f = generalized_fidelity(rho, sigma)?.min(1.0);
    Ok((1.0 - f * f).max(0.0).sqrt())
}

/// Fréchet derivative of `X ↦ f(X)` at Hermitian `X = U Λ U†` is
/// `U (f^{[1]}(λ_i, λ_j) ∘ U†ΔU) U†`. Returns the first divided differences.
pub(crate) fn divided_differences(
    values: &[f64],
    f: impl Fn(f64) -> f64,
    df: impl Fn(f64) -> f64,
) -> DMatrix<f64> {
    let n = values.len();
    DMatrix::from_fn(n, n, |i, j| {
        let (a, b) = (values[i], values[j]);
        if (a - b).abs() <= 1e-10 * a.abs().max(b.abs()).max(1e-300) {
            df(0.5 * (a + b))
        } else {
            (f(a) - f(b)) / (a - b)
        }
    })
}

pub fn maximally_mixed(d: usize) -> CMat {
    identity(d) * c(1.0 / d as f64)
}

pub fn basis_projector(d: usize, k: usize) -> CMat {
    let mut m = CMat::zeros(d, d);
    m[(k, k)] = ONE;
    m
}

pub fn diag(values: &[f64]) -> CMat {
    let n = values.len();
    CMat::from_fn(n, n, |i, j| if i == j { c(values[i]) } else { ZERO })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m2(a: [[f64; 2]; 2]) -> CMat {
        CMat::from_fn(2, 2, |i, j| c(a[i][j]))
    }

    #[test]
    fn sqrt_of_diag() {
        let r = frac_power(&diag(&[4.0, 9.0]), 0.5).unwrap();
        assert!((r[(0, 0)].re - 2.0).abs() < 1e-14);
        assert!((r[(1, 1)].re - 3.0).abs() < 1e-14);
    }

    #[test]
    fn pseudo_inverse_drops_kernel() {
        let r = frac_power(&diag(&[1.0, 0.0]), -1.0).unwrap();
        assert!((r[(0, 0)].re - 1.0).abs() < 1e-14);
        assert!(r[(1, 1)].norm() < 1e-14);
    }

    #[test]
    fn rejects_non_hermitian_input() {
        let mut m = identity(2);
        m[(0, 1)] = c(0.5);
        assert!(matches!(frac_power(&m, 0.5), Err(Error::Precondition(_))));
    }

    #[test]
    fn rejects_negative_input() {
        assert!(matches!(frac_power(&diag(&[1.0, -0.1]), 0.5), Err(Error::NotPsd(_))));
    }

    #[test]
    fn schatten_two_of_identity() {
        assert!((schatten(&identity(2), 2.0) - 2f64.sqrt()).abs() < 1e-14);
        assert!((schatten(&identity(3), 1.0) - 3.0).abs() < 1e-14);
    }

    #[test]
    fn partial_trace_product() {
        let a = m2([[0.7, 0.1], [0.1, 0.3]]);
        let b = m2([[0.4, 0.0], [0.0, 0.6]]);
        let ab = kron(&a, &b);
        assert!(max_abs(&(partial_trace(&ab, &[2, 2], &[0]) - &a)) < 1e-14);
        assert!(max_abs(&(partial_trace(&ab, &[2, 2], &[1]) - &b)) < 1e-14);
    }

    #[test]
    fn permutation_swaps_factors() {
        let a = m2([[0.7, 0.2], [0.2, 0.3]]);
        let b = m2([[0.5, 0.0], [0.0, 0.5]]);
        let swapped = permute_subsystems(&kron(&a, &b), &[2, 2], &[1, 0]);
        assert!(max_abs(&(swapped - kron(&b, &a))) < 1e-14);
    }

    #[test]
    fn bell_state_marginal_is_mixed() {
        let phi = max_entangled_vector(2) * c(1.0 / 2f64.sqrt());
        let r = partial_trace(&outer(&phi), &[2, 2], &[0]);
        assert!(max_abs(&(r - maximally_mixed(2))) < 1e-15);
    }

    #[test]
    fn vectorize_roundtrip() {
        let psi = CVec::from_fn(6, |i, _| Complex64::new(i as f64, -(i as f64) / 2.0));
        let op = op_from_vector(&psi, 2, 3).unwrap();
        assert_eq!(op.shape(), (3, 2));
        assert_eq!(vector_from_op(&op), psi);
    }

    #[test]
    fn purification_reduces_back() {
        let rho = m2([[0.6, 0.2], [0.2, 0.4]]);
        let (psi, r) = purify(&rho).unwrap();
        let back = partial_trace(&outer(&psi), &[2, r], &[0]);
        assert!(max_abs(&(back - rho)) < 1e-14);
    }

    #[test]
    fn purified_distance_extremes() {
        let p0 = basis_projector(2, 0);
        let p1 = basis_projector(2, 1);
        assert!(purified_distance(&p0, &p0).unwrap() < 1e-7);
        assert!((purified_distance(&p0, &p1).unwrap() - 1.0).abs() < 1e-12);
    }
}
