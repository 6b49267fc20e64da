//! Seeded random states, unitaries and channels.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{self, CMat, CVec};

pub type SimRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut impl Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im)
}

pub fn ginibre(rng: &mut impl Rng, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| gaussian(rng))
}

pub fn pure_vector(rng: &mut impl Rng, d: usize) -> CVec {
    let v = CVec::from_fn(d, |_, _| gaussian(rng));
    let n = v.norm();
    v / linalg::c(n)
}

/// Induced-measure density matrix of the given rank (full rank when `rank >= d`).
pub fn density(rng: &mut impl Rng, d: usize, rank: usize) -> CMat {
    let g = ginibre(rng, d, rank.clamp(1, d));
    let m = &g * g.adjoint();
    let t = linalg::trace_re(&m);
    linalg::hermitize(&(m / linalg::c(t)))
}

pub fn full_rank_density(rng: &mut impl Rng, d: usize) -> CMat {
    density(rng, d, d)
}

/// Haar unitary via QR with phase correction.
pub fn unitary(rng: &mut impl Rng, d: usize) -> CMat {
    let g = ginibre(rng, d, d);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        let p = r[(j, j)];
        let ph = if p.norm() > 0.0 { p / p.norm() } else { linalg::ONE };
        for i in 0..d {
            q[(i, j)] *= ph;
        }
    }
    q
}

/// Random isometry `d_in → d_out`.
pub fn isometry(rng: &mut impl Rng, d_in: usize, d_out: usize) -> CMat {
    assert!(d_out >= d_in);
    unitary(rng, d_out).columns(0, d_in).into_owned()
}

/// Kraus operators (`d_out × d_in`) of a random channel with `k` Kraus operators.
pub fn kraus_channel(rng: &mut impl Rng, d_in: usize, d_out: usize, k: usize) -> Vec<CMat> {
    let v = isometry(rng, d_in, d_out * k);
    (0..k).map(|j| v.rows(j * d_out, d_out).into_owned()).collect()
}

/// Random probability vector (flat Dirichlet).
pub fn probability_vector(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn density_is_a_state() {
        let mut r = rng(1);
        for d in 1..6 {
            let rho = density(&mut r, d, d);
            assert!((linalg::trace_re(&rho) - 1.0).abs() < 1e-12);
            assert!(linalg::eigh(&rho).min() > -1e-14);
        }
    }

    #[test]
    fn unitary_is_unitary() {
        let mut r = rng(2);
        let u = unitary(&mut r, 4);
        assert!(linalg::max_abs(&(u.adjoint() * &u - linalg::identity(4))) < 1e-12);
    }

    #[test]
    fn kraus_is_trace_preserving() {
        let mut r = rng(3);
        let ks = kraus_channel(&mut r, 2, 3, 2);
        let s = ks.iter().fold(CMat::zeros(2, 2), |acc, k| acc + k.adjoint() * k);
        assert!(linalg::max_abs(&(s - linalg::identity(2))) < 1e-12);
    }

    #[test]
    fn seeds_are_reproducible() {
        let a = density(&mut rng(9), 3, 3);
        let b = density(&mut rng(9), 3, 3);
        assert_eq!(a, b);
    }
}
