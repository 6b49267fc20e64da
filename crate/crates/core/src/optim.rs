//! Small derivative-free optimizers and density-matrix parameterizations.

use crate::linalg::{self, c, CMat};

#[derive(Clone, Debug)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    /// Spread of objective values over the final simplex.
    pub spread: f64,
}

/// Nelder–Mead with adaptive coefficients (Gao & Han), suited to dimensions up to ~60.
pub fn nelder_mead(
    f: &mut dyn FnMut(&[f64]) -> f64,
    x0: &[f64],
    step: f64,
    ftol: f64,
    max_evals: usize,
) -> Minimum {
    let n = x0.len();
    let nf = n.max(1) as f64;
    let (alpha, beta, gamma, delta) = (1.0, 1.0 + 2.0 / nf, 0.75 - 0.5 / nf, 1.0 - 1.0 / nf);
    let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += if v[i].abs() > 1e-8 { step * v[i].abs().max(0.25) } else { step };
        simplex.push(v);
    }
    let mut fv: Vec<f64> = simplex.iter().map(|v| f(v)).collect();
    let mut evals = n + 1;
    let mut iterations = 0;
    loop {
        let mut idx: Vec<usize> = (0..=n).collect();
        idx.sort_by(|&a, &b| fv[a].partial_cmp(&fv[b]).unwrap_or(std::cmp::Ordering::Equal));
        simplex = idx.iter().map(|&i| simplex[i].clone()).collect();
        fv = idx.iter().map(|&i| fv[i]).collect();
        let spread = (fv[n] - fv[0]).abs();
        if spread <= ftol * (1.0 + fv[0].abs()) || evals >= max_evals {
            return Minimum { x: simplex[0].clone(), value: fv[0], iterations, spread };
        }
        iterations += 1;
        let mut centroid = vec![0.0; n];
        for v in &simplex[..n] {
            for j in 0..n {
                centroid[j] += v[j] / nf;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            (0..n).map(|j| centroid[j] + t * (simplex[n][j] - centroid[j])).collect()
        };
        let xr = along(-alpha);
        let fr = f(&xr);
        evals += 1;
        if fr < fv[0] {
            let xe = along(-alpha * beta);
            let fe = f(&xe);
            evals += 1;
            if fe < fr {
                simplex[n] = xe;
                fv[n] = fe;
            } else {
                simplex[n] = xr;
                fv[n] = fr;
            }
            continue;
        }
        if fr < fv[n - 1] {
            simplex[n] = xr;
            fv[n] = fr;
            continue;
        }
        let (xc, fc) = if fr < fv[n] {
            let xc = along(-alpha * gamma);
            let fc = f(&xc);
            (xc, fc)
        } else {
            let xc = along(gamma);
            let fc = f(&xc);
            (xc, fc)
        };
        evals += 1;
        if fc < fv[n].min(fr) {
            simplex[n] = xc;
            fv[n] = fc;
            continue;
        }
        for i in 1..=n {
            for j in 0..n {
                simplex[i][j] = simplex[0][j] + delta * (simplex[i][j] - simplex[0][j]);
            }
            fv[i] = f(&simplex[i]);
        }
        evals += n;
    }
}

/// Restarted Nelder–Mead: re-seeds the simplex around the incumbent until no progress.
pub fn nelder_mead_restarts(
    f: &mut dyn FnMut(&[f64]) -> f64,
    x0: &[f64],
    step: f64,
    ftol: f64,
    max_evals: usize,
    restarts: usize,
) -> Minimum {
    let mut best = nelder_mead(f, x0, step, ftol, max_evals);
    let mut s = step;
    for _ in 0..restarts {
        s *= 0.5;
        let m = nelder_mead(f, &best.x, s, ftol, max_evals);
        let improved = m.value < best.value - ftol * (1.0 + best.value.abs());
        if m.value <= best.value {
            best = Minimum { iterations: best.iterations + m.iterations, ..m };
        }
        if !improved {
            break;
        }
    }
    best
}

/// Number of real parameters used for a `d × d` density matrix.
pub fn density_param_count(d: usize) -> usize {
    d * d
}

/// `G G† / tr(G G†)` with `G` lower triangular: real diagonal, complex strictly lower part.
pub fn density_from_params(x: &[f64], d: usize) -> CMat {
    let mut g = CMat::zeros(d, d);
    let mut k = 0;
    for i in 0..d {
        g[(i, i)] = c(x[k]);
        k += 1;
    }
    for i in 0..d {
        for j in 0..i {
            g[(i, j)] = num_complex::Complex64::new(x[k], x[k + 1]);
            k += 2;
        }
    }
    let m = &g * g.adjoint();
    let t = linalg::trace_re(&m).max(1e-300);
    linalg::hermitize(&(m / c(t)))
}

/// Parameters reproducing (approximately, after regularization) the given state.
pub fn params_from_density(rho: &CMat) -> Vec<f64> {
    let d = rho.nrows();
    let reg = linalg::hermitize(rho) + linalg::identity(d) * c(1e-10);
    let l = match nalgebra::Cholesky::new(reg) {
        Some(ch) => ch.l(),
        None => linalg::identity(d) * c((1.0 / d as f64).sqrt()),
    };
    let mut x = Vec::with_capacity(d * d);
    // Make the diagonal real by absorbing phases into columns.
    let mut l = l;
    for j in 0..d {
        let p = l[(j, j)];
        if p.norm() > 0.0 {
            let ph = p.conj() / p.norm();
            for i in 0..d {
                l[(i, j)] *= ph;
            }
        }
    }
    for i in 0..d {
        x.push(l[(i, i)].re);
    }
    for i in 0..d {
        for j in 0..i {
            x.push(l[(i, j)].re);
            x.push(l[(i, j)].im);
        }
    }
    x
}

/// Bisection for a root of a monotone function on `[lo, hi]`.
pub fn bisect(mut f: impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64, max_iter: usize) -> f64 {
    let flo = f(lo);
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo).abs() <= tol {
            break;
        }
    }
    0.5 * (lo + hi)
}
