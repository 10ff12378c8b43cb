//! Low-level numerical kernels shared by the samplers, the trainer, and the
//! evaluation pipelines. All routines are pure functions on immutable inputs.

use ndarray::{Array1, Array2};

use crate::error::{CerfError, Result};

mod svd;
pub use svd::{jacobi_svd, Svd};

/// Fast Walsh–Hadamard transform, in place.
///
/// Applies the unnormalized {+1,−1} Hadamard matrix of order `v.len()` in
/// `n·log2(n)` additions/subtractions.
pub fn fwht_in_place(v: &mut [f64]) -> Result<()> {
    let n = v.len();
    if n == 0 || !n.is_power_of_two() {
        return Err(CerfError::NonPowerOfTwoLength(n));
    }
    let mut h = 1;
    while h < n {
        for chunk in v.chunks_exact_mut(2 * h) {
            let (a, b) = chunk.split_at_mut(h);
            for i in 0..h {
                let x = a[i];
                let y = b[i];
                a[i] = x + y;
                b[i] = x - y;
            }
        }
        h *= 2;
    }
    Ok(())
}

/// Fast Walsh–Hadamard transform of a vector.
pub fn fwht(v: &[f64]) -> Result<Vec<f64>> {
    let mut out = v.to_vec();
    fwht_in_place(&mut out)?;
    Ok(out)
}

/// Digamma function ψ(x) for x > 0.
///
/// Recurrence shift above 10 followed by the Bernoulli asymptotic series;
/// absolute accuracy better than 1e-10 on the positive axis.
pub fn digamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(CerfError::Domain(format!("digamma requires x > 0, got {x}")));
    }
    let mut x = x;
    let mut acc = 0.0;
    while x < 10.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    // ln x - 1/(2x) - sum B_{2n}/(2n x^{2n})
    let series = inv2
        * (1.0 / 12.0
            - inv2
                * (1.0 / 120.0
                    - inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0 - inv2 * (1.0 / 132.0)))));
    Ok(acc + x.ln() - 0.5 * inv - series)
}

/// Natural log of the Gamma function (Lanczos approximation, g = 7).
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(CerfError::Domain(format!(
            "ln_gamma requires x > 0, got {x}"
        )));
    }
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    let x = x - 1.0;
    let mut a = COEF[0];
    for (i, &c) in COEF.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    let t = x + G + 0.5;
    Ok(0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln())
}

/// Euclidean projection onto the L1 ball of radius `a`.
///
/// Inside the ball the input is returned unchanged; otherwise the shrinkage
/// threshold λ* is located by bisection on `f(λ) = Σ max(|v_i| − λ, 0) − a`.
pub fn project_l1_ball(v: &[f64], a: f64) -> Result<Vec<f64>> {
    if !(a > 0.0) {
        return Err(CerfError::InvalidParameter(format!(
            "l1 radius must be positive, got {a}"
        )));
    }
    let l1: f64 = v.iter().map(|x| x.abs()).sum();
    if l1 <= a {
        return Ok(v.to_vec());
    }
    let mut lo = 0.0_f64;
    let mut hi = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let f = |lam: f64| -> f64 {
        v.iter().map(|x| (x.abs() - lam).max(0.0)).sum::<f64>() - a
    };
    for _ in 0..200 {
        if hi - lo <= 1e-12 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lam = 0.5 * (lo + hi);
    Ok(v
        .iter()
        .map(|&x| x.signum() * (x.abs() - lam).max(0.0))
        .collect())
}

/// Proximal operator of `β‖·‖₂` (spectral norm) at `A`.
///
/// Computed through the SVD of `A` and the L1-ball projection of the
/// singular value vector; equivalently, singular values are clipped so that
/// the total shrinkage mass equals β. Returns zero exactly when the nuclear
/// norm of `A` is ≤ β, and `A` itself for β = 0.
pub fn prox_spectral(a: &Array2<f64>, beta: f64) -> Result<Array2<f64>> {
    if beta < 0.0 {
        return Err(CerfError::InvalidParameter(format!(
            "prox parameter must be nonnegative, got {beta}"
        )));
    }
    if beta == 0.0 {
        return Ok(a.clone());
    }
    let svd = jacobi_svd(a)?;
    let nuclear: f64 = svd.s.iter().sum();
    let n = svd.s.len();
    if nuclear <= beta {
        return Ok(Array2::zeros((n, n)));
    }
    let scaled: Vec<f64> = svd.s.iter().map(|s| s / beta).collect();
    let projected = project_l1_ball(&scaled, 1.0)?;
    let mut out = Array2::zeros((n, n));
    for j in 0..n {
        let shrunk = svd.s[j] - beta * projected[j];
        if shrunk == 0.0 {
            continue;
        }
        for r in 0..n {
            for c in 0..n {
                out[(r, c)] += shrunk * svd.u[(r, j)] * svd.v[(c, j)];
            }
        }
    }
    Ok(out)
}

/// Nearest orthogonal matrix (Procrustes projection) `R·Pᵀ` from the SVD.
///
/// Errors on rank-deficient input, where the projection is not unique.
pub fn nearest_orthogonal(a: &Array2<f64>) -> Result<Array2<f64>> {
    let svd = jacobi_svd(a)?;
    let min_sv = svd.s.last().copied().unwrap_or(0.0);
    if min_sv <= 1e-12 {
        return Err(CerfError::RankDeficient(min_sv));
    }
    Ok(svd.u.dot(&svd.v.t()))
}

/// Spectral norm (largest singular value) via deterministic power iteration
/// on `AᵀA`, started from the all-ones direction.
pub fn spectral_norm(a: &Array2<f64>) -> f64 {
    let (n, m) = a.dim();
    if n == 0 || m == 0 {
        return 0.0;
    }
    let mut v = Array1::from_elem(m, 1.0 / (m as f64).sqrt());
    let mut sigma = 0.0_f64;
    for _ in 0..300 {
        let av = a.dot(&v);
        let atav = a.t().dot(&av);
        let norm = atav.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        let new_sigma = av.iter().map(|x| x * x).sum::<f64>().sqrt();
        v = atav / norm;
        if (new_sigma - sigma).abs() <= 1e-13 * new_sigma.max(1.0) {
            sigma = new_sigma;
            break;
        }
        sigma = new_sigma;
    }
    sigma
}

/// Cholesky factorization of a symmetric positive-definite matrix.
///
/// Returns the lower factor L with `A = L·Lᵀ`.
pub fn cholesky(a: &Array2<f64>) -> Result<Array2<f64>> {
    let (n, m) = a.dim();
    if n != m {
        return Err(CerfError::DimensionMismatch(format!(
            "cholesky expects a square matrix, got {n}x{m}"
        )));
    }
    // Relative pivot floor: exact zero tests let rounding noise from a
    // numerically singular matrix slip through as a tiny positive pivot.
    let diag_max = (0..n).map(|i| a[(i, i)].abs()).fold(0.0f64, f64::max);
    let pivot_floor = diag_max * n as f64 * f64::EPSILON * 16.0;
    let mut l = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[(i, j)];
            for k in 0..j {
                sum -= l[(i, k)] * l[(j, k)];
            }
            if i == j {
                if sum <= pivot_floor || !sum.is_finite() {
                    return Err(CerfError::SingularSystem);
                }
                l[(i, j)] = sum.sqrt();
            } else {
                l[(i, j)] = sum / l[(j, j)];
            }
        }
    }
    Ok(l)
}

/// Solve `A·X = B` for symmetric positive-definite `A` given its Cholesky
/// factor L.
pub fn cholesky_solve(l: &Array2<f64>, b: &Array2<f64>) -> Result<Array2<f64>> {
    let n = l.nrows();
    if b.nrows() != n {
        return Err(CerfError::DimensionMismatch(format!(
            "cholesky_solve: factor is {n}x{n} but rhs has {} rows",
            b.nrows()
        )));
    }
    let cols = b.ncols();
    let mut x = b.clone();
    for c in 0..cols {
        // forward: L y = b
        for i in 0..n {
            let mut sum = x[(i, c)];
            for k in 0..i {
                sum -= l[(i, k)] * x[(k, c)];
            }
            x[(i, c)] = sum / l[(i, i)];
        }
        // backward: Lᵀ x = y
        for i in (0..n).rev() {
            let mut sum = x[(i, c)];
            for k in i + 1..n {
                sum -= l[(k, i)] * x[(k, c)];
            }
            x[(i, c)] = sum / l[(i, i)];
        }
    }
    Ok(x)
}
