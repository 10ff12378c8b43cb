//! Deterministic one-sided Jacobi SVD for small square matrices.

use ndarray::Array2;

use crate::error::{CerfError, Result};

/// Full singular value decomposition `A = U · diag(s) · Vᵀ`.
///
/// Singular values are sorted descending. Signs are fixed by forcing the
/// largest-magnitude entry of each left singular vector nonnegative, so the
/// factors are identical across runs and platforms.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Array2<f64>,
    pub s: Vec<f64>,
    pub v: Array2<f64>,
}

const MAX_SWEEPS: usize = 60;
const ROTATION_TOL: f64 = 1e-15;

/// One-sided Jacobi SVD of a square matrix.
///
/// Rotations are applied to column pairs in a fixed cyclic order, so the
/// result is a pure function of the input bits.
pub fn jacobi_svd(a: &Array2<f64>) -> Result<Svd> {
    let (rows, cols) = a.dim();
    if rows != cols {
        return Err(CerfError::DimensionMismatch(format!(
            "jacobi_svd expects a square matrix, got {rows}x{cols}"
        )));
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(CerfError::Domain("non-finite entry in SVD input".into()));
    }
    let n = rows;

    // Work on columns stored contiguously.
    let mut w: Vec<Vec<f64>> = (0..n).map(|j| a.column(j).to_vec()).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let (wp, wq) = pair_mut(&mut w, p, q);
                let app: f64 = wp.iter().map(|x| x * x).sum();
                let aqq: f64 = wq.iter().map(|x| x * x).sum();
                let apq: f64 = wp.iter().zip(wq.iter()).map(|(x, y)| x * y).sum();
                if apq.abs() <= ROTATION_TOL * (app * aqq).sqrt() || apq == 0.0 {
                    continue;
                }
                rotated = true;
                let tau = (aqq - app) / (2.0 * apq);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(wp, wq, c, s);
                let (vp, vq) = pair_mut(&mut v, p, q);
                rotate(vp, vq, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let mut sigma: Vec<f64> = w
        .iter()
        .map(|col| col.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();

    // Descending order; stable on ties.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sigma[j].partial_cmp(&sigma[i]).unwrap().then(i.cmp(&j)));

    let mut u_mat = Array2::zeros((n, n));
    let mut v_mat = Array2::zeros((n, n));
    let mut s_sorted = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        let sv = sigma[src];
        s_sorted.push(sv);
        let mut u_col: Vec<f64> = if sv > 0.0 {
            w[src].iter().map(|x| x / sv).collect()
        } else {
            vec![0.0; n]
        };
        let mut v_col = v[src].clone();
        // Sign convention: largest-magnitude entry of the left vector nonnegative.
        let mut best = 0usize;
        for (i, x) in u_col.iter().enumerate() {
            if x.abs() > u_col[best].abs() {
                best = i;
            }
        }
        if u_col[best] < 0.0 {
            for x in u_col.iter_mut() {
                *x = -*x;
            }
            for x in v_col.iter_mut() {
                *x = -*x;
            }
        }
        for i in 0..n {
            u_mat[(i, dst)] = u_col[i];
            v_mat[(i, dst)] = v_col[i];
        }
    }
    sigma.clear();

    Ok(Svd {
        u: u_mat,
        s: s_sorted,
        v: v_mat,
    })
}

fn pair_mut(cols: &mut [Vec<f64>], p: usize, q: usize) -> (&mut Vec<f64>, &mut Vec<f64>) {
    debug_assert!(p < q);
    let (head, tail) = cols.split_at_mut(q);
    (&mut head[p], &mut tail[0])
}

#[inline]
fn rotate(x: &mut [f64], y: &mut [f64], c: f64, s: f64) {
    for (a, b) in x.iter_mut().zip(y.iter_mut()) {
        let xa = *a;
        let yb = *b;
        *a = c * xa - s * yb;
        *b = s * xa + c * yb;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr2;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn reconstruct(svd: &Svd) -> Array2<f64> {
        let n = svd.s.len();
        let mut sd = Array2::zeros((n, n));
        for i in 0..n {
            sd[(i, i)] = svd.s[i];
        }
        svd.u.dot(&sd).dot(&svd.v.t())
    }

    #[test]
    fn factors_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [1usize, 2, 3, 5, 8, 17] {
            let a = Array2::from_shape_fn((n, n), |_| rng.gen::<f64>() * 2.0 - 1.0);
            let svd = jacobi_svd(&a).unwrap();
            let err = (&reconstruct(&svd) - &a)
                .iter()
                .map(|x| x * x)
                .sum::<f64>()
                .sqrt();
            assert!(err < 1e-10, "n={n} reconstruction error {err}");
            // U, V orthogonal
            let utu = svd.u.t().dot(&svd.u);
            let vtv = svd.v.t().dot(&svd.v);
            for i in 0..n {
                for j in 0..n {
                    let id = if i == j { 1.0 } else { 0.0 };
                    assert!((utu[(i, j)] - id).abs() < 1e-10);
                    assert!((vtv[(i, j)] - id).abs() < 1e-10);
                }
            }
            // descending
            for i in 1..n {
                assert!(svd.s[i - 1] >= svd.s[i] - 1e-14);
            }
        }
    }

    #[test]
    fn deterministic_factors() {
        let a = arr2(&[[0.3, -1.2, 0.5], [2.0, 0.1, -0.7], [0.0, 0.9, 1.1]]);
        let s1 = jacobi_svd(&a).unwrap();
        let s2 = jacobi_svd(&a).unwrap();
        assert_eq!(s1.u, s2.u);
        assert_eq!(s1.s, s2.s);
        assert_eq!(s1.v, s2.v);
    }

    #[test]
    fn rejects_non_square() {
        let a = Array2::<f64>::zeros((2, 3));
        assert!(jacobi_svd(&a).is_err());
    }

    #[test]
    fn handles_rank_deficient() {
        let a = arr2(&[[1.0, 2.0], [2.0, 4.0]]);
        let svd = jacobi_svd(&a).unwrap();
        assert!(svd.s[1].abs() < 1e-12);
        let err = (&reconstruct(&svd) - &a)
            .iter()
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt();
        assert!(err < 1e-10);
    }
}
