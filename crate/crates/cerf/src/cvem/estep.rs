use ndarray::{Array1, Array2, Axis};
use rayon::prelude::*;

use crate::cvem::config::TrainConfig;
use crate::cvem::state::{expected_log_pi, VariationalState};
use crate::error::{CerfError, Result};
use crate::numerics::{digamma, ln_gamma};

fn check_shapes(
    phi: &Array2<f64>,
    psi: &Array2<f64>,
    w: &Array2<f64>,
    state: &VariationalState,
) -> Result<()> {
    let (n, k) = phi.dim();
    if psi.dim() != (n, k) {
        return Err(CerfError::DimensionMismatch(format!(
            "teacher is {:?} but learner is {:?}",
            phi.dim(),
            psi.dim()
        )));
    }
    if w.dim() != (k, k) {
        return Err(CerfError::DimensionMismatch(format!(
            "W must be {k}x{k}, got {:?}",
            w.dim()
        )));
    }
    if state.nu.dim() != (n, k) || state.tau.len() != k {
        return Err(CerfError::DimensionMismatch(format!(
            "variational state shaped {:?}/{} does not match {n}x{k}",
            state.nu.dim(),
            state.tau.len()
        )));
    }
    Ok(())
}

#[inline]
fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// One full mean-field coordinate sweep.
///
/// For each sample row, the reconstruction residual
/// `r_n = φ_n − cW(ν_n ⊙ ψ_n)` is maintained by rank-1 updates while the
/// coordinates k are visited in fixed ascending order, so a sweep costs
/// O(NK²). Rows are independent given W and the sweep-start τ, so the row
/// loop parallelizes without changing results. Afterwards
/// `τ_{k1} = Σ_n ν_{nk} + γ/K`, `τ_{k2} = Σ_n (1−ν_{nk}) + 1`.
pub fn estep_sweep(
    phi: &Array2<f64>,
    psi: &Array2<f64>,
    w: &Array2<f64>,
    state: &mut VariationalState,
    cfg: &TrainConfig,
) -> Result<()> {
    check_shapes(phi, psi, w, state)?;
    let (n, k) = phi.dim();
    let c = cfg.scale(k);
    let inv_two_sigma_sq = 1.0 / (2.0 * cfg.sigma_sq);

    let mut e_ln_pi = Vec::with_capacity(k);
    let mut e_ln_1m_pi = Vec::with_capacity(k);
    for &tau in &state.tau {
        let (lp, lq) = expected_log_pi(tau)?;
        e_ln_pi.push(lp);
        e_ln_1m_pi.push(lq);
    }
    let wk_sqnorm: Vec<f64> = (0..k).map(|j| w.column(j).dot(&w.column(j))).collect();

    let nu = &mut state.nu;
    nu.axis_iter_mut(Axis(0))
        .into_par_iter()
        .enumerate()
        .for_each(|(row, mut nu_row)| {
            // r = φ_n − cW(ν_n ⊙ ψ_n)
            let masked = Array1::from_iter(
                (0..k).map(|j| nu_row[j] * psi[(row, j)]),
            );
            let mut r = phi.row(row).to_owned() - c * w.dot(&masked);
            for j in 0..k {
                let psi_nk = psi[(row, j)];
                let nu_old = nu_row[j];
                let wk = w.column(j);
                // W_kᵀξ with ξ = r + cψν_old·W_k, without forming ξ.
                let dot = wk.dot(&r) + c * psi_nk * nu_old * wk_sqnorm[j];
                let delta =
                    c * c * psi_nk * psi_nk * wk_sqnorm[j] - 2.0 * c * psi_nk * dot;
                let logit = e_ln_pi[j] - delta * inv_two_sigma_sq - e_ln_1m_pi[j];
                let nu_new = sigmoid(logit);
                let shift = c * psi_nk * (nu_old - nu_new);
                if shift != 0.0 {
                    r.scaled_add(shift, &wk);
                }
                nu_row[j] = nu_new;
            }
        });

    // τ₂ is written as (N + γ/K + 1) − τ₁ rather than N − Σν + 1 so the
    // budget identity τ₁ + τ₂ = N + γ/K + 1 holds exactly in floating point.
    let budget = n as f64 + state.gamma / k as f64 + 1.0;
    for j in 0..k {
        let tau1 = nu.column(j).sum() + state.gamma / k as f64;
        state.tau[j] = (tau1, budget - tau1);
    }
    Ok(())
}

/// Variational lower bound ℒ(q, W) up to constants independent of (q, W).
pub fn elbo(
    phi: &Array2<f64>,
    psi: &Array2<f64>,
    state: &VariationalState,
    w: &Array2<f64>,
    cfg: &TrainConfig,
) -> Result<f64> {
    check_shapes(phi, psi, w, state)?;
    let (n, k) = phi.dim();
    let c = cfg.scale(k);

    let mut total = 0.0;

    // Bernoulli entropies and E[log p(Z|π)].
    for j in 0..k {
        let (lp, lq) = expected_log_pi(state.tau[j])?;
        for i in 0..n {
            let v = state.nu[(i, j)];
            if v > 0.0 && v < 1.0 {
                total += -v * v.ln() - (1.0 - v) * (1.0 - v).ln();
            }
            total += v * lp + (1.0 - v) * lq;
        }
        // Beta entropy of q(π_k).
        let (a, b) = state.tau[j];
        let ln_beta = ln_gamma(a)? + ln_gamma(b)? - ln_gamma(a + b)?;
        total += ln_beta - (a - 1.0) * digamma(a)? - (b - 1.0) * digamma(b)?
            + (a + b - 2.0) * digamma(a + b)?;
        // E[log p0(π_k)] under the Beta(γ/K, 1) prior.
        let prior_a = state.gamma / k as f64;
        total += prior_a.ln() + (prior_a - 1.0) * lp;
    }

    // Gaussian expectation: −(1/2σ²)Σ_n(‖φ_n − cW(ν_n⊙ψ_n)‖²
    //   + c²Σ_k ν(1−ν)ψ²‖W_k‖²)
    let wk_sqnorm: Vec<f64> = (0..k).map(|j| w.column(j).dot(&w.column(j))).collect();
    let mut quad = 0.0;
    for i in 0..n {
        let masked = Array1::from_iter((0..k).map(|j| state.nu[(i, j)] * psi[(i, j)]));
        let r = phi.row(i).to_owned() - c * w.dot(&masked);
        quad += r.dot(&r);
        for j in 0..k {
            let v = state.nu[(i, j)];
            let p = psi[(i, j)];
            quad += c * c * v * (1.0 - v) * p * p * wk_sqnorm[j];
        }
    }
    total -= quad / (2.0 * cfg.sigma_sq);
    Ok(total)
}
