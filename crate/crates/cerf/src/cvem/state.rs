use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{CerfError, Result};
use crate::numerics::digamma;

/// Mean-field variational state: Bernoulli means ν (N×K), Beta parameters τ
/// (K pairs), and the prior mass γ.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VariationalState {
    pub nu: Array2<f64>,
    pub tau: Vec<(f64, f64)>,
    pub gamma: f64,
}

impl VariationalState {
    /// Symmetric initialization: ν ≡ d_z, τ at the prior (γ/K, 1).
    pub fn init(n: usize, k: usize, gamma: f64, density: f64) -> Self {
        VariationalState {
            nu: Array2::from_elem((n, k), density),
            tau: vec![(gamma / k as f64, 1.0); k],
            gamma,
        }
    }

    pub fn num_samples(&self) -> usize {
        self.nu.nrows()
    }

    pub fn num_features(&self) -> usize {
        self.nu.ncols()
    }

    /// Posterior activation means E[π_k] = τ_{k1}/(τ_{k1}+τ_{k2}).
    pub fn activation_means(&self) -> Array1<f64> {
        Array1::from_iter(self.tau.iter().map(|&(a, b)| a / (a + b)))
    }
}

/// (E[ln π], E[ln(1−π)]) under Beta(τ₁, τ₂).
pub fn expected_log_pi(tau: (f64, f64)) -> Result<(f64, f64)> {
    let (a, b) = tau;
    if !(a > 0.0 && b > 0.0) {
        return Err(CerfError::Domain(format!(
            "Beta parameters must be positive, got ({a}, {b})"
        )));
    }
    let psi_sum = digamma(a + b)?;
    Ok((digamma(a)? - psi_sum, digamma(b)? - psi_sum))
}

/// Rank features by E[π_k] and keep the ⌈d_z·K⌉ best. Ties break by larger
/// Σ_n ν_{nk}, then lower index.
pub fn extract_selector(state: &VariationalState, d_z: f64) -> Result<Vec<bool>> {
    if !(d_z > 0.0 && d_z <= 1.0) {
        return Err(CerfError::InvalidParameter(format!(
            "selector density must be in (0, 1], got {d_z}"
        )));
    }
    let k = state.num_features();
    let means = state.activation_means();
    let nu_sums: Vec<f64> = (0..k).map(|j| state.nu.column(j).sum()).collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| {
        means[j]
            .partial_cmp(&means[i])
            .unwrap()
            .then(nu_sums[j].partial_cmp(&nu_sums[i]).unwrap())
            .then(i.cmp(&j))
    });
    let keep = ((d_z * k as f64).ceil() as usize).clamp(1, k);
    let mut z = vec![false; k];
    for &idx in order.iter().take(keep) {
        z[idx] = true;
    }
    Ok(z)
}
