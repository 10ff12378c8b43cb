use serde::{Deserialize, Serialize};

use crate::error::{CerfError, Result};

/// ADMM settings for the M-step.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AdmmConfig {
    /// Penalty μ of the augmented Lagrangian.
    pub mu: f64,
    /// Initial spectral-norm regularization weight α.
    pub alpha0: f64,
    pub max_iters: usize,
    /// Stop when ‖W − V‖_F/√K falls below this.
    pub primal_tol: f64,
}

impl Default for AdmmConfig {
    fn default() -> Self {
        AdmmConfig {
            mu: 1.0,
            alpha0: 1.0,
            max_iters: 200,
            primal_tol: 1e-5,
        }
    }
}

/// Training configuration for the constrained variational EM driver.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Feature scale c connecting teacher and learner embeddings.
    /// `None` defaults to √(K/⌈d_z·K⌉), which preserves inner-product scale
    /// after masking by the selector.
    pub c: Option<f64>,
    /// Likelihood variance σ².
    pub sigma_sq: f64,
    /// Beta-Bernoulli prior mass γ.
    pub gamma: f64,
    /// Selector density d_z ∈ (0, 1].
    pub target_density: f64,
    pub max_stages: usize,
    /// E-step coordinate sweeps per stage.
    pub e_sweeps: usize,
    pub admm: AdmmConfig,
    /// E-step-only stages after the final orthogonalization.
    pub post_stages: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            c: None,
            sigma_sq: 1.0,
            gamma: 1.0,
            target_density: 0.4,
            max_stages: 20,
            e_sweeps: 3,
            admm: AdmmConfig::default(),
            post_stages: 3,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_sq > 0.0) {
            return Err(CerfError::InvalidParameter("sigma_sq must be positive".into()));
        }
        if !(self.gamma > 0.0) {
            return Err(CerfError::InvalidParameter("gamma must be positive".into()));
        }
        if !(self.target_density > 0.0 && self.target_density <= 1.0) {
            return Err(CerfError::InvalidParameter(
                "target_density must be in (0, 1]".into(),
            ));
        }
        if let Some(c) = self.c {
            if !(c > 0.0) {
                return Err(CerfError::InvalidParameter("c must be positive".into()));
            }
        }
        if !(self.admm.mu > 0.0) {
            return Err(CerfError::InvalidParameter("admm mu must be positive".into()));
        }
        if self.admm.alpha0 < 0.0 {
            return Err(CerfError::InvalidParameter(
                "admm alpha0 must be nonnegative".into(),
            ));
        }
        Ok(())
    }

    /// Selected feature count ⌈d_z·K⌉.
    pub fn selected_count(&self, k: usize) -> usize {
        ((self.target_density * k as f64).ceil() as usize).clamp(1, k)
    }

    /// Effective scale c.
    pub fn scale(&self, k: usize) -> f64 {
        self.c
            .unwrap_or_else(|| (k as f64 / self.selected_count(k) as f64).sqrt())
    }
}
