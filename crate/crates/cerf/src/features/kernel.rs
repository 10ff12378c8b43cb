use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CerfError, Result};

/// First factor of the product-distribution kernel family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProductFactor {
    Gaussian,
    Cauchy,
}

/// Shift-invariant kernel family with bandwidth.
///
/// The Gaussian kernel is `exp(−‖x−y‖²/(2κ²))` with spectral density
/// `Normal(0, κ⁻²I)`; the Cauchy kernel is the per-coordinate product
/// `Π_d 1/(1 + (x_d−y_d)²/κ²)` with Laplace(κ⁻¹) spectral density. The
/// product family samples frequencies as the element-wise product of a
/// first-factor draw and a Gaussian draw and has no closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum KernelSpec {
    Gaussian { kappa: f64 },
    Cauchy { kappa: f64 },
    Product { first: ProductFactor, kappa1: f64, kappa2: f64 },
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            KernelSpec::Gaussian { kappa } | KernelSpec::Cauchy { kappa } => kappa > 0.0,
            KernelSpec::Product { kappa1, kappa2, .. } => kappa1 > 0.0 && kappa2 > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(CerfError::InvalidParameter(
                "kernel bandwidth must be positive".into(),
            ))
        }
    }

    /// Primary bandwidth κ (the first factor's, for the product family).
    pub fn bandwidth(&self) -> f64 {
        match *self {
            KernelSpec::Gaussian { kappa } | KernelSpec::Cauchy { kappa } => kappa,
            KernelSpec::Product { kappa1, .. } => kappa1,
        }
    }

    /// Exact kernel value. The product family has no closed form; callers
    /// fall back to a high-dimensional RFF Monte-Carlo reference.
    pub fn exact(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != y.len() {
            return Err(CerfError::DimensionMismatch(format!(
                "kernel arguments have lengths {} and {}",
                x.len(),
                y.len()
            )));
        }
        match *self {
            KernelSpec::Gaussian { kappa } => {
                let sq: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                Ok((-sq / (2.0 * kappa * kappa)).exp())
            }
            KernelSpec::Cauchy { kappa } => {
                let mut prod = 1.0;
                for (a, b) in x.iter().zip(y) {
                    let d = a - b;
                    prod *= 1.0 / (1.0 + d * d / (kappa * kappa));
                }
                Ok(prod)
            }
            KernelSpec::Product { .. } => Err(CerfError::NoClosedForm(
                "product-distribution kernel; use a high-K RFF reference".into(),
            )),
        }
    }

    /// One frequency vector drawn from the kernel's spectral density.
    pub(crate) fn sample_frequency<R: Rng>(&self, dim: usize, rng: &mut R) -> Vec<f64> {
        match *self {
            KernelSpec::Gaussian { kappa } => {
                (0..dim).map(|_| sample_gaussian(rng) / kappa).collect()
            }
            KernelSpec::Cauchy { kappa } => {
                (0..dim).map(|_| sample_laplace(rng) / kappa).collect()
            }
            KernelSpec::Product { first, kappa1, kappa2 } => (0..dim)
                .map(|_| {
                    let w1 = match first {
                        ProductFactor::Gaussian => sample_gaussian(rng) / kappa1,
                        ProductFactor::Cauchy => sample_laplace(rng) / kappa1,
                    };
                    let w2 = sample_gaussian(rng) / kappa2;
                    w1 * w2
                })
                .collect(),
        }
    }
}

pub(crate) fn sample_gaussian<R: Rng>(rng: &mut R) -> f64 {
    rng.sample::<f64, _>(rand_distr::StandardNormal)
}

/// Standard Laplace draw (scale 1) via inverse CDF.
pub(crate) fn sample_laplace<R: Rng>(rng: &mut R) -> f64 {
    let u: f64 = rng.gen::<f64>() - 0.5;
    -u.signum() * (1.0 - 2.0 * u.abs()).max(f64::MIN_POSITIVE).ln()
}
