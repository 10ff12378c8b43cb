use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CerfError, Result};

/// One draw from the Beta-Bernoulli process: per-column activation
/// probabilities π_k ~ Beta(γ/C, 1) and a binary matrix Z with
/// Z_{rk} ~ Bernoulli(π_k).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BbpDraw {
    pub z: Array2<u8>,
    pub pi: Vec<f64>,
    pub gamma: f64,
}

impl BbpDraw {
    /// Column activation counts m_k = Σ_r Z_{rk}.
    pub fn column_counts(&self) -> Vec<usize> {
        (0..self.z.ncols())
            .map(|k| self.z.column(k).iter().filter(|&&b| b == 1).count())
            .collect()
    }
}

/// Sample a Beta-Bernoulli draw. Beta(γ/C, 1) is sampled by inverse CDF,
/// π = u^{C/γ}. Deterministic in `seed`.
pub fn sample_bbp(rows: usize, cols: usize, gamma: f64, seed: u64) -> Result<BbpDraw> {
    if !(gamma > 0.0) {
        return Err(CerfError::InvalidParameter(format!(
            "BBP mass must be positive, got {gamma}"
        )));
    }
    if rows == 0 || cols == 0 {
        return Err(CerfError::InvalidParameter(
            "BBP shape must be at least 1x1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pi = Vec::with_capacity(cols);
    let mut z = Array2::zeros((rows, cols));
    for k in 0..cols {
        let p = sample_beta_a1(cols as f64 / gamma, &mut rng);
        pi.push(p);
        for r in 0..rows {
            z[(r, k)] = u8::from(rng.gen::<f64>() < p);
        }
    }
    Ok(BbpDraw { z, pi, gamma })
}

/// Inverse-CDF sample of Beta(a, 1) given the exponent 1/a, clamped into (0, 1).
pub(crate) fn sample_beta_a1<R: Rng>(inv_a: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
    u.powf(inv_a).clamp(f64::MIN_POSITIVE, 1.0 - 1e-16)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta_mean_at_gamma_equal_cols() {
        // γ = C gives Beta(1,1): E[π] = ½.
        let mut total = 0.0;
        let mut n = 0usize;
        for seed in 0..50 {
            let draw = sample_bbp(2, 100, 100.0, seed).unwrap();
            total += draw.pi.iter().sum::<f64>();
            n += draw.pi.len();
        }
        let mean = total / n as f64;
        assert!((mean - 0.5).abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn expected_row_activation() {
        // E[Σ_k Z_{rk}] = C·(γ/C)/(γ/C + 1)
        let cols = 64usize;
        let gamma = 16.0;
        let expected = cols as f64 * (gamma / cols as f64) / (gamma / cols as f64 + 1.0);
        let mut total = 0.0;
        let mut rows = 0usize;
        for seed in 0..200 {
            let draw = sample_bbp(8, cols, gamma, seed).unwrap();
            total += draw.z.iter().map(|&b| b as f64).sum::<f64>();
            rows += 8;
        }
        let mean = total / rows as f64;
        assert!(
            (mean - expected).abs() < 0.5,
            "mean {mean}, expected {expected}"
        );
    }

    #[test]
    fn column_activation_concentrates_on_pi() {
        let rows = 4000usize;
        let draw = sample_bbp(rows, 24, 12.0, 3).unwrap();
        let counts = draw.column_counts();
        for (k, &m) in counts.iter().enumerate() {
            let p = draw.pi[k];
            let rate = m as f64 / rows as f64;
            let band = 4.0 * (p * (1.0 - p) / rows as f64).sqrt() + 1e-3;
            assert!(
                (rate - p).abs() <= band,
                "column {k}: rate {rate}, pi {p}, band {band}"
            );
        }
    }

    #[test]
    fn deterministic_and_validated() {
        let a = sample_bbp(5, 7, 2.0, 9).unwrap();
        let b = sample_bbp(5, 7, 2.0, 9).unwrap();
        assert_eq!(a.z, b.z);
        assert_eq!(a.pi, b.pi);
        assert!(sample_bbp(5, 7, 0.0, 0).is_err());
        assert!(sample_bbp(0, 7, 1.0, 0).is_err());
        assert!(a.pi.iter().all(|&p| p > 0.0 && p < 1.0));
    }
}
