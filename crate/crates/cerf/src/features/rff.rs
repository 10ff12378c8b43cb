use ndarray::{Array1, Array2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CerfError, Result};
use crate::features::kernel::{sample_gaussian, KernelSpec};

/// Dense random Fourier feature embedding: frequency matrix Ω (D×K, one
/// frequency per column), uniform phases in [0, 2π), and the unbiased scale
/// √(2/K) so that φ(x)ᵀφ(y) estimates the kernel.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DenseRff {
    pub omega: Array2<f64>,
    pub phases: Array1<f64>,
    pub scale: f64,
}

impl DenseRff {
    pub fn input_dim(&self) -> usize {
        self.omega.nrows()
    }

    pub fn num_features(&self) -> usize {
        self.omega.ncols()
    }

    pub(crate) fn project_row(&self, x: &[f64], out: &mut [f64], macs: &mut u64) {
        let d = self.input_dim();
        for (k, slot) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for dd in 0..d {
                acc += self.omega[(dd, k)] * x[dd];
            }
            *macs += d as u64;
            *slot = self.scale * (acc + self.phases[k]).cos();
        }
    }
}

/// Sample a dense RFF embedding from the kernel's spectral density.
/// Deterministic in `seed`.
pub fn sample_rff(spec: &KernelSpec, d: usize, k: usize, seed: u64) -> Result<DenseRff> {
    spec.validate()?;
    if d == 0 || k == 0 {
        return Err(CerfError::InvalidParameter(
            "rff dimensions must be at least 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut omega = Array2::zeros((d, k));
    for col in 0..k {
        let w = spec.sample_frequency(d, &mut rng);
        for row in 0..d {
            omega[(row, col)] = w[row];
        }
    }
    let phases = sample_phases(k, &mut rng);
    Ok(DenseRff {
        omega,
        phases,
        scale: (2.0 / k as f64).sqrt(),
    })
}

/// Sample a learner dictionary from a mixture of Gaussians whose centers are
/// drawn from the kernel's spectral density. `spread` scales the per-center
/// standard deviation in units of κ⁻¹.
pub fn sample_learner_dictionary(
    spec: &KernelSpec,
    d: usize,
    k_dict: usize,
    m_components: usize,
    spread: f64,
    seed: u64,
) -> Result<DenseRff> {
    spec.validate()?;
    if d == 0 || k_dict == 0 {
        return Err(CerfError::InvalidParameter(
            "dictionary dimensions must be at least 1".into(),
        ));
    }
    if m_components == 0 {
        return Err(CerfError::InvalidParameter(
            "mixture needs at least one component".into(),
        ));
    }
    if !(spread > 0.0) {
        return Err(CerfError::InvalidParameter(
            "mixture spread must be positive".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers: Vec<Vec<f64>> = (0..m_components)
        .map(|_| spec.sample_frequency(d, &mut rng))
        .collect();
    let sigma = spread / spec.bandwidth();
    let mut omega = Array2::zeros((d, k_dict));
    for col in 0..k_dict {
        let j = rng.gen_range(0..m_components);
        for row in 0..d {
            omega[(row, col)] = centers[j][row] + sigma * sample_gaussian(&mut rng);
        }
    }
    let phases = sample_phases(k_dict, &mut rng);
    Ok(DenseRff {
        omega,
        phases,
        scale: (2.0 / k_dict as f64).sqrt(),
    })
}

pub(crate) fn sample_phases<R: Rng>(k: usize, rng: &mut R) -> Array1<f64> {
    Array1::from_iter((0..k).map(|_| rng.gen::<f64>() * 2.0 * std::f64::consts::PI))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::Embedding;
    use ndarray::Axis;

    fn random_data(n: usize, d: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((n, d), |_| sample_gaussian(&mut rng))
    }

    #[test]
    fn seeded_determinism() {
        let spec = KernelSpec::Gaussian { kappa: 1.3 };
        let a = sample_rff(&spec, 5, 16, 42).unwrap();
        let b = sample_rff(&spec, 5, 16, 42).unwrap();
        assert_eq!(a.omega, b.omega);
        assert_eq!(a.phases, b.phases);
        let c = sample_rff(&spec, 5, 16, 43).unwrap();
        assert_ne!(a.omega, c.omega);
    }

    #[test]
    fn gaussian_rff_approximates_kernel() {
        let spec = KernelSpec::Gaussian { kappa: 1.0 };
        let emb = Embedding::Dense(sample_rff(&spec, 4, 4096, 7).unwrap());
        let x = random_data(40, 4, 1);
        let f = emb.embed(&x.view()).unwrap();
        let mut total = 0.0;
        let mut count = 0;
        for i in 0..20 {
            for j in 20..40 {
                let approx = f.row(i).dot(&f.row(j));
                let exact = spec
                    .exact(x.row(i).as_slice().unwrap(), x.row(j).as_slice().unwrap())
                    .unwrap();
                total += (approx - exact).abs();
                count += 1;
            }
        }
        assert!(total / count as f64 <= 0.03);
    }

    #[test]
    fn feature_norm_is_near_one() {
        let spec = KernelSpec::Cauchy { kappa: 1.5 };
        let emb = Embedding::Dense(sample_rff(&spec, 6, 4096, 9).unwrap());
        let x = random_data(10, 6, 2);
        let f = emb.embed(&x.view()).unwrap();
        for row in f.axis_iter(Axis(0)) {
            let sq = row.dot(&row);
            assert!((sq - 1.0).abs() <= 3.0 / (4096.0_f64).sqrt());
        }
    }

    #[test]
    fn dictionary_determinism_and_covariance() {
        let spec = KernelSpec::Gaussian { kappa: 1.0 };
        let a = sample_learner_dictionary(&spec, 3, 20000, 64, 0.5, 5).unwrap();
        let b = sample_learner_dictionary(&spec, 3, 20000, 64, 0.5, 5).unwrap();
        assert_eq!(a.omega, b.omega);

        // Law of total variance: per-coordinate variance ≈ κ⁻²(1 + spread²),
        // averaged over many seeds to tame the mixture-center noise.
        let mut var = 0.0;
        let mut n = 0usize;
        for seed in 0..20 {
            let dict =
                sample_learner_dictionary(&spec, 3, 4000, 256, 0.5, seed).unwrap();
            var += dict.omega.iter().map(|w| w * w).sum::<f64>();
            n += dict.omega.len();
        }
        var /= n as f64;
        let expected = 1.0 + 0.5 * 0.5;
        assert!(
            (var - expected).abs() < 0.1,
            "empirical {var}, expected {expected}"
        );
    }

    #[test]
    fn rejects_degenerate_parameters() {
        let spec = KernelSpec::Gaussian { kappa: 1.0 };
        assert!(sample_rff(&spec, 0, 4, 0).is_err());
        assert!(sample_learner_dictionary(&spec, 3, 4, 0, 0.1, 0).is_err());
        assert!(sample_learner_dictionary(&spec, 3, 4, 2, 0.0, 0).is_err());
    }
}
