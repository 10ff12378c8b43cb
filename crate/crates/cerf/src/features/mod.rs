//! Kernels, samplers, and the computation-efficient embeddings, together
//! with the multiply-accumulate (MAC) cost model used by every comparison.

use ndarray::{Array2, ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CerfError, Result};

mod bbp;
mod blocked;
mod kernel;
mod masked;
mod rff;

pub use bbp::{sample_bbp, BbpDraw};
pub use blocked::{build_blocked_cerf, BlockedCerf, FastfoodBlock};
pub use kernel::{KernelSpec, ProductFactor};
pub use masked::{build_masked_cerf, MaskedCerf};
pub use rff::{sample_learner_dictionary, sample_rff, DenseRff};

/// N×K feature matrix: one sample per row, one feature per column.
pub type FeatureMatrix = Array2<f64>;

/// A deployable feature map.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Embedding {
    Dense(DenseRff),
    Masked(MaskedCerf),
    Blocked(BlockedCerf),
}

impl Embedding {
    pub fn input_dim(&self) -> usize {
        match self {
            Embedding::Dense(e) => e.input_dim(),
            Embedding::Masked(e) => e.input_dim(),
            Embedding::Blocked(e) => e.input_dim,
        }
    }

    pub fn num_features(&self) -> usize {
        match self {
            Embedding::Dense(e) => e.num_features(),
            Embedding::Masked(e) => e.num_features(),
            Embedding::Blocked(e) => e.num_features(),
        }
    }

    /// Embed a batch of samples (rows). Row-parallel and thread-count
    /// invariant: each row depends only on its own input.
    pub fn embed(&self, x: &ArrayView2<f64>) -> Result<FeatureMatrix> {
        Ok(self.embed_counted(x)?.0)
    }

    /// Embed and report the instrumented multiply-accumulate count for one
    /// sample, which matches [`Embedding::mac_cost`] exactly.
    pub fn embed_counted(&self, x: &ArrayView2<f64>) -> Result<(FeatureMatrix, u64)> {
        if x.ncols() != self.input_dim() {
            return Err(CerfError::DimensionMismatch(format!(
                "embedding expects dimension {}, data has {}",
                self.input_dim(),
                x.ncols()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(CerfError::Domain("non-finite entry in data".into()));
        }
        let k = self.num_features();
        let n = x.nrows();
        let mut out = Array2::zeros((n, k));
        let macs = out
            .axis_iter_mut(Axis(0))
            .into_par_iter()
            .zip(x.axis_iter(Axis(0)).into_par_iter())
            .map(|(mut row_out, row_in)| {
                let xv = row_in.to_vec();
                let slot = row_out.as_slice_mut().expect("row is contiguous");
                let mut macs = 0u64;
                match self {
                    Embedding::Dense(e) => e.project_row(&xv, slot, &mut macs),
                    Embedding::Masked(e) => e.project_row(&xv, slot, &mut macs),
                    Embedding::Blocked(e) => e.project_row(&xv, slot, &mut macs),
                }
                macs
            })
            .max()
            .unwrap_or(0);
        Ok((out, macs))
    }

    /// MAC cost of evaluating all K features for one sample.
    ///
    /// dense RFF: K·D. masked CERF: Σ_k ‖ε_k‖₁. blocked CERF:
    /// J·(2·d·log₂d + 3·d). The formulas are stable across versions.
    pub fn mac_cost(&self) -> u64 {
        match self {
            Embedding::Dense(e) => (e.num_features() * e.input_dim()) as u64,
            Embedding::Masked(e) => e.column_activity().iter().map(|&a| a as u64).sum(),
            Embedding::Blocked(e) => {
                let d = e.padded_dim as u64;
                let log2d = e.padded_dim.trailing_zeros() as u64;
                e.blocks.len() as u64 * (2 * d * log2d + 3 * d)
            }
        }
    }

    /// MAC cost when only the features selected by `z` are evaluated.
    ///
    /// The blocked transform computes whole blocks regardless of selection,
    /// so its cost does not shrink with `z`.
    pub fn mac_cost_selected(&self, z: &[bool]) -> Result<u64> {
        if z.len() != self.num_features() {
            return Err(CerfError::DimensionMismatch(format!(
                "selector length {} vs {} features",
                z.len(),
                self.num_features()
            )));
        }
        Ok(match self {
            Embedding::Dense(e) => {
                z.iter().filter(|&&b| b).count() as u64 * e.input_dim() as u64
            }
            Embedding::Masked(e) => e
                .column_activity()
                .iter()
                .zip(z)
                .filter(|(_, &sel)| sel)
                .map(|(&a, _)| a as u64)
                .sum(),
            Embedding::Blocked(_) => self.mac_cost(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn data(n: usize, d: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((n, d), |_| rng.gen::<f64>() * 2.0 - 1.0)
    }

    #[test]
    fn mac_cost_examples() {
        let spec = KernelSpec::Gaussian { kappa: 1.0 };
        let dense = Embedding::Dense(sample_rff(&spec, 64, 100, 0).unwrap());
        assert_eq!(dense.mac_cost(), 6400);

        let blocked = Embedding::Blocked(build_blocked_cerf(&spec, 64, 2, 0).unwrap());
        assert_eq!(blocked.mac_cost(), 2 * (2 * 64 * 6 + 192));
    }

    #[test]
    fn mac_cost_selected_masked() {
        let spec = KernelSpec::Gaussian { kappa: 1.0 };
        let base = sample_rff(&spec, 16, 8, 1).unwrap();
        let m = build_masked_cerf(&base, 8.0, 0.5, 0, 2).unwrap();
        let activity = m.column_activity();
        let emb = Embedding::Masked(m);
        let mut z = vec![false; 8];
        z[0] = true;
        z[3] = true;
        assert_eq!(
            emb.mac_cost_selected(&z).unwrap(),
            (activity[0] + activity[3]) as u64
        );
    }

    #[test]
    fn instrumented_count_matches_formula() {
        let spec = KernelSpec::Gaussian { kappa: 1.0 };
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for trial in 0..50 {
            let d = rng.gen_range(2..20usize);
            let k = rng.gen_range(1..30usize);
            let emb = match trial % 3 {
                0 => Embedding::Dense(sample_rff(&spec, d, k, trial).unwrap()),
                1 => {
                    let base = sample_rff(&spec, d, k, trial).unwrap();
                    let e = rng.gen_range(0..3u32);
                    let density = rng.gen_range(0.2..1.0);
                    Embedding::Masked(
                        build_masked_cerf(&base, k as f64, density, e, trial + 7).unwrap(),
                    )
                }
                _ => {
                    let j = rng.gen_range(1..4usize);
                    Embedding::Blocked(build_blocked_cerf(&spec, d, j, trial).unwrap())
                }
            };
            let x = data(3, d, trial + 500);
            let (_, macs) = emb.embed_counted(&x.view()).unwrap();
            assert_eq!(macs, emb.mac_cost(), "trial {trial}");
        }
    }

    #[test]
    fn entries_bounded_by_scale() {
        let spec = KernelSpec::Gaussian { kappa: 0.7 };
        let emb = Embedding::Dense(sample_rff(&spec, 5, 32, 3).unwrap());
        let f = emb.embed(&data(20, 5, 4).view()).unwrap();
        let bound = (2.0 / 32.0_f64).sqrt() + 1e-15;
        assert!(f.iter().all(|v| v.abs() <= bound));
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let spec = KernelSpec::Gaussian { kappa: 1.0 };
        let emb = Embedding::Dense(sample_rff(&spec, 5, 8, 0).unwrap());
        assert!(emb.embed(&data(4, 6, 0).view()).is_err());
    }

    #[test]
    fn estimator_shift_invariance() {
        // Estimates for (x, y) and (x+t, y+t) agree within Monte-Carlo error.
        let spec = KernelSpec::Gaussian { kappa: 1.0 };
        let d = 6;
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x = data(2, d, 10);
        let t: Vec<f64> = (0..d).map(|_| rng.gen::<f64>()).collect();
        let mut shifted = x.clone();
        for mut row in shifted.rows_mut() {
            for (v, tv) in row.iter_mut().zip(&t) {
                *v += tv;
            }
        }
        let mut diffs = Vec::new();
        for seed in 0..64 {
            let emb = Embedding::Dense(sample_rff(&spec, d, 512, seed).unwrap());
            let f = emb.embed(&x.view()).unwrap();
            let g = emb.embed(&shifted.view()).unwrap();
            diffs.push(f.row(0).dot(&f.row(1)) - g.row(0).dot(&g.row(1)));
        }
        let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
        let var = diffs.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
            / (diffs.len() - 1) as f64;
        let stderr = (var / diffs.len() as f64).sqrt();
        assert!(mean.abs() <= 4.0 * stderr + 1e-3, "mean {mean}, stderr {stderr}");
    }

    #[test]
    fn unbiasedness_across_seeds() {
        let spec = KernelSpec::Cauchy { kappa: 1.2 };
        let d = 5;
        let x = data(20, d, 2);
        let mut pair_est: Vec<Vec<f64>> = vec![Vec::new(); 20];
        for seed in 0..64 {
            let emb = Embedding::Dense(sample_rff(&spec, d, 512, seed).unwrap());
            let f = emb.embed(&x.view()).unwrap();
            for p in 0..20 {
                let (i, j) = (p / 5, 5 + p % 15);
                pair_est[p].push(f.row(i).dot(&f.row(j)));
            }
        }
        for p in 0..20 {
            let (i, j) = (p / 5, 5 + p % 15);
            let exact = spec
                .exact(x.row(i).as_slice().unwrap(), x.row(j).as_slice().unwrap())
                .unwrap();
            let est = &pair_est[p];
            let mean = est.iter().sum::<f64>() / est.len() as f64;
            let var = est.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
                / (est.len() - 1) as f64;
            let stderr = (var / est.len() as f64).sqrt();
            assert!(
                (mean - exact).abs() <= 4.0 * stderr + 1e-6,
                "pair {p}: mean {mean}, exact {exact}, stderr {stderr}"
            );
        }
    }
}
