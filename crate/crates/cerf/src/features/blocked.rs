use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CerfError, Result};
use crate::features::kernel::{sample_gaussian, KernelSpec};
use crate::features::rff::sample_phases;
use crate::numerics::fwht_in_place;

/// One Fastfood block, realizing the structured product S·H·G·Π·H·B scaled
/// by 1/(κ√d). Applying it costs two Walsh–Hadamard transforms and three
/// diagonal products.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FastfoodBlock {
    /// Rademacher ±1 diagonal B.
    pub signs: Vec<f64>,
    /// Permutation Π (y_i = x_{perm[i]}).
    pub perm: Vec<usize>,
    /// Standard Gaussian diagonal G.
    pub gauss: Vec<f64>,
    /// Chi-distributed row rescale S_i = r_i/‖G‖_F, with the block scale
    /// 1/(κ√d) folded in.
    pub row_scale: Vec<f64>,
}

impl FastfoodBlock {
    /// Apply the block to a zero-padded input, counting multiply-accumulates.
    pub(crate) fn apply(&self, padded: &mut [f64], macs: &mut u64) {
        let d = self.signs.len();
        debug_assert_eq!(padded.len(), d);
        for (v, s) in padded.iter_mut().zip(&self.signs) {
            *v *= s;
        }
        fwht_in_place(padded).expect("block length is a power of two");
        let permuted: Vec<f64> = self.perm.iter().map(|&i| padded[i]).collect();
        padded.copy_from_slice(&permuted);
        for (v, g) in padded.iter_mut().zip(&self.gauss) {
            *v *= g;
        }
        fwht_in_place(padded).expect("block length is a power of two");
        for (v, s) in padded.iter_mut().zip(&self.row_scale) {
            *v *= s;
        }
        let log2d = d.trailing_zeros() as u64;
        *macs += 2 * d as u64 * log2d + 3 * d as u64;
    }

    /// Materialize the implicit d×d frequency matrix (rows are frequencies).
    /// Test and diagnostic aid; the embedding path never builds it.
    pub fn materialize(&self) -> Array2<f64> {
        let d = self.signs.len();
        let mut m = Array2::zeros((d, d));
        for j in 0..d {
            let mut e = vec![0.0; d];
            e[j] = 1.0;
            let mut macs = 0u64;
            self.apply(&mut e, &mut macs);
            for i in 0..d {
                m[(i, j)] = e[i];
            }
        }
        m
    }
}

/// Blocked CERF: J Fastfood blocks over the zero-padded input, K = J·d
/// features in total.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlockedCerf {
    pub input_dim: usize,
    pub padded_dim: usize,
    pub kappa: f64,
    pub blocks: Vec<FastfoodBlock>,
    pub phases: ndarray::Array1<f64>,
    pub scale: f64,
}

impl BlockedCerf {
    pub fn num_features(&self) -> usize {
        self.blocks.len() * self.padded_dim
    }

    pub(crate) fn project_row(&self, x: &[f64], out: &mut [f64], macs: &mut u64) {
        let d = self.padded_dim;
        let mut padded = vec![0.0; d];
        for (j, block) in self.blocks.iter().enumerate() {
            padded[..x.len()].copy_from_slice(x);
            padded[x.len()..].fill(0.0);
            block.apply(&mut padded, macs);
            for i in 0..d {
                let k = j * d + i;
                out[k] = self.scale * (padded[i] + self.phases[k]).cos();
            }
        }
    }
}

/// Build a blocked (Fastfood) CERF for a Gaussian kernel. The input
/// dimension is zero-padded to the next power of two; the pad is transparent
/// to callers.
pub fn build_blocked_cerf(
    spec: &KernelSpec,
    input_dim: usize,
    num_blocks: usize,
    seed: u64,
) -> Result<BlockedCerf> {
    spec.validate()?;
    let kappa = match *spec {
        KernelSpec::Gaussian { kappa } => kappa,
        _ => {
            return Err(CerfError::InvalidParameter(
                "blocked CERF requires the gaussian kernel family".into(),
            ))
        }
    };
    if input_dim == 0 || num_blocks == 0 {
        return Err(CerfError::InvalidParameter(
            "blocked CERF needs input_dim >= 1 and at least one block".into(),
        ));
    }
    let d = input_dim.next_power_of_two();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut blocks = Vec::with_capacity(num_blocks);
    for _ in 0..num_blocks {
        let signs: Vec<f64> = (0..d)
            .map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 })
            .collect();
        let mut perm: Vec<usize> = (0..d).collect();
        for i in (1..d).rev() {
            let j = rng.gen_range(0..=i);
            perm.swap(i, j);
        }
        let gauss: Vec<f64> = (0..d).map(|_| sample_gaussian(&mut rng)).collect();
        let g_norm = gauss.iter().map(|g| g * g).sum::<f64>().sqrt();
        let block_scale = 1.0 / (kappa * (d as f64).sqrt());
        let row_scale: Vec<f64> = (0..d)
            .map(|_| {
                // chi(d) draw: Euclidean norm of a d-dim standard Gaussian
                let r = (0..d)
                    .map(|_| {
                        let g = sample_gaussian(&mut rng);
                        g * g
                    })
                    .sum::<f64>()
                    .sqrt();
                r / g_norm * block_scale
            })
            .collect();
        blocks.push(FastfoodBlock {
            signs,
            perm,
            gauss,
            row_scale,
        });
    }
    let k = num_blocks * d;
    let phases = sample_phases(k, &mut rng);
    Ok(BlockedCerf {
        input_dim,
        padded_dim: d,
        kappa,
        blocks,
        phases,
        scale: (2.0 / k as f64).sqrt(),
    })
}
