use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CerfError, Result};
use crate::features::bbp::sample_beta_a1;
use crate::features::rff::DenseRff;

/// Masked CERF: a dense RFF base with a binary mask per feature column and
/// the variance-preserving rescale ρ_k = √(D/‖ε_k‖₁). Mask activations are
/// constant over runs of 2^e consecutive input coordinates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MaskedCerf {
    pub base: DenseRff,
    pub mask: Array2<u8>,
    pub rho: Array1<f64>,
    pub group_exponent: u32,
    /// ρ_k·ε_{dk}·ω_{dk}, precomputed so a feature evaluation spends exactly
    /// ‖ε_k‖₁ multiply-accumulates.
    pub(crate) scaled_omega: Array2<f64>,
    /// Active row indices per column.
    pub(crate) active: Vec<Vec<u32>>,
}

impl MaskedCerf {
    pub fn input_dim(&self) -> usize {
        self.base.input_dim()
    }

    pub fn num_features(&self) -> usize {
        self.base.num_features()
    }

    /// Active entries per mask column.
    pub fn column_activity(&self) -> Vec<usize> {
        self.active.iter().map(|a| a.len()).collect()
    }

    pub(crate) fn project_row(&self, x: &[f64], out: &mut [f64], macs: &mut u64) {
        for (k, slot) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for &d in &self.active[k] {
                acc += self.scaled_omega[(d as usize, k)] * x[d as usize];
            }
            *macs += self.active[k].len() as u64;
            *slot = self.base.scale * (acc + self.base.phases[k]).cos();
        }
    }
}

const MAX_REJECTION_TRIES: usize = 500;

/// Draw grouped Beta-Bernoulli masks over a dense RFF base.
///
/// Each column's mask is drawn at the supergroup level (groups of 2^e
/// coordinates) from the BBP and redrawn until its active-entry count lies
/// within one group of `target_density·D`. If rejection does not land within
/// the budget the column falls back to a uniform draw of the exact group
/// count, which keeps the builder total.
pub fn build_masked_cerf(
    base: &DenseRff,
    gamma: f64,
    target_density: f64,
    group_exponent: u32,
    seed: u64,
) -> Result<MaskedCerf> {
    if !(target_density > 0.0 && target_density <= 1.0) {
        return Err(CerfError::InvalidParameter(format!(
            "target density must be in (0, 1], got {target_density}"
        )));
    }
    if !(gamma > 0.0) {
        return Err(CerfError::InvalidParameter(format!(
            "BBP mass must be positive, got {gamma}"
        )));
    }
    let d = base.input_dim();
    let k = base.num_features();
    let group = 1usize << group_exponent;
    let num_groups = d.div_ceil(group);
    let group_len = |g: usize| -> usize { (d - g * group).min(group) };
    let target = target_density * d as f64;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mask = Array2::<u8>::zeros((d, k));
    let mut active: Vec<Vec<u32>> = Vec::with_capacity(k);
    let mut rho = Array1::zeros(k);

    let mut groups_buf = vec![false; num_groups];
    for col in 0..k {
        // Full density admits exactly one mask; skip the rejection loop.
        let mut accepted = target_density == 1.0;
        if accepted {
            groups_buf.iter_mut().for_each(|b| *b = true);
        }
        for _ in 0..MAX_REJECTION_TRIES {
            if accepted {
                break;
            }
            let p = sample_beta_a1(k as f64 / gamma, &mut rng);
            let mut count = 0usize;
            for (g, slot) in groups_buf.iter_mut().enumerate() {
                *slot = rng.gen::<f64>() < p;
                if *slot {
                    count += group_len(g);
                }
            }
            if (count as f64 - target).abs() <= group as f64 {
                accepted = true;
                break;
            }
        }
        if !accepted {
            // Exact group count, chosen uniformly.
            let want = ((target / group as f64).round() as usize).clamp(1, num_groups);
            let mut idx: Vec<usize> = (0..num_groups).collect();
            idx.shuffle(&mut rng);
            groups_buf.iter_mut().for_each(|b| *b = false);
            for &g in idx.iter().take(want) {
                groups_buf[g] = true;
            }
        }
        let mut cols_active = Vec::new();
        for (g, &on) in groups_buf.iter().enumerate() {
            if on {
                for i in g * group..g * group + group_len(g) {
                    mask[(i, col)] = 1;
                    cols_active.push(i as u32);
                }
            }
        }
        rho[col] = (d as f64 / (cols_active.len().max(1) as f64)).sqrt();
        active.push(cols_active);
    }

    let mut scaled_omega = Array2::zeros((d, k));
    for col in 0..k {
        for &row in &active[col] {
            scaled_omega[(row as usize, col)] = rho[col] * base.omega[(row as usize, col)];
        }
    }

    Ok(MaskedCerf {
        base: base.clone(),
        mask,
        rho,
        group_exponent,
        scaled_omega,
        active,
    })
}
