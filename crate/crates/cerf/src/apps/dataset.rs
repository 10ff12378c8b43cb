use ndarray::{Array2, ArrayView2};
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cvem::TrainedCerf;
use crate::error::{CerfError, Result};
use crate::features::{Embedding, FeatureMatrix};

/// A dataset: N×D design matrix plus optional integer labels.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Dataset {
    pub x: Array2<f64>,
    pub labels: Option<Vec<usize>>,
}

impl Dataset {
    pub fn new(x: Array2<f64>, labels: Option<Vec<usize>>) -> Result<Self> {
        if x.iter().any(|v| !v.is_finite()) {
            return Err(CerfError::Domain("dataset contains non-finite entries".into()));
        }
        if let Some(ref l) = labels {
            if l.len() != x.nrows() {
                return Err(CerfError::DimensionMismatch(format!(
                    "{} labels for {} rows",
                    l.len(),
                    x.nrows()
                )));
            }
        }
        Ok(Dataset { x, labels })
    }

    pub fn num_samples(&self) -> usize {
        self.x.nrows()
    }

    pub fn num_dims(&self) -> usize {
        self.x.ncols()
    }

    pub fn num_classes(&self) -> usize {
        self.labels
            .as_ref()
            .map(|l| l.iter().max().map_or(0, |m| m + 1))
            .unwrap_or(0)
    }
}

/// Isotropic Gaussian cloud, the §-style synthetic sampling distribution.
pub fn gaussian_cloud(n: usize, d: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = Array2::from_shape_fn((n, d), |_| rng.sample(rand_distr::StandardNormal));
    Dataset { x, labels: None }
}

/// Labeled Gaussian blobs for classification sanity checks. Centers are drawn
/// uniformly from [-5, 5]^D; each sample gets its center's index as label.
pub fn make_blobs(n: usize, d: usize, centers: usize, spread: f64, seed: u64) -> Result<Dataset> {
    if centers == 0 || n == 0 || d == 0 {
        return Err(CerfError::InvalidParameter(
            "make_blobs needs positive n, d, centers".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mu = Array2::from_shape_fn((centers, d), |_| rng.gen_range(-5.0..5.0));
    let mut x = Array2::zeros((n, d));
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let c = i % centers;
        labels.push(c);
        for j in 0..d {
            x[(i, j)] = mu[(c, j)] + spread * rng.sample::<f64, _>(rand_distr::StandardNormal);
        }
    }
    // Interleaved assignment keeps classes balanced; shuffle rows so folds
    // are not striped by class.
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let xs = select_rows(&x.view(), &order);
    let ls = order.iter().map(|&i| labels[i]).collect();
    Ok(Dataset {
        x: xs,
        labels: Some(ls),
    })
}

/// Row subset in the given index order.
pub fn select_rows(x: &ArrayView2<f64>, idx: &[usize]) -> Array2<f64> {
    let mut out = Array2::zeros((idx.len(), x.ncols()));
    for (r, &i) in idx.iter().enumerate() {
        out.row_mut(r).assign(&x.row(i));
    }
    out
}

/// Deterministic shuffled train/test split.
pub fn train_test_split(n: usize, test_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(0.0..1.0).contains(&test_fraction) || test_fraction <= 0.0 {
        return Err(CerfError::InvalidParameter(format!(
            "test fraction {test_fraction} outside (0, 1)"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let n_test = ((n as f64) * test_fraction).round() as usize;
    if n_test == 0 || n_test == n {
        return Err(CerfError::InvalidParameter(format!(
            "split of {n} rows at fraction {test_fraction} leaves an empty side"
        )));
    }
    let test = order[..n_test].to_vec();
    let train = order[n_test..].to_vec();
    Ok((train, test))
}

/// Deterministic k-fold partition of 0..n.
pub fn kfold(n: usize, folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if folds < 2 || folds > n {
        return Err(CerfError::InvalidParameter(format!(
            "{folds} folds for {n} samples"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let mut out = vec![Vec::new(); folds];
    for (i, idx) in order.into_iter().enumerate() {
        out[i % folds].push(idx);
    }
    Ok(out)
}

/// A deployable feature map: either raw data, a plain random embedding, or a
/// trained CERF (selector, orthogonal transform, and scale applied).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "map")]
pub enum FeatureMap {
    Identity,
    Plain(Embedding),
    Trained(TrainedCerf),
}

impl FeatureMap {
    pub fn features(&self, x: &ArrayView2<f64>) -> Result<FeatureMatrix> {
        match self {
            FeatureMap::Identity => Ok(x.to_owned()),
            FeatureMap::Plain(e) => e.embed(x),
            FeatureMap::Trained(t) => t.features(x),
        }
    }

    /// MACs per embedded sample. Identity features are free.
    pub fn mac_cost(&self) -> Result<u64> {
        match self {
            FeatureMap::Identity => Ok(0),
            FeatureMap::Plain(e) => Ok(e.mac_cost()),
            FeatureMap::Trained(t) => t.mac_cost(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr2;

    #[test]
    fn rejects_nonfinite() {
        let x = arr2(&[[1.0, f64::NAN]]);
        assert!(Dataset::new(x, None).is_err());
    }

    #[test]
    fn split_is_deterministic_and_disjoint() {
        let (tr, te) = train_test_split(100, 0.2, 7).unwrap();
        let (tr2, te2) = train_test_split(100, 0.2, 7).unwrap();
        assert_eq!(tr, tr2);
        assert_eq!(te, te2);
        assert_eq!(te.len(), 20);
        let mut all: Vec<usize> = tr.iter().chain(te.iter()).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
    }

    #[test]
    fn kfold_partitions() {
        let folds = kfold(23, 5, 3).unwrap();
        let mut all: Vec<usize> = folds.iter().flatten().copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..23).collect::<Vec<_>>());
        assert!(folds.iter().all(|f| f.len() >= 4));
    }

    #[test]
    fn blobs_are_balanced_and_labeled() {
        let ds = make_blobs(90, 4, 3, 0.5, 1).unwrap();
        let labels = ds.labels.as_ref().unwrap();
        for c in 0..3 {
            assert_eq!(labels.iter().filter(|&&l| l == c).count(), 30);
        }
        assert_eq!(ds.num_classes(), 3);
    }
}
