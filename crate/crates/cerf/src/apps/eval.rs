use ndarray::{Array2, ArrayView2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::apps::dataset::{kfold, select_rows, train_test_split, Dataset, FeatureMap};
use crate::apps::ridge::{ridge_fit, ridge_predict};
use crate::apps::rkpca::{rkpca_fit, rkpca_project};
use crate::error::{CerfError, Result};

/// Default log-spaced regularization grid, 10³ … 10⁻⁶.
pub fn default_lambda_grid() -> Vec<f64> {
    (-6..=3).rev().map(|e| 10f64.powi(e)).collect()
}

/// Mean absolute entrywise difference between two gram matrices; normalized
/// by the mean absolute teacher entry when requested.
pub fn kernel_approx_error(
    teacher_gram: &ArrayView2<f64>,
    learner_gram: &ArrayView2<f64>,
    normalize: bool,
) -> Result<f64> {
    if teacher_gram.dim() != learner_gram.dim() {
        return Err(CerfError::DimensionMismatch(format!(
            "teacher gram is {:?}, learner gram is {:?}",
            teacher_gram.dim(),
            learner_gram.dim()
        )));
    }
    let n2 = (teacher_gram.nrows() * teacher_gram.ncols()) as f64;
    let raw = teacher_gram
        .iter()
        .zip(learner_gram.iter())
        .map(|(a, b)| (a - b).abs())
        .sum::<f64>()
        / n2;
    if !normalize {
        return Ok(raw);
    }
    let denom = teacher_gram.iter().map(|a| a.abs()).sum::<f64>() / n2;
    if denom == 0.0 {
        return Err(CerfError::Domain(
            "cannot normalize by an all-zero teacher gram".into(),
        ));
    }
    Ok(raw / denom)
}

fn mse(pred: &Array2<f64>, truth: &ArrayView2<f64>) -> f64 {
    let n = (pred.nrows() * pred.ncols()) as f64;
    pred.iter()
        .zip(truth.iter())
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        / n
}

/// Inner cross-validated λ selection on the training data only. Grid values
/// whose normal system is singular are skipped; an all-singular grid errors.
fn select_lambda(
    inputs: &ArrayView2<f64>,
    targets: &ArrayView2<f64>,
    grid: &[f64],
    seed: u64,
) -> Result<f64> {
    let n = inputs.nrows();
    let folds = kfold(n, 5.min(n), seed)?;
    let mut best: Option<(f64, f64)> = None;
    for &lambda in grid {
        let mut total = 0.0;
        let mut usable = true;
        for held in 0..folds.len() {
            let test_idx = &folds[held];
            let train_idx: Vec<usize> = folds
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != held)
                .flat_map(|(_, f)| f.iter().copied())
                .collect();
            let gi = select_rows(inputs, &train_idx);
            let yi = select_rows(targets, &train_idx);
            match ridge_fit(&gi.view(), &yi.view(), lambda) {
                Ok(model) => {
                    let gt = select_rows(inputs, test_idx);
                    let yt = select_rows(targets, test_idx);
                    let pred = ridge_predict(&model, &gt.view())?;
                    total += mse(&pred, &yt.view());
                }
                Err(_) => {
                    usable = false;
                    break;
                }
            }
        }
        if usable {
            let score = total / folds.len() as f64;
            if best.map_or(true, |(_, s)| score < s) {
                best = Some((lambda, score));
            }
        }
    }
    best.map(|(l, _)| l)
        .ok_or_else(|| CerfError::SingularSystem)
}

/// Normalized test error of predicting `targets` from reduced features:
/// MSE divided by the test mean squared deviation from the train mean, so the
/// mean predictor scores 1.0.
fn reduced_ridge_error(
    features_train: &ArrayView2<f64>,
    features_test: &ArrayView2<f64>,
    targets_train: &ArrayView2<f64>,
    targets_test: &ArrayView2<f64>,
    j: usize,
    lambda_grid: &[f64],
    seed: u64,
) -> Result<f64> {
    let pca = rkpca_fit(features_train, j)?;
    let g_train = rkpca_project(&pca, features_train)?;
    let g_test = rkpca_project(&pca, features_test)?;
    let lambda = select_lambda(&g_train.view(), targets_train, lambda_grid, seed)?;
    let model = ridge_fit(&g_train.view(), targets_train, lambda)?;
    let pred = ridge_predict(&model, &g_test.view())?;
    let err = mse(&pred, targets_test);

    let train_mean = targets_train
        .mean_axis(ndarray::Axis(0))
        .ok_or_else(|| CerfError::Domain("empty training targets".into()))?;
    let baseline = (targets_test - &train_mean)
        .iter()
        .map(|x| x * x)
        .sum::<f64>()
        / (targets_test.nrows() * targets_test.ncols()) as f64;
    if baseline == 0.0 {
        return Err(CerfError::Domain(
            "test targets equal the train mean exactly; normalization undefined".into(),
        ));
    }
    Ok(err / baseline)
}

/// Ridge autoencoding through the embedding: reconstruct the raw data from
/// J principal feature directions, normalized so the mean predictor scores 1.
pub fn autoencoder_eval(
    dataset: &Dataset,
    map: &FeatureMap,
    j: usize,
    lambda_grid: &[f64],
    split_seed: u64,
) -> Result<f64> {
    let n = dataset.num_samples();
    if n < 2 * j {
        return Err(CerfError::InvalidParameter(format!(
            "{n} samples are too few for J = {j}"
        )));
    }
    let (train_idx, test_idx) = train_test_split(n, 0.2, split_seed)?;
    let x_train = select_rows(&dataset.x.view(), &train_idx);
    let x_test = select_rows(&dataset.x.view(), &test_idx);
    let f_train = map.features(&x_train.view())?;
    let f_test = map.features(&x_test.view())?;
    reduced_ridge_error(
        &f_train.view(),
        &f_test.view(),
        &x_train.view(),
        &x_test.view(),
        j,
        lambda_grid,
        split_seed,
    )
}

/// Data completion: blocks out a fixed random subset of dimensions, embeds
/// the blocked data, and predicts the missing coordinates. Returns the mask
/// alongside the normalized error.
pub fn completion_eval(
    dataset: &Dataset,
    map: &FeatureMap,
    missing_fraction: f64,
    j: usize,
    lambda_grid: &[f64],
    seed: u64,
) -> Result<(f64, Vec<bool>)> {
    if !(0.0..1.0).contains(&missing_fraction) || missing_fraction <= 0.0 {
        return Err(CerfError::InvalidParameter(format!(
            "missing fraction {missing_fraction} outside (0, 1)"
        )));
    }
    let d = dataset.num_dims();
    let n_missing = ((d as f64) * missing_fraction).round().max(1.0) as usize;
    if n_missing >= d {
        return Err(CerfError::InvalidParameter(format!(
            "{n_missing} of {d} dimensions would be missing"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dims: Vec<usize> = (0..d).collect();
    dims.shuffle(&mut rng);
    let mut observed = vec![true; d];
    for &dim in dims.iter().take(n_missing) {
        observed[dim] = false;
    }

    let mut blocked = dataset.x.clone();
    for (dim, &obs) in observed.iter().enumerate() {
        if !obs {
            blocked.column_mut(dim).fill(0.0);
        }
    }
    let missing_dims: Vec<usize> = (0..d).filter(|&dim| !observed[dim]).collect();
    let mut targets = Array2::zeros((dataset.num_samples(), missing_dims.len()));
    for (col, &dim) in missing_dims.iter().enumerate() {
        targets.column_mut(col).assign(&dataset.x.column(dim));
    }

    let (train_idx, test_idx) = train_test_split(dataset.num_samples(), 0.2, seed)?;
    let x_train = select_rows(&blocked.view(), &train_idx);
    let x_test = select_rows(&blocked.view(), &test_idx);
    let y_train = select_rows(&targets.view(), &train_idx);
    let y_test = select_rows(&targets.view(), &test_idx);
    let f_train = map.features(&x_train.view())?;
    let f_test = map.features(&x_test.view())?;
    let err = reduced_ridge_error(
        &f_train.view(),
        &f_test.view(),
        &y_train.view(),
        &y_test.view(),
        j,
        lambda_grid,
        seed,
    )?;
    Ok((err, observed))
}

/// Outcome of a classification evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifyOutcome {
    pub accuracy: f64,
    /// Set when the labels contain a single class, which makes the task
    /// trivially solvable.
    pub degenerate: bool,
}

/// One-vs-rest ridge classification with k-fold cross-validated accuracy and
/// an inner λ grid search on each training fold.
pub fn classify_eval(
    dataset: &Dataset,
    map: &FeatureMap,
    lambda_grid: &[f64],
    folds: usize,
    seed: u64,
) -> Result<ClassifyOutcome> {
    let labels = dataset
        .labels
        .as_ref()
        .ok_or_else(|| CerfError::InvalidParameter("classification needs labels".into()))?;
    let num_classes = dataset.num_classes();
    if num_classes <= 1 {
        return Ok(ClassifyOutcome {
            accuracy: 1.0,
            degenerate: true,
        });
    }
    for c in 0..num_classes {
        let count = labels.iter().filter(|&&l| l == c).count();
        if count < folds {
            return Err(CerfError::InvalidParameter(format!(
                "class {c} has {count} samples, fewer than {folds} folds"
            )));
        }
    }

    let features = map.features(&dataset.x.view())?;
    let mut signed = Array2::from_elem((dataset.num_samples(), num_classes), -1.0);
    for (i, &l) in labels.iter().enumerate() {
        signed[(i, l)] = 1.0;
    }

    let partition = kfold(dataset.num_samples(), folds, seed)?;
    let mut correct = 0usize;
    let mut total = 0usize;
    for held in 0..folds {
        let test_idx = &partition[held];
        let train_idx: Vec<usize> = partition
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != held)
            .flat_map(|(_, f)| f.iter().copied())
            .collect();
        let f_train = select_rows(&features.view(), &train_idx);
        let y_train = select_rows(&signed.view(), &train_idx);
        let lambda = select_lambda(&f_train.view(), &y_train.view(), lambda_grid, seed)?;
        let model = ridge_fit(&f_train.view(), &y_train.view(), lambda)?;
        let f_test = select_rows(&features.view(), test_idx);
        let scores = ridge_predict(&model, &f_test.view())?;
        for (row, &idx) in test_idx.iter().enumerate() {
            let mut best = 0;
            for c in 1..num_classes {
                if scores[(row, c)] > scores[(row, best)] {
                    best = c;
                }
            }
            if best == labels[idx] {
                correct += 1;
            }
            total += 1;
        }
    }
    Ok(ClassifyOutcome {
        accuracy: correct as f64 / total as f64,
        degenerate: false,
    })
}

/// Dimension of the plain RFF that spends the same per-sample MAC budget.
pub fn equal_mac_budget(budget: u64, input_dim: usize) -> Result<usize> {
    if input_dim == 0 {
        return Err(CerfError::InvalidParameter("zero input dimension".into()));
    }
    if budget < input_dim as u64 {
        return Err(CerfError::InvalidParameter(format!(
            "budget {budget} cannot pay for even one feature at D = {input_dim}"
        )));
    }
    Ok((budget / input_dim as u64) as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::apps::dataset::{gaussian_cloud, make_blobs};
    use crate::features::{sample_rff, Embedding, KernelSpec};
    use ndarray::arr2;
    use rand::Rng;

    #[test]
    fn kernel_error_examples() {
        let t = arr2(&[[1.0, 0.5], [0.5, 1.0]]);
        let l = arr2(&[[1.0, 0.3], [0.3, 1.0]]);
        assert_eq!(kernel_approx_error(&t.view(), &t.view(), false).unwrap(), 0.0);
        let raw = kernel_approx_error(&t.view(), &l.view(), false).unwrap();
        assert!((raw - 0.1).abs() < 1e-15);
        let norm = kernel_approx_error(&t.view(), &l.view(), true).unwrap();
        assert!((norm - 0.1 / 0.75).abs() < 1e-15);
    }

    #[test]
    fn kernel_error_is_a_pseudometric() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let g = |r: &mut ChaCha8Rng| Array2::from_shape_fn((6, 6), |_| r.gen::<f64>());
        let a = g(&mut rng);
        let b = g(&mut rng);
        let c = g(&mut rng);
        let dab = kernel_approx_error(&a.view(), &b.view(), false).unwrap();
        let dba = kernel_approx_error(&b.view(), &a.view(), false).unwrap();
        let dac = kernel_approx_error(&a.view(), &c.view(), false).unwrap();
        let dcb = kernel_approx_error(&c.view(), &b.view(), false).unwrap();
        assert_eq!(dab, dba);
        assert!(dab <= dac + dcb + 1e-15);
        assert!(dab > 0.0);
    }

    #[test]
    fn autoencoder_identity_on_subspace_is_near_zero() {
        // Data in a 5-dim subspace of 12 dims with identity features and
        // J = 5: ridge from the principal projection recovers it exactly.
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let basis = Array2::from_shape_fn((5, 12), |_| rng.gen::<f64>() - 0.5);
        let coeff = Array2::from_shape_fn((80, 5), |_| rng.gen::<f64>() - 0.5);
        let ds = Dataset::new(coeff.dot(&basis), None).unwrap();
        let err = autoencoder_eval(&ds, &FeatureMap::Identity, 5, &default_lambda_grid(), 0)
            .unwrap();
        assert!(err < 1e-6, "error {err}");
    }

    #[test]
    fn mean_predictor_scores_one() {
        let ds = gaussian_cloud(100, 6, 2);
        // A grid with only an enormous λ forces the mean predictor.
        let err = autoencoder_eval(&ds, &FeatureMap::Identity, 3, &[1e12], 0).unwrap();
        assert!((err - 1.0).abs() < 1e-3, "error {err}");
    }

    #[test]
    fn completion_mask_contract_and_recoverable_case() {
        // Dim 9 = sum of dims 0..9, recoverable exactly from the rest when it
        // is the one missing dimension.
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut x = Array2::from_shape_fn((120, 10), |_| rng.gen::<f64>() - 0.5);
        for i in 0..120 {
            let s: f64 = (0..9).map(|j| x[(i, j)]).sum();
            x[(i, 9)] = s;
        }
        let ds = Dataset::new(x, None).unwrap();
        // Find a seed whose single missing dim is 9.
        let mut hit = None;
        for seed in 0..64 {
            // J = 9 keeps the full observed subspace, so the linearly
            // determined dimension is exactly recoverable.
            let (err, obs) =
                completion_eval(&ds, &FeatureMap::Identity, 0.1, 9, &default_lambda_grid(), seed)
                    .unwrap();
            assert_eq!(obs.iter().filter(|&&o| !o).count(), 1);
            if !obs[9] {
                hit = Some(err);
                break;
            }
        }
        let err = hit.expect("some seed should block dim 9");
        assert!(err < 1e-6, "error {err}");
    }

    #[test]
    fn blobs_classify_well_with_dense_rff() {
        let ds = make_blobs(200, 4, 2, 0.4, 9).unwrap();
        let spec = KernelSpec::Gaussian { kappa: 4.0 };
        let rff = sample_rff(&spec, 4, 256, 13).unwrap();
        let map = FeatureMap::Plain(Embedding::Dense(rff));
        let out = classify_eval(&ds, &map, &default_lambda_grid(), 5, 1).unwrap();
        assert!(!out.degenerate);
        assert!(out.accuracy >= 0.95, "accuracy {}", out.accuracy);
    }

    #[test]
    fn single_class_is_degenerate() {
        let mut ds = gaussian_cloud(40, 3, 5);
        ds.labels = Some(vec![0; 40]);
        let out = classify_eval(&ds, &FeatureMap::Identity, &[1.0], 5, 0).unwrap();
        assert!(out.degenerate);
        assert_eq!(out.accuracy, 1.0);
    }

    #[test]
    fn classify_is_deterministic_in_seed() {
        let ds = make_blobs(100, 3, 2, 1.5, 2).unwrap();
        let a = classify_eval(&ds, &FeatureMap::Identity, &default_lambda_grid(), 5, 3).unwrap();
        let b = classify_eval(&ds, &FeatureMap::Identity, &default_lambda_grid(), 5, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn equal_mac_examples() {
        assert_eq!(equal_mac_budget(6400, 64).unwrap(), 100);
        assert_eq!(equal_mac_budget(800, 40).unwrap(), 20);
        assert!(equal_mac_budget(30, 64).is_err());
        // Floor property round-trip.
        let k = equal_mac_budget(1000, 7).unwrap() as u64;
        assert!(k * 7 <= 1000 && (k + 1) * 7 > 1000);
    }
}
