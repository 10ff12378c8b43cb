use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{CerfError, Result};
use crate::numerics::{cholesky, cholesky_solve};

/// Multi-target linear ridge model fit on centered data.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RidgeModel {
    pub weights: Array2<f64>,
    pub intercept: Array1<f64>,
    pub lambda: f64,
}

/// Closed-form ridge regression: (GᵀG + λI)w = Gᵀy on centered inputs and
/// targets, all T targets solved against one factorization.
pub fn ridge_fit(inputs: &ArrayView2<f64>, targets: &ArrayView2<f64>, lambda: f64) -> Result<RidgeModel> {
    let (n, j) = inputs.dim();
    if targets.nrows() != n {
        return Err(CerfError::DimensionMismatch(format!(
            "{} input rows vs {} target rows",
            n,
            targets.nrows()
        )));
    }
    if n == 0 {
        return Err(CerfError::InvalidParameter("ridge fit on empty data".into()));
    }
    if lambda < 0.0 || !lambda.is_finite() {
        return Err(CerfError::InvalidParameter(format!(
            "lambda {lambda} must be finite and nonnegative"
        )));
    }
    let x_mean = inputs.mean_axis(Axis(0)).unwrap();
    let y_mean = targets.mean_axis(Axis(0)).unwrap();
    let g = inputs - &x_mean;
    let y = targets - &y_mean;
    let mut gram = g.t().dot(&g);
    for i in 0..j {
        gram[(i, i)] += lambda;
    }
    let factor = cholesky(&gram).map_err(|e| match e {
        CerfError::SingularSystem if lambda == 0.0 => CerfError::RankDeficient(0.0),
        other => other,
    })?;
    let weights = cholesky_solve(&factor, &g.t().dot(&y))?;
    // Fold the input centering into the intercept so prediction is a single
    // affine map: ŷ = X·w + (ȳ − x̄ᵀw).
    let intercept = &y_mean - &x_mean.dot(&weights);
    Ok(RidgeModel {
        weights,
        intercept,
        lambda,
    })
}

pub fn ridge_predict(model: &RidgeModel, inputs: &ArrayView2<f64>) -> Result<Array2<f64>> {
    if inputs.ncols() != model.weights.nrows() {
        return Err(CerfError::DimensionMismatch(format!(
            "{} input columns vs {} weight rows",
            inputs.ncols(),
            model.weights.nrows()
        )));
    }
    Ok(inputs.dot(&model.weights) + &model.intercept)
}
