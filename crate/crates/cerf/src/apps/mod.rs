//! Evaluation pipelines: kernel-approximation error, randomized kernel PCA,
//! ridge autoencoding, data completion, a classification proxy, and the
//! equal-MAC comparison harness that puts trained CERF embeddings and plain
//! random Fourier features on the same compute budget.

mod dataset;
mod eval;
mod report;
mod ridge;
mod rkpca;

pub use dataset::{
    gaussian_cloud, kfold, make_blobs, select_rows, train_test_split, Dataset, FeatureMap,
};
pub use eval::{
    autoencoder_eval, classify_eval, completion_eval, default_lambda_grid, equal_mac_budget,
    kernel_approx_error, ClassifyOutcome,
};
pub use report::{ComparisonReport, MethodSummary, ReportRow};
pub use ridge::{ridge_fit, ridge_predict, RidgeModel};
pub use rkpca::{rkpca_fit, rkpca_project, RkpcaModel};
