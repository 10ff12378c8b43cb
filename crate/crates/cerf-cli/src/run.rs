use std::path::{Path, PathBuf};

use cerf::apps::{
    autoencoder_eval, classify_eval, completion_eval, default_lambda_grid, gaussian_cloud,
    kernel_approx_error, make_blobs, ComparisonReport, Dataset, FeatureMap, ReportRow,
};
use cerf::cvem::{AdmmConfig, TrainConfig};
use cerf::features::{
    build_blocked_cerf, build_masked_cerf, sample_learner_dictionary, sample_rff, Embedding,
    KernelSpec, ProductFactor,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::archive::{load_feature_map, save_embedding, save_trained};
use crate::error::{CliError, Result};
use crate::io::{load_dense_csv, write_dataset_csv};

pub const MANIFEST_FORMAT: &str = "cerf-manifest-v1";

/// Kernel parameters shared by several commands.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct KernelParams {
    pub family: String,
    pub kappa: f64,
    /// Second bandwidth, used by the product family only.
    pub kappa2: f64,
    /// First factor of the product family: "gaussian" or "cauchy".
    pub first: String,
}

impl Default for KernelParams {
    fn default() -> Self {
        KernelParams {
            family: "gaussian".into(),
            kappa: 1.0,
            kappa2: 1.0,
            first: "gaussian".into(),
        }
    }
}

impl KernelParams {
    pub fn to_spec(&self) -> Result<KernelSpec> {
        let spec = match self.family.as_str() {
            "gaussian" => KernelSpec::Gaussian { kappa: self.kappa },
            "cauchy" => KernelSpec::Cauchy { kappa: self.kappa },
            "product" => KernelSpec::Product {
                first: match self.first.as_str() {
                    "gaussian" => ProductFactor::Gaussian,
                    "cauchy" => ProductFactor::Cauchy,
                    other => {
                        return Err(CliError::Usage(format!(
                            "unknown product first factor '{other}'"
                        )))
                    }
                },
                kappa1: self.kappa,
                kappa2: self.kappa2,
            },
            other => return Err(CliError::Usage(format!("unknown kernel family '{other}'"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Fully resolved run description; the manifest stores exactly this.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum RunConfig {
    GenData {
        kind: String,
        n: usize,
        d: usize,
        centers: usize,
        spread: f64,
        seed: u64,
        out: PathBuf,
    },
    Sample {
        kind: String,
        kernel: KernelParams,
        d: usize,
        k: usize,
        gamma: f64,
        density: f64,
        group_exponent: u32,
        blocks: usize,
        seed: u64,
        out: PathBuf,
    },
    Train {
        data: PathBuf,
        kernel: KernelParams,
        k: usize,
        dict_components: usize,
        dict_spread: f64,
        sigma_sq: f64,
        gamma: f64,
        density: f64,
        max_stages: usize,
        e_sweeps: usize,
        mu: f64,
        alpha0: f64,
        admm_iters: usize,
        primal_tol: f64,
        post_stages: usize,
        seed: u64,
        out: PathBuf,
        trace: PathBuf,
    },
    EvalApprox {
        teacher: PathBuf,
        learner: PathBuf,
        data: PathBuf,
        normalize: bool,
        seed: u64,
        out: PathBuf,
    },
    EvalAutoencoder {
        map: PathBuf,
        data: PathBuf,
        j: usize,
        seed: u64,
        out: PathBuf,
    },
    EvalCompletion {
        map: PathBuf,
        data: PathBuf,
        missing: f64,
        j: usize,
        seed: u64,
        out: PathBuf,
    },
    EvalClassify {
        map: PathBuf,
        data: PathBuf,
        folds: usize,
        seed: u64,
        out: PathBuf,
    },
    Report {
        inputs: Vec<PathBuf>,
        out: PathBuf,
    },
}

impl RunConfig {
    fn primary_output(&self) -> &Path {
        match self {
            RunConfig::GenData { out, .. }
            | RunConfig::Sample { out, .. }
            | RunConfig::Train { out, .. }
            | RunConfig::EvalApprox { out, .. }
            | RunConfig::EvalAutoencoder { out, .. }
            | RunConfig::EvalCompletion { out, .. }
            | RunConfig::EvalClassify { out, .. }
            | RunConfig::Report { out, .. } => out,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub version: String,
    pub config_sha256: String,
    pub config: RunConfig,
}

pub fn config_hash(cfg: &RunConfig) -> Result<String> {
    let bytes = serde_json::to_vec(cfg)
        .map_err(|e| CliError::Data(format!("serializing config: {e}")))?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

pub fn manifest_path(cfg: &RunConfig) -> PathBuf {
    let out = cfg.primary_output();
    let mut name = out
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into());
    name.push_str(".manifest.json");
    out.with_file_name(name)
}

pub fn load_manifest(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let manifest: Manifest = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    if manifest.format != MANIFEST_FORMAT {
        return Err(CliError::Usage(format!(
            "{}: unsupported manifest format '{}'",
            path.display(),
            manifest.format
        )));
    }
    let expect = config_hash(&manifest.config)?;
    if expect != manifest.config_sha256 {
        return Err(CliError::Usage(format!(
            "{}: config hash mismatch (manifest edited?)",
            path.display()
        )));
    }
    Ok(manifest.config)
}

fn write_manifest(cfg: &RunConfig) -> Result<()> {
    let manifest = Manifest {
        format: MANIFEST_FORMAT.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config_sha256: config_hash(cfg)?,
        config: cfg.clone(),
    };
    let json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| CliError::Data(format!("serializing manifest: {e}")))?;
    std::fs::write(manifest_path(cfg), json + "\n")?;
    Ok(())
}

fn gram(map: &FeatureMap, data: &Dataset) -> Result<ndarray::Array2<f64>> {
    let f = map.features(&data.x.view())?;
    Ok(f.dot(&f.t()))
}

fn write_report(out: &Path, report: &ComparisonReport) -> Result<()> {
    let rendered = if out.extension().is_some_and(|e| e == "tsv") {
        report.to_tsv()
    } else {
        report.to_csv()
    };
    std::fs::write(out, rendered)?;
    Ok(())
}

/// Executes one fully resolved run and writes its manifest next to the
/// primary output.
pub fn run(cfg: &RunConfig) -> Result<()> {
    match cfg {
        RunConfig::GenData {
            kind,
            n,
            d,
            centers,
            spread,
            seed,
            out,
        } => {
            let ds = match kind.as_str() {
                "synthetic" => gaussian_cloud(*n, *d, *seed),
                "blobs" => make_blobs(*n, *d, *centers, *spread, *seed)?,
                other => return Err(CliError::Usage(format!("unknown dataset kind '{other}'"))),
            };
            write_dataset_csv(out, &ds)?;
        }
        RunConfig::Sample {
            kind,
            kernel,
            d,
            k,
            gamma,
            density,
            group_exponent,
            blocks,
            seed,
            out,
        } => {
            let spec = kernel.to_spec()?;
            let embedding = match kind.as_str() {
                "dense" => Embedding::Dense(sample_rff(&spec, *d, *k, *seed)?),
                "masked" => {
                    let base = sample_rff(&spec, *d, *k, *seed)?;
                    Embedding::Masked(build_masked_cerf(&base, *gamma, *density, *group_exponent, *seed)?)
                }
                "blocked" => Embedding::Blocked(build_blocked_cerf(&spec, *d, *blocks, *seed)?),
                other => return Err(CliError::Usage(format!("unknown embedding kind '{other}'"))),
            };
            save_embedding(out, &embedding, *seed)?;
        }
        RunConfig::Train {
            data,
            kernel,
            k,
            dict_components,
            dict_spread,
            sigma_sq,
            gamma,
            density,
            max_stages,
            e_sweeps,
            mu,
            alpha0,
            admm_iters,
            primal_tol,
            post_stages,
            seed,
            out,
            trace,
        } => {
            let ds = load_dense_csv(data, false)?;
            let spec = kernel.to_spec()?;
            let teacher = Embedding::Dense(sample_rff(&spec, ds.num_dims(), *k, *seed)?);
            let learner = Embedding::Dense(sample_learner_dictionary(
                &spec,
                ds.num_dims(),
                *k,
                *dict_components,
                *dict_spread,
                seed.wrapping_add(1),
            )?);
            let train_cfg = TrainConfig {
                c: None,
                sigma_sq: *sigma_sq,
                gamma: *gamma,
                target_density: *density,
                max_stages: *max_stages,
                e_sweeps: *e_sweeps,
                admm: AdmmConfig {
                    mu: *mu,
                    alpha0: *alpha0,
                    max_iters: *admm_iters,
                    primal_tol: *primal_tol,
                },
                post_stages: *post_stages,
                seed: *seed,
            };
            let trained = cerf::cvem::train_embedding(&teacher, learner, &ds.x, &train_cfg)?;
            std::fs::write(trace, trained.trace_jsonl() + "\n")?;
            save_trained(out, &trained, *seed)?;
        }
        RunConfig::EvalApprox {
            teacher,
            learner,
            data,
            normalize,
            seed,
            out,
        } => {
            let teacher_map = load_feature_map(teacher)?;
            let learner_map = load_feature_map(learner)?;
            let ds = load_dense_csv(data, false)?;
            let tg = gram(&teacher_map, &ds)?;
            let lg = gram(&learner_map, &ds)?;
            let err = kernel_approx_error(&tg.view(), &lg.view(), *normalize)?;
            let mut report = ComparisonReport::default();
            report.push(ReportRow {
                method: "learner".into(),
                mac: learner_map.mac_cost()?,
                k: lg.nrows(),
                density: 0.0,
                metric: "kernel_error".into(),
                value: err,
                seed: *seed,
            })?;
            write_report(out, &report)?;
        }
        RunConfig::EvalAutoencoder {
            map,
            data,
            j,
            seed,
            out,
        } => {
            let feature_map = load_feature_map(map)?;
            let ds = load_dense_csv(data, false)?;
            let err = autoencoder_eval(&ds, &feature_map, *j, &default_lambda_grid(), *seed)?;
            let mut report = ComparisonReport::default();
            report.push(ReportRow {
                method: "autoencoder".into(),
                mac: feature_map.mac_cost()?,
                k: *j,
                density: 0.0,
                metric: "normalized_reconstruction_error".into(),
                value: err,
                seed: *seed,
            })?;
            write_report(out, &report)?;
        }
        RunConfig::EvalCompletion {
            map,
            data,
            missing,
            j,
            seed,
            out,
        } => {
            let feature_map = load_feature_map(map)?;
            let ds = load_dense_csv(data, false)?;
            let (err, _mask) =
                completion_eval(&ds, &feature_map, *missing, *j, &default_lambda_grid(), *seed)?;
            let mut report = ComparisonReport::default();
            report.push(ReportRow {
                method: "completion".into(),
                mac: feature_map.mac_cost()?,
                k: *j,
                density: *missing,
                metric: "normalized_completion_error".into(),
                value: err,
                seed: *seed,
            })?;
            write_report(out, &report)?;
        }
        RunConfig::EvalClassify {
            map,
            data,
            folds,
            seed,
            out,
        } => {
            let feature_map = load_feature_map(map)?;
            let ds = load_dense_csv(data, true)?;
            let outcome = classify_eval(&ds, &feature_map, &default_lambda_grid(), *folds, *seed)?;
            let mut report = ComparisonReport::default();
            report.push(ReportRow {
                method: if outcome.degenerate {
                    "classify(degenerate)".into()
                } else {
                    "classify".into()
                },
                mac: feature_map.mac_cost()?,
                k: *folds,
                density: 0.0,
                metric: "accuracy".into(),
                value: outcome.accuracy,
                seed: *seed,
            })?;
            write_report(out, &report)?;
        }
        RunConfig::Report { inputs, out } => {
            let mut merged = ComparisonReport::default();
            for path in inputs {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
                for (lineno, line) in text.lines().enumerate().skip(1) {
                    let cells: Vec<&str> = line.split(',').collect();
                    if cells.len() != 7 {
                        return Err(CliError::Data(format!(
                            "{}: line {}: expected 7 columns",
                            path.display(),
                            lineno + 1
                        )));
                    }
                    let parse_err = |what: &str| {
                        CliError::Data(format!(
                            "{}: line {}: bad {what}",
                            path.display(),
                            lineno + 1
                        ))
                    };
                    merged.push(ReportRow {
                        method: cells[0].into(),
                        mac: cells[1].parse().map_err(|_| parse_err("mac"))?,
                        k: cells[2].parse().map_err(|_| parse_err("K"))?,
                        density: cells[3].parse().map_err(|_| parse_err("density"))?,
                        metric: cells[4].into(),
                        value: cells[5].parse().map_err(|_| parse_err("value"))?,
                        seed: cells[6].parse().map_err(|_| parse_err("seed"))?,
                    })?;
                }
            }
            let mut tsv = String::from("method\tcount\tmean\tstderr\n");
            for s in merged.summaries() {
                tsv.push_str(&format!(
                    "{}\t{}\t{:.17e}\t{:.17e}\n",
                    s.method, s.count, s.mean, s.stderr
                ));
            }
            std::fs::write(out, tsv)?;
        }
    }
    write_manifest(cfg)
}
