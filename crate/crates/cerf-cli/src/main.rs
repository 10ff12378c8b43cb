use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cerf_cli::config::ConfigFile;
use cerf_cli::error::{CliError, Result};
use cerf_cli::run::{load_manifest, run, KernelParams, RunConfig};

/// Train and evaluate computation-efficient random Fourier features.
#[derive(Parser)]
#[command(name = "cerf", version, disable_help_subcommand = true)]
struct Cli {
    /// Re-execute a previous run from its manifest file.
    #[arg(long, global = true, value_name = "PATH")]
    from_manifest: Option<PathBuf>,
    /// Cap the rayon worker count (default: CERF_THREADS env var, else all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset as headerless CSV.
    GenData(GenDataArgs),
    /// Sample a random embedding and write its archive.
    Sample(SampleArgs),
    /// Train a CERF embedding against a dense teacher.
    Train(TrainArgs),
    /// Kernel-approximation error of a learner gram against a teacher gram.
    EvalApprox(EvalApproxArgs),
    /// Ridge-autoencoding normalized reconstruction error.
    EvalAutoencoder(EvalAutoencoderArgs),
    /// Data-completion normalized error with blocked-out dimensions.
    EvalCompletion(EvalCompletionArgs),
    /// One-vs-rest ridge classification accuracy.
    EvalClassify(EvalClassifyArgs),
    /// Aggregate measurement CSVs into a figure-ready TSV.
    Report(ReportArgs),
}

#[derive(Args)]
struct ConfigArg {
    /// Config file; every flag overrides the matching key.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
}

impl ConfigArg {
    fn load(&self, schema: &[(&str, &str)]) -> Result<ConfigFile> {
        let file = match &self.config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };
        file.check_schema(schema)?;
        Ok(file)
    }
}

fn require<T>(value: Option<T>, what: &str) -> Result<T> {
    value.ok_or_else(|| CliError::Usage(format!("missing required parameter '{what}'")))
}

macro_rules! pick {
    ($flag:expr, $file:expr, $section:literal, $key:literal) => {
        match $flag.clone() {
            Some(v) => Some(v),
            None => $file.get_parsed($section, $key)?,
        }
    };
    ($flag:expr, $file:expr, $section:literal, $key:literal, $default:expr) => {
        pick!($flag, $file, $section, $key).unwrap_or($default)
    };
}

const KERNEL_SCHEMA: [(&str, &str); 4] = [
    ("kernel", "family"),
    ("kernel", "kappa"),
    ("kernel", "kappa2"),
    ("kernel", "first"),
];

#[derive(Args)]
struct KernelArgs {
    /// Kernel family: gaussian, cauchy, or product.
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    kappa: Option<f64>,
    /// Second bandwidth for the product family.
    #[arg(long)]
    kappa2: Option<f64>,
    /// First factor of the product family: gaussian or cauchy.
    #[arg(long)]
    first: Option<String>,
}

impl KernelArgs {
    fn resolve(&self, file: &ConfigFile) -> Result<KernelParams> {
        let defaults = KernelParams::default();
        Ok(KernelParams {
            family: pick!(self.family, file, "kernel", "family", defaults.family),
            kappa: pick!(self.kappa, file, "kernel", "kappa", defaults.kappa),
            kappa2: pick!(self.kappa2, file, "kernel", "kappa2", defaults.kappa2),
            first: pick!(self.first, file, "kernel", "first", defaults.first),
        })
    }
}

#[derive(Args)]
struct GenDataArgs {
    #[command(flatten)]
    config: ConfigArg,
    /// Dataset kind: synthetic or blobs.
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    centers: Option<usize>,
    #[arg(long)]
    spread: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl GenDataArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let schema = [
            ("data", "kind"),
            ("data", "n"),
            ("data", "d"),
            ("data", "centers"),
            ("data", "spread"),
            ("data", "seed"),
            ("data", "out"),
        ];
        let file = self.config.load(&schema)?;
        Ok(RunConfig::GenData {
            kind: pick!(self.kind, file, "data", "kind", "synthetic".into()),
            n: pick!(self.n, file, "data", "n", 200),
            d: pick!(self.d, file, "data", "d", 8),
            centers: pick!(self.centers, file, "data", "centers", 2),
            spread: pick!(self.spread, file, "data", "spread", 1.0),
            seed: pick!(self.seed, file, "data", "seed", 0),
            out: require(pick!(self.out, file, "data", "out"), "out")?,
        })
    }
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[command(flatten)]
    kernel: KernelArgs,
    /// Embedding kind: dense, masked, or blocked.
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    density: Option<f64>,
    #[arg(long)]
    group_exponent: Option<u32>,
    #[arg(long)]
    blocks: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl SampleArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut schema = vec![
            ("embedding", "kind"),
            ("embedding", "d"),
            ("embedding", "k"),
            ("embedding", "gamma"),
            ("embedding", "density"),
            ("embedding", "group_exponent"),
            ("embedding", "blocks"),
            ("embedding", "seed"),
            ("embedding", "out"),
        ];
        schema.extend_from_slice(&KERNEL_SCHEMA);
        let file = self.config.load(&schema)?;
        Ok(RunConfig::Sample {
            kind: pick!(self.kind, file, "embedding", "kind", "dense".into()),
            kernel: self.kernel.resolve(&file)?,
            d: require(pick!(self.d, file, "embedding", "d"), "d")?,
            k: require(pick!(self.k, file, "embedding", "k"), "k")?,
            gamma: pick!(self.gamma, file, "embedding", "gamma", 1.0),
            density: pick!(self.density, file, "embedding", "density", 0.4),
            group_exponent: pick!(self.group_exponent, file, "embedding", "group_exponent", 0),
            blocks: pick!(self.blocks, file, "embedding", "blocks", 1),
            seed: pick!(self.seed, file, "embedding", "seed", 0),
            out: require(pick!(self.out, file, "embedding", "out"), "out")?,
        })
    }
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[command(flatten)]
    kernel: KernelArgs,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    dict_components: Option<usize>,
    #[arg(long)]
    dict_spread: Option<f64>,
    #[arg(long)]
    sigma_sq: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    density: Option<f64>,
    #[arg(long)]
    max_stages: Option<usize>,
    #[arg(long)]
    e_sweeps: Option<usize>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    alpha0: Option<f64>,
    #[arg(long)]
    admm_iters: Option<usize>,
    #[arg(long)]
    primal_tol: Option<f64>,
    #[arg(long)]
    post_stages: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON-lines per-stage diagnostics output path.
    #[arg(long)]
    trace: Option<PathBuf>,
}

impl TrainArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut schema = vec![
            ("train", "data"),
            ("train", "k"),
            ("train", "dict_components"),
            ("train", "dict_spread"),
            ("train", "sigma_sq"),
            ("train", "gamma"),
            ("train", "density"),
            ("train", "max_stages"),
            ("train", "e_sweeps"),
            ("train", "mu"),
            ("train", "alpha0"),
            ("train", "admm_iters"),
            ("train", "primal_tol"),
            ("train", "post_stages"),
            ("train", "seed"),
            ("train", "out"),
            ("train", "trace"),
        ];
        schema.extend_from_slice(&KERNEL_SCHEMA);
        let file = self.config.load(&schema)?;
        let out: PathBuf = require(pick!(self.out, file, "train", "out"), "out")?;
        let default_trace = out.with_extension("trace.jsonl");
        Ok(RunConfig::Train {
            data: require(pick!(self.data, file, "train", "data"), "data")?,
            kernel: self.kernel.resolve(&file)?,
            k: require(pick!(self.k, file, "train", "k"), "k")?,
            dict_components: pick!(self.dict_components, file, "train", "dict_components", 8),
            dict_spread: pick!(self.dict_spread, file, "train", "dict_spread", 0.5),
            sigma_sq: pick!(self.sigma_sq, file, "train", "sigma_sq", 1.0),
            gamma: pick!(self.gamma, file, "train", "gamma", 1.0),
            density: pick!(self.density, file, "train", "density", 0.4),
            max_stages: pick!(self.max_stages, file, "train", "max_stages", 20),
            e_sweeps: pick!(self.e_sweeps, file, "train", "e_sweeps", 3),
            mu: pick!(self.mu, file, "train", "mu", 1.0),
            alpha0: pick!(self.alpha0, file, "train", "alpha0", 1.0),
            admm_iters: pick!(self.admm_iters, file, "train", "admm_iters", 200),
            primal_tol: pick!(self.primal_tol, file, "train", "primal_tol", 1e-5),
            post_stages: pick!(self.post_stages, file, "train", "post_stages", 3),
            seed: pick!(self.seed, file, "train", "seed", 0),
            trace: pick!(self.trace, file, "train", "trace", default_trace),
            out,
        })
    }
}

#[derive(Args)]
struct EvalApproxArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long)]
    teacher: Option<PathBuf>,
    #[arg(long)]
    learner: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    normalize: Option<bool>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl EvalApproxArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let schema = [
            ("eval", "teacher"),
            ("eval", "learner"),
            ("eval", "data"),
            ("eval", "normalize"),
            ("eval", "seed"),
            ("eval", "out"),
        ];
        let file = self.config.load(&schema)?;
        Ok(RunConfig::EvalApprox {
            teacher: require(pick!(self.teacher, file, "eval", "teacher"), "teacher")?,
            learner: require(pick!(self.learner, file, "eval", "learner"), "learner")?,
            data: require(pick!(self.data, file, "eval", "data"), "data")?,
            normalize: pick!(self.normalize, file, "eval", "normalize", true),
            seed: pick!(self.seed, file, "eval", "seed", 0),
            out: require(pick!(self.out, file, "eval", "out"), "out")?,
        })
    }
}

#[derive(Args)]
struct EvalAutoencoderArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long)]
    map: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    j: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl EvalAutoencoderArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let schema = [
            ("eval", "map"),
            ("eval", "data"),
            ("eval", "j"),
            ("eval", "seed"),
            ("eval", "out"),
        ];
        let file = self.config.load(&schema)?;
        Ok(RunConfig::EvalAutoencoder {
            map: require(pick!(self.map, file, "eval", "map"), "map")?,
            data: require(pick!(self.data, file, "eval", "data"), "data")?,
            j: pick!(self.j, file, "eval", "j", 15),
            seed: pick!(self.seed, file, "eval", "seed", 0),
            out: require(pick!(self.out, file, "eval", "out"), "out")?,
        })
    }
}

#[derive(Args)]
struct EvalCompletionArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long)]
    map: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    missing: Option<f64>,
    #[arg(long)]
    j: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl EvalCompletionArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let schema = [
            ("eval", "map"),
            ("eval", "data"),
            ("eval", "missing"),
            ("eval", "j"),
            ("eval", "seed"),
            ("eval", "out"),
        ];
        let file = self.config.load(&schema)?;
        Ok(RunConfig::EvalCompletion {
            map: require(pick!(self.map, file, "eval", "map"), "map")?,
            data: require(pick!(self.data, file, "eval", "data"), "data")?,
            missing: pick!(self.missing, file, "eval", "missing", 0.2),
            j: pick!(self.j, file, "eval", "j", 15),
            seed: pick!(self.seed, file, "eval", "seed", 0),
            out: require(pick!(self.out, file, "eval", "out"), "out")?,
        })
    }
}

#[derive(Args)]
struct EvalClassifyArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long)]
    map: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl EvalClassifyArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let schema = [
            ("eval", "map"),
            ("eval", "data"),
            ("eval", "folds"),
            ("eval", "seed"),
            ("eval", "out"),
        ];
        let file = self.config.load(&schema)?;
        Ok(RunConfig::EvalClassify {
            map: require(pick!(self.map, file, "eval", "map"), "map")?,
            data: require(pick!(self.data, file, "eval", "data"), "data")?,
            folds: pick!(self.folds, file, "eval", "folds", 5),
            seed: pick!(self.seed, file, "eval", "seed", 0),
            out: require(pick!(self.out, file, "eval", "out"), "out")?,
        })
    }
}

#[derive(Args)]
struct ReportArgs {
    #[command(flatten)]
    config: ConfigArg,
    /// Measurement CSVs to merge.
    #[arg(long, num_args = 1..)]
    inputs: Vec<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl ReportArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let schema = [("report", "out")];
        let file = self.config.load(&schema)?;
        if self.inputs.is_empty() {
            return Err(CliError::Usage("report needs at least one --inputs file".into()));
        }
        Ok(RunConfig::Report {
            inputs: self.inputs.clone(),
            out: require(pick!(self.out, file, "report", "out"), "out")?,
        })
    }
}

fn resolve(cli: &Cli) -> Result<RunConfig> {
    if let Some(manifest) = &cli.from_manifest {
        if cli.command.is_some() {
            return Err(CliError::Usage(
                "--from-manifest replaces the subcommand; give one or the other".into(),
            ));
        }
        return load_manifest(manifest);
    }
    match &cli.command {
        None => Err(CliError::Usage(
            "expected a subcommand or --from-manifest".into(),
        )),
        Some(Command::GenData(a)) => a.resolve(),
        Some(Command::Sample(a)) => a.resolve(),
        Some(Command::Train(a)) => a.resolve(),
        Some(Command::EvalApprox(a)) => a.resolve(),
        Some(Command::EvalAutoencoder(a)) => a.resolve(),
        Some(Command::EvalCompletion(a)) => a.resolve(),
        Some(Command::EvalClassify(a)) => a.resolve(),
        Some(Command::Report(a)) => a.resolve(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version requests are successes; everything else is usage.
            let benign = matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            let _ = e.print();
            return if benign { ExitCode::SUCCESS } else { ExitCode::from(1) };
        }
    };
    let threads = cli
        .threads
        .or_else(|| std::env::var("CERF_THREADS").ok().and_then(|v| v.parse().ok()));
    if let Some(t) = threads {
        if rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .is_err()
        {
            eprintln!("warning: thread pool already initialized; --threads ignored");
        }
    }
    match resolve(&cli).and_then(|cfg| run(&cfg)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
