use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use nssvm::{Profile, Settings};

#[derive(Debug, Parser)]
#[command(name = "nssvm", version, about = "Sparse linear SVM via a hard-thresholded Newton method")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a model on a libsvm file and write it as JSON.
    Train(TrainArgs),
    /// Label samples with a saved model.
    Predict(PredictArgs),
    /// Repeated-trial benchmark on synthetic or loaded data.
    Bench(BenchArgs),
    /// Write the two-Gaussian benchmark data as libsvm files.
    Synth(SynthArgs),
    /// Check the stationarity conditions of a model, and compare with
    /// exhaustive enumeration on tiny instances.
    Certify(CertifyArgs),
}

/// Solver knobs shared by every subcommand that fits a model.
#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Parameter preset; defaults to real-default for files and to the
    /// size-based synthetic preset for generated data.
    #[arg(long)]
    pub profile: Option<Profile>,
    /// Penalty on positive dual coordinates.
    #[arg(long = "C", value_name = "C")]
    pub big_c: Option<f64>,
    /// Ratio c/C for the penalty on negative dual coordinates.
    #[arg(long, default_value_t = nssvm::profile::DEFAULT_C_RATIO)]
    pub c_ratio: f64,
    /// Step parameter of the working-set rule; defaults to 1/m.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Initial sparsity level; overrides --beta.
    #[arg(long, visible_alias = "fixed-s")]
    pub s: Option<usize>,
    /// Coefficient of the data-dependent initial sparsity level.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Growth factor for the sparsity level.
    #[arg(long, default_value_t = nssvm::adaptive::DEFAULT_SIGMA)]
    pub sigma: f64,
    /// Keep the sparsity level fixed (sigma = 1, plain Newton iterations).
    #[arg(long)]
    pub no_tune: bool,
    /// Residual tolerance; defaults to max(sqrt m, sqrt n) * 1e-6.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Step cap for each fixed-s run.
    #[arg(long, default_value_t = nssvm::newton::DEFAULT_MAX_ITER)]
    pub max_iter: usize,
    /// Cap on adaptive iterations.
    #[arg(long, default_value_t = nssvm::adaptive::DEFAULT_MAX_IT)]
    pub max_it: usize,
    /// Registered solver name.
    #[arg(long)]
    pub solver: Option<String>,
}

impl SolverArgs {
    pub fn settings(&self, fallback: Profile) -> Settings {
        let mut st = Settings::new(self.profile.unwrap_or(fallback));
        st.big_c = self.big_c;
        st.c_ratio = self.c_ratio;
        st.eta = self.eta;
        st.s = self.s;
        st.beta = self.beta;
        st.sigma = if self.no_tune { 1.0 } else { self.sigma };
        st.eps = self.eps;
        st.max_iter = self.max_iter;
        st.max_it = self.max_it;
        st
    }

    pub fn solver_name(&self) -> Result<String> {
        match (&self.solver, self.no_tune) {
            (Some(name), true) if name != "newton" => {
                bail!("--no-tune runs the fixed-s Newton solver; it conflicts with --solver {name}")
            }
            (Some(name), _) => Ok(name.clone()),
            (None, true) => Ok("newton".into()),
            (None, false) => Ok("nssvm".into()),
        }
    }
}

/// Preprocessing applied to loaded files.
#[derive(Debug, Clone, Args)]
pub struct DataPrep {
    /// Map every feature column onto [-1, 1] (fitted on the training data).
    #[arg(long)]
    pub scale: bool,
    /// Map label 1 to +1 and every other label to -1.
    #[arg(long)]
    pub binarize: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Optional labeled test file for TACC.
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[arg(long, default_value = "model.json")]
    pub output: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub prep: DataPrep,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Label file; standard output when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepParam {
    Eta,
    #[value(name = "C")]
    BigC,
    CRatio,
    S,
    Beta,
    Sigma,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Eta => "eta",
            SweepParam::BigC => "C",
            SweepParam::CRatio => "c-ratio",
            SweepParam::S => "s",
            SweepParam::Beta => "beta",
            SweepParam::Sigma => "sigma",
        }
    }

    pub fn apply(self, st: &mut Settings, value: f64) -> Result<()> {
        match self {
            SweepParam::Eta => st.eta = Some(value),
            SweepParam::BigC => st.big_c = Some(value),
            SweepParam::CRatio => st.c_ratio = value,
            SweepParam::S => {
                if value < 1.0 || value.fract() != 0.0 {
                    bail!("sweep value {value} is not a positive integer sparsity level");
                }
                st.s = Some(value as usize);
            }
            SweepParam::Beta => {
                st.beta = Some(value);
                st.s = None;
            }
            SweepParam::Sigma => st.sigma = value,
        }
        Ok(())
    }
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Use the two-Gaussian generator instead of a file.
    #[arg(long, requires = "m", conflicts_with = "data")]
    pub synthetic: bool,
    /// Training samples per synthetic trial.
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long, required_unless_present = "synthetic")]
    pub data: Option<PathBuf>,
    /// Training fraction of a per-trial random split of --data; without it
    /// the whole file trains and no test accuracy is reported.
    #[arg(long, conflicts_with = "synthetic")]
    pub split: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    /// First seed; trial k uses seed + k.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Report file; standard output when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Parameter to vary across --values.
    #[arg(long, value_enum, requires = "values")]
    pub sweep: Option<SweepParam>,
    #[arg(long, value_delimiter = ',', requires = "sweep")]
    pub values: Vec<f64>,
    /// Run trials one after another on a single thread.
    #[arg(long)]
    pub serial: bool,
    /// Zero every timing field in the report.
    #[arg(long)]
    pub no_timing: bool,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub prep: DataPrep,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Samples per half.
    #[arg(long)]
    pub m: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub train_out: PathBuf,
    #[arg(long)]
    pub test_out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Certify this model; without it a model is fitted first.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub prep: DataPrep,
}
