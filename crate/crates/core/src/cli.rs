//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 on a computational error, 2 on a usage error.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::dataio::{load_csv, perturb_response, Dataset, DatasetManifest};
use crate::error::{Error, Result};
use crate::numkit::RealMatrix;
use crate::robustrho::{RhoFamily, RhoFunction};
use crate::simlab::{
    noise_reduction_distribution, null_calibration, replication_rng, standard_normals, SimConfig, SimReport,
};
use crate::stepper::{run_stepwise, GateConfig, Method, StepTrace};

pub const EXIT_OK: i32 = 0;
pub const EXIT_COMPUTE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Stream reserved for the fixed covariates of the noise experiment.
const BASE_DESIGN_STREAM: u64 = u64::MAX - 1;

#[derive(Debug, Parser)]
#[command(name = "stepgate", version, about = "Forward stepwise regression gated against pure-noise covariates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Select covariates until the gate first fails.
    Select(DataArgs),
    /// List every covariate in order of inclusion with its step P-value.
    Rank(DataArgs),
    /// Rank the original data and a copy with one response value replaced.
    Perturb(PerturbArgs),
    /// Monte Carlo experiments under pure noise.
    Simulate(SimArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    L2,
    M,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RhoArg {
    #[value(name = "logcosh")]
    LogCosh,
    Huber,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Experiment {
    Null,
    Noise,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Dataset manifest.
    #[arg(long)]
    pub manifest: PathBuf,
    /// CSV file; defaults to the manifest's `file` entry.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "l2")]
    pub method: MethodArg,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Tuning constant of the rho function.
    #[arg(long = "c", default_value_t = 1.0)]
    pub c: f64,
    #[arg(long, value_enum, default_value = "logcosh")]
    pub rho: RhoArg,
    /// Include an intercept (default: the manifest's convention).
    #[arg(long, overrides_with = "no_intercept")]
    pub intercept: bool,
    #[arg(long, overrides_with = "intercept")]
    pub no_intercept: bool,
    /// Standardize covariates (default: the manifest's convention).
    #[arg(long, overrides_with = "no_standardize")]
    pub standardize: bool,
    #[arg(long, overrides_with = "standardize")]
    pub no_standardize: bool,
    #[arg(long)]
    pub max_steps: Option<usize>,
    /// Fixed scale for the M method (debugging only).
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, value_enum, default_value = "table")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct PerturbArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// `INDEX=VALUE`, INDEX counted from 1.
    #[arg(long)]
    pub perturb: String,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    #[arg(long, value_enum, default_value = "null")]
    pub experiment: Experiment,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    /// Candidate covariates (null) or fixed noise covariates beside the
    /// intercept (noise).
    #[arg(long, default_value_t = 20)]
    pub k: usize,
    #[arg(long, default_value_t = 2000)]
    pub reps: usize,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "l2")]
    pub method: MethodArg,
    #[arg(long, value_enum, default_value = "table")]
    pub format: Format,
}

/// A usage problem found after parsing.
#[derive(Debug)]
struct Usage(String);

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::L2 => Method::L2,
            MethodArg::M => Method::M,
        }
    }
}

impl DataArgs {
    fn gate_config(&self, manifest: &DatasetManifest, exhaustive: bool) -> std::result::Result<GateConfig, Usage> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Usage(format!("--alpha must lie in (0, 1), got {}", self.alpha)));
        }
        let family = match self.rho {
            RhoArg::LogCosh => RhoFamily::LogCosh,
            RhoArg::Huber => RhoFamily::Huber,
        };
        let rho = RhoFunction::new(family, self.c).map_err(|e| Usage(format!("--c: {e}")))?;
        if let Some(s) = self.sigma {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Usage(format!("--sigma must be positive, got {s}")));
            }
        }
        let pick = |on: bool, off: bool, default: bool| {
            if on {
                true
            } else if off {
                false
            } else {
                default
            }
        };
        Ok(GateConfig {
            alpha: self.alpha,
            method: self.method.into(),
            rho,
            intercept: pick(self.intercept, self.no_intercept, manifest.intercept),
            standardize: pick(self.standardize, self.no_standardize, manifest.standardize),
            max_steps: self.max_steps,
            exhaustive,
            sigma: self.sigma,
        })
    }

    fn load(&self) -> Result<(Dataset, DatasetManifest)> {
        let manifest = DatasetManifest::load(&self.manifest)?;
        let path = match (&self.data, &manifest.file) {
            (Some(p), _) => p.clone(),
            (None, Some(p)) => p.clone(),
            (None, None) => return Err(Error::Schema("no --data given and the manifest has no `file`".into())),
        };
        Ok((load_csv(path, &manifest)?, manifest))
    }
}

fn parse_perturbation(spec: &str) -> std::result::Result<(usize, f64), Usage> {
    let (i, v) = spec.split_once('=').ok_or_else(|| Usage(format!("--perturb expects INDEX=VALUE, got `{spec}`")))?;
    let index = i.trim().parse().map_err(|_| Usage(format!("bad perturbation index `{i}`")))?;
    let value: f64 = v.trim().parse().map_err(|_| Usage(format!("bad perturbation value `{v}`")))?;
    if !value.is_finite() {
        return Err(Usage("perturbation value must be finite".into()));
    }
    Ok((index, value))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderChange {
    pub step: usize,
    pub before: String,
    pub after: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbReport {
    pub index: usize,
    pub value: f64,
    pub before: StepTrace,
    pub after: StepTrace,
    pub order_diff: Vec<OrderChange>,
}

pub fn order_diff(before: &StepTrace, after: &StepTrace) -> Vec<OrderChange> {
    before
        .evaluations
        .iter()
        .zip(&after.evaluations)
        .filter(|(a, b)| a.chosen_covariate != b.chosen_covariate)
        .map(|(a, b)| OrderChange {
            step: a.step_index,
            before: a.chosen_covariate.clone(),
            after: b.chosen_covariate.clone(),
        })
        .collect()
}

pub fn render_trace(trace: &StepTrace) -> String {
    let mut s = String::new();
    let method = match trace.config.method {
        Method::L2 => "L2",
        Method::M => "M",
    };
    s.push_str(&format!(
        "dataset: {} (n = {}, k = {})  method: {}  alpha: {}\n",
        trace.dataset, trace.n, trace.k, method, trace.config.alpha
    ));
    let width = trace.evaluations.iter().map(|e| e.chosen_covariate.len()).max().unwrap_or(0).max(9);
    s.push_str(&format!(
        "{:>4}  {:<width$}  {:>3}  {:>12}  {:>7}  gate\n",
        "step", "covariate", "k0", "statistic", "p-value"
    ));
    for e in &trace.evaluations {
        s.push_str(&format!(
            "{:>4}  {:<width$}  {:>3}  {:>12.4}  {:>7.4}  {}\n",
            e.step_index,
            e.chosen_covariate,
            e.k0,
            e.statistic,
            e.p_value,
            if e.included { "pass" } else { "fail" }
        ));
    }
    s.push_str(&format!("selected: {}\n", trace.selected.join(", ")));
    s.push_str(&format!("termination: {:?}\n", trace.termination_reason));
    if let Some(note) = &trace.note {
        s.push_str(&format!("note: {note}\n"));
    }
    s
}

pub fn render_sim(experiment: Experiment, config: &SimConfig, report: &SimReport) -> String {
    let mut s = format!(
        "experiment: {:?}  n = {}  k = {}  replications = {}  alpha = {}  seed = {}\n",
        experiment, config.n, config.k, config.replications, config.alpha, config.seed
    );
    s.push_str(&format!("inclusion rate: {:.4}\n", report.inclusion_rate));
    s.push_str(&format!("KS distance to reference law: {:.4}\n", report.ks_distance_chisq));
    s.push_str("p-value histogram:\n");
    let bins = report.p_value_histogram.len() as f64;
    for (i, count) in report.p_value_histogram.iter().enumerate() {
        s.push_str(&format!("  [{:.2}, {:.2})  {count}\n", i as f64 / bins, (i + 1) as f64 / bins));
    }
    s
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| Error::InvalidInput(e.to_string()))
}

/// Why a command failed: bad flags (exit 2) or a library error (exit 1).
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Compute(Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Compute(_) => EXIT_COMPUTE,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Compute(e)
    }
}

impl From<Usage> for Failure {
    fn from(u: Usage) -> Self {
        Failure::Usage(u.0)
    }
}

fn stepwise(args: &DataArgs, exhaustive: bool) -> std::result::Result<String, Failure> {
    let (data, manifest) = args.load()?;
    let config = args.gate_config(&manifest, exhaustive)?;
    let trace = run_stepwise(&data, &config)?;
    Ok(match args.format {
        Format::Table => render_trace(&trace),
        Format::Json => to_json(&trace)?,
    })
}

pub fn cmd_select(args: &DataArgs) -> std::result::Result<String, Failure> {
    stepwise(args, false)
}

pub fn cmd_rank(args: &DataArgs) -> std::result::Result<String, Failure> {
    stepwise(args, true)
}

pub fn cmd_perturb(args: &PerturbArgs) -> std::result::Result<String, Failure> {
    let (index, value) = parse_perturbation(&args.perturb)?;
    let (data, manifest) = args.data.load()?;
    let config = args.data.gate_config(&manifest, true)?;
    let changed = perturb_response(&data, index, value)?;
    let before = run_stepwise(&data, &config)?;
    let after = run_stepwise(&changed, &config)?;
    let report = PerturbReport { index, value, order_diff: order_diff(&before, &after), before, after };
    Ok(match args.data.format {
        Format::Json => to_json(&report)?,
        Format::Table => {
            let mut s = String::from("== original ==\n");
            s.push_str(&render_trace(&report.before));
            s.push_str(&format!("\n== y({index}) = {value} ==\n"));
            s.push_str(&render_trace(&report.after));
            s.push_str("\norder changes:\n");
            if report.order_diff.is_empty() {
                s.push_str("  none\n");
            }
            for c in &report.order_diff {
                s.push_str(&format!("  step {}: {} -> {}\n", c.step, c.before, c.after));
            }
            s
        }
    })
}

pub fn cmd_simulate(args: &SimArgs) -> std::result::Result<String, Failure> {
    let config = SimConfig {
        n: args.n,
        k: args.k,
        replications: args.reps,
        alpha: args.alpha,
        seed: args.seed,
        method: args.method.into(),
    };
    config.validate().map_err(|e| Usage(e.to_string()))?;
    let report = match args.experiment {
        Experiment::Null => {
            if config.k == 0 {
                return Err(Failure::Usage("--k must be at least 1 for the null experiment".into()));
            }
            null_calibration(&config)?
        }
        Experiment::Noise => {
            let mut rng = replication_rng(config.seed, BASE_DESIGN_STREAM);
            let mut base = RealMatrix::from_columns(config.n, &[&vec![1.0; config.n]])?;
            for _ in 0..config.k {
                base = base.with_column(&standard_normals(&mut rng, config.n))?;
            }
            noise_reduction_distribution(&config, &base)?
        }
    };
    Ok(match args.format {
        Format::Table => render_sim(args.experiment, &config, &report),
        Format::Json => to_json(&report)?,
    })
}

fn execute(command: &Command) -> std::result::Result<String, Failure> {
    match command {
        Command::Select(args) => cmd_select(args),
        Command::Rank(args) => cmd_rank(args),
        Command::Perturb(args) => cmd_perturb(args),
        Command::Simulate(args) => cmd_simulate(args),
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit code.
pub fn run<I, T>(args: I, out: &mut impl Write, err: &mut impl Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(text) => {
            let _ = write!(out, "{text}");
            if !text.ends_with('\n') {
                let _ = writeln!(out);
            }
            EXIT_OK
        }
        Err(failure) => {
            let _ = match &failure {
                Failure::Usage(msg) => writeln!(err, "usage error: {msg}"),
                Failure::Compute(e) => writeln!(err, "error: {}: {e}", e.class()),
            };
            failure.exit_code()
        }
    }
}
