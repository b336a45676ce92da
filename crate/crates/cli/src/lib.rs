//! Command-line runner for the trackers in `tfc-homotopy`.
//!
//! `tfch run` tracks one problem and writes `trace.jsonl`, `trace.csv`,
//! `events.jsonl` and `summary.json`; `tfch compare` runs several
//! configurations on one problem side by side and adds `compare.csv`.
//! The exit code of `run` encodes the outcome.

pub mod compare;
pub mod config;
pub mod run;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use tfc_homotopy::problems::problem_names;
use tfc_homotopy::HomotopyError;

use config::{Format, HomotopyKind, RunConfig, RunFile, TrackerKind, TrackerOverrides};

pub const EXIT_CONFIG: i32 = 5;
pub const EXIT_RUNTIME: i32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Homotopy(HomotopyError),
}

impl From<HomotopyError> for CliError {
    fn from(e: HomotopyError) -> Self {
        match e {
            HomotopyError::Config(m) => CliError::Config(m),
            e @ HomotopyError::Dimension { .. } => CliError::Config(e.to_string()),
            e => CliError::Homotopy(e),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            _ => EXIT_RUNTIME,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "tfch", version, about = "Homotopy continuation with limit-point path switching")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Track one problem and write its trace and summary.
    Run(RunArgs),
    /// Run several configurations on one problem and tabulate them.
    Compare(CompareArgs),
    /// List the built-in problems.
    Problems,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub problem: Option<String>,
    /// Default continuation step Δκ.
    #[arg(long)]
    pub dkappa: Option<f64>,
    /// Growth threshold T_h on ‖x‖∞.
    #[arg(long)]
    pub th: Option<f64>,
    /// Singularity threshold δ on |det ∂Γ/∂x| at a switch.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Discount γ on far-side errors.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Far-side spacing ζ in steps.
    #[arg(long)]
    pub zeta: Option<usize>,
    /// Number of far-side points N.
    #[arg(long)]
    pub npred: Option<usize>,
    /// Pseudo-arclength step.
    #[arg(long)]
    pub ds: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Trace formats, comma separated.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub format: Vec<Format>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum)]
    pub tracker: Option<TrackerKind>,
    #[arg(long, value_enum)]
    pub homotopy: Option<HomotopyKind>,
    /// JSON run configuration; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// One run per tracker, each with its default homotopy.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub tracker: Vec<TrackerKind>,
    /// One run per file.
    #[arg(long)]
    pub config: Vec<PathBuf>,
}

impl CommonArgs {
    fn to_file(&self) -> RunFile {
        RunFile {
            problem: self.problem.clone(),
            tracker: None,
            homotopy: None,
            tracker_params: TrackerOverrides {
                dkappa_default: self.dkappa,
                growth_threshold: self.th,
                sing_det_threshold: self.delta,
                discount: self.gamma,
                horizon: self.zeta,
                n_predicted: self.npred,
                ..Default::default()
            },
            arclength_step: self.ds,
            seed: self.seed,
            output_dir: self.out.clone(),
            formats: (!self.format.is_empty()).then(|| self.format.clone()),
        }
    }
}

pub fn run_config(args: &RunArgs) -> Result<RunConfig, CliError> {
    let base = match &args.config {
        Some(p) => RunFile::load(p)?,
        None => RunFile::default(),
    };
    let flags = RunFile { tracker: args.tracker, homotopy: args.homotopy, ..args.common.to_file() };
    base.merged(&flags).resolve()
}

pub fn compare_configs(args: &CompareArgs) -> Result<Vec<RunConfig>, CliError> {
    let flags = args.common.to_file();
    let mut runs = Vec::new();
    for p in &args.config {
        runs.push(RunFile::load(p)?.merged(&flags).resolve()?);
    }
    for t in &args.tracker {
        runs.push(RunFile { tracker: Some(*t), ..flags.clone() }.resolve()?);
    }
    Ok(runs)
}

/// Executes a parsed command and returns the process exit code.
pub fn dispatch(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Problems => {
            for name in problem_names() {
                println!("{name}");
            }
            Ok(0)
        }
        Command::Run(args) => {
            let cfg = run_config(&args)?;
            let report = run::execute(&cfg)?;
            run::write_artifacts(&report, &cfg.output_dir)?;
            let s = &report.summary;
            println!(
                "{} at kappa {} x {:?}, residual {:.3e}, {} switch(es), wrote {}",
                s.outcome,
                s.final_kappa,
                s.final_point,
                s.residual_norm,
                s.switch_count,
                cfg.output_dir.display()
            );
            Ok(s.exit_code)
        }
        Command::Compare(args) => {
            let runs = compare_configs(&args)?;
            let dir = args.common.out.clone().unwrap_or_else(|| PathBuf::from("out"));
            let reports = compare::compare(&runs, &dir)?;
            for r in &reports {
                let s = &r.summary;
                println!("{:<4} {:<20} {:<22} {:.4}", s.tracker, s.homotopy, s.outcome.to_string(), s.final_kappa);
            }
            println!("wrote {}", dir.join("compare.csv").display());
            Ok(0)
        }
    }
}
