use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use tfc_homotopy::problems::problem_names;
use tfc_homotopy::TrackerConfig;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum TrackerKind {
    Dcm,
    Pam,
    Tfc,
}

impl TrackerKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            TrackerKind::Dcm => "dcm",
            TrackerKind::Pam => "pam",
            TrackerKind::Tfc => "tfc",
        }
    }

    pub fn default_homotopy(&self) -> HomotopyKind {
        match self {
            TrackerKind::Tfc => HomotopyKind::TfcPoly,
            _ => HomotopyKind::Convex,
        }
    }
}

/// `convex` uses the problem's own auxiliary; `embedded` is the problem's
/// κ-dependent formulation, where it has one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum HomotopyKind {
    Convex,
    ConvexFixedPoint,
    ConvexNewton,
    ConvexAffine,
    Embedded,
    TfcPoly,
    TfcExpPos,
    TfcExpNeg,
}

impl HomotopyKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            HomotopyKind::Convex => "convex",
            HomotopyKind::ConvexFixedPoint => "convex_fixed_point",
            HomotopyKind::ConvexNewton => "convex_newton",
            HomotopyKind::ConvexAffine => "convex_affine",
            HomotopyKind::Embedded => "embedded",
            HomotopyKind::TfcPoly => "tfc_poly",
            HomotopyKind::TfcExpPos => "tfc_exp_pos",
            HomotopyKind::TfcExpNeg => "tfc_exp_neg",
        }
    }

    pub fn is_tfc(&self) -> bool {
        matches!(self, HomotopyKind::TfcPoly | HomotopyKind::TfcExpPos | HomotopyKind::TfcExpNeg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Format {
    Jsonl,
    Csv,
}

/// Partial [`TrackerConfig`]; set fields replace the problem's defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackerOverrides {
    pub dkappa_default: Option<f64>,
    pub tol_f: Option<f64>,
    pub tol_x: Option<f64>,
    pub max_corrector_iters: Option<usize>,
    pub max_consecutive_fails: Option<usize>,
    pub growth_threshold: Option<f64>,
    pub sing_det_threshold: Option<f64>,
    pub discount: Option<f64>,
    pub horizon: Option<usize>,
    pub n_predicted: Option<usize>,
    pub max_switches: Option<usize>,
    pub ladder_depth: Option<usize>,
    pub max_steps: Option<usize>,
}

macro_rules! each_override {
    ($m:ident) => {
        $m!(
            dkappa_default,
            tol_f,
            tol_x,
            max_corrector_iters,
            max_consecutive_fails,
            growth_threshold,
            sing_det_threshold,
            discount,
            horizon,
            n_predicted,
            max_switches,
            ladder_depth,
            max_steps
        )
    };
}

impl TrackerOverrides {
    pub fn apply(&self, config: &mut TrackerConfig) {
        macro_rules! set {
            ($($f:ident),*) => { $(if let Some(v) = self.$f { config.$f = v; })* };
        }
        each_override!(set);
    }

    /// Fields set in `other` win.
    pub fn merge(&mut self, other: &TrackerOverrides) {
        macro_rules! take {
            ($($f:ident),*) => { $(if other.$f.is_some() { self.$f = other.$f; })* };
        }
        each_override!(take);
    }
}

/// One run as read from a `--config` file or assembled from flags. Every
/// field is optional so that flags can be layered over a file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunFile {
    pub problem: Option<String>,
    pub tracker: Option<TrackerKind>,
    pub homotopy: Option<HomotopyKind>,
    pub tracker_params: TrackerOverrides,
    /// Pseudo-arclength step; defaults to the problem's.
    pub arclength_step: Option<f64>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub formats: Option<Vec<Format>>,
}

impl RunFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text =
            fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// `other` layered over `self`.
    pub fn merged(mut self, other: &RunFile) -> RunFile {
        macro_rules! take {
            ($($f:ident),*) => { $(if other.$f.is_some() { self.$f = other.$f.clone(); })* };
        }
        take!(problem, tracker, homotopy, arclength_step, seed, output_dir, formats);
        self.tracker_params.merge(&other.tracker_params);
        self
    }

    pub fn resolve(self) -> Result<RunConfig, CliError> {
        let problem = self.problem.ok_or_else(|| CliError::Config("no problem given (--problem)".into()))?;
        if !problem_names().contains(&problem.as_str()) {
            return Err(CliError::Config(format!(
                "unknown problem {problem:?}; known: {}",
                problem_names().join(", ")
            )));
        }
        let tracker = self.tracker.unwrap_or(TrackerKind::Tfc);
        let homotopy = self.homotopy.unwrap_or_else(|| tracker.default_homotopy());
        if tracker == TrackerKind::Tfc && !homotopy.is_tfc() {
            return Err(CliError::Config(format!("tracker tfc needs a tfc_* homotopy, got {}", homotopy.as_str())));
        }
        if let Some(ds) = self.arclength_step {
            if !(ds > 0.0 && ds.is_finite()) {
                return Err(CliError::Config(format!("arclength step must be positive, got {ds}")));
            }
        }
        let formats = self.formats.unwrap_or_else(|| vec![Format::Jsonl, Format::Csv]);
        Ok(RunConfig {
            problem,
            tracker,
            homotopy,
            tracker_params: self.tracker_params,
            arclength_step: self.arclength_step,
            seed: self.seed.unwrap_or(0),
            output_dir: self.output_dir.unwrap_or_else(|| PathBuf::from("out")),
            formats,
        })
    }
}

/// A fully specified run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub problem: String,
    pub tracker: TrackerKind,
    pub homotopy: HomotopyKind,
    pub tracker_params: TrackerOverrides,
    pub arclength_step: Option<f64>,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub formats: Vec<Format>,
}
