use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use tfc_homotopy::homotopy::SupportKind;
use tfc_homotopy::linalg;
use tfc_homotopy::problems::{problem_by_name, BenchmarkProblem};
use tfc_homotopy::trace::EventPayload;
use tfc_homotopy::{
    dcm_track, pam_track, two_layer_track, AuxiliaryKind, EventKind, Homotopy, Outcome, PathTrace, PenaltySwitcher,
    SwitchParams, TrackerConfig,
};

use crate::config::{Format, HomotopyKind, RunConfig, TrackerKind};
use crate::CliError;

/// Everything `summary.json` holds. Field order is fixed so identical runs
/// give identical files apart from `wall_time_s`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub problem: String,
    pub tracker: &'static str,
    pub homotopy: &'static str,
    pub seed: u64,
    pub outcome: Outcome,
    pub exit_code: i32,
    pub final_kappa: f64,
    pub final_point: Vec<f64>,
    /// `‖F(x)‖∞` at the final point.
    pub residual_norm: f64,
    pub switch_count: usize,
    pub accepted_steps: usize,
    pub halvings: usize,
    pub limit_points: usize,
    pub threshold_crossings: usize,
    /// Weight matrix of every path visited, starting with the initial one.
    pub omega_history: Vec<Vec<Vec<f64>>>,
    pub config: TrackerConfig,
    pub arclength_step: Option<f64>,
    pub wall_time_s: f64,
}

pub struct RunReport {
    pub config: RunConfig,
    pub trace: PathTrace,
    pub summary: Summary,
}

pub fn exit_code(outcome: Outcome) -> i32 {
    match outcome {
        Outcome::Success => 0,
        Outcome::LimitPointStall | Outcome::ReturnedToStart => 2,
        Outcome::Diverged => 3,
        Outcome::MaxSwitchesExceeded | Outcome::Aborted | Outcome::CorrectorFailure => 4,
    }
}

fn support(kind: HomotopyKind) -> Option<SupportKind> {
    match kind {
        HomotopyKind::TfcPoly => Some(SupportKind::Poly),
        HomotopyKind::TfcExpPos => Some(SupportKind::ExpPos),
        HomotopyKind::TfcExpNeg => Some(SupportKind::ExpNeg),
        _ => None,
    }
}

fn single<H: Homotopy>(h: &H, tracker: TrackerKind, start: &[f64], ds: f64, config: &TrackerConfig) -> PathTrace {
    match tracker {
        TrackerKind::Pam => pam_track(h, start, ds, config),
        _ => dcm_track(h, start, config),
    }
}

/// Tracks the configured run and returns its trace and summary. Nothing is
/// written to disk.
pub fn execute(cfg: &RunConfig) -> Result<RunReport, CliError> {
    let p: BenchmarkProblem = problem_by_name(&cfg.problem)?;
    let mut tc = p.config;
    cfg.tracker_params.apply(&mut tc);
    tc.validate()?;
    let ds = cfg.arclength_step.unwrap_or(p.arclength_step);
    log::info!("{} with {} on {}", cfg.tracker.as_str(), cfg.homotopy.as_str(), cfg.problem);
    log::debug!("tracker config {tc:?}");

    let start = Instant::now();
    let mut omega_history = Vec::new();
    let trace = match cfg.homotopy {
        HomotopyKind::Convex => single(&p.convex()?, cfg.tracker, p.start(), ds, &tc),
        HomotopyKind::ConvexFixedPoint => {
            single(&p.convex_with(AuxiliaryKind::FixedPoint)?, cfg.tracker, p.start(), ds, &tc)
        }
        HomotopyKind::ConvexNewton => single(&p.convex_with(AuxiliaryKind::Newton)?, cfg.tracker, p.start(), ds, &tc),
        HomotopyKind::ConvexAffine => single(&p.convex_with(AuxiliaryKind::Affine)?, cfg.tracker, p.start(), ds, &tc),
        HomotopyKind::Embedded => {
            let h = p
                .embedded
                .as_ref()
                .ok_or_else(|| CliError::Config(format!("problem {} has no embedded homotopy", cfg.problem)))?;
            single(h, cfg.tracker, p.start(), ds, &tc)
        }
        kind => {
            let h = p.tfc(support(kind).expect("tfc kinds have a support"))?;
            omega_history.push(rows(h.omega()));
            match cfg.tracker {
                TrackerKind::Tfc => {
                    let switcher = PenaltySwitcher::new(SwitchParams::from_config(&tc, cfg.seed));
                    let t = two_layer_track(&h, &tc, &switcher);
                    for e in t.events_of(EventKind::SwitchSolved) {
                        if let Some(EventPayload::Switch { omega, .. }) = &e.payload {
                            omega_history.push(omega.clone());
                        }
                    }
                    t
                }
                other => single(&h.current_path(), other, p.start(), ds, &tc),
            }
        }
    };
    let wall_time_s = start.elapsed().as_secs_f64();

    let last = trace.last_point().cloned();
    let (final_kappa, final_point) = last.map_or((0.0, p.start().to_vec()), |l| (l.kappa, l.x));
    let residual_norm = p.objective.residual(&final_point).map_or(f64::INFINITY, |r| linalg::norm_inf(&r));
    let summary = Summary {
        problem: cfg.problem.clone(),
        tracker: cfg.tracker.as_str(),
        homotopy: cfg.homotopy.as_str(),
        seed: cfg.seed,
        outcome: trace.outcome,
        exit_code: exit_code(trace.outcome),
        final_kappa,
        final_point,
        residual_norm,
        switch_count: trace.switch_count(),
        accepted_steps: trace.count(EventKind::StepAccepted),
        halvings: trace.count(EventKind::StepHalved),
        limit_points: trace.count(EventKind::LimitPointDetected),
        threshold_crossings: trace.count(EventKind::ThresholdCrossed),
        omega_history,
        config: tc,
        arclength_step: (cfg.tracker == TrackerKind::Pam).then_some(ds),
        wall_time_s,
    };
    log::info!("{} after {} accepted steps in {:.3}s", trace.outcome, summary.accepted_steps, wall_time_s);
    Ok(RunReport { config: cfg.clone(), trace, summary })
}

fn rows(m: &tfc_homotopy::DenseMatrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic<F>(path: &Path, write: F) -> Result<(), CliError>
where
    F: FnOnce(&mut BufWriter<File>) -> Result<(), CliError>,
{
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    let mut w = BufWriter::new(File::create(&tmp)?);
    write(&mut w)?;
    w.flush()?;
    w.get_ref().sync_all()?;
    drop(w);
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_artifacts(report: &RunReport, dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    let formats = &report.config.formats;
    if formats.contains(&Format::Jsonl) {
        write_atomic(&dir.join("trace.jsonl"), |w| Ok(report.trace.write_jsonl(w)?))?;
        write_atomic(&dir.join("events.jsonl"), |w| Ok(report.trace.write_events_jsonl(w)?))?;
    }
    if formats.contains(&Format::Csv) {
        write_atomic(&dir.join("trace.csv"), |w| Ok(report.trace.write_csv(w)?))?;
    }
    write_atomic(&dir.join("summary.json"), |w| {
        serde_json::to_writer_pretty(&mut *w, &report.summary).map_err(|e| CliError::Io(e.into()))?;
        writeln!(w)?;
        Ok(())
    })
}
