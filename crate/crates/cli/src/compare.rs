use std::fs;
use std::path::Path;
use std::thread;

use crate::config::RunConfig;
use crate::run::{execute, write_artifacts, write_atomic, RunReport};
use crate::CliError;

/// Runs every config concurrently, writes each run's artifacts to its own
/// subdirectory of `dir` and a one-row-per-run `compare.csv`.
pub fn compare(configs: &[RunConfig], dir: &Path) -> Result<Vec<RunReport>, CliError> {
    if configs.len() < 2 {
        return Err(CliError::Config(format!("compare needs at least 2 runs, got {}", configs.len())));
    }
    let problem = &configs[0].problem;
    if let Some(c) = configs.iter().find(|c| &c.problem != problem) {
        return Err(CliError::Config(format!("compare runs mix problems {problem} and {}", c.problem)));
    }

    let reports: Vec<Result<RunReport, CliError>> = thread::scope(|s| {
        let handles: Vec<_> = configs.iter().map(|c| s.spawn(move || execute(c))).collect();
        handles.into_iter().map(|h| h.join().expect("run thread panicked")).collect()
    });
    let reports = reports.into_iter().collect::<Result<Vec<_>, _>>()?;

    fs::create_dir_all(dir)?;
    for (i, r) in reports.iter().enumerate() {
        write_artifacts(r, &dir.join(run_dir_name(i, &r.config)))?;
    }
    write_atomic(&dir.join("compare.csv"), |w| {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "run",
            "tracker",
            "homotopy",
            "outcome",
            "final_kappa",
            "residual",
            "switches",
            "accepted_steps",
            "halvings",
            "wall_time_s",
        ])
        .map_err(csv_err)?;
        for (i, r) in reports.iter().enumerate() {
            let s = &r.summary;
            out.write_record([
                i.to_string(),
                s.tracker.to_string(),
                s.homotopy.to_string(),
                s.outcome.to_string(),
                format!("{:.16e}", s.final_kappa),
                format!("{:.16e}", s.residual_norm),
                s.switch_count.to_string(),
                s.accepted_steps.to_string(),
                s.halvings.to_string(),
                format!("{:.6}", s.wall_time_s),
            ])
            .map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    })?;
    Ok(reports)
}

pub fn run_dir_name(index: usize, c: &RunConfig) -> String {
    format!("run{index}_{}_{}", c.tracker.as_str(), c.homotopy.as_str())
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(std::io::Error::other(e))
}
