use super::dcm::{correct, dcm_segment, SegmentEnd};
use crate::config::TrackerConfig;
use crate::homotopy::TfcHomotopy;
use crate::linalg::{self, DenseMatrix};
use crate::switching::{SwitchResult, SwitchStatus, Switcher};
use crate::trace::{EventKind, EventPayload, Outcome, PathTrace};

/// Where a switch is attempted from.
struct SwitchSeed {
    kappa: f64,
    x: Vec<f64>,
    omega: DenseMatrix,
    level: usize,
}

/// DCM on the TFC homotopy, switching to a new weight matrix whenever the
/// current path stalls at a limit point or grows past the threshold.
///
/// A limit point is handed to the switcher as is; a failed switch there ends
/// the run as `aborted`. Growth is handled by a ladder: the first crossing
/// switches from the latest recorded point with `‖x‖∞ < T_h`, and every later
/// crossing or failed switch moves one rung down, restarting from the latest
/// point with `‖x‖∞ < T_h / 2^k` on the path that point belongs to. Past
/// `ladder_depth` rungs the run is `aborted`; more than `max_switches`
/// switches give `max_switches_exceeded`.
pub fn two_layer_track<S: Switcher + ?Sized>(h: &TfcHomotopy, config: &TrackerConfig, switcher: &S) -> PathTrace {
    let mut trace = PathTrace::new();
    let abort = |mut trace: PathTrace, kappa: f64, x: &[f64], msg: &str| {
        trace.event(EventKind::Aborted, kappa, x, Some(EventPayload::Note { message: msg.to_string() }));
        trace.finish(Outcome::Aborted)
    };

    let mut omegas = vec![h.omega().clone()];
    let base = h.auxiliary().base_point().to_vec();
    let x_start = {
        let path = h.with_omega(&omegas[0]);
        match correct(&path, 0.0, &base, config) {
            Ok(x) => x,
            Err(e) => {
                trace.event(EventKind::Aborted, 0.0, &base, Some(EventPayload::Note { message: e.to_string() }));
                return trace.finish(Outcome::CorrectorFailure);
            }
        }
    };
    trace.accept(0.0, &x_start, 0, None);

    let mut kappa = 0.0;
    let mut x = x_start;
    let mut steps = 0;
    // next rung of the growth ladder; 0 until the first crossing
    let mut level = 0;

    loop {
        let j = omegas.len() - 1;
        let end = {
            let path = h.with_omega(&omegas[j]);
            dcm_segment(&path, kappa, &x, j, config, &mut trace, &mut steps)
        };
        let growth = matches!(end, SegmentEnd::Crossed { .. });
        let mut seed = match end {
            SegmentEnd::Reached => return trace.finish(Outcome::Success),
            SegmentEnd::StepCap => return abort(trace, kappa, &x, "step cap"),
            SegmentEnd::LimitPoint { kappa, x } => SwitchSeed { kappa, x, omega: omegas[j].clone(), level: 0 },
            SegmentEnd::Crossed { kappa: kc, x: xc } => {
                let s = ladder_seed(&trace, &omegas, config, level);
                level += 1;
                match s {
                    Some(s) => s,
                    None => return abort(trace, kc, &xc, "growth ladder exhausted"),
                }
            }
        };

        loop {
            if trace.switch_count() >= config.max_switches {
                let (k, p) = (seed.kappa, seed.x.clone());
                trace.event(EventKind::Aborted, k, &p, Some(EventPayload::Note { message: "switch cap".into() }));
                return trace.finish(Outcome::MaxSwitchesExceeded);
            }
            let result = switcher.switch(h, seed.kappa, &seed.x, &seed.omega);
            match result {
                Ok(r) if r.status == SwitchStatus::Converged && consistent(h, seed.kappa, &r, config) => {
                    let path = omegas.len();
                    trace.event(
                        EventKind::SwitchSolved,
                        seed.kappa,
                        &r.x0,
                        Some(EventPayload::Switch {
                            path,
                            omega: (0..r.omega.rows()).map(|i| r.omega.row(i).to_vec()).collect(),
                            objective: r.objective_value,
                            constraint_norm: r.constraint_norm,
                            det_at_start: r.det_at_start,
                            iterations: r.iterations,
                            ladder_level: seed.level,
                        }),
                    );
                    trace.accept(seed.kappa, &r.x0, path, None);
                    omegas.push(r.omega);
                    kappa = seed.kappa;
                    x = r.x0;
                    break;
                }
                other => {
                    let message = match other {
                        Ok(r) => format!("switch ended with status {:?}", r.status),
                        Err(e) => e.to_string(),
                    };
                    trace.event(EventKind::SwitchFailed, seed.kappa, &seed.x, Some(EventPayload::Note { message }));
                    if !growth {
                        return abort(trace, seed.kappa, &seed.x.clone(), "switch failed at limit point");
                    }
                    match ladder_seed(&trace, &omegas, config, level) {
                        Some(s) => {
                            level += 1;
                            seed = s;
                        }
                        None => {
                            let (k, p) = (seed.kappa, seed.x.clone());
                            return abort(trace, k, &p, "growth ladder exhausted");
                        }
                    }
                }
            }
        }
    }
}

/// Latest trace point below `T_h / 2^level`, or `None` past the ladder floor.
fn ladder_seed(trace: &PathTrace, omegas: &[DenseMatrix], config: &TrackerConfig, level: usize) -> Option<SwitchSeed> {
    if level > config.ladder_depth {
        return None;
    }
    let bound = config.growth_threshold / 2f64.powi(level as i32);
    trace.points.iter().rev().find(|p| linalg::norm_inf(&p.x) < bound && p.kappa < 1.0).map(|p| SwitchSeed {
        kappa: p.kappa,
        x: p.x.clone(),
        omega: omegas[p.path].clone(),
        level,
    })
}

fn consistent(h: &TfcHomotopy, kappa: f64, r: &SwitchResult, config: &TrackerConfig) -> bool {
    h.tfc_gamma(kappa, &r.x0, &r.omega).map(|g| linalg::norm_inf(&g) <= config.tol_f * 10.0).unwrap_or(false)
}
