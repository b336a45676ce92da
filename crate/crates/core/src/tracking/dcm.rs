use crate::config::TrackerConfig;
use crate::homotopy::Homotopy;
use crate::linalg;
use crate::trace::{EventKind, EventPayload, Outcome, PathTrace};

/// κ values are rounded to multiples of `1 / KAPPA_GRID` so repeated steps
/// do not drift.
const KAPPA_GRID: f64 = 1e12;

/// How a DCM run along one fixed homotopy ended.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum SegmentEnd {
    Reached,
    /// Corrector failed `max_consecutive_fails` times; the last accepted point.
    LimitPoint {
        kappa: f64,
        x: Vec<f64>,
    },
    /// Accepted point with `‖x‖∞` above the growth threshold.
    Crossed {
        kappa: f64,
        x: Vec<f64>,
    },
    StepCap,
}

/// Corrects `x` onto `Γ(κ, ·) = 0`.
pub(crate) fn correct<H: Homotopy>(
    gamma: &H,
    kappa: f64,
    x: &[f64],
    config: &TrackerConfig,
) -> crate::Result<Vec<f64>> {
    let f = |y: &[f64]| gamma.eval(kappa, y);
    let j = |y: &[f64]| gamma.jac_x(kappa, y);
    linalg::newton_solve(f, Some(j), x, &config.newton()).map(|r| r.x)
}

/// Advances κ from `(kappa, x)` toward 1, appending accepted points to
/// `trace` under path index `path`.
pub(crate) fn dcm_segment<H: Homotopy>(
    gamma: &H,
    kappa: f64,
    x: &[f64],
    path: usize,
    config: &TrackerConfig,
    trace: &mut PathTrace,
    steps: &mut usize,
) -> SegmentEnd {
    let mut kappa = kappa;
    let mut x = x.to_vec();
    let mut dk = config.dkappa_default.min(1.0 - kappa);
    let mut fails = 0;
    while kappa < 1.0 {
        if *steps >= config.max_steps {
            return SegmentEnd::StepCap;
        }
        let next = ((kappa + dk) * KAPPA_GRID).round() / KAPPA_GRID;
        let next = if next > kappa { next.min(1.0) } else { (kappa + dk).min(1.0) };
        match correct(gamma, next, &x, config) {
            Ok(xn) => {
                *steps += 1;
                kappa = next;
                x = xn;
                trace.accept(kappa, &x, path, Some(dk));
                fails = 0;
                if linalg::norm_inf(&x) > config.growth_threshold {
                    trace.event(
                        EventKind::ThresholdCrossed,
                        kappa,
                        &x,
                        Some(EventPayload::Growth {
                            norm_inf: linalg::norm_inf(&x),
                            threshold: config.growth_threshold,
                        }),
                    );
                    return SegmentEnd::Crossed { kappa, x };
                }
                dk = (1.0 - kappa).min(config.dkappa_default);
            }
            Err(_) => {
                fails += 1;
                if fails >= config.max_consecutive_fails {
                    trace.event(EventKind::LimitPointDetected, kappa, &x, None);
                    return SegmentEnd::LimitPoint { kappa, x };
                }
                dk *= 0.5;
                trace.event(EventKind::StepHalved, kappa, &x, Some(EventPayload::Step { dkappa: dk }));
            }
        }
    }
    trace.event(EventKind::Converged, kappa, &x, None);
    SegmentEnd::Reached
}

/// Discrete continuation: raise κ in steps of Δκ, correcting each time from
/// the previous solution.
///
/// Failures are encoded in the trace outcome. A starting point that cannot
/// be corrected onto `Γ(0, ·) = 0` gives `corrector_failure`.
pub fn dcm_track<H: Homotopy>(gamma: &H, x_start: &[f64], config: &TrackerConfig) -> PathTrace {
    let mut trace = PathTrace::new();
    let x0 = match correct(gamma, 0.0, x_start, config) {
        Ok(x) => x,
        Err(e) => {
            trace.event(EventKind::Aborted, 0.0, x_start, Some(EventPayload::Note { message: e.to_string() }));
            return trace.finish(Outcome::CorrectorFailure);
        }
    };
    trace.accept(0.0, &x0, 0, None);
    let mut steps = 0;
    let outcome = match dcm_segment(gamma, 0.0, &x0, 0, config, &mut trace, &mut steps) {
        SegmentEnd::Reached => Outcome::Success,
        SegmentEnd::LimitPoint { .. } => Outcome::LimitPointStall,
        SegmentEnd::Crossed { .. } => Outcome::Diverged,
        SegmentEnd::StepCap => {
            let p = trace.last_point().cloned().expect("start point recorded");
            trace.event(EventKind::Aborted, p.kappa, &p.x, Some(EventPayload::Note { message: "step cap".into() }));
            Outcome::Aborted
        }
    };
    trace.finish(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homotopy::ParametricHomotopy;

    fn fold() -> ParametricHomotopy {
        ParametricHomotopy::new(1, |k, x| Ok(vec![x[0] * x[0] + k - 0.25]))
    }

    #[test]
    fn linear_path_succeeds() {
        let h = ParametricHomotopy::new(1, |k, x| Ok(vec![x[0] - k]));
        let t = dcm_track(&h, &[0.0], &TrackerConfig::default());
        assert_eq!(t.outcome, Outcome::Success);
        let last = t.last_point().unwrap();
        assert_eq!(last.kappa, 1.0);
        assert!((last.x[0] - 1.0).abs() < 1e-12);
        assert_eq!(t.count(EventKind::StepHalved), 0);
        assert_eq!(t.points.len(), 101);
    }

    #[test]
    fn fold_stalls_before_quarter() {
        let t = dcm_track(&fold(), &[0.5], &TrackerConfig::default());
        assert_eq!(t.outcome, Outcome::LimitPointStall);
        let lp = t.events_of(EventKind::LimitPointDetected).next().unwrap();
        assert!((0.22..=0.25).contains(&lp.kappa), "kappa = {}", lp.kappa);
        assert_eq!(t.count(EventKind::StepHalved), 2);
    }

    #[test]
    fn kappa_strictly_increases() {
        let t = dcm_track(&fold(), &[0.5], &TrackerConfig::default());
        for w in t.points.windows(2) {
            assert!(w[1].kappa > w[0].kappa);
        }
    }

    #[test]
    fn growth_is_reported_as_divergence() {
        let h = ParametricHomotopy::new(1, |k, x| Ok(vec![x[0] * (1.0 - k) - 1.0]));
        let cfg = TrackerConfig { dkappa_default: 0.001, ..Default::default() };
        let t = dcm_track(&h, &[1.0], &cfg);
        assert_eq!(t.outcome, Outcome::Diverged);
        assert!(t.last_point().unwrap().x[0] > 100.0);
        assert_eq!(t.count(EventKind::ThresholdCrossed), 1);
    }

    #[test]
    fn accepted_points_are_certified() {
        let t = dcm_track(&fold(), &[0.5], &TrackerConfig::default());
        let h = fold();
        for p in &t.points {
            assert!(linalg::norm_inf(&h.eval(p.kappa, &p.x).unwrap()) <= 1e-11);
        }
    }
}
