use serde::{Deserialize, Serialize};

use super::dcm::correct;
use crate::config::TrackerConfig;
use crate::error::{HomotopyError, Result};
use crate::homotopy::Homotopy;
use crate::linalg::{self, DenseMatrix};
use crate::trace::{EventKind, EventPayload, Outcome, PathTrace};

/// Relative size below which the second-smallest singular value of the
/// augmented Jacobian marks an irregular point.
const RANK_TOL: f64 = 1e-10;

/// Ds halvings allowed per step before giving up.
const MAX_DS_HALVINGS: usize = 3;

/// Unit tangent `(κ̂, x̂)` to the zero curve and the arclength step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangentState {
    pub kappa_dot: f64,
    pub x_dot: Vec<f64>,
    pub arclength_step: f64,
}

impl TangentState {
    fn dot(&self, other: &TangentState) -> f64 {
        self.kappa_dot * other.kappa_dot + linalg::dot(&self.x_dot, &other.x_dot)
    }
}

/// Unit vector spanning the null space of `[Γ_x | Γ_κ]` at `(κ, x)`.
///
/// The sign follows `prev` when given, otherwise κ̂ is made positive.
/// `arclength_step` is copied from `prev` (0 on a first call).
pub fn pam_tangent<H: Homotopy>(gamma: &H, kappa: f64, x: &[f64], prev: Option<&TangentState>) -> Result<TangentState> {
    let n = gamma.dim();
    let jx = gamma.jac_x(kappa, x)?;
    let jk = gamma.jac_kappa(kappa, x)?;
    // pad with a zero row so the null vector shows up as a right singular vector
    let mut a = DenseMatrix::zeros(n + 1, n + 1);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] = jx[(i, j)];
        }
        a[(i, n)] = jk[i];
    }
    let s = linalg::svd(&a)?;
    let scale = s.sigma[0].max(1.0);
    if n > 0 && s.sigma[n - 1] <= RANK_TOL * scale {
        return Err(HomotopyError::IrregularPoint);
    }
    let v = s.v.row(n);
    let mut t = TangentState {
        kappa_dot: v[n],
        x_dot: v[..n].to_vec(),
        arclength_step: prev.map_or(0.0, |p| p.arclength_step),
    };
    let flip = match prev {
        Some(p) => t.dot(p) < 0.0,
        None => t.kappa_dot < 0.0,
    };
    if flip {
        t.kappa_dot = -t.kappa_dot;
        t.x_dot.iter_mut().for_each(|v| *v = -*v);
    }
    Ok(t)
}

/// Solves the augmented system `Γ(κ, x) = 0`,
/// `(x − xᵢ)·x̂ + (κ − κᵢ)κ̂ − ds = 0` from the tangent predictor.
fn pam_correct<H: Homotopy>(
    gamma: &H,
    kappa: f64,
    x: &[f64],
    t: &TangentState,
    ds: f64,
    config: &TrackerConfig,
) -> Result<(f64, Vec<f64>)> {
    let n = gamma.dim();
    let mut z: Vec<f64> = x.iter().zip(&t.x_dot).map(|(a, b)| a + ds * b).collect();
    z.push(kappa + ds * t.kappa_dot);
    let f = |z: &[f64]| -> Result<Vec<f64>> {
        let mut r = gamma.eval(z[n], &z[..n])?;
        let along: f64 = (0..n).map(|i| (z[i] - x[i]) * t.x_dot[i]).sum::<f64>() + (z[n] - kappa) * t.kappa_dot - ds;
        r.push(along);
        Ok(r)
    };
    let j = |z: &[f64]| -> Result<DenseMatrix> {
        let jx = gamma.jac_x(z[n], &z[..n])?;
        let jk = gamma.jac_kappa(z[n], &z[..n])?;
        let mut m = DenseMatrix::zeros(n + 1, n + 1);
        for i in 0..n {
            for c in 0..n {
                m[(i, c)] = jx[(i, c)];
            }
            m[(i, n)] = jk[i];
            m[(n, i)] = t.x_dot[i];
        }
        m[(n, n)] = t.kappa_dot;
        Ok(m)
    };
    let r = linalg::newton_solve(f, Some(j), &z, &config.newton())?;
    let mut z = r.x;
    let k = z.pop().expect("augmented state");
    Ok((k, z))
}

/// Pseudo-arclength continuation from `x_start` at κ = 0.
///
/// κ may decrease along the way, so folds are passed. A corrected point with
/// κ ≥ 1 is pulled back onto κ = 1 for a `success`; one with κ ≤ 0 is pulled
/// onto κ = 0 for `returned_to_start`. When the corrector fails, ds is halved
/// up to three times before the run ends in `limit_point_stall`.
pub fn pam_track<H: Homotopy>(gamma: &H, x_start: &[f64], ds: f64, config: &TrackerConfig) -> PathTrace {
    let mut trace = PathTrace::new();
    let abort = |mut trace: PathTrace, kappa: f64, x: &[f64], msg: String, outcome: Outcome| {
        trace.event(EventKind::Aborted, kappa, x, Some(EventPayload::Note { message: msg }));
        trace.finish(outcome)
    };
    let mut x = match correct(gamma, 0.0, x_start, config) {
        Ok(x) => x,
        Err(e) => return abort(trace, 0.0, x_start, e.to_string(), Outcome::CorrectorFailure),
    };
    let mut kappa = 0.0;
    trace.accept(kappa, &x, 0, None);
    let mut tangent = match pam_tangent(gamma, kappa, &x, None) {
        Ok(t) => t,
        Err(e) => return abort(trace, kappa, &x, e.to_string(), Outcome::CorrectorFailure),
    };
    tangent.arclength_step = ds;

    let mut steps = 0;
    loop {
        if steps >= config.max_steps {
            return abort(trace, kappa, &x, "step cap".into(), Outcome::Aborted);
        }
        let mut h = ds;
        let mut halvings = 0;
        let (kn, xn) = loop {
            match pam_correct(gamma, kappa, &x, &tangent, h, config) {
                Ok(p) => break p,
                Err(_) if halvings < MAX_DS_HALVINGS => {
                    halvings += 1;
                    h *= 0.5;
                    trace.event(EventKind::StepHalved, kappa, &x, Some(EventPayload::Step { dkappa: h }));
                }
                Err(_) => {
                    trace.event(EventKind::LimitPointDetected, kappa, &x, None);
                    return trace.finish(Outcome::LimitPointStall);
                }
            }
        };
        steps += 1;

        if kn >= 1.0 || kn <= 0.0 {
            let target = if kn >= 1.0 { 1.0 } else { 0.0 };
            // interpolate the crossing, then correct onto the end plane
            let w = (target - kappa) / (kn - kappa);
            let seed: Vec<f64> = x.iter().zip(&xn).map(|(a, b)| a + w * (b - a)).collect();
            let end = correct(gamma, target, &seed, config).or_else(|_| correct(gamma, target, &xn, config));
            return match end {
                Ok(xe) => {
                    trace.accept(target, &xe, 0, Some(h));
                    if target == 1.0 {
                        trace.event(EventKind::Converged, target, &xe, None);
                        trace.finish(Outcome::Success)
                    } else {
                        trace.finish(Outcome::ReturnedToStart)
                    }
                }
                Err(e) => abort(trace, kn.clamp(0.0, 1.0), &xn, e.to_string(), Outcome::CorrectorFailure),
            };
        }

        kappa = kn;
        x = xn;
        trace.accept(kappa, &x, 0, Some(h));
        let norm = linalg::norm_inf(&x);
        if norm > config.growth_threshold {
            trace.event(
                EventKind::ThresholdCrossed,
                kappa,
                &x,
                Some(EventPayload::Growth { norm_inf: norm, threshold: config.growth_threshold }),
            );
            return trace.finish(Outcome::Diverged);
        }
        tangent = match pam_tangent(gamma, kappa, &x, Some(&tangent)) {
            Ok(t) => t,
            Err(e) => return abort(trace, kappa, &x, e.to_string(), Outcome::CorrectorFailure),
        };
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homotopy::ParametricHomotopy;
    use approx::assert_abs_diff_eq;

    fn fold() -> ParametricHomotopy {
        ParametricHomotopy::new(1, |k, x| Ok(vec![x[0] * x[0] + k - 0.25]))
    }

    #[test]
    fn tangent_of_linear_path() {
        let h = ParametricHomotopy::new(1, |k, x| Ok(vec![x[0] - k]));
        let t = pam_tangent(&h, 0.3, &[0.3], None).unwrap();
        let r = 1.0 / 2f64.sqrt();
        assert_abs_diff_eq!(t.kappa_dot, r, epsilon = 1e-8);
        assert_abs_diff_eq!(t.x_dot[0], r, epsilon = 1e-8);
    }

    #[test]
    fn tangent_at_fold_is_vertical() {
        let t = pam_tangent(&fold(), 0.25, &[0.0], None).unwrap();
        assert_abs_diff_eq!(t.kappa_dot, 0.0, epsilon = 1e-8);
        assert_abs_diff_eq!(t.x_dot[0].abs(), 1.0, epsilon = 1e-8);
    }

    #[test]
    fn tangent_keeps_orientation() {
        let h = fold();
        let t0 = pam_tangent(&h, 0.2, &[0.2236], None).unwrap();
        let t1 = pam_tangent(&h, 0.21, &[0.2], Some(&t0)).unwrap();
        assert!(t1.dot(&t0) >= 0.0);
        let norm = (t1.kappa_dot.powi(2) + t1.x_dot[0].powi(2)).sqrt();
        assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn irregular_point_is_reported() {
        let h = ParametricHomotopy::new(1, |k, x| Ok(vec![x[0] * x[0] - k * k]));
        assert!(matches!(pam_tangent(&h, 0.0, &[0.0], None), Err(HomotopyError::IrregularPoint)));
    }

    #[test]
    fn fold_returns_to_start_on_other_branch() {
        let t = pam_track(&fold(), &[0.5], 0.01, &TrackerConfig::default());
        assert_eq!(t.outcome, Outcome::ReturnedToStart);
        let last = t.last_point().unwrap();
        assert_eq!(last.kappa, 0.0);
        assert_abs_diff_eq!(last.x[0], -0.5, epsilon = 1e-6);
    }

    #[test]
    fn linear_path_succeeds() {
        let h = ParametricHomotopy::new(1, |k, x| Ok(vec![x[0] - k]));
        let t = pam_track(&h, &[0.0], 0.01, &TrackerConfig::default());
        assert_eq!(t.outcome, Outcome::Success);
        let last = t.last_point().unwrap();
        assert_eq!(last.kappa, 1.0);
        assert_abs_diff_eq!(last.x[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn arclength_spacing() {
        let t = pam_track(&fold(), &[0.5], 0.01, &TrackerConfig::default());
        let inner = &t.points[..t.points.len() - 1];
        for w in inner.windows(2) {
            let d = ((w[1].kappa - w[0].kappa).powi(2) + (w[1].x[0] - w[0].x[0]).powi(2)).sqrt();
            assert!((d - 0.01).abs() <= 0.005, "spacing {d}");
        }
    }
}
