//! Scalar problems whose convex-homotopy zero curves show each of the five
//! classic path types.
//!
//! | id | `Γ(κ, x)` | curve |
//! |----|-----------|-------|
//! | 1 | `x³ − 3x + 2.5 − 5κ` | two folds, then reaches κ = 1 |
//! | 2 | `x − κ` | monotone |
//! | 3 | `x² + κ − 0.25` | folds back to κ = 0 |
//! | 4 | `κ − 0.2(1 − e^{−x}) − 0.3e x e^{−x}` | folds, then `x → ∞` as κ → 0.2 |
//! | 5 | `x(1 − κ) − 1` | `x = 1/(1 − κ)` grows without bound |

use std::f64::consts::E;

use super::benchmarks::BenchmarkProblem;
use crate::config::TrackerConfig;
use crate::error::{HomotopyError, Result};
use crate::homotopy::BasisFunction;
use crate::linalg::{self, DenseMatrix};
use crate::problem::{AuxiliaryProblem, ZeroProblem};

fn scalar(
    f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    df: impl Fn(f64) -> f64 + Send + Sync + 'static,
) -> ZeroProblem {
    ZeroProblem::new(1, move |x| Ok(vec![f(x[0])])).with_jacobian(move |x| Ok(DenseMatrix::from_diag(&[df(x[0])])))
}

/// Builds the problem for path type `id` ∈ 1..=5 with `Γ = κF + (1 − κ)G`.
pub fn synthetic_path(id: u8) -> Result<BenchmarkProblem> {
    let (f, g, start) = match id {
        1 => {
            let f = scalar(|x| x * x * x - 3.0 * x - 2.5, |x| 3.0 * x * x - 3.0);
            let g = scalar(|x| x * x * x - 3.0 * x + 2.5, |x| 3.0 * x * x - 3.0);
            let start =
                linalg::newton_solve(|x| g.residual(x), Some(|x: &[f64]| g.jacobian(x)), &[-2.0], &Default::default())?
                    .x;
            (f, g, start)
        }
        2 => (scalar(|x| x - 1.0, |_| 1.0), scalar(|x| x, |_| 1.0), vec![0.0]),
        3 => (scalar(|x| x * x + 0.75, |x| 2.0 * x), scalar(|x| x * x - 0.25, |x| 2.0 * x), vec![0.5]),
        4 => {
            let bump = |x: f64| 0.2 * (1.0 - (-x).exp()) + 0.3 * E * x * (-x).exp();
            let dbump = |x: f64| (0.2 + 0.3 * E * (1.0 - x)) * (-x).exp();
            (
                scalar(move |x| 1.0 - bump(x), move |x| -dbump(x)),
                scalar(move |x| -bump(x), move |x| -dbump(x)),
                vec![0.0],
            )
        }
        5 => (scalar(|_| -1.0, |_| 0.0), scalar(|x| x - 1.0, |_| 1.0), vec![1.0]),
        _ => return Err(HomotopyError::Config(format!("synthetic path type must be 1..=5, got {id}"))),
    };
    let auxiliary = AuxiliaryProblem::custom(g, start)?;
    Ok(BenchmarkProblem {
        name: format!("synthetic{id}"),
        objective: f,
        auxiliary,
        basis: BasisFunction::exp_kappa_squared(1),
        embedded: None,
        config: TrackerConfig::default(),
        arclength_step: TrackerConfig::default().dkappa_default,
        reference: None,
    })
}
