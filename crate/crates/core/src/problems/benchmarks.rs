use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::ode::{rk4_integrate, OdeSystem};
use super::synthetic::synthetic_path;
use crate::config::TrackerConfig;
use crate::error::{HomotopyError, Result};
use crate::homotopy::{BasisFunction, ConvexHomotopy, ParametricHomotopy, SupportCase, SupportKind, TfcHomotopy};
use crate::linalg::{self, DenseMatrix};
use crate::problem::{make_auxiliary, AuxiliaryKind, AuxiliaryProblem, ZeroProblem};

/// RK4 steps for the optimal-control shooting residual.
pub const EXAMPLE2_STEPS: usize = 200;
/// RK4 steps for the elastic-rod shooting residual.
pub const EXAMPLE3_STEPS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    pub point: Vec<f64>,
    pub tol: f64,
}

/// A named zero-finding problem with everything needed to run it.
#[derive(Debug, Clone)]
pub struct BenchmarkProblem {
    pub name: String,
    pub objective: ZeroProblem,
    pub auxiliary: AuxiliaryProblem,
    pub basis: BasisFunction,
    /// Homotopy with κ built into the equations, when the problem has one.
    pub embedded: Option<ParametricHomotopy>,
    /// Defaults with this problem's step and threshold applied.
    pub config: TrackerConfig,
    /// Pseudo-arclength step suited to the path's scale.
    pub arclength_step: f64,
    pub reference: Option<Reference>,
}

impl BenchmarkProblem {
    pub fn dim(&self) -> usize {
        self.objective.dim()
    }

    pub fn start(&self) -> &[f64] {
        self.auxiliary.base_point()
    }

    /// `κF + (1 − κ)G` with the problem's own auxiliary.
    pub fn convex(&self) -> Result<ConvexHomotopy> {
        ConvexHomotopy::new(self.objective.clone(), self.auxiliary.clone())
    }

    /// `κF + (1 − κ)G` with a standard auxiliary built at the start point.
    /// The affine kind uses `A = F'(x₀)`.
    pub fn convex_with(&self, kind: AuxiliaryKind) -> Result<ConvexHomotopy> {
        let aux = match kind {
            AuxiliaryKind::Custom => self.auxiliary.clone(),
            AuxiliaryKind::Affine => {
                let a = self.objective.jacobian(self.start())?;
                make_auxiliary(kind, &self.objective, self.start(), Some(a))?
            }
            _ => make_auxiliary(kind, &self.objective, self.start(), None)?,
        };
        ConvexHomotopy::new(self.objective.clone(), aux)
    }

    /// TFC homotopy with unit η interval, using the embedded baseline when
    /// the problem has one.
    pub fn tfc(&self, kind: SupportKind) -> Result<TfcHomotopy> {
        let h = TfcHomotopy::new(
            self.objective.clone(),
            self.auxiliary.clone(),
            SupportCase::unit(kind),
            self.basis.clone(),
        )?;
        Ok(match &self.embedded {
            Some(f) => h.with_embedded_baseline(f.function().clone()),
            None => h,
        })
    }
}

/// `F = [a(x₁+x₂), a(x₁+x₂) + (x₁−x₂)((x₁−b)² + x₂² − c)]` with
/// `a = 4, b = 2, c = 1`, fixed-point start `[2.5, 0.5]`.
pub fn example1() -> BenchmarkProblem {
    let (a, b, c) = (4.0, 2.0, 1.0);
    let f = ZeroProblem::new(2, move |x| {
        let s = a * (x[0] + x[1]);
        Ok(vec![s, s + (x[0] - x[1]) * ((x[0] - b).powi(2) + x[1] * x[1] - c)])
    })
    .with_jacobian(move |x| {
        let d = x[0] - x[1];
        let q = (x[0] - b).powi(2) + x[1] * x[1] - c;
        DenseMatrix::from_rows(&[vec![a, a], vec![a + q + d * 2.0 * (x[0] - b), a - q + d * 2.0 * x[1]]])
    });
    let g = make_auxiliary(AuxiliaryKind::FixedPoint, &f, &[2.5, 0.5], None).expect("valid start");
    BenchmarkProblem {
        name: "example1".into(),
        objective: f,
        auxiliary: g,
        basis: BasisFunction::exp_kappa_squared(2),
        embedded: None,
        config: TrackerConfig { dkappa_default: 0.01, ..TrackerConfig::default() },
        arclength_step: 0.01,
        reference: Some(Reference { point: vec![0.0, 0.0], tol: 1e-6 }),
    }
}

fn example2_system() -> OdeSystem {
    // state [x₁, x₂, λ₁, λ₂]
    OdeSystem::new(4, 0.0, 1.0, |t, y, k| {
        let (x1, x2, l1, l2) = (y[0], y[1], y[2], y[3]);
        let s = x1 * x1;
        let c = s.cos();
        if k != 0.0 && c.abs() < 1e-8 {
            return Err(HomotopyError::eval(format!("tan singularity at t = {t}"), y));
        }
        let (tan, sec2) = if k != 0.0 { (s.tan(), 1.0 / (c * c)) } else { (0.0, 0.0) };
        Ok(vec![x1 + x2 - l1, k * tan - l2, -l1 - 2.0 * k * x1 * l2 * sec2, -l1])
    })
}

fn example2_flow(kappa: f64, lambda: &[f64]) -> Result<Vec<f64>> {
    const X0: [f64; 2] = [-1.0, -1.0];
    const XF: [f64; 2] = [0.0, 0.0];
    let y = rk4_integrate(&example2_system(), &[X0[0], X0[1], lambda[0], lambda[1]], kappa, EXAMPLE2_STEPS).map_err(
        |e| match e {
            HomotopyError::IntegrationBlowup { t } => HomotopyError::eval(format!("flow blew up at t = {t}"), lambda),
            other => other,
        },
    )?;
    Ok(vec![y[0] - XF[0], y[1] - XF[1]])
}

/// Initial costate of the κ = 0 problem. The linear flow makes the terminal
/// error affine in λ₀, so two unit-vector flows give the exact sensitivity.
pub fn example2_costate_oracle() -> Result<Vec<f64>> {
    let b = example2_flow(0.0, &[0.0, 0.0])?;
    let c1 = example2_flow(0.0, &[1.0, 0.0])?;
    let c2 = example2_flow(0.0, &[0.0, 1.0])?;
    let a = DenseMatrix::from_columns(2, &[vec![c1[0] - b[0], c1[1] - b[1]], vec![c2[0] - b[0], c2[1] - b[1]]])?;
    linalg::solve_dense(&a, &[-b[0], -b[1]])
}

/// Shooting problem of a two-state optimal control problem. κ scales the
/// `tan x₁²` nonlinearity; the auxiliary is the κ = 0 (linear) problem.
pub fn example2() -> BenchmarkProblem {
    let lambda0 = example2_costate_oracle().expect("linear costate is well posed");
    let f = ZeroProblem::new(2, |l| example2_flow(1.0, l));
    let g = AuxiliaryProblem::custom(ZeroProblem::new(2, |l| example2_flow(0.0, l)), lambda0).expect("2 unknowns");
    BenchmarkProblem {
        name: "example2".into(),
        objective: f,
        auxiliary: g,
        basis: BasisFunction::exp_kappa_squared(2),
        embedded: Some(ParametricHomotopy::new(2, example2_flow)),
        config: TrackerConfig { dkappa_default: 0.005, ..TrackerConfig::default() },
        arclength_step: 0.005,
        reference: Some(Reference { point: vec![0.4728, -0.0739], tol: 2e-3 }),
    }
}

/// Inverse elastic-rod problem: find forces and torque `v = [Q, P, M]` that
/// put the tip at `(a, b)` with angle `c`. Fixed-point start `[0, 0, 1.85]`.
pub fn example3() -> BenchmarkProblem {
    example3_with_target([0.0, 2.0 / PI, PI])
}

/// Elastic-rod problem with tip target `[a, b, c]`.
pub fn example3_with_target(target: [f64; 3]) -> BenchmarkProblem {
    let f = ZeroProblem::new(3, move |v| {
        let (q, p, m) = (v[0], v[1], v[2]);
        let rod = OdeSystem::new(3, 0.0, 1.0, move |_, s, _| Ok(vec![s[2].cos(), s[2].sin(), q * s[0] - p * s[1] + m]));
        let y = rk4_integrate(&rod, &[0.0, 0.0, 0.0], 0.0, EXAMPLE3_STEPS)
            .map_err(|e| HomotopyError::eval(e.to_string(), v))?;
        Ok(vec![y[0] - target[0], y[1] - target[1], y[2] - target[2]])
    });
    let g = make_auxiliary(AuxiliaryKind::FixedPoint, &f, &[0.0, 0.0, 1.85], None).expect("valid start");
    BenchmarkProblem {
        name: "example3".into(),
        objective: f,
        auxiliary: g,
        basis: BasisFunction::exp_kappa_squared(3),
        embedded: None,
        config: TrackerConfig {
            dkappa_default: 0.001,
            growth_threshold: 100.0,
            max_corrector_iters: 200,
            max_consecutive_fails: 4,
            ..TrackerConfig::default()
        },
        // the path runs out to ‖v‖ ≈ 100
        arclength_step: 0.1,
        reference: Some(Reference { point: vec![0.0, 0.0, PI], tol: 1e-4 }),
    }
}

pub fn problem_names() -> Vec<&'static str> {
    vec!["example1", "example2", "example3", "synthetic1", "synthetic2", "synthetic3", "synthetic4", "synthetic5"]
}

pub fn problem_by_name(name: &str) -> Result<BenchmarkProblem> {
    match name {
        "example1" => Ok(example1()),
        "example2" => Ok(example2()),
        "example3" => Ok(example3()),
        _ => match name.strip_prefix("synthetic").and_then(|s| s.parse::<u8>().ok()) {
            Some(id) => synthetic_path(id),
            None => {
                Err(HomotopyError::Config(format!("unknown problem {name:?}; known: {}", problem_names().join(", "))))
            }
        },
    }
}
