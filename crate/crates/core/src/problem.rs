use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{HomotopyError, Result};
use crate::linalg::{self, DenseMatrix};

/// Vector-valued map `Rⁿ → Rᵐ` that may fail to evaluate.
pub type VectorFn = Arc<dyn Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync>;
/// Matrix-valued map, used for analytic Jacobians.
pub type MatrixFn = Arc<dyn Fn(&[f64]) -> Result<DenseMatrix> + Send + Sync>;

/// A square system `F(x) = 0`.
#[derive(Clone)]
pub struct ZeroProblem {
    dim: usize,
    residual: VectorFn,
    jacobian: Option<MatrixFn>,
}

impl ZeroProblem {
    pub fn new<F>(dim: usize, residual: F) -> Self
    where
        F: Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync + 'static,
    {
        Self { dim, residual: Arc::new(residual), jacobian: None }
    }

    pub fn with_jacobian<J>(mut self, jacobian: J) -> Self
    where
        J: Fn(&[f64]) -> Result<DenseMatrix> + Send + Sync + 'static,
    {
        self.jacobian = Some(Arc::new(jacobian));
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn has_jacobian(&self) -> bool {
        self.jacobian.is_some()
    }

    pub fn residual(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(HomotopyError::Dimension { expected: self.dim, got: x.len() });
        }
        let r = (self.residual)(x)?;
        if r.len() != self.dim {
            return Err(HomotopyError::Dimension { expected: self.dim, got: r.len() });
        }
        Ok(r)
    }

    /// Analytic Jacobian when one was supplied, central differences otherwise.
    pub fn jacobian(&self, x: &[f64]) -> Result<DenseMatrix> {
        match &self.jacobian {
            Some(j) => {
                let m = j(x)?;
                if m.rows() != self.dim || m.cols() != self.dim {
                    return Err(HomotopyError::Dimension { expected: self.dim * self.dim, got: m.rows() * m.cols() });
                }
                Ok(m)
            }
            None => linalg::jacobian_fd(|y| self.residual(y), x, None),
        }
    }
}

impl fmt::Debug for ZeroProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ZeroProblem")
            .field("dim", &self.dim)
            .field("analytic_jacobian", &self.jacobian.is_some())
            .finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuxiliaryKind {
    /// `G(x) = F(x) − F(x₀)`
    Newton,
    /// `G(x) = x − x₀`
    FixedPoint,
    /// `G(x) = A (x − x₀)`
    Affine,
    /// User supplied `G` with known zero `x₀`.
    Custom,
}

/// The easy problem `G(x) = 0` at the start of a homotopy.
#[derive(Clone)]
pub struct AuxiliaryProblem {
    kind: AuxiliaryKind,
    base_point: Vec<f64>,
    matrix: Option<DenseMatrix>,
    problem: ZeroProblem,
}

impl AuxiliaryProblem {
    /// Wraps an arbitrary `G` whose zero is `base_point`.
    pub fn custom(problem: ZeroProblem, base_point: Vec<f64>) -> Result<Self> {
        if base_point.len() != problem.dim() {
            return Err(HomotopyError::Dimension { expected: problem.dim(), got: base_point.len() });
        }
        Ok(Self { kind: AuxiliaryKind::Custom, base_point, matrix: None, problem })
    }

    pub fn kind(&self) -> AuxiliaryKind {
        self.kind
    }

    pub fn base_point(&self) -> &[f64] {
        &self.base_point
    }

    pub fn matrix(&self) -> Option<&DenseMatrix> {
        self.matrix.as_ref()
    }

    pub fn problem(&self) -> &ZeroProblem {
        &self.problem
    }

    pub fn dim(&self) -> usize {
        self.problem.dim()
    }

    pub fn residual(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.problem.residual(x)
    }

    pub fn jacobian(&self, x: &[f64]) -> Result<DenseMatrix> {
        self.problem.jacobian(x)
    }
}

impl fmt::Debug for AuxiliaryProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AuxiliaryProblem")
            .field("kind", &self.kind)
            .field("base_point", &self.base_point)
            .field("matrix", &self.matrix)
            .finish()
    }
}

/// Builds one of the standard auxiliary functions around `x0`.
///
/// `Custom` cannot be built here; use [`AuxiliaryProblem::custom`].
pub fn make_auxiliary(
    kind: AuxiliaryKind,
    problem: &ZeroProblem,
    x0: &[f64],
    matrix: Option<DenseMatrix>,
) -> Result<AuxiliaryProblem> {
    let n = problem.dim();
    if x0.len() != n {
        return Err(HomotopyError::Dimension { expected: n, got: x0.len() });
    }
    let base = x0.to_vec();
    let g = match kind {
        AuxiliaryKind::FixedPoint => {
            let b = base.clone();
            ZeroProblem::new(n, move |x| Ok(x.iter().zip(&b).map(|(u, v)| u - v).collect()))
                .with_jacobian(move |_| Ok(DenseMatrix::identity(n)))
        }
        AuxiliaryKind::Newton => {
            let f0 = problem.residual(x0)?;
            let f = problem.clone();
            let fj = problem.clone();
            ZeroProblem::new(n, move |x| {
                let fx = f.residual(x)?;
                Ok(fx.iter().zip(&f0).map(|(u, v)| u - v).collect())
            })
            .with_jacobian(move |x| fj.jacobian(x))
        }
        AuxiliaryKind::Affine => {
            let a = matrix.clone().ok_or_else(|| HomotopyError::Config("affine homotopy needs a matrix".into()))?;
            if a.rows() != n || a.cols() != n {
                return Err(HomotopyError::Config(format!(
                    "affine matrix must be {n}x{n}, got {}x{}",
                    a.rows(),
                    a.cols()
                )));
            }
            if linalg::determinant(&a)? == 0.0 {
                return Err(HomotopyError::Config("affine matrix is singular".into()));
            }
            let b = base.clone();
            let am = a.clone();
            ZeroProblem::new(n, move |x| {
                let d: Vec<f64> = x.iter().zip(&b).map(|(u, v)| u - v).collect();
                am.matvec(&d)
            })
            .with_jacobian(move |_| Ok(a.clone()))
        }
        AuxiliaryKind::Custom => {
            return Err(HomotopyError::Config(
                "custom auxiliary problems are built with AuxiliaryProblem::custom".into(),
            ))
        }
    };
    Ok(AuxiliaryProblem {
        kind,
        base_point: base,
        matrix: if kind == AuxiliaryKind::Affine { matrix } else { None },
        problem: g,
    })
}
