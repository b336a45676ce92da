//! Homotopy functions `Γ(κ, x)` connecting `G(x) = 0` at κ = 0 to
//! `F(x) = 0` at κ = 1.

use std::fmt;
use std::sync::Arc;

use crate::error::{HomotopyError, Result};
use crate::linalg::{self, DenseMatrix};
use crate::problem::{AuxiliaryProblem, ZeroProblem};

pub mod tfc;

pub use tfc::{
    q_matrices, unvectorize_omega, vectorize_omega, BasisFunction, QMatrices, SupportCase, SupportKind, TfcHomotopy,
    TfcPath,
};

/// Step used for κ-derivatives by central differences.
const KAPPA_FD_STEP: f64 = 1e-6;

/// Anything the path trackers can follow.
pub trait Homotopy {
    fn dim(&self) -> usize;

    fn eval(&self, kappa: f64, x: &[f64]) -> Result<Vec<f64>>;

    /// `∂Γ/∂x`, by central differences unless overridden.
    fn jac_x(&self, kappa: f64, x: &[f64]) -> Result<DenseMatrix> {
        linalg::jacobian_fd(|y| self.eval(kappa, y), x, None)
    }

    /// `∂Γ/∂κ`, by central differences unless overridden.
    fn jac_kappa(&self, kappa: f64, x: &[f64]) -> Result<Vec<f64>> {
        let h = KAPPA_FD_STEP;
        let fp = self.eval(kappa + h, x)?;
        let fm = self.eval(kappa - h, x)?;
        Ok(fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * h)).collect())
    }
}

impl<H: Homotopy + ?Sized> Homotopy for &H {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, kappa: f64, x: &[f64]) -> Result<Vec<f64>> {
        (**self).eval(kappa, x)
    }
    fn jac_x(&self, kappa: f64, x: &[f64]) -> Result<DenseMatrix> {
        (**self).jac_x(kappa, x)
    }
    fn jac_kappa(&self, kappa: f64, x: &[f64]) -> Result<Vec<f64>> {
        (**self).jac_kappa(kappa, x)
    }
}

/// `κ F(x) + (1 − κ) G(x)`.
pub fn convex_homotopy(f: &ZeroProblem, g: &AuxiliaryProblem, kappa: f64, x: &[f64]) -> Result<Vec<f64>> {
    let fx = f.residual(x)?;
    let gx = g.residual(x)?;
    Ok(fx.iter().zip(&gx).map(|(a, b)| kappa * a + (1.0 - kappa) * b).collect())
}

/// The convex homotopy as a trackable object.
#[derive(Debug, Clone)]
pub struct ConvexHomotopy {
    objective: ZeroProblem,
    auxiliary: AuxiliaryProblem,
}

impl ConvexHomotopy {
    pub fn new(objective: ZeroProblem, auxiliary: AuxiliaryProblem) -> Result<Self> {
        if objective.dim() != auxiliary.dim() {
            return Err(HomotopyError::Dimension { expected: objective.dim(), got: auxiliary.dim() });
        }
        Ok(Self { objective, auxiliary })
    }

    pub fn objective(&self) -> &ZeroProblem {
        &self.objective
    }

    pub fn auxiliary(&self) -> &AuxiliaryProblem {
        &self.auxiliary
    }
}

impl Homotopy for ConvexHomotopy {
    fn dim(&self) -> usize {
        self.objective.dim()
    }

    fn eval(&self, kappa: f64, x: &[f64]) -> Result<Vec<f64>> {
        convex_homotopy(&self.objective, &self.auxiliary, kappa, x)
    }

    fn jac_x(&self, kappa: f64, x: &[f64]) -> Result<DenseMatrix> {
        let jf = self.objective.jacobian(x)?;
        let jg = self.auxiliary.jacobian(x)?;
        jf.scale(kappa).add(&jg.scale(1.0 - kappa))
    }

    fn jac_kappa(&self, _kappa: f64, x: &[f64]) -> Result<Vec<f64>> {
        let fx = self.objective.residual(x)?;
        let gx = self.auxiliary.residual(x)?;
        Ok(fx.iter().zip(&gx).map(|(a, b)| a - b).collect())
    }
}

/// `(κ, x) ↦ Rⁿ` map that may fail.
pub type ParametricFn = Arc<dyn Fn(f64, &[f64]) -> Result<Vec<f64>> + Send + Sync>;

/// A homotopy given directly as a function of `(κ, x)`, e.g. a problem with
/// the continuation parameter embedded in its equations.
#[derive(Clone)]
pub struct ParametricHomotopy {
    dim: usize,
    f: ParametricFn,
}

impl ParametricHomotopy {
    pub fn new<F>(dim: usize, f: F) -> Self
    where
        F: Fn(f64, &[f64]) -> Result<Vec<f64>> + Send + Sync + 'static,
    {
        Self { dim, f: Arc::new(f) }
    }

    pub fn from_arc(dim: usize, f: ParametricFn) -> Self {
        Self { dim, f }
    }

    pub fn function(&self) -> &ParametricFn {
        &self.f
    }
}

impl fmt::Debug for ParametricHomotopy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ParametricHomotopy").field("dim", &self.dim).finish()
    }
}

impl Homotopy for ParametricHomotopy {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, kappa: f64, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(HomotopyError::Dimension { expected: self.dim, got: x.len() });
        }
        let r = (self.f)(kappa, x)?;
        if r.len() != self.dim {
            return Err(HomotopyError::Dimension { expected: self.dim, got: r.len() });
        }
        Ok(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{make_auxiliary, AuxiliaryKind};

    #[test]
    fn convex_boundaries_and_midpoint() {
        let f = ZeroProblem::new(1, |x| Ok(vec![x[0] - 1.0]));
        let g_problem = ZeroProblem::new(1, |x| Ok(vec![x[0] + 1.0]));
        let g = AuxiliaryProblem::custom(g_problem, vec![-1.0]).unwrap();
        assert_eq!(convex_homotopy(&f, &g, 0.5, &[0.0]).unwrap(), vec![0.0]);
        assert_eq!(convex_homotopy(&f, &g, 0.0, &[3.0]).unwrap(), vec![4.0]);
        assert_eq!(convex_homotopy(&f, &g, 1.0, &[3.0]).unwrap(), vec![2.0]);
    }

    #[test]
    fn convex_jacobians_match_differences() {
        let f = ZeroProblem::new(2, |x| Ok(vec![x[0] * x[1], x[0].exp() - x[1]]));
        let g = make_auxiliary(AuxiliaryKind::FixedPoint, &f, &[0.2, 0.1], None).unwrap();
        let h = ConvexHomotopy::new(f, g).unwrap();
        let x = [0.7, -0.3];
        let jx = h.jac_x(0.4, &x).unwrap();
        let fd = linalg::jacobian_fd(|y| h.eval(0.4, y), &x, None).unwrap();
        assert!(jx.add(&fd.scale(-1.0)).unwrap().max_abs() < 1e-8);
        let jk = h.jac_kappa(0.4, &x).unwrap();
        let p = ParametricHomotopy::new(2, move |k, y| h.eval(k, y));
        let fdk = p.jac_kappa(0.4, &x).unwrap();
        for (a, b) in jk.iter().zip(&fdk) {
            assert!((a - b).abs() < 1e-8);
        }
    }
}
