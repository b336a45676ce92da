//! Homotopy functions built from a constrained expression of the Theory of
//! Functional Connections.
//!
//! A constrained expression `y(η) = g(η) + P₁(η)c₁ + P₂(η)c₂` meets the two
//! boundary values `y(η₀) = y₀`, `y(η_f) = y_f` for *every* free function
//! `g`. Taking `y₀ = G(x)`, `y_f = F(x)` and `g = Ω h(κ, x)` gives a family
//! of homotopies
//!
//! ```text
//! Γ(κ, x, Ω) = Ω Γ_Ω(κ, x) + Γ₀(κ, x)
//! Γ₀   = B₁(κ) G(x) + B₂(κ) F(x)
//! Γ_Ω  = h(κ, x) − B₁(κ) h(0, x) − B₂(κ) h(1, x)
//! B_j  = P₁(η(κ)) Q₁ⱼ + P₂(η(κ)) Q₂ⱼ,     η(κ) = (1 − κ) η₀ + κ η_f
//! ```
//!
//! that all share the endpoints `Γ(0) = G` and `Γ(1) = F`, while the weight
//! matrix `Ω` steers the path in between. Because `h` depends on `x`,
//! `∂Γ/∂x = Ω ∂Γ_Ω/∂x + ∂Γ₀/∂x` can be made regular by a suitable `Ω`
//! whenever `∂Γ_Ω/∂x` is.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Homotopy, ParametricFn};
use crate::error::{HomotopyError, Result};
use crate::linalg::{self, DenseMatrix, Lu};
use crate::problem::{AuxiliaryProblem, ZeroProblem};

/// Largest exponent accepted by the built-in exponential basis.
pub const EXP_ARG_LIMIT: f64 = 300.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupportKind {
    /// `P₁ = I`, `P₂ = η I`
    Poly,
    /// `P₁ = I`, `P₂ = e^η I`
    ExpPos,
    /// `P₁ = I`, `P₂ = e^{−η} I`
    ExpNeg,
}

/// Choice of support functions and of the η interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportCase {
    pub kind: SupportKind,
    pub eta0: f64,
    pub etaf: f64,
}

impl SupportCase {
    pub fn new(kind: SupportKind, eta0: f64, etaf: f64) -> Result<Self> {
        if !(eta0 < etaf) {
            return Err(HomotopyError::Config(format!("need eta0 < etaf, got {eta0} >= {etaf}")));
        }
        Ok(Self { kind, eta0, etaf })
    }

    /// `η₀ = 0`, `η_f = 1`, so η coincides with κ.
    pub fn unit(kind: SupportKind) -> Self {
        Self { kind, eta0: 0.0, etaf: 1.0 }
    }

    /// `τ = e^{η₀ − η_f}`.
    pub fn tau(&self) -> f64 {
        (self.eta0 - self.etaf).exp()
    }

    pub fn eta(&self, kappa: f64) -> f64 {
        (1.0 - kappa) * self.eta0 + kappa * self.etaf
    }

    /// Scalar multipliers `(p₁, p₂)` with `P_i(η) = p_i I`.
    pub fn scalars(&self, eta: f64) -> (f64, f64) {
        match self.kind {
            SupportKind::Poly => (1.0, eta),
            SupportKind::ExpPos => (1.0, eta.exp()),
            SupportKind::ExpNeg => (1.0, (-eta).exp()),
        }
    }

    pub fn p1(&self, eta: f64, n: usize) -> DenseMatrix {
        DenseMatrix::identity(n).scale(self.scalars(eta).0)
    }

    pub fn p2(&self, eta: f64, n: usize) -> DenseMatrix {
        DenseMatrix::identity(n).scale(self.scalars(eta).1)
    }

    /// `[[P₁(η₀), P₂(η₀)], [P₁(η_f), P₂(η_f)]]`.
    pub fn boundary_block(&self, n: usize) -> DenseMatrix {
        let blocks = [[self.p1(self.eta0, n), self.p2(self.eta0, n)], [self.p1(self.etaf, n), self.p2(self.etaf, n)]];
        assemble_2x2(&blocks, n)
    }
}

fn assemble_2x2(blocks: &[[DenseMatrix; 2]; 2], n: usize) -> DenseMatrix {
    let mut m = DenseMatrix::zeros(2 * n, 2 * n);
    for (bi, row) in blocks.iter().enumerate() {
        for (bj, b) in row.iter().enumerate() {
            for i in 0..n {
                for j in 0..n {
                    m[(bi * n + i, bj * n + j)] = b[(i, j)];
                }
            }
        }
    }
    m
}

/// Blocks of the inverse of [`SupportCase::boundary_block`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QMatrices {
    pub q11: DenseMatrix,
    pub q12: DenseMatrix,
    pub q21: DenseMatrix,
    pub q22: DenseMatrix,
}

impl QMatrices {
    pub fn assemble(&self) -> DenseMatrix {
        let n = self.q11.rows();
        assemble_2x2(&[[self.q11.clone(), self.q12.clone()], [self.q21.clone(), self.q22.clone()]], n)
    }
}

/// Inverts the 2n×2n boundary block directly and splits it into `Q_ij`.
pub fn q_matrices(support: &SupportCase, n: usize) -> Result<QMatrices> {
    let block = support.boundary_block(n);
    let inv = match linalg::inverse(&block) {
        Ok(inv) => inv,
        Err(HomotopyError::SingularMatrix { .. }) => {
            return Err(HomotopyError::Config(format!("support block matrix is singular for {support:?}")))
        }
        Err(e) => return Err(e),
    };
    let sub = |bi: usize, bj: usize| {
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = inv[(bi * n + i, bj * n + j)];
            }
        }
        m
    };
    Ok(QMatrices { q11: sub(0, 0), q12: sub(0, 1), q21: sub(1, 0), q22: sub(1, 1) })
}

type BasisEval = Arc<dyn Fn(f64, &[f64]) -> Result<Vec<f64>> + Send + Sync>;
type BasisJac = Arc<dyn Fn(f64, &[f64]) -> Result<DenseMatrix> + Send + Sync>;

/// State-dependent basis `h(κ, x) ∈ Rᵐ`.
#[derive(Clone)]
pub struct BasisFunction {
    m: usize,
    eval: BasisEval,
    jac: Option<BasisJac>,
}

impl BasisFunction {
    pub fn new<F>(m: usize, eval: F) -> Self
    where
        F: Fn(f64, &[f64]) -> Result<Vec<f64>> + Send + Sync + 'static,
    {
        Self { m, eval: Arc::new(eval), jac: None }
    }

    pub fn with_jacobian<J>(mut self, jac: J) -> Self
    where
        J: Fn(f64, &[f64]) -> Result<DenseMatrix> + Send + Sync + 'static,
    {
        self.jac = Some(Arc::new(jac));
        self
    }

    /// `h_i(κ, x) = e^{x_i} κ²`. Exponents above [`EXP_ARG_LIMIT`] are
    /// reported as evaluation errors.
    pub fn exp_kappa_squared(n: usize) -> Self {
        fn guard(x: &[f64]) -> Result<()> {
            match x.iter().find(|v| **v > EXP_ARG_LIMIT || v.is_nan()) {
                Some(v) => Err(HomotopyError::eval(format!("basis exponent {v} out of range"), x)),
                None => Ok(()),
            }
        }
        Self::new(n, |k, x| {
            guard(x)?;
            Ok(x.iter().map(|v| v.exp() * k * k).collect())
        })
        .with_jacobian(|k, x| {
            guard(x)?;
            let d: Vec<f64> = x.iter().map(|v| v.exp() * k * k).collect();
            Ok(DenseMatrix::from_diag(&d))
        })
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn eval(&self, kappa: f64, x: &[f64]) -> Result<Vec<f64>> {
        let h = (self.eval)(kappa, x)?;
        if h.len() != self.m {
            return Err(HomotopyError::Dimension { expected: self.m, got: h.len() });
        }
        Ok(h)
    }

    pub fn jacobian(&self, kappa: f64, x: &[f64]) -> Result<DenseMatrix> {
        match &self.jac {
            Some(j) => j(kappa, x),
            None => linalg::jacobian_fd(|y| self.eval(kappa, y), x, None),
        }
    }

    /// Checks `m = n`, non-vanishing components on κ ∈ (0, 1] and
    /// nonlinearity in κ at a few sample states.
    pub fn validate(&self, n: usize, samples: &[Vec<f64>]) -> Result<()> {
        if self.m != n {
            return Err(HomotopyError::Config(format!(
                "basis dimension m = {} must equal the problem dimension n = {n}",
                self.m
            )));
        }
        for x in samples {
            for kappa in [0.25, 0.5, 0.75, 1.0] {
                let h = self.eval(kappa, x)?;
                if h.iter().any(|v| *v == 0.0 || !v.is_finite()) {
                    return Err(HomotopyError::Config(format!(
                        "basis has a vanishing component at kappa = {kappa}, x = {x:?}"
                    )));
                }
            }
            let h0 = self.eval(0.0, x)?;
            let h1 = self.eval(1.0, x)?;
            let hm = self.eval(0.5, x)?;
            let linear = (0..self.m).all(|i| {
                let chord = 0.5 * (h0[i] + h1[i]);
                (hm[i] - chord).abs() <= 1e-12 * (1.0 + chord.abs())
            });
            if linear {
                return Err(HomotopyError::Config(format!("basis is linear in kappa at x = {x:?}")));
            }
        }
        Ok(())
    }
}

impl fmt::Debug for BasisFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BasisFunction").field("m", &self.m).field("analytic_jacobian", &self.jac.is_some()).finish()
    }
}

/// Where the Ω-independent part of Γ comes from.
#[derive(Clone)]
pub enum Baseline {
    /// `Γ₀ = B₁ G + B₂ F` from the constrained expression.
    Blend,
    /// A given homotopy with `Γ₀(0, x) = G(x)` and `Γ₀(1, x) = F(x)`, such
    /// as a problem with κ embedded in its equations.
    Embedded(ParametricFn),
}

impl fmt::Debug for Baseline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Baseline::Blend => f.write_str("Blend"),
            Baseline::Embedded(_) => f.write_str("Embedded"),
        }
    }
}

/// `Γ(κ, x, Ω) = Ω Γ_Ω(κ, x) + Γ₀(κ, x)` together with its current weights.
#[derive(Debug, Clone)]
pub struct TfcHomotopy {
    objective: ZeroProblem,
    auxiliary: AuxiliaryProblem,
    support: SupportCase,
    q: QMatrices,
    basis: BasisFunction,
    baseline: Baseline,
    omega: DenseMatrix,
}

impl TfcHomotopy {
    pub fn new(
        objective: ZeroProblem,
        auxiliary: AuxiliaryProblem,
        support: SupportCase,
        basis: BasisFunction,
    ) -> Result<Self> {
        let n = objective.dim();
        if auxiliary.dim() != n {
            return Err(HomotopyError::Dimension { expected: n, got: auxiliary.dim() });
        }
        let base = auxiliary.base_point().to_vec();
        let zeros = vec![0.0; n];
        let ones = vec![0.5; n];
        basis.validate(n, &[base, zeros, ones])?;
        let q = q_matrices(&support, n)?;
        let m = basis.dim();
        Ok(Self { objective, auxiliary, support, q, basis, baseline: Baseline::Blend, omega: DenseMatrix::zeros(n, m) })
    }

    /// Replaces the blended `Γ₀` with an explicit homotopy.
    pub fn with_embedded_baseline(mut self, f: ParametricFn) -> Self {
        self.baseline = Baseline::Embedded(f);
        self
    }

    pub fn dim(&self) -> usize {
        self.objective.dim()
    }

    pub fn basis_dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn objective(&self) -> &ZeroProblem {
        &self.objective
    }

    pub fn auxiliary(&self) -> &AuxiliaryProblem {
        &self.auxiliary
    }

    pub fn support(&self) -> &SupportCase {
        &self.support
    }

    pub fn q(&self) -> &QMatrices {
        &self.q
    }

    pub fn basis(&self) -> &BasisFunction {
        &self.basis
    }

    pub fn baseline(&self) -> &Baseline {
        &self.baseline
    }

    pub fn omega(&self) -> &DenseMatrix {
        &self.omega
    }

    pub fn set_omega(&mut self, omega: DenseMatrix) -> Result<()> {
        self.check_omega(&omega)?;
        self.omega = omega;
        Ok(())
    }

    fn check_omega(&self, omega: &DenseMatrix) -> Result<()> {
        if omega.rows() != self.dim() || omega.cols() != self.basis_dim() {
            return Err(HomotopyError::Dimension {
                expected: self.dim() * self.basis_dim(),
                got: omega.rows() * omega.cols(),
            });
        }
        Ok(())
    }

    /// Scalar blending weights `(b₁, b₂)` with `B_j = b_j I`.
    ///
    /// All supported cases have `P_i = p_i I`, so `B_j` reduces to
    /// `p₁ Q₁ⱼ + p₂ Q₂ⱼ`, itself a multiple of the identity.
    pub fn blend_weights(&self, kappa: f64) -> (f64, f64) {
        let (p1, p2) = self.support.scalars(self.support.eta(kappa));
        let b1 = p1 * self.q.q11[(0, 0)] + p2 * self.q.q21[(0, 0)];
        let b2 = p1 * self.q.q12[(0, 0)] + p2 * self.q.q22[(0, 0)];
        (b1, b2)
    }

    /// Ω-independent part `Γ₀(κ, x)`.
    pub fn gamma0(&self, kappa: f64, x: &[f64]) -> Result<Vec<f64>> {
        match &self.baseline {
            Baseline::Embedded(f) => {
                let r = f(kappa, x)?;
                if r.len() != self.dim() {
                    return Err(HomotopyError::Dimension { expected: self.dim(), got: r.len() });
                }
                Ok(r)
            }
            Baseline::Blend => {
                let (b1, b2) = self.blend_weights(kappa);
                // skip the side whose weight vanishes so κ = 0, 1 stay exact
                let g = if b1 != 0.0 { Some(self.auxiliary.residual(x)?) } else { None };
                let f = if b2 != 0.0 { Some(self.objective.residual(x)?) } else { None };
                Ok((0..self.dim())
                    .map(|i| g.as_ref().map_or(0.0, |g| b1 * g[i]) + f.as_ref().map_or(0.0, |f| b2 * f[i]))
                    .collect())
            }
        }
    }

    /// Steering term `Γ_Ω(κ, x)`; vanishes at κ = 0 and κ = 1.
    pub fn gamma_omega(&self, kappa: f64, x: &[f64]) -> Result<Vec<f64>> {
        let (b1, b2) = self.blend_weights(kappa);
        let h = self.basis.eval(kappa, x)?;
        let h0 = self.basis.eval(0.0, x)?;
        let hf = self.basis.eval(1.0, x)?;
        Ok((0..h.len()).map(|i| h[i] - b1 * h0[i] - b2 * hf[i]).collect())
    }

    /// `Γ(κ, x, Ω)` for an explicit Ω.
    pub fn tfc_gamma(&self, kappa: f64, x: &[f64], omega: &DenseMatrix) -> Result<Vec<f64>> {
        self.check_omega(omega)?;
        let g0 = self.gamma0(kappa, x)?;
        if omega.max_abs() == 0.0 {
            return Ok(g0);
        }
        let steer = omega.matvec(&self.gamma_omega(kappa, x)?)?;
        Ok(g0.iter().zip(&steer).map(|(a, b)| a + b).collect())
    }

    pub fn jac_gamma0_x(&self, kappa: f64, x: &[f64]) -> Result<DenseMatrix> {
        match &self.baseline {
            Baseline::Embedded(f) => linalg::jacobian_fd(|y| f(kappa, y), x, None),
            Baseline::Blend => {
                let (b1, b2) = self.blend_weights(kappa);
                let n = self.dim();
                let mut j = DenseMatrix::zeros(n, n);
                if b1 != 0.0 {
                    j = j.add(&self.auxiliary.jacobian(x)?.scale(b1))?;
                }
                if b2 != 0.0 {
                    j = j.add(&self.objective.jacobian(x)?.scale(b2))?;
                }
                Ok(j)
            }
        }
    }

    pub fn jac_gamma_omega_x(&self, kappa: f64, x: &[f64]) -> Result<DenseMatrix> {
        let (b1, b2) = self.blend_weights(kappa);
        let jh = self.basis.jacobian(kappa, x)?;
        let jh0 = self.basis.jacobian(0.0, x)?;
        let jhf = self.basis.jacobian(1.0, x)?;
        jh.add(&jh0.scale(-b1))?.add(&jhf.scale(-b2))
    }

    /// `∂Γ/∂x = Ω ∂Γ_Ω/∂x + ∂Γ₀/∂x`.
    pub fn tfc_gamma_jac_x(&self, kappa: f64, x: &[f64], omega: &DenseMatrix) -> Result<DenseMatrix> {
        self.check_omega(omega)?;
        let j0 = self.jac_gamma0_x(kappa, x)?;
        if omega.max_abs() == 0.0 {
            return Ok(j0);
        }
        omega.matmul(&self.jac_gamma_omega_x(kappa, x)?)?.add(&j0)
    }

    /// Block-diagonal `Γ̃_Ω(κ, x)` (n × mn) with `Ω Γ_Ω = Γ̃_Ω vec(Ω)`.
    pub fn gamma_omega_tilde(&self, kappa: f64, x: &[f64]) -> Result<DenseMatrix> {
        let (n, m) = (self.dim(), self.basis_dim());
        let ht = self.gamma_omega(kappa, x)?;
        let mut out = DenseMatrix::zeros(n, n * m);
        for i in 0..n {
            for k in 0..m {
                out[(i, i * m + k)] = ht[k];
            }
        }
        Ok(out)
    }

    /// Builds a weight matrix that lifts every singular value of `∂Γ/∂x` at
    /// `(κ, x)` to at least `target_sigma`.
    ///
    /// With `∂Γ₀/∂x = Uᵀ Σ V`, pick `S = Uᵀ Λ V` where
    /// `Λ_i = max(target − σ_i, 0)`, then solve `Ω ∂Γ_Ω/∂x = S` through
    /// `Ω = S Dᵀ (D Dᵀ)⁻¹`, `D = ∂Γ_Ω/∂x`. The assembled Jacobian is
    /// `Uᵀ (Σ + Λ) V`.
    pub fn regularize_omega(&self, kappa: f64, x: &[f64], target_sigma: f64) -> Result<DenseMatrix> {
        if self.basis_dim() != self.dim() {
            return Err(HomotopyError::Config("regularization needs m = n".into()));
        }
        let j0 = self.jac_gamma0_x(kappa, x)?;
        let d = self.jac_gamma_omega_x(kappa, x)?;

        let ds = linalg::svd(&d)?;
        let dmax = ds.sigma.first().copied().unwrap_or(0.0);
        let dmin = ds.sigma.last().copied().unwrap_or(0.0);
        if dmin <= f64::EPSILON * dmax.max(f64::MIN_POSITIVE) * 16.0 || dmin == 0.0 {
            return Err(HomotopyError::RegularizationImpossible);
        }

        let s0 = linalg::svd(&j0)?;
        let lambda: Vec<f64> = s0.sigma.iter().map(|s| (target_sigma - s).max(0.0)).collect();
        let s = s0.u.transpose().matmul(&DenseMatrix::from_diag(&lambda))?.matmul(&s0.v)?;

        let ddt = d.matmul(&d.transpose())?;
        let lu = Lu::factor(&ddt)?;
        if lu.is_singular() {
            return Err(HomotopyError::RegularizationImpossible);
        }
        // Ω = S Dᵀ (D Dᵀ)⁻¹, solved row by row: (D Dᵀ)ᵀ ωᵢ = (S Dᵀ)ᵢ
        let sdt = s.matmul(&d.transpose())?;
        let lu_t = Lu::factor(&ddt.transpose())?;
        let rows = (0..sdt.rows()).map(|i| lu_t.solve(sdt.row(i))).collect::<Result<Vec<_>>>()?;
        DenseMatrix::from_rows(&rows)
    }

    /// View of this homotopy with Ω fixed, for the path trackers.
    pub fn with_omega<'a>(&'a self, omega: &'a DenseMatrix) -> TfcPath<'a> {
        TfcPath { homotopy: self, omega }
    }

    /// View using the stored weights.
    pub fn current_path(&self) -> TfcPath<'_> {
        TfcPath { homotopy: self, omega: &self.omega }
    }
}

/// A [`TfcHomotopy`] with its weight matrix pinned.
#[derive(Debug, Clone, Copy)]
pub struct TfcPath<'a> {
    pub homotopy: &'a TfcHomotopy,
    pub omega: &'a DenseMatrix,
}

impl Homotopy for TfcPath<'_> {
    fn dim(&self) -> usize {
        self.homotopy.dim()
    }

    fn eval(&self, kappa: f64, x: &[f64]) -> Result<Vec<f64>> {
        self.homotopy.tfc_gamma(kappa, x, self.omega)
    }

    fn jac_x(&self, kappa: f64, x: &[f64]) -> Result<DenseMatrix> {
        self.homotopy.tfc_gamma_jac_x(kappa, x, self.omega)
    }
}

/// Row-major `vec(Ω)`, matching the block layout of
/// [`TfcHomotopy::gamma_omega_tilde`].
pub fn vectorize_omega(omega: &DenseMatrix) -> Vec<f64> {
    omega.as_slice().to_vec()
}

pub fn unvectorize_omega(col: &[f64], n: usize, m: usize) -> Result<DenseMatrix> {
    DenseMatrix::from_row_slice(n, m, col)
}
