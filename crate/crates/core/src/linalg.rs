//! Dense linear algebra and root-finding kernels.
//!
//! Everything here works on small, dense, row-major matrices. The problems
//! this crate targets have a handful of unknowns, so partial-pivoting LU and
//! a damped Newton corrector are all that is needed.

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{HomotopyError, Result};

/// Pivots below this magnitude mark a matrix as singular.
pub const PIVOT_TOL: f64 = 1e-14;

/// Row-major dense matrix.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = *d;
        }
        m
    }

    pub fn from_row_slice(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(HomotopyError::Dimension { expected: rows * cols, got: data.len() });
        }
        Ok(Self { rows, cols, data: data.to_vec() })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(HomotopyError::Dimension { expected: cols, got: r.len() });
            }
            data.extend_from_slice(r);
        }
        Ok(Self { rows: rows.len(), cols, data })
    }

    pub fn from_columns(rows: usize, columns: &[Vec<f64>]) -> Result<Self> {
        let mut m = Self::zeros(rows, columns.len());
        for (j, c) in columns.iter().enumerate() {
            if c.len() != rows {
                return Err(HomotopyError::Dimension { expected: rows, got: c.len() });
            }
            for (i, v) in c.iter().enumerate() {
                m[(i, j)] = *v;
            }
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(HomotopyError::Dimension { expected: self.cols, got: other.rows });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(HomotopyError::Dimension { expected: self.cols, got: v.len() });
        }
        Ok((0..self.rows).map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum()).collect())
    }

    pub fn add(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(HomotopyError::Dimension { expected: self.rows * self.cols, got: other.rows * other.cols });
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(Self { rows: self.rows, cols: self.cols, data })
    }

    pub fn scale(&self, s: f64) -> DenseMatrix {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| v * s).collect() }
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub(crate) fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<&[f64]> = (0..self.rows).map(|i| self.row(i)).collect();
        f.debug_struct("DenseMatrix").field("rows", &rows).finish()
    }
}

/// Partial-pivoting LU factorization, `P A = L U`, packed in one matrix.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: DenseMatrix,
    perm: Vec<usize>,
    sign: f64,
    singular: Option<f64>,
}

impl Lu {
    pub fn factor(a: &DenseMatrix) -> Result<Lu> {
        if !a.is_square() {
            return Err(HomotopyError::Dimension { expected: a.rows, got: a.cols });
        }
        let n = a.rows;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        let mut singular = None;
        for k in 0..n {
            let (p, pmax) =
                (k..n)
                    .map(|i| (i, lu[(i, k)].abs()))
                    .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pmax < PIVOT_TOL {
                singular.get_or_insert(pmax);
                continue;
            }
            if p != k {
                for j in 0..n {
                    lu.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let factor = lu[(i, k)] / pivot;
                lu[(i, k)] = factor;
                if factor != 0.0 {
                    for j in k + 1..n {
                        lu[(i, j)] -= factor * lu[(k, j)];
                    }
                }
            }
        }
        Ok(Lu { lu, perm, sign, singular })
    }

    pub fn is_singular(&self) -> bool {
        self.singular.is_some()
    }

    pub fn determinant(&self) -> f64 {
        if self.singular.is_some() {
            // the skipped column leaves a (near) zero on the diagonal
            return 0.0;
        }
        (0..self.lu.rows).map(|i| self.lu[(i, i)]).product::<f64>() * self.sign
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.lu.rows;
        if b.len() != n {
            return Err(HomotopyError::Dimension { expected: n, got: b.len() });
        }
        if let Some(pivot) = self.singular {
            return Err(HomotopyError::SingularMatrix { pivot });
        }
        let mut y: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s: f64 = (0..i).map(|j| self.lu[(i, j)] * y[j]).sum();
            y[i] -= s;
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| self.lu[(i, j)] * y[j]).sum();
            y[i] = (y[i] - s) / self.lu[(i, i)];
        }
        Ok(y)
    }
}

/// Solves `A x = b` by partial-pivoting LU.
pub fn solve_dense(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    Lu::factor(a)?.solve(b)
}

/// Determinant from the LU pivots. Returns 0 when a pivot falls below
/// [`PIVOT_TOL`].
pub fn determinant(a: &DenseMatrix) -> Result<f64> {
    Ok(Lu::factor(a)?.determinant())
}

pub fn inverse(a: &DenseMatrix) -> Result<DenseMatrix> {
    let lu = Lu::factor(a)?;
    let n = a.rows;
    let cols = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            lu.solve(&e)
        })
        .collect::<Result<Vec<_>>>()?;
    DenseMatrix::from_columns(n, &cols)
}

/// Singular value decomposition in the `A = Uᵀ diag(σ) V` orientation.
#[derive(Debug, Clone)]
pub struct Svd {
    /// k×m, rows are left singular vectors.
    pub u: DenseMatrix,
    /// Descending, nonnegative, length k = min(m, n).
    pub sigma: Vec<f64>,
    /// k×n, rows are right singular vectors.
    pub v: DenseMatrix,
}

impl Svd {
    pub fn reconstruct(&self) -> Result<DenseMatrix> {
        self.u.transpose().matmul(&DenseMatrix::from_diag(&self.sigma))?.matmul(&self.v)
    }
}

pub fn svd(a: &DenseMatrix) -> Result<Svd> {
    if !a.is_finite() {
        return Err(HomotopyError::Numerical("svd of a non-finite matrix".into()));
    }
    let m = a.to_nalgebra();
    let dec = nalgebra::linalg::SVD::try_new(m, true, true, f64::EPSILON, 10_000)
        .ok_or_else(|| HomotopyError::Numerical("svd did not converge".into()))?;
    let u = dec.u.ok_or_else(|| HomotopyError::Numerical("svd: missing U".into()))?;
    let v_t = dec.v_t.ok_or_else(|| HomotopyError::Numerical("svd: missing V".into()))?;
    let mut order: Vec<usize> = (0..dec.singular_values.len()).collect();
    order.sort_by(|&i, &j| dec.singular_values[j].total_cmp(&dec.singular_values[i]));

    let k = order.len();
    let mut ur = DenseMatrix::zeros(k, a.rows);
    let mut vr = DenseMatrix::zeros(k, a.cols);
    let mut sigma = Vec::with_capacity(k);
    for (row, &idx) in order.iter().enumerate() {
        sigma.push(dec.singular_values[idx].abs());
        for i in 0..a.rows {
            ur[(row, i)] = u[(i, idx)];
        }
        for j in 0..a.cols {
            vr[(row, j)] = v_t[(idx, j)];
        }
    }
    Ok(Svd { u: ur, sigma, v: vr })
}

/// Default central-difference step for coordinate `xj`.
pub fn fd_step(xj: f64) -> f64 {
    1e-6 * xj.abs().max(1.0)
}

/// Central-difference Jacobian of `f` at `x`. With `h = None` each column
/// uses [`fd_step`].
pub fn jacobian_fd<F>(f: F, x: &[f64], h: Option<f64>) -> Result<DenseMatrix>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let n = x.len();
    let mut cols = Vec::with_capacity(n);
    let mut xp = x.to_vec();
    let mut m = None;
    for j in 0..n {
        let step = h.unwrap_or_else(|| fd_step(x[j]));
        xp[j] = x[j] + step;
        let fp = f(&xp)?;
        xp[j] = x[j] - step;
        let fm = f(&xp)?;
        xp[j] = x[j];
        if fp.len() != fm.len() {
            return Err(HomotopyError::Dimension { expected: fp.len(), got: fm.len() });
        }
        m.get_or_insert(fp.len());
        let col: Vec<f64> = fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * step)).collect();
        if col.iter().any(|v| !v.is_finite()) {
            return Err(HomotopyError::eval("non-finite finite-difference column", x));
        }
        cols.push(col);
    }
    DenseMatrix::from_columns(m.unwrap_or(0), &cols)
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Settings for [`newton_solve`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonOptions {
    pub tol_f: f64,
    pub tol_x: f64,
    pub max_iters: usize,
    /// Backtracking halvings per iteration.
    pub max_backtracks: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { tol_f: 1e-12, tol_x: 1e-12, max_iters: 50, max_backtracks: 8 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonReport {
    pub x: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

/// Damped Newton iteration for `f(x) = 0`.
///
/// Stops when `‖f(x)‖∞ ≤ tol_f` or when the accepted step satisfies
/// `‖Δx‖∞ ≤ tol_x`. Each step is halved up to `max_backtracks` times until the
/// residual norm decreases; failed trial evaluations count as no decrease.
/// The Jacobian is factored at every iterate, the returned one included, so a
/// pivot below [`PIVOT_TOL`] anywhere ends in [`HomotopyError::SingularPoint`].
/// A stalled line search ends in [`HomotopyError::NoConvergence`].
pub fn newton_solve<F, J>(f: F, jac: Option<J>, x0: &[f64], opts: &NewtonOptions) -> Result<NewtonReport>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
    J: Fn(&[f64]) -> Result<DenseMatrix>,
{
    let mut x = x0.to_vec();
    let mut r = f(&x)?;
    if r.len() != x.len() {
        return Err(HomotopyError::Dimension { expected: x.len(), got: r.len() });
    }
    let mut rn = norm_inf(&r);
    if !rn.is_finite() {
        return Err(HomotopyError::eval("non-finite residual", &x));
    }
    for it in 0..=opts.max_iters {
        let jm = match &jac {
            Some(j) => j(&x)?,
            None => jacobian_fd(&f, &x, None)?,
        };
        let lu = Lu::factor(&jm)?;
        if lu.is_singular() {
            return Err(HomotopyError::SingularPoint { iteration: it, x });
        }
        if rn <= opts.tol_f {
            return Ok(NewtonReport { x, residual: rn, iterations: it });
        }
        if it == opts.max_iters {
            break;
        }
        let neg: Vec<f64> = r.iter().map(|v| -v).collect();
        let dx = lu.solve(&neg)?;
        if dx.iter().any(|v| !v.is_finite()) {
            return Err(HomotopyError::SingularPoint { iteration: it, x });
        }

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_backtracks {
            let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + t * d).collect();
            if let Ok(rt) = f(&trial) {
                let tn = norm_inf(&rt);
                if tn.is_finite() && norm2(&rt) < norm2(&r) {
                    accepted = Some((trial, rt, tn));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((xn, rt, tn)) = accepted else {
            return Err(HomotopyError::NoConvergence { iterations: it + 1, residual: rn });
        };
        let step = t * norm_inf(&dx);
        x = xn;
        r = rt;
        rn = tn;
        if step <= opts.tol_x {
            return Ok(NewtonReport { x, residual: rn, iterations: it + 1 });
        }
    }
    Err(HomotopyError::NoConvergence { iterations: opts.max_iters, residual: rn })
}
