//! Path switching: pick a new weight matrix `Ω` and start point `x₀` at a
//! stalled or diverging κ so that tracking can resume on another path with
//! the same endpoints.
//!
//! The switch minimizes the projected error
//!
//! ```text
//! J = ‖Γ(min(κ_L + Δκ, 1), x₀, Ω)‖₂ + Σ_{i=1..N} γⁱ ‖Γ(min(κ_L + iζΔκ, 1), x₀, Ω)‖₂
//! ```
//!
//! subject to `c_eq = 0`, where `c_eq = Γ(κ_L, x₀, Ω)` unless
//! `|det ∂Γ/∂x| ≤ δ` at the start, in which case it is a vector of ones.
//! The constraint is handled with an increasing quadratic penalty, each
//! stage minimized by BFGS on finite-difference gradients. The last stage
//! is followed by a Newton projection of `x₀` onto `Γ(κ_L, ·, Ω) = 0`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::config::TrackerConfig;
use crate::error::{HomotopyError, Result};
use crate::homotopy::{unvectorize_omega, vectorize_omega, TfcHomotopy};
use crate::linalg::{self, DenseMatrix, NewtonOptions};

/// Chooses a new path at a stalled or diverging point.
pub trait Switcher {
    fn switch(&self, h: &TfcHomotopy, kappa_l: f64, x: &[f64], omega: &DenseMatrix) -> Result<SwitchResult>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwitchParams {
    /// γ
    pub discount: f64,
    /// ζ
    pub horizon: usize,
    /// N
    pub n_predicted: usize,
    /// δ
    pub sing_det_threshold: f64,
    /// Δκ used for the near and far points.
    pub dkappa: f64,
    pub tol_f: f64,
    pub penalties: Vec<f64>,
    /// Objective evaluations allowed per penalty stage.
    pub max_evals: usize,
    pub restarts: usize,
    /// Standard deviation of the restart perturbation.
    pub noise: f64,
    pub seed: u64,
}

impl Default for SwitchParams {
    fn default() -> Self {
        Self::from_config(&TrackerConfig::default(), 0)
    }
}

impl SwitchParams {
    pub fn from_config(config: &TrackerConfig, seed: u64) -> Self {
        Self {
            discount: config.discount,
            horizon: config.horizon,
            n_predicted: config.n_predicted,
            sing_det_threshold: config.sing_det_threshold,
            dkappa: config.dkappa_default,
            tol_f: config.tol_f,
            penalties: vec![1e2, 1e4, 1e6, 1e8],
            max_evals: 2000,
            restarts: 5,
            noise: 0.5,
            seed,
        }
    }

    /// Required bound on `‖c_eq‖₂` for a converged switch.
    pub fn feasibility_tol(&self) -> f64 {
        self.tol_f * 100.0
    }
}

#[derive(Debug, Clone)]
pub struct SwitchProblem<'a> {
    pub homotopy: &'a TfcHomotopy,
    pub kappa_l: f64,
    pub guess_omega: DenseMatrix,
    pub guess_x: Vec<f64>,
    pub params: SwitchParams,
}

impl<'a> SwitchProblem<'a> {
    pub fn new(
        homotopy: &'a TfcHomotopy,
        kappa_l: f64,
        guess_omega: DenseMatrix,
        guess_x: Vec<f64>,
        params: SwitchParams,
    ) -> Result<Self> {
        if !(0.0..1.0).contains(&kappa_l) {
            return Err(HomotopyError::Config(format!("switch point kappa = {kappa_l} outside [0, 1)")));
        }
        if params.n_predicted < 1 || !(params.sing_det_threshold > 0.0) {
            return Err(HomotopyError::Config("switch needs N >= 1 and delta > 0".into()));
        }
        if guess_x.len() != homotopy.dim()
            || guess_omega.rows() != homotopy.dim()
            || guess_omega.cols() != homotopy.basis_dim()
        {
            return Err(HomotopyError::Dimension { expected: homotopy.dim(), got: guess_x.len() });
        }
        if guess_x.iter().chain(guess_omega.as_slice()).any(|v| !v.is_finite()) {
            return Err(HomotopyError::Config("switch guess is not finite".into()));
        }
        Ok(Self { homotopy, kappa_l, guess_omega, guess_x, params })
    }

    fn split(&self, z: &[f64]) -> Result<(DenseMatrix, Vec<f64>)> {
        let (n, m) = (self.homotopy.dim(), self.homotopy.basis_dim());
        Ok((unvectorize_omega(&z[..n * m], n, m)?, z[n * m..].to_vec()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwitchStatus {
    Converged,
    Infeasible,
    MaxIters,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwitchResult {
    pub omega: DenseMatrix,
    pub x0: Vec<f64>,
    pub objective_value: f64,
    pub constraint_norm: f64,
    pub det_at_start: f64,
    /// Objective evaluations over all stages and restarts.
    pub iterations: usize,
    pub status: SwitchStatus,
    pub seed: u64,
}

/// Projected-error objective `J`, every term evaluated at `x0`.
pub fn objective_j(p: &SwitchProblem<'_>, omega: &DenseMatrix, x0: &[f64]) -> Result<f64> {
    let h = p.homotopy;
    let dk = p.params.dkappa;
    let mut j = linalg::norm2(&h.tfc_gamma((p.kappa_l + dk).min(1.0), x0, omega)?);
    let mut w = 1.0;
    for i in 1..=p.params.n_predicted {
        w *= p.params.discount;
        let k = (p.kappa_l + (i * p.params.horizon) as f64 * dk).min(1.0);
        j += w * linalg::norm2(&h.tfc_gamma(k, x0, omega)?);
    }
    Ok(j)
}

/// `|det ∂Γ/∂x|` at the switch point.
pub fn det_at_start(p: &SwitchProblem<'_>, omega: &DenseMatrix, x0: &[f64]) -> Result<f64> {
    let jac = p.homotopy.tfc_gamma_jac_x(p.kappa_l, x0, omega)?;
    Ok(linalg::determinant(&jac)?.abs())
}

/// Consistency constraint with artificial violation near singular starts.
pub fn ceq(p: &SwitchProblem<'_>, omega: &DenseMatrix, x0: &[f64]) -> Result<Vec<f64>> {
    if det_at_start(p, omega, x0)? <= p.params.sing_det_threshold {
        return Ok(vec![1.0; p.homotopy.dim()]);
    }
    p.homotopy.tfc_gamma(p.kappa_l, x0, omega)
}

struct Penalized<'p, 'a> {
    problem: &'p SwitchProblem<'a>,
    mu: f64,
    evals: usize,
}

impl Penalized<'_, '_> {
    fn value(&mut self, z: &[f64]) -> f64 {
        self.evals += 1;
        let eval = || -> Result<f64> {
            let (omega, x0) = self.problem.split(z)?;
            let j = objective_j(self.problem, &omega, &x0)?;
            let c = ceq(self.problem, &omega, &x0)?;
            Ok(j + self.mu * c.iter().map(|v| v * v).sum::<f64>())
        };
        match eval() {
            Ok(v) if v.is_finite() => v,
            _ => f64::INFINITY,
        }
    }

    fn gradient(&mut self, z: &[f64]) -> Vec<f64> {
        let mut zp = z.to_vec();
        (0..z.len())
            .map(|i| {
                let h = linalg::fd_step(z[i]);
                zp[i] = z[i] + h;
                let fp = self.value(&zp);
                zp[i] = z[i] - h;
                let fm = self.value(&zp);
                zp[i] = z[i];
                (fp - fm) / (2.0 * h)
            })
            .collect()
    }
}

/// BFGS with Armijo backtracking. Returns the final point and whether the
/// evaluation budget ran out.
fn bfgs(f: &mut Penalized<'_, '_>, z0: &[f64], budget: usize) -> (Vec<f64>, bool) {
    let d = z0.len();
    let start = f.evals;
    let mut z = z0.to_vec();
    let mut fz = f.value(&z);
    if !fz.is_finite() {
        return (z, false);
    }
    let mut g = f.gradient(&z);
    let mut hinv = DenseMatrix::identity(d);
    loop {
        if f.evals - start >= budget {
            return (z, true);
        }
        if g.iter().any(|v| !v.is_finite()) {
            let (zc, out) = coordinate_search(f, &z, fz, budget - (f.evals - start).min(budget));
            return (zc, out);
        }
        if linalg::norm_inf(&g) < 1e-10 {
            return (z, false);
        }
        let mut p: Vec<f64> = hinv.matvec(&g).expect("square").iter().map(|v| -v).collect();
        let mut slope = linalg::dot(&g, &p);
        if slope >= 0.0 {
            hinv = DenseMatrix::identity(d);
            p = g.iter().map(|v| -v).collect();
            slope = linalg::dot(&g, &p);
        }
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let zt: Vec<f64> = z.iter().zip(&p).map(|(a, b)| a + t * b).collect();
            let ft = f.value(&zt);
            if ft.is_finite() && ft <= fz + 1e-4 * t * slope {
                accepted = Some((zt, ft));
                break;
            }
            t *= 0.5;
        }
        let Some((zn, fnew)) = accepted else {
            return (z, false);
        };
        let gn = f.gradient(&zn);
        let s: Vec<f64> = zn.iter().zip(&z).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = linalg::dot(&s, &y);
        if sy > 1e-12 * linalg::norm2(&s) * linalg::norm2(&y) && sy.is_finite() {
            // H ← (I − ρsyᵀ) H (I − ρysᵀ) + ρssᵀ
            let rho = 1.0 / sy;
            let hy = hinv.matvec(&y).expect("square");
            let yhy = linalg::dot(&y, &hy);
            let mut hn = hinv.clone();
            for i in 0..d {
                for j in 0..d {
                    hn[(i, j)] += -rho * (s[i] * hy[j] + hy[i] * s[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
                }
            }
            hinv = hn;
        } else {
            hinv = DenseMatrix::identity(d);
        }
        let small = linalg::norm_inf(&s) <= 1e-14 * (1.0 + linalg::norm_inf(&z));
        z = zn;
        fz = fnew;
        g = gn;
        if small {
            return (z, false);
        }
    }
}

/// Compass search used when finite-difference gradients are unusable.
fn coordinate_search(f: &mut Penalized<'_, '_>, z0: &[f64], f0: f64, budget: usize) -> (Vec<f64>, bool) {
    let start = f.evals;
    let mut z = z0.to_vec();
    let mut fz = f0;
    let mut step = 0.1;
    while step > 1e-10 {
        let mut improved = false;
        for i in 0..z.len() {
            for dir in [1.0, -1.0] {
                if f.evals - start >= budget {
                    return (z, true);
                }
                let mut zt = z.clone();
                zt[i] += dir * step;
                let ft = f.value(&zt);
                if ft < fz {
                    z = zt;
                    fz = ft;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (z, false)
}

/// Solves the switch problem from its guess, restarting from perturbed
/// guesses while the result is infeasible.
pub fn solve_switch(p: &SwitchProblem<'_>) -> SwitchResult {
    let params = &p.params;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let noise = Normal::new(0.0, params.noise).expect("finite noise scale");
    let mut z_guess = vectorize_omega(&p.guess_omega);
    z_guess.extend_from_slice(&p.guess_x);

    let mut evals = 0;
    let mut hit_cap = false;
    let mut best: Option<SwitchResult> = None;
    for attempt in 0..=params.restarts {
        let z0: Vec<f64> =
            if attempt == 0 { z_guess.clone() } else { z_guess.iter().map(|v| v + noise.sample(&mut rng)).collect() };
        let mut z = z0;
        for &mu in &params.penalties {
            let mut f = Penalized { problem: p, mu, evals: 0 };
            let (zn, capped) = bfgs(&mut f, &z, params.max_evals);
            evals += f.evals;
            hit_cap |= capped;
            z = zn;
        }
        let Ok((omega, x)) = p.split(&z) else { continue };
        let x0 = polish(p, &omega, &x).unwrap_or(x);
        let r = assess(p, omega, x0, evals);
        match r {
            Some(r) if r.status == SwitchStatus::Converged => return SwitchResult { iterations: evals, ..r },
            Some(r) if best.as_ref().is_none_or(|b| r.constraint_norm < b.constraint_norm) => best = Some(r),
            _ => {}
        }
    }
    let status = if hit_cap { SwitchStatus::MaxIters } else { SwitchStatus::Infeasible };
    match best {
        Some(b) => SwitchResult { status, iterations: evals, ..b },
        None => SwitchResult {
            omega: p.guess_omega.clone(),
            x0: p.guess_x.clone(),
            objective_value: f64::INFINITY,
            constraint_norm: f64::INFINITY,
            det_at_start: 0.0,
            iterations: evals,
            status,
            seed: params.seed,
        },
    }
}

/// Newton projection of `x` onto `Γ(κ_L, ·, Ω) = 0` with Ω fixed.
fn polish(p: &SwitchProblem<'_>, omega: &DenseMatrix, x: &[f64]) -> Result<Vec<f64>> {
    let h = p.homotopy;
    let k = p.kappa_l;
    let opts = NewtonOptions { tol_f: p.params.tol_f, tol_x: p.params.tol_f, ..NewtonOptions::default() };
    let r =
        linalg::newton_solve(|y| h.tfc_gamma(k, y, omega), Some(|y: &[f64]| h.tfc_gamma_jac_x(k, y, omega)), x, &opts)?;
    Ok(r.x)
}

fn assess(p: &SwitchProblem<'_>, omega: DenseMatrix, x0: Vec<f64>, evals: usize) -> Option<SwitchResult> {
    let det = det_at_start(p, &omega, &x0).ok()?;
    let c = ceq(p, &omega, &x0).ok()?;
    let j = objective_j(p, &omega, &x0).ok()?;
    let cn = linalg::norm2(&c);
    let ok = cn <= p.params.feasibility_tol() && det > p.params.sing_det_threshold && j.is_finite();
    Some(SwitchResult {
        omega,
        x0,
        objective_value: j,
        constraint_norm: cn,
        det_at_start: det,
        iterations: evals,
        status: if ok { SwitchStatus::Converged } else { SwitchStatus::Infeasible },
        seed: p.params.seed,
    })
}

/// [`Switcher`] backed by [`solve_switch`].
#[derive(Debug, Clone, Default)]
pub struct PenaltySwitcher {
    pub params: SwitchParams,
}

impl PenaltySwitcher {
    pub fn new(params: SwitchParams) -> Self {
        Self { params }
    }
}

impl Switcher for PenaltySwitcher {
    fn switch(&self, h: &TfcHomotopy, kappa_l: f64, x: &[f64], omega: &DenseMatrix) -> Result<SwitchResult> {
        let p = SwitchProblem::new(h, kappa_l, omega.clone(), x.to_vec(), self.params.clone())?;
        Ok(solve_switch(&p))
    }
}
