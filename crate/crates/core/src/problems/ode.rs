use std::fmt;
use std::sync::Arc;

use crate::error::{HomotopyError, Result};

/// Right-hand side `(t, y, κ) ↦ dy/dt`.
pub type OdeRhs = Arc<dyn Fn(f64, &[f64], f64) -> Result<Vec<f64>> + Send + Sync>;

/// `dy/dt = f(t, y, κ)` on `[t0, tf]`.
#[derive(Clone)]
pub struct OdeSystem {
    pub dim: usize,
    pub t0: f64,
    pub tf: f64,
    rhs: OdeRhs,
}

impl OdeSystem {
    pub fn new<F>(dim: usize, t0: f64, tf: f64, rhs: F) -> Self
    where
        F: Fn(f64, &[f64], f64) -> Result<Vec<f64>> + Send + Sync + 'static,
    {
        Self { dim, t0, tf, rhs: Arc::new(rhs) }
    }

    pub fn rhs(&self, t: f64, y: &[f64], kappa: f64) -> Result<Vec<f64>> {
        let d = (self.rhs)(t, y, kappa)?;
        if d.len() != self.dim {
            return Err(HomotopyError::Dimension { expected: self.dim, got: d.len() });
        }
        Ok(d)
    }
}

impl fmt::Debug for OdeSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OdeSystem").field("dim", &self.dim).field("t0", &self.t0).field("tf", &self.tf).finish()
    }
}

/// Classical fixed-step RK4 from `t0` to `tf`; returns `y(tf)`.
pub fn rk4_integrate(sys: &OdeSystem, y0: &[f64], kappa: f64, steps: usize) -> Result<Vec<f64>> {
    if steps == 0 {
        return Err(HomotopyError::Config("rk4 needs at least one step".into()));
    }
    if y0.len() != sys.dim {
        return Err(HomotopyError::Dimension { expected: sys.dim, got: y0.len() });
    }
    let h = (sys.tf - sys.t0) / steps as f64;
    let mut y = y0.to_vec();
    let mut tmp = vec![0.0; sys.dim];
    let axpy = |out: &mut Vec<f64>, y: &[f64], a: f64, k: &[f64]| {
        for i in 0..y.len() {
            out[i] = y[i] + a * k[i];
        }
    };
    for s in 0..steps {
        let t = sys.t0 + s as f64 * h;
        let k1 = sys.rhs(t, &y, kappa)?;
        axpy(&mut tmp, &y, 0.5 * h, &k1);
        let k2 = sys.rhs(t + 0.5 * h, &tmp, kappa)?;
        axpy(&mut tmp, &y, 0.5 * h, &k2);
        let k3 = sys.rhs(t + 0.5 * h, &tmp, kappa)?;
        axpy(&mut tmp, &y, h, &k3);
        let k4 = sys.rhs(t + h, &tmp, kappa)?;
        for i in 0..sys.dim {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(HomotopyError::IntegrationBlowup { t: t + h });
        }
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, PI};

    fn growth() -> OdeSystem {
        OdeSystem::new(1, 0.0, 1.0, |_, y, _| Ok(vec![y[0]]))
    }

    #[test]
    fn exponential() {
        let y = rk4_integrate(&growth(), &[1.0], 0.0, 100).unwrap();
        assert!((y[0] - E).abs() < 1e-7);
    }

    #[test]
    fn constant_is_exact() {
        let sys = OdeSystem::new(2, 0.0, 3.0, |_, _, _| Ok(vec![0.0, 0.0]));
        assert_eq!(rk4_integrate(&sys, &[1.5, -2.0], 0.0, 7).unwrap(), vec![1.5, -2.0]);
    }

    #[test]
    fn fourth_order() {
        let e50 = (rk4_integrate(&growth(), &[1.0], 0.0, 50).unwrap()[0] - E).abs();
        let e100 = (rk4_integrate(&growth(), &[1.0], 0.0, 100).unwrap()[0] - E).abs();
        let ratio = e50 / e100;
        assert!((12.0..=20.0).contains(&ratio), "ratio = {ratio}");
    }

    #[test]
    fn turning_rod() {
        // θ̇ = π: x = sin(πt)/π, y = (1 − cos(πt))/π
        let sys = OdeSystem::new(3, 0.0, 1.0, |_, y, _| Ok(vec![y[2].cos(), y[2].sin(), PI]));
        let y = rk4_integrate(&sys, &[0.0, 0.0, 0.0], 0.0, 1000).unwrap();
        assert!(y[0].abs() < 1e-8);
        assert!((y[1] - 2.0 / PI).abs() < 1e-8);
        assert!((y[2] - PI).abs() < 1e-12);
    }

    #[test]
    fn blowup_is_reported() {
        let sys = OdeSystem::new(1, 0.0, 2.0, |_, y, _| Ok(vec![y[0] * y[0]]));
        assert!(matches!(rk4_integrate(&sys, &[1.0], 0.0, 100), Err(HomotopyError::IntegrationBlowup { .. })));
    }
}
