use serde::{Deserialize, Serialize};

use crate::error::{HomotopyError, Result};
use crate::linalg::NewtonOptions;

/// Settings shared by the path trackers and the path-switch optimizer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrackerConfig {
    /// Default continuation step in κ.
    pub dkappa_default: f64,
    pub tol_f: f64,
    pub tol_x: f64,
    pub max_corrector_iters: usize,
    /// Consecutive corrector failures (with step halving in between) that
    /// declare a limit point.
    pub max_consecutive_fails: usize,
    /// Indefinite-growth threshold on `‖x‖∞`.
    pub growth_threshold: f64,
    /// `|det ∂Γ/∂x|` at or below this value counts as singular when switching.
    pub sing_det_threshold: f64,
    /// Discount applied to far-side errors, in `[0, 1)`.
    pub discount: f64,
    /// Spacing of far-side points, in multiples of the default step.
    pub horizon: usize,
    /// Number of far-side points.
    pub n_predicted: usize,
    pub max_switches: usize,
    /// How many times the growth threshold may be halved when retrying a switch.
    pub ladder_depth: usize,
    /// Hard cap on accepted steps for any tracker.
    pub max_steps: usize,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            dkappa_default: 0.01,
            tol_f: 1e-12,
            tol_x: 1e-12,
            max_corrector_iters: 50,
            max_consecutive_fails: 3,
            growth_threshold: 100.0,
            sing_det_threshold: 1e-4,
            discount: 0.5,
            horizon: 15,
            n_predicted: 2,
            max_switches: 10,
            ladder_depth: 4,
            max_steps: 200_000,
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(HomotopyError::Config(msg.to_string()));
        if !(self.dkappa_default > 0.0 && self.dkappa_default <= 1.0) {
            return bad("dkappa_default must lie in (0, 1]");
        }
        if !(self.tol_f > 0.0 && self.tol_x > 0.0) {
            return bad("tolerances must be positive");
        }
        if !(0.0..1.0).contains(&self.discount) {
            return bad("discount must lie in [0, 1)");
        }
        if self.horizon < 1 {
            return bad("horizon must be at least 1");
        }
        if self.n_predicted < 1 {
            return bad("n_predicted must be at least 1");
        }
        if self.max_consecutive_fails < 1 || self.max_corrector_iters < 1 {
            return bad("iteration limits must be at least 1");
        }
        if !(self.growth_threshold > 0.0) || !(self.sing_det_threshold > 0.0) {
            return bad("thresholds must be positive");
        }
        Ok(())
    }

    pub fn newton(&self) -> NewtonOptions {
        NewtonOptions {
            tol_f: self.tol_f,
            tol_x: self.tol_x,
            max_iters: self.max_corrector_iters,
            ..NewtonOptions::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let c = TrackerConfig::default();
        c.validate().unwrap();
        assert_eq!(c.max_switches, 10);
        assert_eq!((c.tol_f, c.tol_x), (1e-12, 1e-12));
        assert_eq!((c.discount, c.horizon, c.n_predicted), (0.5, 15, 2));
    }

    #[test]
    fn rejects_out_of_range() {
        let bad = [
            TrackerConfig { dkappa_default: 0.0, ..Default::default() },
            TrackerConfig { dkappa_default: 1.5, ..Default::default() },
            TrackerConfig { discount: 1.0, ..Default::default() },
            TrackerConfig { horizon: 0, ..Default::default() },
            TrackerConfig { n_predicted: 0, ..Default::default() },
            TrackerConfig { tol_f: 0.0, ..Default::default() },
        ];
        for c in bad {
            assert!(c.validate().is_err(), "{c:?}");
        }
    }

    #[test]
    fn partial_json_fills_defaults() {
        let c: TrackerConfig = serde_json::from_str(r#"{"dkappa_default": 0.001}"#).unwrap();
        assert_eq!(c.dkappa_default, 0.001);
        assert_eq!(c.max_consecutive_fails, 3);
    }
}
