//! WebAssembly bindings for the browser demo. Every export returns a JSON
//! string describing one or more traces ready to plot.

use serde::Serialize;
use tfc_homotopy::homotopy::SupportKind;
use tfc_homotopy::problems::example1;
use tfc_homotopy::{
    dcm_track, pam_track, two_layer_track, DenseMatrix, EventKind, ParametricHomotopy, PathTrace, PenaltySwitcher,
    SwitchParams, TrackerConfig,
};
use wasm_bindgen::prelude::*;

#[derive(Debug, Serialize)]
pub struct Mark {
    pub kind: EventKind,
    pub kappa: f64,
    pub x: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct Plot {
    pub outcome: String,
    pub kappa: Vec<f64>,
    pub x: Vec<Vec<f64>>,
    pub path: Vec<usize>,
    pub marks: Vec<Mark>,
}

impl From<&PathTrace> for Plot {
    fn from(t: &PathTrace) -> Self {
        let marked = [EventKind::LimitPointDetected, EventKind::ThresholdCrossed, EventKind::SwitchSolved];
        Plot {
            outcome: t.outcome.to_string(),
            kappa: t.points.iter().map(|p| p.kappa).collect(),
            x: t.points.iter().map(|p| p.x.clone()).collect(),
            path: t.points.iter().map(|p| p.path).collect(),
            marks: t
                .events
                .iter()
                .filter(|e| marked.contains(&e.kind))
                .map(|e| Mark { kind: e.kind, kappa: e.kappa, x: e.point.clone() })
                .collect(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct FoldPlots {
    pub dcm: Plot,
    pub pam: Plot,
}

/// DCM and PAM on `x² + κ − 0.25 = 0` from `x = 0.5`.
pub fn fold(ds: f64) -> Result<FoldPlots, String> {
    if !(ds > 0.0 && ds <= 0.1) {
        return Err(format!("step must lie in (0, 0.1], got {ds}"));
    }
    let h = ParametricHomotopy::new(1, |k, x| Ok(vec![x[0] * x[0] + k - 0.25]));
    let cfg = TrackerConfig { dkappa_default: ds, ..TrackerConfig::default() };
    Ok(FoldPlots { dcm: (&dcm_track(&h, &[0.5], &cfg)).into(), pam: (&pam_track(&h, &[0.5], ds, &cfg)).into() })
}

/// The two-variable benchmark tracked by `dcm`, `pam` or `tfc`.
pub fn benchmark(tracker: &str, seed: u64) -> Result<Plot, String> {
    let p = example1();
    let cfg = p.config;
    let trace = match tracker {
        "dcm" => dcm_track(&p.convex().map_err(|e| e.to_string())?, p.start(), &cfg),
        "pam" => pam_track(&p.convex().map_err(|e| e.to_string())?, p.start(), p.arclength_step, &cfg),
        "tfc" => {
            let h = p.tfc(SupportKind::Poly).map_err(|e| e.to_string())?;
            two_layer_track(&h, &cfg, &PenaltySwitcher::new(SwitchParams::from_config(&cfg, seed)))
        }
        other => return Err(format!("unknown tracker {other:?}; use dcm, pam or tfc")),
    };
    Ok((&trace).into())
}

/// DCM along the benchmark's TFC path for a fixed 2×2 `Ω`, given row by row.
pub fn fixed_omega(omega: &[f64]) -> Result<Plot, String> {
    if omega.len() != 4 || omega.iter().any(|v| !v.is_finite()) {
        return Err("Ω needs 4 finite entries".into());
    }
    let p = example1();
    let h = p.tfc(SupportKind::Poly).map_err(|e| e.to_string())?;
    let w = DenseMatrix::from_row_slice(2, 2, omega).map_err(|e| e.to_string())?;
    Ok((&dcm_track(&h.with_omega(&w), p.start(), &p.config)).into())
}

fn json<T: Serialize>(r: Result<T, String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e)).and_then(|v| serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string())))
}

#[wasm_bindgen(js_name = foldDemo)]
pub fn fold_demo(ds: f64) -> Result<String, JsError> {
    json(fold(ds))
}

#[wasm_bindgen(js_name = benchmarkDemo)]
pub fn benchmark_demo(tracker: &str, seed: u32) -> Result<String, JsError> {
    json(benchmark(tracker, seed as u64))
}

#[wasm_bindgen(js_name = fixedOmegaDemo)]
pub fn fixed_omega_demo(omega: &[f64]) -> Result<String, JsError> {
    json(fixed_omega(omega))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fold_shows_both_behaviors() {
        let f = fold(0.01).unwrap();
        assert_eq!(f.dcm.outcome, "limit_point_stall");
        assert_eq!(f.pam.outcome, "returned_to_start");
        assert!(f.dcm.marks.iter().any(|m| m.kind == EventKind::LimitPointDetected));
        assert!(fold(0.0).is_err());
    }

    #[test]
    fn benchmark_trackers() {
        assert_eq!(benchmark("tfc", 0).unwrap().outcome, "success");
        assert_eq!(benchmark("pam", 0).unwrap().outcome, "diverged");
        let tfc = benchmark("tfc", 0).unwrap();
        assert!(tfc.path.iter().any(|&p| p > 0));
        assert!(benchmark("newton", 0).is_err());
    }

    #[test]
    fn zero_omega_is_the_convex_path() {
        let a = fixed_omega(&[0.0; 4]).unwrap();
        let b = benchmark("dcm", 0).unwrap();
        assert_eq!(a.kappa, b.kappa);
        assert_eq!(a.outcome, "limit_point_stall");
        assert!(fixed_omega(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn plot_serializes() {
        let s = serde_json::to_string(&fold(0.05).unwrap()).unwrap();
        assert!(s.contains("\"dcm\"") && s.contains("limit_point_detected"));
    }
}
