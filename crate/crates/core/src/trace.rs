//! Path traces: accepted points, tagged events and the final outcome.
//!
//! Traces are written as JSONL (`trace.jsonl`: points, then events, then one
//! outcome record), as CSV (`trace.csv`: one row per point) and as an
//! events-only JSONL sidecar (`events.jsonl`).

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{HomotopyError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    StepAccepted,
    StepHalved,
    LimitPointDetected,
    ThresholdCrossed,
    SwitchSolved,
    SwitchFailed,
    Converged,
    Aborted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Success,
    LimitPointStall,
    Diverged,
    ReturnedToStart,
    MaxSwitchesExceeded,
    CorrectorFailure,
    Aborted,
}

impl Outcome {
    pub fn as_str(&self) -> &'static str {
        match self {
            Outcome::Success => "success",
            Outcome::LimitPointStall => "limit_point_stall",
            Outcome::Diverged => "diverged",
            Outcome::ReturnedToStart => "returned_to_start",
            Outcome::MaxSwitchesExceeded => "max_switches_exceeded",
            Outcome::CorrectorFailure => "corrector_failure",
            Outcome::Aborted => "aborted",
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Outcome {
    type Err = HomotopyError;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| HomotopyError::Config(format!("unknown outcome {s:?}")))
    }
}

/// Event-specific data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "payload_kind", rename_all = "snake_case")]
pub enum EventPayload {
    Step {
        dkappa: f64,
    },
    Switch {
        /// Index of the path switched to.
        path: usize,
        /// Weight matrix of that path, row by row.
        omega: Vec<Vec<f64>>,
        objective: f64,
        constraint_norm: f64,
        det_at_start: f64,
        iterations: usize,
        /// Rung of the growth ladder: the switch started from a point below
        /// `T_h / 2^k`. Always 0 at limit points.
        ladder_level: usize,
    },
    Growth {
        norm_inf: f64,
        threshold: f64,
    },
    Note {
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathEvent {
    pub kind: EventKind,
    pub kappa: f64,
    pub point: Vec<f64>,
    pub payload: Option<EventPayload>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub kappa: f64,
    pub x: Vec<f64>,
    /// Index of the homotopy path (weight matrix) the point lies on.
    pub path: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathTrace {
    pub points: Vec<TracePoint>,
    pub events: Vec<PathEvent>,
    pub outcome: Outcome,
}

impl Default for PathTrace {
    fn default() -> Self {
        Self::new()
    }
}

impl PathTrace {
    pub fn new() -> Self {
        // overwritten by `finish`
        Self { points: Vec::new(), events: Vec::new(), outcome: Outcome::Aborted }
    }

    /// Records an accepted point together with its `step_accepted` event.
    pub fn accept(&mut self, kappa: f64, x: &[f64], path: usize, dkappa: Option<f64>) {
        self.points.push(TracePoint { kappa, x: x.to_vec(), path });
        self.event(EventKind::StepAccepted, kappa, x, dkappa.map(|d| EventPayload::Step { dkappa: d }));
    }

    pub fn event(&mut self, kind: EventKind, kappa: f64, x: &[f64], payload: Option<EventPayload>) {
        self.events.push(PathEvent { kind, kappa: kappa.clamp(0.0, 1.0), point: x.to_vec(), payload });
    }

    pub fn finish(mut self, outcome: Outcome) -> Self {
        self.outcome = outcome;
        self
    }

    pub fn last_point(&self) -> Option<&TracePoint> {
        self.points.last()
    }

    pub fn count(&self, kind: EventKind) -> usize {
        self.events.iter().filter(|e| e.kind == kind).count()
    }

    pub fn events_of(&self, kind: EventKind) -> impl Iterator<Item = &PathEvent> {
        self.events.iter().filter(move |e| e.kind == kind)
    }

    pub fn switch_count(&self) -> usize {
        self.count(EventKind::SwitchSolved)
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        for p in &self.points {
            serde_json::to_writer(&mut w, &JsonlRecord::point(p))?;
            w.write_all(b"\n")?;
        }
        self.write_events_jsonl(&mut w)?;
        serde_json::to_writer(&mut w, &JsonlRecord::outcome(self.outcome))?;
        w.write_all(b"\n")?;
        Ok(())
    }

    pub fn write_events_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        for e in &self.events {
            serde_json::to_writer(&mut w, &JsonlRecord::event(e))?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<PathTrace> {
        let mut trace = PathTrace::new();
        let mut outcome = None;
        for line in r.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: JsonlRecord = serde_json::from_str(&line)?;
            match rec.kind {
                RecordType::Point => trace.points.push(TracePoint {
                    kappa: rec.kappa.unwrap_or_default(),
                    x: rec.x,
                    path: rec.path.unwrap_or(0),
                }),
                RecordType::Event => trace.events.push(PathEvent {
                    kind: rec
                        .event_kind
                        .ok_or_else(|| HomotopyError::Config("event line without event_kind".into()))?,
                    kappa: rec.kappa.unwrap_or_default(),
                    point: rec.x,
                    payload: rec.payload,
                }),
                RecordType::Outcome => outcome = rec.outcome,
            }
        }
        let outcome = outcome.ok_or_else(|| HomotopyError::Config("trace has no outcome line".into()))?;
        Ok(trace.finish(outcome))
    }

    /// One row per point: `kappa,x_1..x_n,path`. Values carry 17 significant
    /// digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let n = self.points.first().map_or(0, |p| p.x.len());
        let mut header = vec!["kappa".to_string()];
        header.extend((1..=n).map(|i| format!("x_{i}")));
        header.push("path".into());
        writeln!(w, "{}", header.join(","))?;
        for p in &self.points {
            let mut row = vec![format!("{:.16e}", p.kappa)];
            row.extend(p.x.iter().map(|v| format!("{v:.16e}")));
            row.push(p.path.to_string());
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum RecordType {
    Point,
    Event,
    Outcome,
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonlRecord {
    #[serde(rename = "type")]
    kind: RecordType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kappa: Option<f64>,
    #[serde(default)]
    x: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    path: Option<usize>,
    #[serde(default)]
    event_kind: Option<EventKind>,
    #[serde(default)]
    payload: Option<EventPayload>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    outcome: Option<Outcome>,
}

impl JsonlRecord {
    fn point(p: &TracePoint) -> Self {
        Self {
            kind: RecordType::Point,
            kappa: Some(p.kappa),
            x: p.x.clone(),
            path: Some(p.path),
            event_kind: None,
            payload: None,
            outcome: None,
        }
    }

    fn event(e: &PathEvent) -> Self {
        Self {
            kind: RecordType::Event,
            kappa: Some(e.kappa),
            x: e.point.clone(),
            path: None,
            event_kind: Some(e.kind),
            payload: e.payload.clone(),
            outcome: None,
        }
    }

    fn outcome(o: Outcome) -> Self {
        Self {
            kind: RecordType::Outcome,
            kappa: None,
            x: Vec::new(),
            path: None,
            event_kind: None,
            payload: None,
            outcome: Some(o),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> PathTrace {
        let mut t = PathTrace::new();
        t.accept(0.0, &[2.5, 0.5], 0, None);
        t.accept(0.01, &[2.4, 0.45], 0, Some(0.01));
        t.event(EventKind::StepHalved, 0.01, &[2.4, 0.45], Some(EventPayload::Step { dkappa: 0.005 }));
        t.event(
            EventKind::SwitchSolved,
            0.01,
            &[0.1, 0.2],
            Some(EventPayload::Switch {
                path: 1,
                omega: vec![vec![1.0, 2.0], vec![3.0, 4.0]],
                objective: 0.25,
                constraint_norm: 1e-14,
                det_at_start: 0.5,
                iterations: 12,
                ladder_level: 0,
            }),
        );
        t.accept(0.01, &[0.1, 0.2], 1, None);
        t.finish(Outcome::Success)
    }

    #[test]
    fn jsonl_round_trip() {
        let t = sample();
        let mut buf = Vec::new();
        t.write_jsonl(&mut buf).unwrap();
        let back = PathTrace::read_jsonl(buf.as_slice()).unwrap();
        assert_eq!(back, t);
        let first = String::from_utf8(buf).unwrap().lines().next().unwrap().to_string();
        assert!(first.contains(r#""type":"point""#));
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        sample().write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "kappa,x_1,x_2,path");
        assert_eq!(lines.len(), 1 + sample().points.len());
        let v: f64 = lines[2].split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(v, 2.4);
    }

    #[test]
    fn accepted_events_match_points() {
        let t = sample();
        assert_eq!(t.count(EventKind::StepAccepted), t.points.len());
        assert_eq!(t.switch_count(), 1);
    }

    #[test]
    fn outcome_parses() {
        assert_eq!("limit_point_stall".parse::<Outcome>().unwrap(), Outcome::LimitPointStall);
        assert!("nope".parse::<Outcome>().is_err());
    }

    proptest! {
        #[test]
        fn round_trip_is_lossless(pts in prop::collection::vec((0.0f64..=1.0, prop::collection::vec(-1e6f64..1e6, 3)), 1..20)) {
            let mut t = PathTrace::new();
            for (k, x) in &pts {
                t.accept(*k, x, 0, Some(0.5));
            }
            let t = t.finish(Outcome::Diverged);
            let mut buf = Vec::new();
            t.write_jsonl(&mut buf).unwrap();
            prop_assert_eq!(PathTrace::read_jsonl(buf.as_slice()).unwrap(), t);
        }
    }
}
