//! Homotopy continuation for square nonlinear systems `F(x) = 0`.
//!
//! The crate offers the convex homotopy tracked by discrete continuation
//! (DCM) or pseudo-arclength continuation (PAM), and a family of homotopies
//! built from functional-connection constrained expressions whose free
//! weight matrix `Ω` can be re-optimized mid-run to step off a limit point
//! or an unbounded branch onto a new path with the same endpoints.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod homotopy;
pub mod linalg;
pub mod problem;
pub mod problems;
pub mod switching;
pub mod trace;
pub mod tracking;

pub use config::TrackerConfig;
pub use error::{HomotopyError, Result};
pub use homotopy::{ConvexHomotopy, Homotopy, ParametricHomotopy, TfcHomotopy};
pub use linalg::DenseMatrix;
pub use problem::{make_auxiliary, AuxiliaryKind, AuxiliaryProblem, ZeroProblem};
pub use switching::{PenaltySwitcher, SwitchParams, SwitchResult, SwitchStatus, Switcher};
pub use trace::{EventKind, Outcome, PathEvent, PathTrace, TracePoint};
pub use tracking::{dcm_track, pam_tangent, pam_track, two_layer_track, TangentState};
