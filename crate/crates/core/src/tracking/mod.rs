//! Path trackers: discrete continuation, pseudo-arclength continuation and
//! the two-layer TFC tracker with path switching.

mod dcm;
mod pam;
mod two_layer;

pub use dcm::dcm_track;
pub use pam::{pam_tangent, pam_track, TangentState};
pub use two_layer::two_layer_track;
