//! Adaptive-rate compressive sensing for video background subtraction.
//!
//! The crate picks, frame by frame, how many compressive measurements to
//! acquire so that the sparse foreground of the next frame can still be
//! recovered by ℓ1 decoding. Two controllers are provided: one driven by a
//! small set of cross-validation measurements ([`arcs_cv`]) and one driven by
//! object tracks on a co-located low-resolution camera ([`arcs_lrt`]). Both
//! map a sparsity estimate to a measurement count through an empirical
//! [`phase_diagram`].

pub mod arcs_cv;
pub mod arcs_lrt;
pub mod decoder;
mod error;
pub mod harness;
pub mod measurement;
pub mod phase_diagram;
pub mod rng;
pub mod signal_model;
pub mod svg;

pub use error::{Error, Result};
