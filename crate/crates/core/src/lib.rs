//! Smooth paths through prescribed points and tangents, with
//! `|s(t)| |s'(t)|` bounded, and their use as probes for discontinuity of
//! scalar fields at the origin.
//!
//! The pipeline: pick a cone and shell parity holding many witness points
//! ([`geometry`]), select anchors and build the piecewise-affine skeleton
//! ([`skeleton`]), smooth it inside windows around its kinks ([`mollifier`]),
//! and verify the result numerically ([`verifier`]). [`harness`] wires the
//! pipeline to scalar fields.

pub mod affine;
pub mod error;
pub mod expr;
pub mod format;
pub mod geometry;
pub mod harness;
pub mod mollifier;
pub mod pipeline;
pub mod quadrature;
pub mod sampling;
pub mod skeleton;
pub mod vector;
pub mod verifier;
pub mod witness;

pub use error::{Error, Result};
