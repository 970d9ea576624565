//! Path following for an implement point rigidly offset from a
//! bicycle-model vehicle.
//!
//! The crate provides line/arc reference paths with exact Frenet
//! projection, a kinematic plant, a closed-form predictive controller with
//! two non-predictive baselines, and a deterministic experiment harness.

// Negated float comparisons deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod control;
pub mod geometry;
pub mod harness;
pub mod io;
pub mod path;
pub mod presets;
pub mod vehicle;
