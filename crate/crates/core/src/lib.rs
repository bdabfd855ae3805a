//! Rough-path accessibility toolkit.
//!
//! Truncated tensor algebra and signatures of piecewise-linear paths,
//! symbolic vector-field families, flows and their pushforwards, orbit
//! distribution estimates, log-ODE solves for level-2 geometric rough
//! paths, and solvers that produce piecewise-linear controls reaching the
//! terminal state of a rough-path-driven system.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::should_implement_trait)]

pub mod error;
pub mod expr;
pub mod flows;
pub mod orbit;
pub mod rde;
pub mod reach;
pub mod signature;
pub mod tensor;
pub mod vf;

pub use error::{Error, Result};
