//! Numerical laboratory for the two-parameter Dirichlet process at α = 1/2.
//!
//! Samplers for GEM/PD and projected Dirichlet laws, the projected density
//! `ρ_d`, the finite-dimensional generator and its Euler simulation, Monte
//! Carlo checks of exact integral identities, and finite element experiments
//! on the associated Dirichlet forms.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod cylinder;
pub mod density;
pub mod domain;
pub mod error;
pub mod generator;
pub mod operator_lab;
pub mod report;
pub mod sampler;
pub mod simulate;
pub mod stats;
pub mod stream;
pub mod verify;

pub use domain::{BaseWeights, DyadicPartition, Params, SimplexPoint, WeightedSample};
pub use error::{LabError, Result};
pub use stats::MCEstimate;
