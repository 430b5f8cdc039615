//! Numerical laboratory for finite-time blow-up of `u_t = Δu + V(x) u^p`
//! with zero Dirichlet data and initial datum `M φ`.
//!
//! The crate is split along the pipeline: [`problem`] holds the data and its
//! static quantities, [`reaction`] the exact diffusion-free solutions,
//! [`integrator`] the explicit solver, [`analysis`] the post-processing of
//! trajectories, [`selfsim`] the similarity-variable energy diagnostics,
//! [`bounds`] the explicit theoretical quantities, and [`harness`] the
//! configuration, sweeps, fits and output files behind the `blowup` CLI.

pub mod error;
pub mod integrator;
pub mod problem;
pub mod reaction;
pub mod analysis;
pub mod stats;
pub mod selfsim;
pub mod bounds;
pub mod harness;

pub use error::{Error, Result};
