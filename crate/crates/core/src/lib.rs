//! Multiscale kinetic/fluid solver for the one-dimensional reduced BGK model.
//!
//! The macroscopic Euler system is solved everywhere; a non-equilibrium
//! perturbation `g_K` is transported only where a transition function `h`
//! is positive, and `h` is driven automatically by breakdown indicators.
//!
//! Module map:
//! - [`state`]: grids, field containers and the gas model
//! - [`maxwellian`]: continuous and entropy-minimized discrete equilibria
//! - [`flux`]: kinetic (upwind-minmod) and macroscopic (MUSCL Lax-Friedrichs) fluxes
//! - [`boundary`]: ghost-cell filling for walls, inflow and Neumann boundaries
//! - [`reference`]: full-kinetic and full-Euler baseline solvers
//! - [`micromac`]: the coupled micro-macro solver
//! - [`indicators`]: breakdown parameters and the transition controller
//! - [`harness`]: scenarios, the run loop, output files and the exact Riemann oracle

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boundary;
pub mod error;
pub mod flux;
pub mod harness;
pub mod indicators;
pub mod maxwellian;
pub mod micromac;
pub mod reference;
pub mod state;

pub use error::{Error, Result};
pub use state::{
    collision_frequency, moments_of, primitive_of, ConservedMoments, CriterionKind, GasModel,
    PairField, PerturbationField, Primitive, ReducedDistribution, Regime, SpaceGrid, Thresholds,
    TransitionField, VelocityGrid, NG,
};
