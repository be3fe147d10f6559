//! Numerical laboratory for the compressible isentropic Navier-Stokes system
//! in the half-space `x3 > 0` with a Navier slip wall.
//!
//! The crate is organised bottom-up:
//!
//! * [`grid`]: the slab grid, fields, finite differences, reflections, traces;
//! * [`potential`]: Green functions with images and half-space potentials;
//! * [`norms`]: Lebesgue, Sobolev and log-Lipschitz functionals;
//! * [`solver`]: parameters, validators, time integration, derived fields;
//! * [`decomposition`]: the pressure/effective-flux velocity splitting;
//! * [`monitors`]: time-weighted energy functionals and the linear split;
//! * [`lagrangian`]: particle paths, flow maps and Hölder fits;
//! * [`scenario`], [`snapshot`], [`verify`]: configs, file formats and
//!   check batteries behind the `halfslip` binary.

pub mod decomposition;
pub mod error;
pub mod grid;
pub mod lagrangian;
pub mod monitors;
pub mod norms;
pub mod potential;
pub mod scenario;
pub mod snapshot;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};
