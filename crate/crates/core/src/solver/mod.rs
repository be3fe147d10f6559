//! Physical parameters, time integration of the slip-wall system and the
//! scalar data functionals.

mod forcing;
pub(crate) mod functionals;
mod params;
pub(crate) mod scheme;
mod state;

pub use forcing::{ForceFn, Forcing};
pub use functionals::{data_functionals, derived_fields, DataFunctionals, DerivedFields};
pub use params::{
    eos_eval, sigma, validate_params, validation_report, Check, Eos, PhysicalParams, PressureLaw, SlipFunction,
    ValidationReport,
};
pub use state::{
    advance, advance_with, simulate, simulate_with, stability_bound, FluidState, RunOptions, RunStats, Trajectory,
};
