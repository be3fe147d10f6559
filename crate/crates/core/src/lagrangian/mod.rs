//! Particle paths through a velocity field: flow maps, the semigroup
//! property, Hölder fits of the flow and transport of curves.

mod flow;
mod holder;
mod manifold;
mod source;

pub use flow::{composition_check, flow_map, integrate_path, FlowMap, FlowOptions, FlowStats, SeedStatus};
pub use holder::{holder_regression, ladder_seeds, linear_fit, osgood_bound, HolderFit, MIN_PAIRS};
pub use manifold::{class_estimate, transport_manifold, Manifold, ManifoldTransport};
pub use source::{AnalyticField, Interpolant, Interpolation, Slot, TrajectoryField, VelocityFn, VelocitySource};
