//! The spherically symmetric model family.

pub mod canonical;
pub mod density;
pub mod sampling;
pub mod setup;

pub use canonical::{canonicalize, Canonical};
pub use density::{
    check_assumptions, default_assumption_grid, AssumptionReport, BoundDensity, ModelDensity, Tail,
    Violation, ViolationKind,
};
pub use sampling::{derive_seed, sample_xs, sample_xs_with, SampleXS};
pub use setup::{half_sphere_constant, ProblemSetup};
