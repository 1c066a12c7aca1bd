//! Numerical toolkit for semi-classical hermitian one-matrix models.

pub mod classify;
pub mod equilibrium;
pub mod error;
pub mod interval;
pub mod io;
pub mod kernel;
pub mod orthopoly;
pub mod poly;
pub mod potential;
pub mod quad;
pub mod sampler;
pub mod scenario;
pub mod special;

pub use equilibrium::{example_curve, solve_support, EquilibriumMeasure, ExampleCurve, Side, SpectralCurve, Structure};
pub use error::Error;
pub use interval::{Interval, IntervalSet};
pub use potential::{parse_potential, Part, Potential, Singularity};
