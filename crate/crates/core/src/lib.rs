//! Steady generalized Couette flows in a periodic annulus: closed-form
//! states, smallness thresholds from the weighted Poincare inequality,
//! staggered-grid residual operators, a Newton continuation solver, and the
//! verification instruments (Y-functional, manifold projection, randomized
//! Reynolds sweeps) built on top of them.

pub mod annulus;
pub mod error;
pub mod exact;
pub mod exec;
pub mod field;
pub mod grid;
pub mod lab;
pub mod operators;
pub mod snapshot;
pub mod solver;

pub use annulus::{Annulus, FlowConfig, Thresholds, Wall};
pub use error::{Error, Result};
pub use exact::{GeneralizedTC, TCCoefficients};
pub use field::{Field, PressureField};
pub use grid::Grid;
pub use lab::{EnergyReport, ExperimentRecord, ManifoldFit, SweepConfig, SweepSummary};
pub use operators::{PoincareReport, ResidualReport};
pub use solver::{IterationStats, PerturbSpec, SolveOptions, SolveOutcome};
