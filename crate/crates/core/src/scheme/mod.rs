//! Time marching: mesh setup, in-cell constructions, cutoffs and the
//! functionals that control them.

pub mod config;
pub mod construction;
pub mod functional;
mod godunov;
pub mod initial;
pub mod stepper;
pub mod vacuum;

pub use config::{MeshConfig, Variant};
pub use construction::{build_cell, CellConstruction, CellContext, CellReport, ConstructionPath};
pub use functional::{cutoff_project, prefix_integrals, taylor_remainder, update_m, CutoffBounds, Projection};
pub use initial::InitialData;
pub use vacuum::build_cell_vacuum;
pub use stepper::{run, run_trajectory, Observer, Scheme, SchemeState, Snapshot, StepRecord, Trajectory};
