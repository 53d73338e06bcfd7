//! Finite-volume solver for the one-dimensional viscoelastic shallow-water
//! system with FENE-P rheology.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod model;
pub mod oracles;
pub mod output;
pub mod relax_riemann;
pub mod scenario;
pub mod timeloop;

pub use error::{Error, Result};
pub use model::{Conserved, PhysParams, Primitive};
pub use relax_riemann::{interface_fluxes, FluxPair, RiemannOptions, WaveFan};
pub use scenario::{
    convergence_study, run, simulate, ConvergenceReport, InitialCondition, RunConfig, RunOutput,
    RunSummary,
};
pub use timeloop::{BoundaryKind, Grid, SimState, Solver, SolverConfig, StepDiagnostics};
