//! Reduced-order modelling and order identification for time-fractional
//! diffusion-reaction equations.
//!
//! The crate covers the whole pipeline: the L1 discretisation of the Caputo
//! derivative, a full-order finite-difference solver, POD and DEIM reduction,
//! the reduced solver, and Levenberg-Marquardt identification of the
//! fractional order from final-time observations.

// `!(x > 0.0)` style checks deliberately reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod deim;
pub mod error;
pub mod experiments;
pub mod expr;
pub mod fom;
pub mod grid;
pub mod inverse;
pub mod kernel;
pub mod linalg;
pub mod persistence;
pub mod pod;
pub mod problem;
pub mod problems;
pub mod rom;
pub mod stiffness;

pub use nalgebra::{DMatrix, DVector};

pub use deim::{build_deim_operator, deim_select, DeimOperator};
pub use error::{Error, Result};
pub use expr::{CustomProblem, Expression};
pub use fom::{fom_solve, fom_solve_with, FomOptions, FomSolver, FomStats, Trajectory};
pub use grid::{Axis, DiscretizationGrid, TimeGrid};
pub use inverse::{
    add_noise, identify, FomForward, ForwardModel, IdentificationResult, LmConfig, ObservationData, RomForward,
    TraceRow,
};
pub use kernel::{l1_weights, FractionalOrder, L1Weights};
pub use linalg::PcgOptions;
pub use persistence::{read_matrix, read_trace, write_matrix, write_trace, RunManifest};
pub use pod::{compute_basis, ReducedBasis, SnapshotKind, SnapshotMatrix};
pub use problem::{Diffusion, ProblemSpec, Reaction};
pub use problems::{BenchmarkCase, CaseId, BETA_STAR};
pub use rom::{build_rom, rom_solve, ReducedTrajectory, RomOperators, RomOptions};
pub use stiffness::StiffnessMatrix;
