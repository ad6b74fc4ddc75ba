//! Worst-case performance estimation for the two update rules.
//!
//! For a step count `T` and stepsize `eta`, the worst duality gap of
//! averaged iterates over all instances with unit operator norm and
//! unit-radius feasible sets is the value of a semidefinite program over
//! two Gram matrices (one per player). This module builds that program
//! from selection vectors, exports it in SDPA sparse format next to a JSON
//! manifest, drives an external solver over a documented subprocess
//! contract, verifies the returned certificate, and reconstructs an
//! explicit worst-case instance from the Gram factors.

mod assemble;
mod basis;
mod reconstruct;
mod sdpa;
mod solver;

pub use assemble::{
    assemble_pep_sdp, ConstraintKind, ConstraintLabel, GramBlock, LinearExpr, PsdMap, RankTwoTerm,
    ScalarConstraint, SdpInstance,
};
pub use basis::{PepSpec, SelectionBasis};
pub use reconstruct::{
    planted_solution, project_onto_hull, reconstruct_worst_case, replay_reconstruction,
    ReconstructedInstance, ReplayReport,
};
pub use sdpa::{export_sdpa, ManifestBlock, ManifestRow, SdpaEntry, SdpaFile, SdpaManifest};
pub use solver::{
    parse_solution, pep_value, solve_pep, verify_certificate, CertificateReport, PepOutcome,
    SdpSolution, SolverCommand, SOLVER_ENV,
};
