//! Saddle-point dynamics on bilinear matrix games.
//!
//! The crate implements alternating and simultaneous projected gradient
//! descent-ascent over probability simplices, the convergence diagnostics
//! that certify their behaviour (duality gaps of averaged iterates, energy
//! and potential functions, projection decompositions), and a
//! performance-estimation pipeline that assembles worst-case semidefinite
//! programs for a given step count and stepsize, exports them in SDPA sparse
//! format, verifies solver certificates, and reconstructs worst-case
//! instances from Gram matrices.
//!
//! Modules:
//! - [`matrix`]: dense payoff matrices, spectral norms, text serialization
//! - [`game`]: mixed strategies, duality gaps, random game generation
//! - [`equilibrium`]: max-support equilibrium solving and margin computation
//! - [`projection`]: simplex projection and update decompositions
//! - [`dynamics`]: the two update rules, traces, energies, potentials
//! - [`regions`]: local neighbourhoods used by the non-interior analysis
//! - [`pep`]: performance-estimation SDP assembly, export, solving, replay
//! - [`search`]: reciprocal-grid stepsize search
//!
//! The `parallel` feature (default) backs batch helpers with rayon; without
//! it the same entry points run sequentially.

pub mod dynamics;
pub mod equilibrium;
pub mod error;
pub mod game;
pub mod matrix;
pub mod parallel;
pub mod pep;
pub mod projection;
pub mod regions;
pub mod search;
pub mod tolerances;

pub(crate) mod vecops;

pub use error::{Error, Result};
pub use game::{Distribution, GameSpec, MixedStrategy};
pub use matrix::PayoffMatrix;
