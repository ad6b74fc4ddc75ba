//! Shared numeric tolerances.
//!
//! Every tolerance used by more than one module lives here so that library
//! code and test suites agree on what "equal" and "nonnegative" mean. Names
//! describe the comparison, values the slack it gets. Test suites may use
//! tighter values locally but must never loosen these.

/// Allowed deviation of a strategy's coordinate sum from one at construction.
pub const STRATEGY_SUM: f64 = 1e-10;

/// Negative coordinate dust clamped to zero at construction; anything more
/// negative is rejected.
pub const STRATEGY_DUST: f64 = 1e-12;

/// Relative accuracy target of the iterative spectral-norm estimator.
pub const SPECTRAL_REL: f64 = 1e-10;

/// Duality gap at which an equilibrium candidate counts as verified.
pub const EQUILIBRIUM_GAP: f64 = 1e-9;

/// Max deviation allowed when replaying a claimed alternating-update step.
pub const REPLAY: f64 = 1e-9;

/// Slack for exact algebraic identities (projection threshold, residual
/// inner-product form, decomposition reconstruction).
pub const IDENTITY: f64 = 1e-10;

/// One-sided slack for the central inequalities: energy decay, descent
/// probes, residual sandwich, gap bounds.
pub const INEQUALITY: f64 = 1e-9;

/// Certificate acceptance: constraint residuals and the eigenvalue floor of
/// returned Gram matrices.
pub const CERTIFICATE: f64 = 1e-6;

/// Grid reciprocals within a search round must be equally spaced to this
/// slack (relative to the reciprocal span).
pub const GRID_SPACING: f64 = 1e-12;

/// Lower clip for stepsize-search windows.
pub const SEARCH_ETA_FLOOR: f64 = 1e-6;

/// Replaying a reconstructed worst case must reproduce the recovered
/// iterates to this accuracy, else reconstruction is reported failed.
pub const RECONSTRUCTION_ITERATES: f64 = 1e-4;

/// The replayed averaged-iterate gap must match the program objective to
/// this accuracy.
pub const RECONSTRUCTION_GAP: f64 = 1e-3;
