//! Central numerical tolerances.
//!
//! Every threshold used for validation or clipping is defined here so that
//! the constants appear exactly once.

/// Relative Frobenius asymmetry above which a matrix is rejected as
/// non-Hermitian.
pub const HERM_TOL: f64 = 1e-12;

/// Eigenvalues in `(-EIG_CLIP, 0)` are clipped to zero on PSD inputs;
/// values below `-EIG_CLIP` are rejected. Eigensolvers routinely emit
/// tiny negatives on numerically PSD matrices.
pub const EIG_CLIP: f64 = 1e-10;

/// Eigenvalue threshold for support membership (support projectors,
/// support-inclusion checks).
pub const SUPPORT_EIG: f64 = 1e-10;

/// Allowed residual of `tr_out J - I_in` for trace-preserving maps.
pub const TP_TOL: f64 = 1e-9;

/// Allowed deviation of a normalized state's trace from one.
pub const NORM_TOL: f64 = 1e-10;

/// Allowed deviation of classical conditional-probability tables from
/// normalization.
pub const TABLE_TOL: f64 = 1e-12;

/// Default duality-gap tolerance of the SDP solver.
pub const SDP_GAP_TOL: f64 = 1e-7;

/// Default feasibility tolerance of the SDP solver.
pub const SDP_FEAS_TOL: f64 = 1e-9;

/// A divergence estimate may be labeled exact only if its tolerance is
/// at most this.
pub const EXACT_TOL: f64 = 1e-6;

/// Two probabilities/overlaps below this are treated as exactly zero
/// (orthogonality checks, +inf reporting).
pub const ZERO_PROB: f64 = 1e-12;
