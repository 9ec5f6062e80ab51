//! Numerical toolbox for discriminating quantum superchannels and networks.
//!
//! The crate is organized bottom-up:
//!
//! - [`linalg`]: dense complex Hermitian linear algebra ([`linalg::Operator`]).
//! - [`qobj`]: states, channels, combs, superchannels and classical superchannels.
//! - [`sdp`]: a small conic-solver front end plus the SDP-backed quantities
//!   (Helstrom error, hypothesis-testing relative entropy, diamond norm,
//!   comb discrimination, smooth max-relative entropy).
//! - [`dvg`]: closed-form divergences and asymptotic bound calculators.
//! - [`strat`]: discrimination strategy classes, error curves and rate estimators.
//! - [`amort`]: amortized-divergence estimators, exact classical computation and
//!   meta-converse/chain-rule verifiers.
//! - [`zoo`]: constructors and lemma checkers for special superchannel families.
//!
//! All logarithms are base two and all divergences are reported in bits.

pub mod amort;
pub mod dvg;
mod error;
pub mod linalg;
pub mod opt;
pub mod qobj;
pub mod sdp;
pub mod strat;
pub mod tol;
pub mod zoo;

pub use error::Error;
pub use linalg::{Operator, Spectrum};
pub use qobj::{Channel, ClassicalSuperchannel, Comb, State, Superchannel};

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;

/// Version string embedded in every CLI/report output.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
