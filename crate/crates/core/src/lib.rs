//! Simulation of two spatially separated atom-cavity systems coupled
//! bidirectionally through a fiber, monitored by two photodetectors.
//!
//! Both atoms start excited; the two emitted photons shuttle between the
//! cavities before escaping to the detectors. The crate provides
//!
//! * [`model`] — the truncated Hilbert space and every operator on it
//!   (ladder operators, system Hamiltonian, collective jump operators, and
//!   the non-Hermitian effective Hamiltonian carrying the cascade coupling),
//! * [`dynamics`] — no-jump integration, quantum jumps, the unconditional
//!   master-equation oracle, and the factorized early-time model,
//! * [`observables`] — equal-time joint detection densities and the
//!   independent-cavity comparison baseline,
//! * [`trajectories`] — Monte Carlo sampling of full detection records with
//!   deterministic parallel seeding,
//! * [`entanglement`] — partial traces, von Neumann entropy, concurrence,
//!   and negativity,
//! * [`validate`] — the acceptance battery run by `cavities validate`.
//!
//! Units: `kappa` (the cavity leakage rate) is 1 by default and all times
//! are in units of `1/kappa`; `hbar = 1` throughout.

pub mod dynamics;
pub mod entanglement;
pub mod io;
pub mod linalg;
pub mod model;
pub mod observables;
pub mod trajectories;
pub mod validate;

pub use num_complex::Complex64 as C64;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("state is not normalized (norm^2 = {norm_sqr})")]
    NotNormalized { norm_sqr: f64 },
    #[error("norm increased by {increase:.3e} at t = {t:.6} (step size too large?)")]
    NormInstability { t: f64, increase: f64 },
    #[error("jump applied to a dark state (rate = {rate:.3e})")]
    DarkStateJump { rate: f64 },
    #[error("density matrix is not physical: {0}")]
    NonPhysical(String),
    #[error("trace drifted to {trace} at t = {t:.6}")]
    TraceDrift { t: f64, trace: f64 },
    #[error("config error: {0}")]
    Config(String),
    #[error("internal consistency failure: {0}")]
    Internal(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
