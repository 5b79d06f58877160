//! Feasibility analysis of SINR targets for interfering wireless multicast
//! sessions.
//!
//! Each of `N` transmitters multicasts to its own group of receivers and all
//! sessions share one channel. A session's SINR is the minimum over its
//! receivers. This crate decides whether a target SINR vector is achievable
//! (with or without linear power caps), computes boundary points of the
//! feasible region with an iterative max-row power-balancing scheme, and
//! ships an independent simplex-based oracle to cross-check every verdict.
//!
//! All quantities are dimensionless linear ratios. Converting to and from dB
//! is left to the caller.

pub mod balancer;
pub mod error;
pub mod feasibility;
pub mod generate;
pub mod lp;
pub mod model;
pub mod region;
pub mod scenario;
pub mod spectral;
pub mod verify;

pub use balancer::{power_balance, solve_beta, solve_beta_constrained, Fallback, SolveOptions, SolveReport};
pub use error::{Error, Result};
pub use feasibility::{
    check_constrained, check_unconstrained, corollary1_radius, lp_oracle, power_reduce, psi,
    ConstraintSet, Method, PowerConstraint, Status, Verdict,
};
pub use model::{
    CoefficientSystem, EmbeddedSelection, NetworkModel, PowerVector, SinrTarget,
    DEFAULT_ENUMERATION_CAP,
};
pub use spectral::{is_irreducible, is_primitive, spectral_radius, SpectralResult};
