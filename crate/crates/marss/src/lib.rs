//! Constrained, time-varying multivariate autoregressive state-space (MARSS)
//! models fitted by expectation-maximization.
//!
//! Every parameter matrix is written as `vec(M_t) = f_t + D_t m` with fixed
//! part `f_t`, design `D_t` and free values `m`. Observations may be missing
//! and state or observation rows may have zero variance.

pub mod cli;
pub mod em;
pub mod expectations;
pub mod io;
pub mod kalman;
pub mod linalg;
pub mod model;
pub mod updates;
