//! Smooth and conventional rate limiters for stability analysis.
//!
//! The crate provides the limiter models ([`rate_limiter`]), a small block
//! diagram integrator ([`ode`]), equilibrium and eigenvalue analysis
//! ([`linear`], [`eigen`]), reproducible scenarios built on them
//! ([`cases`]) and the configuration and job layer used by the command-line
//! runner ([`config`]).

pub mod blocks;
pub mod cases;
pub mod config;
pub mod eigen;
pub mod io;
pub mod linalg;
pub mod linear;
pub mod ode;
pub mod rate_limiter;

pub use linalg::Matrix;
pub use rate_limiter::{ParamError, RateLimiterParams, RlLinearization, RlState};
