//! Relativistic α-stable processes: special functions, Lévy and transition
//! kernels, killed-path simulation, Monte Carlo estimators, and the explicit
//! comparison functions for killed heat kernels and Green functions.
//!
//! Deterministic code is generic over [`Real`] (`f32` or `f64`); the Monte
//! Carlo layer works in `f64`.

pub mod bounds;
pub mod domains;
pub mod error;
pub mod estimators;
pub mod freekernel;
pub mod levy;
pub mod quad;
pub mod scalar;
pub mod simulate;
pub mod rng;
pub mod specialfns;
pub mod stats;
pub mod table;
pub mod verify;

pub use error::{Error, Result};
pub use quad::{QuadResult, QuadratureConfig};
pub use scalar::Real;
pub use specialfns::{ModelParams, SmallJumpRegime};

pub type ModelParamsF64 = ModelParams<f64>;
pub type QuadratureConfigF64 = QuadratureConfig<f64>;
