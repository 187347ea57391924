//! Low-rank subspace decomposition (SD) channel estimation for hybrid
//! millimeter-wave MIMO from randomized rank-one subspace samples.
//!
//! The library covers the full pipeline:
//!
//! - [`channel`]: sparse geometric channel synthesis and rank-d truncation
//! - [`sounding`]: constant-modulus random sounders, the affine measurement
//!   map, its adjoint, and noisy observations
//! - [`rip`]: closed-form concentration bounds and empirical restricted
//!   isometry diagnostics for the sounder ensemble
//! - [`estimator`]: the SD alternating minimization with norm-constrained
//!   least-squares subproblems, the matrix-factorization baseline, and the
//!   theoretical error bounds
//! - [`metrics`]: NMSE and spectrum efficiency
//! - [`harness`]: configuration-driven Monte Carlo sweeps with CSV output

pub mod channel;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod linalg;
pub mod metrics;
pub mod rip;
pub mod sounding;

pub use error::{Error, Result};

use num_complex::Complex64;

/// Complex scalar used throughout.
pub type C64 = Complex64;
/// Dynamically sized complex matrix.
pub type CMat = nalgebra::DMatrix<Complex64>;
/// Dynamically sized complex column vector.
pub type CVec = nalgebra::DVector<Complex64>;
