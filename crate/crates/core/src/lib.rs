//! Attitude determination and continuous-discrete attitude filtering on
//! SO(3), written directly in terms of rotation matrices.
//!
//! * [`so3`]: rotation, skew and SPD matrix types, `hat`/`vee`, `exp`.
//! * [`wahba`]: optimal attitude from weighted vector measurements via
//!   QR factorization and a symmetric square root.
//! * [`dynamics`]: rigid body in an attitude-dependent potential, with
//!   integrators and potentials selectable by name.
//! * [`filter`]: the no-gyro and gyro-aided filters.
//! * [`sim`] and [`campaign`]: synthetic sensors and Monte-Carlo runs.

pub mod campaign;
pub mod dynamics;
pub mod error;
pub mod filter;
pub mod sim;
pub mod so3;
pub mod wahba;

pub use error::{Error, Result};
pub use so3::{exp_so3, hat, principal_angle, trace_inner, vee, RotationMatrix, SkewMatrix, SymmetricPd};
