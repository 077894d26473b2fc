//! Scalar abstraction shared by every module.
//!
//! All matrices are complex with components of type `T: Real`. The crate
//! root exposes `f64` aliases for the common case.

use std::fmt::{Debug, Display};

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Floating point component type for complex matrices (`f32` or `f64`).
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive + Debug + Display {
    /// Lossy conversion used for diagnostics and error payloads.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Machine epsilon.
    fn epsilon() -> Self;

    /// `max(tol, 1000·ε)`: `tol` unless it is below what the type resolves.
    fn floor_tol(tol: f64) -> Self {
        let floor = Self::epsilon() * lit(1e3);
        let t = lit(tol);
        if t > floor {
            t
        } else {
            floor
        }
    }
}

impl Real for f32 {
    fn epsilon() -> Self {
        f32::EPSILON
    }
}

impl Real for f64 {
    fn epsilon() -> Self {
        f64::EPSILON
    }
}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    nalgebra::convert(x)
}
