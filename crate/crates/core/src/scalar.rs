//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real floating-point scalar: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
}

impl<T> Real for T where
    T: Float
        + FloatConst
        + FromPrimitive
        + ToPrimitive
        + Sum
        + Debug
        + Display
        + Default
        + Send
        + Sync
        + Serialize
        + DeserializeOwned
        + 'static
{
}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("literal representable in scalar type")
}

/// Converts a count into `T`.
#[inline]
pub fn count<T: Real>(n: usize) -> T {
    T::from_usize(n).expect("count representable in scalar type")
}

/// `sign(x) |x|^e`, with the value at zero taken as zero.
#[inline]
pub fn signed_pow<T: Real>(x: T, e: T) -> T {
    if x == T::zero() {
        T::zero()
    } else {
        x.signum() * x.abs().powf(e)
    }
}

/// `|x|^e` with `0^e = 0` for positive `e`.
#[inline]
pub fn abs_pow<T: Real>(x: T, e: T) -> T {
    if x == T::zero() {
        if e == T::zero() {
            T::one()
        } else {
            T::zero()
        }
    } else {
        x.abs().powf(e)
    }
}

/// Hölder conjugate `r / (r - 1)`; `+inf` for `r = 1`.
#[inline]
pub fn conjugate<T: Real>(r: T) -> T {
    if r == T::one() {
        T::infinity()
    } else {
        r / (r - T::one())
    }
}

#[inline]
pub(crate) fn norm2<T: Real>(v: [T; 2]) -> T {
    (v[0] * v[0] + v[1] * v[1]).sqrt()
}

#[inline]
pub(crate) fn dot2<T: Real>(a: [T; 2], b: [T; 2]) -> T {
    a[0] * b[0] + a[1] * b[1]
}
