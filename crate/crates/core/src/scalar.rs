//! Scalar abstraction for the real field underlying all matrix and moment
//! calculus.
//!
//! Everything in this crate is generic over a real scalar `T: Scalar`;
//! complex entries are `num_complex::Complex<T>`. The default precision used
//! by the type aliases at the crate root is `f64`.

use num_complex::Complex;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real scalar usable as the base field of states, observables and moments.
///
/// `nalgebra::RealField` supplies the linear-algebra side (and makes
/// `Complex<T>` a `ComplexField`); the `num-traits` bounds supply literal
/// conversion so tolerances and constants can be written once as `f64`.
pub trait Scalar: nalgebra::RealField + FromPrimitive + ToPrimitive + Copy {}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Converts an `f64` literal into `T`.
///
/// Panics only if `T` cannot represent any approximation of `x`, which does
/// not happen for the floating-point scalars this crate is instantiated at.
#[inline]
pub fn real<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("scalar conversion from f64")
}

/// Converts an `f64` literal into the complex type over `T`.
#[inline]
pub fn creal<T: Scalar>(x: f64) -> Complex<T> {
    Complex::new(real(x), T::zero())
}

/// Complex unit with zero imaginary part from a `T`.
#[inline]
pub fn cx<T: Scalar>(re: T) -> Complex<T> {
    Complex::new(re, T::zero())
}

/// Purely imaginary complex number from a `T`.
#[inline]
pub fn cxi<T: Scalar>(im: T) -> Complex<T> {
    Complex::new(T::zero(), im)
}

/// Absolute value, spelled out to stay unambiguous between the `Signed`
/// and `ComplexField` methods of the same name.
#[inline]
pub fn rabs<T: Scalar>(x: T) -> T {
    if x < T::zero() {
        -x
    } else {
        x
    }
}

/// Maximum of two scalars.
#[inline]
pub fn rmax<T: Scalar>(a: T, b: T) -> T {
    if a > b {
        a
    } else {
        b
    }
}

/// Minimum of two scalars.
#[inline]
pub fn rmin<T: Scalar>(a: T, b: T) -> T {
    if a < b {
        a
    } else {
        b
    }
}
