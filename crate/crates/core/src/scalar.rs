//! Scalar abstraction: the toolkit is generic over the real floating-point
//! type, with `f64` as the working precision for everything shipped by the
//! CLI (see the type aliases at the crate root).

use ndarray::ScalarOperand;
use ndarray_linalg::{Lapack, Scalar};
use num_complex::Complex;
use num_traits::{Float, FromPrimitive};

/// Real scalar type the dense kernels run on: `f32` or `f64`.
///
/// `Cx` is the matching complex type used for shifted solves, spectra and
/// transfer-function values.
pub trait Real:
    Scalar<Real = Self, Complex = Self::Cx>
    + Lapack
    + Float
    + FromPrimitive
    + ScalarOperand
    + Default
    + Send
    + Sync
{
    type Cx: Scalar<Real = Self, Complex = Self::Cx>
        + Lapack
        + ScalarOperand
        + ndarray::LinalgScalar
        + Send
        + Sync;

    fn cx(re: Self, im: Self) -> Self::Cx;
}

impl Real for f32 {
    type Cx = Complex<f32>;

    fn cx(re: Self, im: Self) -> Self::Cx {
        Complex::new(re, im)
    }
}

impl Real for f64 {
    type Cx = Complex<f64>;

    fn cx(re: Self, im: Self) -> Self::Cx {
        Complex::new(re, im)
    }
}

/// Shorthand for a tolerance or literal given in `f64`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::real(x)
}
