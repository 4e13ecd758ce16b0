use ndarray::prelude::*;
use ndarray_linalg::Scalar;
use num_traits::Float;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// How an interpolation point is stored. Complex points are kept as their
/// upper-half-plane representative; a `ConjugatePair` implicitly contains the
/// conjugate point (realified local bases interpolate at both), while a
/// `LoneComplex` entry fills a single leftover slot in the shift budget but
/// still contributes two real columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShiftKind {
    Real,
    ConjugatePair,
    LoneComplex,
}

#[derive(Debug, Clone)]
pub struct InterpPoint<T: Real> {
    pub shift: T::Cx,
    pub direction: Array1<T::Cx>,
    pub kind: ShiftKind,
}

/// Frequency interpolation points with tangent directions, closed under
/// conjugation as a set. Zero shifts are never stored: the structural pole at
/// zero is represented by the `include_null_vector` flag, which contributes
/// the Laplacian null vector as a basis column instead of a solve at zero.
#[derive(Debug, Clone)]
pub struct InterpolationSet<T: Real> {
    points: Vec<InterpPoint<T>>,
    include_null_vector: bool,
}

impl<T: Real> InterpolationSet<T> {
    pub fn new(points: Vec<InterpPoint<T>>, include_null_vector: bool) -> Result<Self> {
        for (k, pt) in points.iter().enumerate() {
            let mag = pt.shift.abs();
            if !(mag > T::zero()) {
                return Err(Error::Precondition(format!(
                    "interpolation point {k} has zero shift; use the null-vector flag instead"
                )));
            }
            match pt.kind {
                ShiftKind::Real => {
                    if Float::abs(pt.shift.im()) > T::real(1e-12) * mag {
                        return Err(Error::Precondition(format!(
                            "point {k} marked real has shift {}",
                            pt.shift
                        )));
                    }
                }
                ShiftKind::ConjugatePair | ShiftKind::LoneComplex => {
                    if !(pt.shift.im() > T::zero()) {
                        return Err(Error::Precondition(format!(
                            "complex point {k} must be stored as its upper-half-plane \
                             representative, got {}",
                            pt.shift
                        )));
                    }
                }
            }
        }
        Ok(Self {
            points,
            include_null_vector,
        })
    }

    pub fn points(&self) -> &[InterpPoint<T>] {
        &self.points
    }

    pub fn include_null_vector(&self) -> bool {
        self.include_null_vector
    }

    /// All shifts with conjugates made explicit.
    pub fn expanded_shifts(&self) -> Vec<T::Cx> {
        let mut out = Vec::new();
        for pt in &self.points {
            out.push(pt.shift);
            if pt.kind == ShiftKind::ConjugatePair {
                out.push(pt.shift.conj());
            }
        }
        out
    }

    /// Number of real basis columns this set generates (excluding the null
    /// vector column).
    pub fn column_count(&self) -> usize {
        self.points
            .iter()
            .map(|pt| match pt.kind {
                ShiftKind::Real => 1,
                ShiftKind::ConjugatePair | ShiftKind::LoneComplex => 2,
            })
            .sum()
    }
}

/// Relative Hausdorff distance between two shift sets (order-free measure of
/// shift movement between iterations).
pub fn hausdorff_rel<T: Real>(a: &[T::Cx], b: &[T::Cx]) -> T {
    if a.is_empty() && b.is_empty() {
        return T::zero();
    }
    if a.is_empty() || b.is_empty() {
        return T::one();
    }
    let scale = a
        .iter()
        .chain(b)
        .map(|z| z.abs())
        .fold(T::zero(), |m, x| Float::max(m, x));
    let one_sided = |xs: &[T::Cx], ys: &[T::Cx]| -> T {
        xs.iter()
            .map(|x| {
                ys.iter()
                    .map(|y| (*x - *y).abs())
                    .fold(T::infinity(), |m, d| Float::min(m, d))
            })
            .fold(T::zero(), |m, d| Float::max(m, d))
    };
    let d = Float::max(one_sided(a, b), one_sided(b, a));
    if scale > T::zero() {
        d / scale
    } else {
        d
    }
}
