use ndarray::prelude::*;
use ndarray_linalg::Scalar;

use crate::error::{Error, Result};
use crate::mor::interp::{InterpolationSet, ShiftKind};
use crate::netmodel::SecondOrderModel;
use crate::scalar::Real;
use crate::sysops::{realize, SecondOrderSystem};

/// Origin of one local-basis column, before sample indices are known.
#[derive(Debug, Clone, PartialEq)]
pub enum LocalTag<T: Real> {
    Shift { sigma: T::Cx, part: ColPart },
    NullVector,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColPart {
    Full,
    RealPart,
    ImagPart,
}

/// Local interpolation basis: one solve `K(sigma_j)^{-1} B b_j` per stored
/// point, complex solutions realified into their real and imaginary parts,
/// plus the null vector column when the set carries the zero-pole flag.
/// Columns are not yet orthonormalized.
pub fn local_basis_system<T: Real>(
    so: &SecondOrderSystem<T>,
    interp: &InterpolationSet<T>,
    null_vec: Option<&Array1<T>>,
) -> Result<(Array2<T>, Vec<LocalTag<T>>)> {
    let n = so.order();
    let mut cols: Vec<Array1<T>> = Vec::new();
    let mut tags: Vec<LocalTag<T>> = Vec::new();
    for pt in interp.points() {
        let x = so.tangential_solve(pt.shift, &pt.direction.view())?;
        match pt.kind {
            ShiftKind::Real => {
                cols.push(x.mapv(|z| z.re()));
                tags.push(LocalTag::Shift {
                    sigma: pt.shift,
                    part: ColPart::Full,
                });
            }
            ShiftKind::ConjugatePair | ShiftKind::LoneComplex => {
                cols.push(x.mapv(|z| z.re()));
                tags.push(LocalTag::Shift {
                    sigma: pt.shift,
                    part: ColPart::RealPart,
                });
                cols.push(x.mapv(|z| z.im()));
                tags.push(LocalTag::Shift {
                    sigma: pt.shift,
                    part: ColPart::ImagPart,
                });
            }
        }
    }
    if interp.include_null_vector() {
        let v = null_vec.ok_or_else(|| {
            Error::Precondition(
                "interpolation set carries the zero-pole flag but no null vector was supplied"
                    .into(),
            )
        })?;
        cols.push(v.clone());
        tags.push(LocalTag::NullVector);
    }
    if cols.is_empty() {
        return Err(Error::Precondition("empty interpolation set".into()));
    }
    let mut out = Array2::zeros((n, cols.len()));
    for (j, col) in cols.into_iter().enumerate() {
        out.column_mut(j).assign(&col);
    }
    Ok((out, tags))
}

/// Local basis of the full model at a parameter sample.
pub fn local_basis<T: Real>(
    model: &SecondOrderModel<T>,
    p: &[T],
    interp: &InterpolationSet<T>,
) -> Result<(Array2<T>, Vec<LocalTag<T>>)> {
    let so = realize(model, p)?;
    let upsilon = model.null_vector(p)?;
    local_basis_system(&so, interp, Some(&upsilon))
}
