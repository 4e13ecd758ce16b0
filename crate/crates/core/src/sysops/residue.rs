use ndarray::prelude::*;
use ndarray_linalg::Norm;

use crate::error::{Error, Result};
use crate::netmodel::SecondOrderModel;
use crate::scalar::Real;
use crate::sysops::system::{CoeffMatrix, SecondOrderSystem};

/// Residue of the transfer function at its structural pole `s = 0`:
/// `phi0 = (C v)(v^T B) / (v^T D v)` with `v` the Laplacian null vector.
#[derive(Debug, Clone)]
pub struct ResidueData<T: Real> {
    pub alpha_d: T,
    pub phi0: Array2<T>,
    pub upsilon: Array1<T>,
}

/// Closed-form zero-pole residue. Works for reduced systems with inputs
/// `(C_r, B_r, D_r, V^T v)`.
pub fn zero_residue<T: Real>(
    c: &ArrayView2<'_, T>,
    b: &ArrayView2<'_, T>,
    damping: &CoeffMatrix<T>,
    upsilon: &ArrayView1<'_, T>,
) -> Result<ResidueData<T>> {
    if !(upsilon.norm_l2() > T::zero()) {
        return Err(Error::Precondition("zero null vector".into()));
    }
    let alpha_d = damping.quad(upsilon);
    if !(alpha_d > T::zero()) {
        return Err(Error::Precondition(format!(
            "v^T D v = {alpha_d} must be positive (D positive definite)"
        )));
    }
    let cu = c.dot(upsilon); // q
    let ub = upsilon.dot(b); // m
    let q = cu.len();
    let m = ub.len();
    let mut phi0 = Array2::zeros((q, m));
    for i in 0..q {
        for j in 0..m {
            phi0[[i, j]] = cu[i] * ub[j] / alpha_d;
        }
    }
    Ok(ResidueData {
        alpha_d,
        phi0,
        upsilon: upsilon.to_owned(),
    })
}

/// Zero-pole residue of a second-order system given its null vector.
pub fn system_zero_residue<T: Real>(
    so: &SecondOrderSystem<T>,
    upsilon: &ArrayView1<'_, T>,
) -> Result<ResidueData<T>> {
    zero_residue(&so.c.view(), &so.b.view(), &so.damping, upsilon)
}

/// Zero-pole residue of the full model at a parameter.
pub fn model_zero_residue<T: Real>(
    model: &SecondOrderModel<T>,
    p: &[T],
) -> Result<ResidueData<T>> {
    let upsilon = model.null_vector(p)?;
    zero_residue(
        &model.output_matrix().view(),
        &model.input_matrix().view(),
        &CoeffMatrix::Diag(model.damping().clone()),
        &upsilon.view(),
    )
}

/// Frobenius-relative deviation between two residue matrices.
pub fn residue_deviation<T: Real>(full: &ResidueData<T>, reduced: &ResidueData<T>) -> T {
    let denom = full.phi0.norm_l2();
    let diff = (&full.phi0 - &reduced.phi0).norm_l2();
    if denom > T::zero() {
        diff / denom
    } else {
        diff
    }
}
