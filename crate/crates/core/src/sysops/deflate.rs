//! Deflation of the structural zero mode through the closed-form oblique
//! projector built from the zero-pole eigenvectors: `q1 = [v; 0]`,
//! `q1t = (1/alpha_D) [D v; M v]`, projector `P = I - q1 q1t^T`. The range of
//! `P` is the orthogonal complement of `q1t` and is invariant under `A`, so
//! restricting `A` to an orthonormal basis of that subspace realizes the
//! asymptotically stable part.

use ndarray::prelude::*;
use ndarray_linalg::{Norm, Scalar};
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::{lit, Real};
use crate::sysops::residue::ResidueData;
use crate::sysops::system::{FirstOrderRealization, TransferEval};

/// First-order `(A, B, C)` triple; here always the deflated stable part.
#[derive(Debug, Clone)]
pub struct StateSpace<T: Real> {
    pub a: Array2<T>,
    pub b: Array2<T>,
    pub c: Array2<T>,
}

impl<T: Real> StateSpace<T> {
    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    pub fn eval(&self, s: T::Cx) -> Result<Array2<T::Cx>> {
        let n = self.order();
        let mut k = linalg::to_complex::<T>(&self.a.view()).mapv(|z| -z);
        for i in 0..n {
            k[[i, i]] = k[[i, i]] + s;
        }
        let b = linalg::to_complex::<T>(&self.b.view());
        let x = linalg::solve_multi::<T>(&k, &b, &format!("(sI - A) at s = {s}"))?;
        Ok(linalg::to_complex::<T>(&self.c.view()).dot(&x))
    }
}

impl<T: Real> TransferEval<T> for StateSpace<T> {
    fn dims(&self) -> (usize, usize) {
        (self.c.nrows(), self.b.ncols())
    }

    fn eval(&self, s: T::Cx) -> Result<Array2<T::Cx>> {
        StateSpace::eval(self, s)
    }
}

/// Split `H(s) = phi0/s + H_a(s)` with `H_a` asymptotically stable.
#[derive(Debug, Clone)]
pub struct SpectralSplit<T: Real> {
    pub stable_part: StateSpace<T>,
    pub zero_residue: ResidueData<T>,
}

impl<T: Real> SpectralSplit<T> {
    /// Evaluate the recombination `phi0/s + H_a(s)`.
    pub fn eval(&self, s: T::Cx) -> Result<Array2<T::Cx>> {
        let mut h = self.stable_part.eval(s)?;
        let inv_s = T::Cx::from_real(T::one()) / s;
        for ((i, j), v) in h.indexed_iter_mut() {
            *v = *v + inv_s.mul_real(self.zero_residue.phi0[[i, j]]);
        }
        Ok(h)
    }
}

impl<T: Real> TransferEval<T> for SpectralSplit<T> {
    fn dims(&self) -> (usize, usize) {
        self.stable_part.dims()
    }

    fn eval(&self, s: T::Cx) -> Result<Array2<T::Cx>> {
        SpectralSplit::eval(self, s)
    }
}

/// Deflate the zero mode of a companion realization.
///
/// The returned stable part has `2n - 1` states; its poles are the nonzero
/// eigenvalues of `A`. Errors when the zero eigenvalue is not simple (more
/// than one eigenvalue within the zero tolerance).
pub fn deflate_zero_mode<T: Real>(
    real: &FirstOrderRealization<T>,
    residue: &ResidueData<T>,
) -> Result<SpectralSplit<T>> {
    let so = real.second_order();
    let n = so.order();
    let upsilon = &residue.upsilon;
    if upsilon.len() != n {
        return Err(Error::Precondition(format!(
            "null vector length {} does not match system order {n}",
            upsilon.len()
        )));
    }

    // q1 = [v; 0], q1t = (1/alpha) [D v; M v]
    let dv = so.damping.matvec(&upsilon.view());
    let mv = so.mass.matvec(&upsilon.view());
    let mut q1 = Array1::zeros(2 * n);
    q1.slice_mut(s![0..n]).assign(upsilon);
    let mut q1t = Array1::zeros(2 * n);
    q1t.slice_mut(s![0..n]).assign(&dv);
    q1t.slice_mut(s![n..]).assign(&mv);
    q1t.mapv_inplace(|x| x / residue.alpha_d);

    // sanity: A q1 ~ 0, A^T q1t ~ 0, q1t^T q1 = 1
    let a = real.a();
    let tol = lit::<T>(1e-8) * Float::max(a.norm_l2(), T::one());
    let aq1 = a.dot(&q1).norm_l2();
    let atq1t = a.t().dot(&q1t).norm_l2();
    let bi = q1t.dot(&q1);
    if aq1 > tol * q1.norm_l2() || atq1t > tol * q1t.norm_l2() {
        return Err(Error::Precondition(format!(
            "closed-form zero eigenvectors do not annihilate A \
             (|A q1| = {aq1:.3e}, |A^T q1t| = {atq1t:.3e}); model may be degenerate"
        )));
    }
    if Float::abs(bi - T::one()) > lit::<T>(1e-8) {
        return Err(Error::Precondition(format!(
            "bi-orthogonality q1t^T q1 = {bi} differs from 1"
        )));
    }

    // orthonormal basis of q1t-perp, which A leaves invariant
    let w = linalg::householder_complement(&q1t.view());
    let a_s = w.t().dot(&a.dot(&w));
    // B_s = W^T (B - q1 (q1t^T B))
    let q1tb = q1t.dot(real.b()); // m
    let mut b_proj = real.b().clone();
    for ((i, j), v) in b_proj.indexed_iter_mut() {
        *v = *v - q1[i] * q1tb[j];
    }
    let b_s = w.t().dot(&b_proj);
    let c_s = real.c().dot(&w);

    // the deflated part must carry no further near-zero mode
    let zero_tol = real.zero_tol();
    let (vals, _) = linalg::eig_general(&a_s)?;
    let mut near_zero = 0usize;
    let mut abscissa = T::neg_infinity();
    for l in vals.iter() {
        if l.abs() < zero_tol {
            near_zero += 1;
        } else {
            abscissa = Float::max(abscissa, l.re());
        }
    }
    if near_zero > 0 {
        return Err(Error::Precondition(format!(
            "{} additional near-zero eigenvalues after deflation; \
             the zero eigenvalue is not simple (disconnected or degenerate model)",
            near_zero
        )));
    }
    if !(abscissa < T::zero()) {
        return Err(Error::Unstable(format!(
            "deflated part has spectral abscissa {abscissa:.3e} >= 0"
        )));
    }

    Ok(SpectralSplit {
        stable_part: StateSpace {
            a: a_s,
            b: b_s,
            c: c_s,
        },
        zero_residue: residue.clone(),
    })
}
