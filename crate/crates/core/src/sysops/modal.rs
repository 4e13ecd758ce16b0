//! Pole-residue form of a first-order realization. One eigendecomposition
//! buys O(states) transfer evaluations afterwards, which is what makes dense
//! frequency sweeps over many parameter points affordable.

use ndarray::prelude::*;
use ndarray_linalg::{Norm, Scalar};

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::{lit, Real};
use crate::sysops::deflate::StateSpace;
use crate::sysops::system::{FirstOrderRealization, TransferEval};

#[derive(Debug, Clone)]
pub struct ModalSystem<T: Real> {
    poles: Array1<T::Cx>,
    /// `C X` (q x N)
    output_modes: Array2<T::Cx>,
    /// `X^{-1} B` (N x m)
    input_modes: Array2<T::Cx>,
    /// relative eigendecomposition residual, a quality indicator
    residual: T,
}

impl<T: Real> ModalSystem<T> {
    pub fn from_matrices(a: &Array2<T>, b: &Array2<T>, c: &Array2<T>) -> Result<Self> {
        let (vals, vecs) = linalg::eig_general(a)?;
        let bc = linalg::to_complex::<T>(&b.view());
        let input_modes = linalg::solve_multi::<T>(&vecs, &bc, "modal form: eigenvector basis")?;
        let output_modes = linalg::to_complex::<T>(&c.view()).dot(&vecs);

        // residual ||A X - X Lambda|| / ||A||
        let ac = linalg::to_complex::<T>(&a.view());
        let mut ax = ac.dot(&vecs);
        for (j, mut col) in ax.columns_mut().into_iter().enumerate() {
            let l = vals[j];
            col.zip_mut_with(&vecs.column(j), |axv, &xv| *axv = *axv - l * xv);
        }
        let na = a.norm_l2();
        let residual = if na > T::zero() { ax.norm_l2() / na } else { T::zero() };
        if residual > lit::<T>(1e-6) {
            return Err(Error::Precondition(format!(
                "eigendecomposition residual {residual:.3e} too large for modal evaluation \
                 (defective or highly non-normal matrix)"
            )));
        }
        Ok(Self {
            poles: vals,
            output_modes,
            input_modes,
            residual,
        })
    }

    pub fn from_realization(real: &FirstOrderRealization<T>) -> Result<Self> {
        Self::from_matrices(real.a(), real.b(), real.c())
    }

    pub fn from_state_space(ss: &StateSpace<T>) -> Result<Self> {
        Self::from_matrices(&ss.a, &ss.b, &ss.c)
    }

    pub fn poles(&self) -> &Array1<T::Cx> {
        &self.poles
    }

    pub fn decomposition_residual(&self) -> T {
        self.residual
    }

    /// Rank-one residue factors `(C x_k, y_k^H B)` of pole `k`.
    pub fn residue_factors(&self, k: usize) -> (ArrayView1<'_, T::Cx>, ArrayView1<'_, T::Cx>) {
        (self.output_modes.column(k), self.input_modes.row(k))
    }

    /// `H(s) = sum_k (C x_k) (y_k^H B) / (s - lambda_k)`.
    pub fn eval(&self, s: T::Cx) -> Array2<T::Cx> {
        let n = self.poles.len();
        let (q, m) = (self.output_modes.nrows(), self.input_modes.ncols());
        let mut weighted = self.input_modes.clone();
        for k in 0..n {
            let w = T::Cx::from_real(T::one()) / (s - self.poles[k]);
            weighted.row_mut(k).mapv_inplace(|x| x * w);
        }
        let mut out = self.output_modes.dot(&weighted);
        debug_assert_eq!(out.dim(), (q, m));
        // guard against NaN from an exact pole hit
        if out.iter().any(|z| !z.re().is_finite() || !z.im().is_finite()) {
            out.fill(T::Cx::from_real(T::infinity()));
        }
        out
    }
}

impl<T: Real> TransferEval<T> for ModalSystem<T> {
    fn dims(&self) -> (usize, usize) {
        (self.output_modes.nrows(), self.input_modes.ncols())
    }

    fn eval(&self, s: T::Cx) -> Result<Array2<T::Cx>> {
        Ok(ModalSystem::eval(self, s))
    }
}
