use ndarray::prelude::*;
use ndarray_linalg::{Norm, Scalar};

use crate::error::{Error, Result};
use crate::linalg;
use crate::netmodel::SecondOrderModel;
use crate::scalar::Real;

/// Mass/damping coefficient matrix: diagonal for full network models, dense
/// SPD for reduced ones.
#[derive(Debug, Clone, PartialEq)]
pub enum CoeffMatrix<T: Real> {
    Diag(Array1<T>),
    Dense(Array2<T>),
}

impl<T: Real> CoeffMatrix<T> {
    pub fn dim(&self) -> usize {
        match self {
            CoeffMatrix::Diag(d) => d.len(),
            CoeffMatrix::Dense(m) => m.nrows(),
        }
    }

    pub fn to_dense(&self) -> Array2<T> {
        match self {
            CoeffMatrix::Diag(d) => Array2::from_diag(d),
            CoeffMatrix::Dense(m) => m.clone(),
        }
    }

    /// `self^{-1} R` for a dense right-hand side.
    pub fn solve_into(&self, rhs: &Array2<T>) -> Result<Array2<T>> {
        match self {
            CoeffMatrix::Diag(d) => {
                let mut out = rhs.clone();
                for (i, mut row) in out.rows_mut().into_iter().enumerate() {
                    row.mapv_inplace(|x| x / d[i]);
                }
                Ok(out)
            }
            CoeffMatrix::Dense(m) => linalg::solve_real(m, rhs),
        }
    }

    pub fn matvec(&self, x: &ArrayView1<'_, T>) -> Array1<T> {
        match self {
            CoeffMatrix::Diag(d) => Array1::from_iter(d.iter().zip(x).map(|(&di, &xi)| di * xi)),
            CoeffMatrix::Dense(m) => m.dot(x),
        }
    }

    /// Quadratic form `x^T self x`.
    pub fn quad(&self, x: &ArrayView1<'_, T>) -> T {
        x.dot(&self.matvec(x))
    }
}

/// A second-order system `M x'' + D x' + K x = B u`, `y = C x` evaluated at a
/// fixed parameter: the common ground between full and reduced models.
#[derive(Debug, Clone)]
pub struct SecondOrderSystem<T: Real> {
    pub mass: CoeffMatrix<T>,
    pub damping: CoeffMatrix<T>,
    pub stiffness: Array2<T>,
    pub b: Array2<T>,
    pub c: Array2<T>,
}

impl<T: Real> SecondOrderSystem<T> {
    pub fn order(&self) -> usize {
        self.mass.dim()
    }

    pub fn num_inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn num_outputs(&self) -> usize {
        self.c.nrows()
    }

    /// Assemble `K(s) = s^2 M + s D + K` as a complex matrix.
    pub fn assemble(&self, s: T::Cx) -> Array2<T::Cx> {
        let n = self.order();
        let s2 = s * s;
        let mut k = linalg::to_complex::<T>(&self.stiffness.view());
        match (&self.mass, &self.damping) {
            (CoeffMatrix::Diag(m), CoeffMatrix::Diag(d)) => {
                for i in 0..n {
                    k[[i, i]] = k[[i, i]] + s2.mul_real(m[i]) + s.mul_real(d[i]);
                }
            }
            _ => {
                let md = self.mass.to_dense();
                let dd = self.damping.to_dense();
                for i in 0..n {
                    for j in 0..n {
                        k[[i, j]] = k[[i, j]] + s2.mul_real(md[[i, j]]) + s.mul_real(dd[[i, j]]);
                    }
                }
            }
        }
        k
    }

    /// Transfer function `H(s) = C K(s)^{-1} B` by a linear solve. Errors when
    /// `K(s)` is singular or numerically singular (for example at `s = 0`,
    /// which is a pole of every connected network model).
    pub fn eval(&self, s: T::Cx) -> Result<Array2<T::Cx>> {
        let k = self.assemble(s);
        let b = linalg::to_complex::<T>(&self.b.view());
        let x = linalg::solve_multi::<T>(&k, &b, &format!("K(s) at s = {s}"))?;
        let c = linalg::to_complex::<T>(&self.c.view());
        Ok(c.dot(&x))
    }

    /// Shifted solve `K(s)^{-1} (B d)` for one tangent direction.
    pub fn tangential_solve(&self, s: T::Cx, direction: &ArrayView1<'_, T::Cx>) -> Result<Array1<T::Cx>> {
        let k = self.assemble(s);
        let b = linalg::to_complex::<T>(&self.b.view());
        let rhs = b.dot(direction);
        linalg::solve_complex_system::<T>(&k, &rhs, &format!("K(s) at shift s = {s}"))
    }
}

/// First-order companion realization of a second-order system:
/// `A = [[0, I], [-M^{-1} K, -M^{-1} D]]`, `B1 = [0; M^{-1} B]`, `C1 = [C, 0]`.
#[derive(Debug, Clone)]
pub struct FirstOrderRealization<T: Real> {
    so: SecondOrderSystem<T>,
    a: Array2<T>,
    b: Array2<T>,
    c: Array2<T>,
}

impl<T: Real> FirstOrderRealization<T> {
    pub fn new(so: SecondOrderSystem<T>) -> Result<Self> {
        let n = so.order();
        let m = so.num_inputs();
        let q = so.num_outputs();
        // M^{-1} [K | D | B] in one factorization
        let dd = so.damping.to_dense();
        let mut rhs = Array2::zeros((n, 2 * n + m));
        rhs.slice_mut(s![.., 0..n]).assign(&so.stiffness);
        rhs.slice_mut(s![.., n..2 * n]).assign(&dd);
        rhs.slice_mut(s![.., 2 * n..]).assign(&so.b);
        let solved = so.mass.solve_into(&rhs)?;

        let mut a = Array2::zeros((2 * n, 2 * n));
        for i in 0..n {
            a[[i, n + i]] = T::one();
        }
        a.slice_mut(s![n.., 0..n])
            .assign(&solved.slice(s![.., 0..n]).mapv(|x| -x));
        a.slice_mut(s![n.., n..])
            .assign(&solved.slice(s![.., n..2 * n]).mapv(|x| -x));

        let mut b = Array2::zeros((2 * n, m));
        b.slice_mut(s![n.., ..]).assign(&solved.slice(s![.., 2 * n..]));

        let mut c = Array2::zeros((q, 2 * n));
        c.slice_mut(s![.., 0..n]).assign(&so.c);

        Ok(Self { so, a, b, c })
    }

    pub fn second_order(&self) -> &SecondOrderSystem<T> {
        &self.so
    }

    pub fn a(&self) -> &Array2<T> {
        &self.a
    }

    pub fn b(&self) -> &Array2<T> {
        &self.b
    }

    pub fn c(&self) -> &Array2<T> {
        &self.c
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    /// Absolute tolerance classifying the structural zero eigenvalue:
    /// `1e-8 * ||A||_F`.
    pub fn zero_tol(&self) -> T {
        crate::scalar::lit::<T>(1e-8) * self.a.norm_l2()
    }

    pub fn eigenvalues(&self) -> Result<Array1<T::Cx>> {
        Ok(linalg::eig_general(&self.a)?.0)
    }

    /// `C (sI - A)^{-1} B1` -- the first-order route to the transfer function.
    pub fn eval(&self, s: T::Cx) -> Result<Array2<T::Cx>> {
        let n2 = self.state_dim();
        let mut k = linalg::to_complex::<T>(&self.a.view()).mapv(|z| -z);
        for i in 0..n2 {
            k[[i, i]] = k[[i, i]] + s;
        }
        let b = linalg::to_complex::<T>(&self.b.view());
        let x = linalg::solve_multi::<T>(&k, &b, &format!("(sI - A) at s = {s}"))?;
        let c = linalg::to_complex::<T>(&self.c.view());
        Ok(c.dot(&x))
    }
}

/// Companion realization of a network model at a parameter.
pub fn companion_form<T: Real>(
    model: &SecondOrderModel<T>,
    p: &[T],
) -> Result<FirstOrderRealization<T>> {
    FirstOrderRealization::new(realize(model, p)?)
}

/// The full model frozen at a parameter value.
pub fn realize<T: Real>(model: &SecondOrderModel<T>, p: &[T]) -> Result<SecondOrderSystem<T>> {
    Ok(SecondOrderSystem {
        mass: CoeffMatrix::Diag(model.inertia().clone()),
        damping: CoeffMatrix::Diag(model.damping().clone()),
        stiffness: model.scaled_laplacian(p)?,
        b: model.input_matrix(),
        c: model.output_matrix(),
    })
}

/// Transfer-function evaluation `H(s, p)` of the full model.
pub fn eval_transfer<T: Real>(
    model: &SecondOrderModel<T>,
    s: T::Cx,
    p: &[T],
) -> Result<Array2<T::Cx>> {
    realize(model, p)?.eval(s)
}

/// Anything that can produce transfer-function values.
pub trait TransferEval<T: Real> {
    /// (outputs, inputs)
    fn dims(&self) -> (usize, usize);
    fn eval(&self, s: T::Cx) -> Result<Array2<T::Cx>>;
}

impl<T: Real> TransferEval<T> for SecondOrderSystem<T> {
    fn dims(&self) -> (usize, usize) {
        (self.num_outputs(), self.num_inputs())
    }

    fn eval(&self, s: T::Cx) -> Result<Array2<T::Cx>> {
        SecondOrderSystem::eval(self, s)
    }
}

impl<T: Real> TransferEval<T> for FirstOrderRealization<T> {
    fn dims(&self) -> (usize, usize) {
        (self.c.nrows(), self.b.ncols())
    }

    fn eval(&self, s: T::Cx) -> Result<Array2<T::Cx>> {
        FirstOrderRealization::eval(self, s)
    }
}

/// Pointwise difference of two transfer functions (an error system).
pub struct TransferDiff<'a, T: Real> {
    pub full: &'a dyn TransferEval<T>,
    pub reduced: &'a dyn TransferEval<T>,
}

impl<T: Real> TransferEval<T> for TransferDiff<'_, T> {
    fn dims(&self) -> (usize, usize) {
        self.full.dims()
    }

    fn eval(&self, s: T::Cx) -> Result<Array2<T::Cx>> {
        let h = self.full.eval(s)?;
        let hr = self.reduced.eval(s)?;
        if h.dim() != hr.dim() {
            return Err(Error::Precondition(format!(
                "error system dimensions differ: {:?} vs {:?}",
                h.dim(),
                hr.dim()
            )));
        }
        Ok(h - hr)
    }
}
