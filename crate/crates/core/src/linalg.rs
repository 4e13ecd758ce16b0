//! Dense linear-algebra support on top of the LAPACK backend: spectra,
//! shifted solves with a singularity gate, rank-revealing orthonormalization
//! and a dense Lyapunov solve.

use std::sync::Once;

use ndarray::prelude::*;
use ndarray_linalg::{Eig, Eigh, Norm, Scalar, Solve, UPLO};
use num_traits::Float;

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

unsafe extern "C" {
    fn openblas_set_num_threads(n: std::os::raw::c_int);
}

static BLAS_INIT: Once = Once::new();

/// Pin OpenBLAS to one thread. The dense problems here are too small for
/// its threading to pay off, and the multithreaded kernels blow the 2 MiB
/// stacks of Rust test threads.
pub fn ensure_blas() {
    BLAS_INIT.call_once(|| unsafe { openblas_set_num_threads(1) });
}

/// Reciprocal condition estimate below which a solve is rejected.
pub const RCOND_MIN: f64 = 2e-13;

/// Eigenvalues and right eigenvectors of a general real matrix.
pub fn eig_general<T: Real>(a: &Array2<T>) -> Result<(Array1<T::Cx>, Array2<T::Cx>)> {
    ensure_blas();
    Ok(a.eig()?)
}

/// Eigenvalues (ascending) and eigenvectors of a symmetric matrix.
pub fn eig_symmetric<T: Real>(a: &Array2<T>) -> Result<(Array1<T>, Array2<T>)> {
    ensure_blas();
    Ok(a.eigh(UPLO::Lower)?)
}

pub fn eigvals_symmetric<T: Real>(a: &Array2<T>) -> Result<Array1<T>> {
    Ok(eig_symmetric(a)?.0)
}

/// LU solve with multiple right-hand sides and a condition gate.
pub fn solve_multi<T: Real>(
    a: &Array2<T::Cx>,
    rhs: &Array2<T::Cx>,
    context: &str,
) -> Result<Array2<T::Cx>> {
    ensure_blas();
    use ndarray_linalg::solve::*;
    // getrf fails with a positive return code exactly when a pivot is zero
    let f = a.factorize().map_err(|_| Error::Singular {
        rcond: 0.0,
        context: context.to_string(),
    })?;
    let rcond = f.rcond()?;
    let rc = rcond.to_f64().unwrap_or(0.0);
    if !(rc > RCOND_MIN) {
        return Err(Error::Singular {
            rcond: rc,
            context: context.to_string(),
        });
    }
    let mut out = Array2::zeros(rhs.raw_dim());
    for (j, col) in rhs.columns().into_iter().enumerate() {
        let x = f.solve(&col.to_owned())?;
        out.column_mut(j).assign(&x);
    }
    Ok(out)
}

pub fn solve_complex_system<T: Real>(
    a: &Array2<T::Cx>,
    rhs: &Array1<T::Cx>,
    context: &str,
) -> Result<Array1<T::Cx>> {
    let rhs2 = rhs.view().insert_axis(Axis(1)).to_owned();
    let x = solve_multi::<T>(a, &rhs2, context)?;
    Ok(x.column(0).to_owned())
}

/// Real square solve without the condition gate (well-conditioned callers).
pub fn solve_real<T: Real>(a: &Array2<T>, rhs: &Array2<T>) -> Result<Array2<T>> {
    ensure_blas();
    use ndarray_linalg::solve::Factorize;
    let f = a.factorize()?;
    let mut out = Array2::zeros(rhs.raw_dim());
    for (j, col) in rhs.columns().into_iter().enumerate() {
        let x = f.solve(&col.to_owned())?;
        out.column_mut(j).assign(&x);
    }
    Ok(out)
}

pub fn to_complex<T: Real>(a: &ArrayView2<'_, T>) -> Array2<T::Cx> {
    a.mapv(|x| T::Cx::from_real(x))
}

pub fn to_complex_vec<T: Real>(a: &ArrayView1<'_, T>) -> Array1<T::Cx> {
    a.mapv(|x| T::Cx::from_real(x))
}

/// Result of a rank-revealing orthonormalization: orthonormal columns plus
/// the indices of the input columns that survived.
#[derive(Debug, Clone)]
pub struct OrthOutcome<T> {
    pub q: Array2<T>,
    pub kept: Vec<usize>,
}

/// Modified Gram-Schmidt with a second re-orthogonalization pass. A column is
/// dropped when its projection residual falls at or below
/// `rank_tol * ||column||`.
pub fn orthonormalize_cols<T: Real>(cols: &ArrayView2<'_, T>, rank_tol: T) -> OrthOutcome<T> {
    let n = cols.nrows();
    let mut q: Vec<Array1<T>> = Vec::new();
    let mut kept = Vec::new();
    for (idx, col) in cols.columns().into_iter().enumerate() {
        let original_norm = col.norm_l2();
        if !(original_norm > T::zero()) {
            continue;
        }
        let mut v = col.to_owned();
        for _ in 0..2 {
            for qk in &q {
                let coeff = qk.dot(&v);
                v.scaled_add(-coeff, qk);
            }
        }
        let res = v.norm_l2();
        if res > rank_tol * original_norm {
            q.push(&v / res);
            kept.push(idx);
        }
    }
    let r = q.len();
    let mut out = Array2::zeros((n, r));
    for (j, col) in q.into_iter().enumerate() {
        out.column_mut(j).assign(&col);
    }
    OrthOutcome { q: out, kept }
}

/// `||v - Q Q^T v|| / ||v||`: the sine of the principal angle between `v`
/// and the span of the orthonormal columns of `q`.
pub fn orthogonal_residual<T: Real>(q: &ArrayView2<'_, T>, v: &ArrayView1<'_, T>) -> T {
    let nv = v.norm_l2();
    if !(nv > T::zero()) {
        return T::zero();
    }
    let coeffs = q.t().dot(v);
    let mut resid = v.to_owned();
    resid.scaled_add(-T::one(), &q.dot(&coeffs));
    // one re-projection for accuracy near machine precision
    let coeffs2 = q.t().dot(&resid);
    resid.scaled_add(-T::one(), &q.dot(&coeffs2));
    resid.norm_l2() / nv
}

/// Orthonormal basis of the hyperplane orthogonal to `v` (n x (n-1) columns
/// of the Householder reflector that maps `v` onto the first axis).
pub fn householder_complement<T: Real>(v: &ArrayView1<'_, T>) -> Array2<T> {
    let n = v.len();
    assert!(n >= 2, "complement of a vector needs dimension >= 2");
    let norm = v.norm_l2();
    assert!(norm > T::zero(), "cannot build complement of the zero vector");
    let mut u = v.to_owned();
    let sign = if v[0] >= T::zero() { T::one() } else { -T::one() };
    u[0] = u[0] + sign * norm;
    let uu = u.dot(&u);
    let mut h = Array2::zeros((n, n - 1));
    let two = lit::<T>(2.0);
    for j in 1..n {
        for i in 0..n {
            let e = if i == j { T::one() } else { T::zero() };
            h[[i, j - 1]] = e - two * u[i] * u[j] / uu;
        }
    }
    h
}

/// Largest singular value of a complex matrix.
pub fn sigma_max<T: Real>(a: &ArrayView2<'_, T::Cx>) -> Result<T> {
    if a.len() == 1 {
        return Ok(a[[0, 0]].abs());
    }
    ensure_blas();
    use ndarray_linalg::SVD;
    let (_, s, _) = a.svd(false, false)?;
    Ok(s.iter().fold(T::zero(), |m, &x| Float::max(m, x)))
}

/// Solve `A X + X A^T + Q = 0` for asymptotically stable `A` via the
/// eigendecomposition of `A`. `Q` must be symmetric.
pub fn lyapunov_stable<T: Real>(a: &Array2<T>, q: &Array2<T>) -> Result<Array2<T>> {
    let n = a.nrows();
    let (vals, vecs) = eig_general(a)?;
    let abscissa = vals
        .iter()
        .map(|l| l.re())
        .fold(T::neg_infinity(), |m, x| Float::max(m, x));
    if !(abscissa < T::zero()) {
        return Err(Error::Unstable(format!(
            "spectral abscissa {abscissa:.3e} >= 0; Lyapunov equation has no stable solution"
        )));
    }
    // G = V^-1 Q V^-T, Y_ij = -G_ij / (l_i + conj-free l_j), X = V Y V^T
    let qc = to_complex::<T>(&q.view());
    let g1 = solve_multi::<T>(&vecs, &qc, "Lyapunov eigenbasis transform")?;
    let g = solve_multi::<T>(&vecs, &g1.t().to_owned(), "Lyapunov eigenbasis transform")?;
    let mut y = Array2::<T::Cx>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            y[[i, j]] = -g[[j, i]] / (vals[i] + vals[j]);
        }
    }
    let x = vecs.dot(&y).dot(&vecs.t());
    Ok(x.mapv(|z| z.re()))
}

/// Frobenius-relative symmetry defect `||A - A^T|| / ||A||`.
pub fn symmetry_defect<T: Real>(a: &ArrayView2<'_, T>) -> T {
    let diff = a.to_owned() - a.t();
    let na = a.norm_l2();
    if na > T::zero() {
        diff.norm_l2() / na
    } else {
        T::zero()
    }
}

pub fn symmetrize<T: Real>(a: &mut Array2<T>) {
    let half = lit::<T>(0.5);
    let sym = (a.clone() + a.t()).mapv(|x| x * half);
    a.assign(&sym);
}
