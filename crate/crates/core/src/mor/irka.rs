//! Structured second-order IRKA with zero-pole handling.
//!
//! Per iteration: build the tangential interpolation basis at the current
//! shifts, Galerkin-project to a second-order reduced model, eigendecompose
//! its companion form, keep the dominant stable nonzero poles (dominance =
//! residue norm over |Re lambda|, conjugacy preserved), and propose the
//! mirrored poles with the residue input directions as the next shifts.
//!
//! Network models have a structural pole at zero for every parameter, so the
//! interpolation set carries a null-vector column from the start instead of
//! ever solving at a zero shift; the budget of moving shifts is then
//! `order - 1` and the reduced model keeps an exact zero pole at every
//! iterate. Convergence is measured by the relative Hausdorff distance
//! between consecutive shift sets.

use ndarray::prelude::*;
use ndarray_linalg::{Norm, Scalar};
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg;
use crate::mor::interp::{hausdorff_rel, InterpPoint, InterpolationSet, ShiftKind};
use crate::mor::local::{local_basis_system, LocalTag};
use crate::netmodel::SecondOrderModel;
use crate::scalar::{lit, Real};
use crate::sysops::{realize, CoeffMatrix, FirstOrderRealization, SecondOrderSystem};

#[derive(Debug, Clone, Copy)]
pub struct SorIrkaOptions<T> {
    /// Relative Hausdorff tolerance on shift movement.
    pub tol: T,
    pub max_iter: usize,
    /// Rank tolerance for the per-iteration orthonormalization.
    pub rank_tol: T,
}

impl<T: Real> Default for SorIrkaOptions<T> {
    fn default() -> Self {
        Self {
            tol: lit::<T>(1e-6),
            max_iter: 50,
            rank_tol: lit::<T>(1e-10),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SorIrkaDiagnostics<T> {
    pub iterations: usize,
    pub converged: bool,
    pub final_movement: T,
    pub movement_history: Vec<T>,
    /// True when the reduced model carried a (structural) zero pole.
    pub zero_mode: bool,
}

#[derive(Debug, Clone)]
pub struct SorIrkaOutcome<T: Real> {
    pub interp: InterpolationSet<T>,
    /// Realified local basis built at the returned interpolation set
    /// (not yet orthonormalized).
    pub basis: Array2<T>,
    pub tags: Vec<LocalTag<T>>,
    /// Galerkin projection of the system onto the orthonormalized basis.
    pub reduced: SecondOrderSystem<T>,
    pub diagnostics: SorIrkaDiagnostics<T>,
}

/// SOR-IRKA on a network model at one parameter sample.
pub fn sor_irka<T: Real>(
    model: &SecondOrderModel<T>,
    p: &[T],
    order: usize,
    opts: &SorIrkaOptions<T>,
) -> Result<SorIrkaOutcome<T>> {
    let so = realize(model, p)?;
    let upsilon = model.null_vector(p)?;
    sor_irka_system(&so, Some(&upsilon), order, opts)
}

/// SOR-IRKA on an explicit second-order system. Pass the stiffness null
/// vector when the system has a structural zero pole; without it the system
/// must be asymptotically stable.
pub fn sor_irka_system<T: Real>(
    so: &SecondOrderSystem<T>,
    null_vec: Option<&Array1<T>>,
    order: usize,
    opts: &SorIrkaOptions<T>,
) -> Result<SorIrkaOutcome<T>> {
    if order < 1 {
        return Err(Error::Precondition("reduced order must be >= 1".into()));
    }
    if order > so.order() {
        return Err(Error::Precondition(format!(
            "reduced order {order} exceeds system order {}",
            so.order()
        )));
    }
    let with_null = null_vec.is_some();
    let shift_budget = if with_null { order - 1 } else { order };

    let mut set = initial_set(so, shift_budget, with_null)?;
    let mut history: Vec<T> = Vec::new();
    let mut best: Option<(T, IterateState<T>)> = None;
    let mut converged = false;
    let mut iterations = 0;
    let mut zero_mode_seen = with_null;

    for it in 0..opts.max_iter {
        iterations = it + 1;
        let state = evaluate_iterate(so, &set, null_vec, opts)?;
        let next = propose_next(so, &state, shift_budget, with_null)?;
        zero_mode_seen |= state.zero_count > 0;

        let movement = hausdorff_rel::<T>(&set.expanded_shifts(), &next.expanded_shifts());
        history.push(movement);
        if movement <= opts.tol {
            best = Some((movement, state));
            converged = true;
            break;
        }
        let replace = match &best {
            Some((m, _)) => movement < *m,
            None => true,
        };
        if replace {
            best = Some((movement, state));
        }
        set = next;
    }

    let (final_movement, state) = best.expect("at least one iterate");
    if !converged {
        log::warn!(
            "SOR-IRKA did not converge in {} iterations (final shift movement {:.3e})",
            iterations,
            final_movement
        );
    }
    Ok(SorIrkaOutcome {
        interp: state.set,
        basis: state.basis,
        tags: state.tags,
        reduced: state.reduced,
        diagnostics: SorIrkaDiagnostics {
            iterations,
            converged,
            final_movement,
            movement_history: history,
            zero_mode: zero_mode_seen,
        },
    })
}

struct IterateState<T: Real> {
    set: InterpolationSet<T>,
    basis: Array2<T>,
    tags: Vec<LocalTag<T>>,
    reduced: SecondOrderSystem<T>,
    /// canonical reduced poles (upper half plane), with residue data
    candidates: Vec<PoleInfo<T>>,
    zero_count: usize,
}

struct PoleInfo<T: Real> {
    pole: T::Cx,
    is_real: bool,
    dominance: T,
    /// `y_k^H B_r` row of the companion modal form
    input_row: Array1<T::Cx>,
}

/// Build the basis at the current set, project, and eigendecompose the
/// reduced companion form.
fn evaluate_iterate<T: Real>(
    so: &SecondOrderSystem<T>,
    set: &InterpolationSet<T>,
    null_vec: Option<&Array1<T>>,
    opts: &SorIrkaOptions<T>,
) -> Result<IterateState<T>> {
    let (cols, tags) = local_basis_system(so, set, null_vec)?;
    let orth = linalg::orthonormalize_cols(&cols.view(), opts.rank_tol);
    if orth.q.ncols() == 0 {
        return Err(Error::Precondition(
            "local basis collapsed to rank zero".into(),
        ));
    }
    let reduced = project_system(so, &orth.q.view());
    let comp = FirstOrderRealization::new(reduced.clone())?;
    let zero_tol = comp.zero_tol();
    let (vals, vecs) = linalg::eig_general(comp.a())?;
    let bc = linalg::to_complex::<T>(&comp.b().view());
    let input_modes = linalg::solve_multi::<T>(&vecs, &bc, "reduced companion modal form")?;
    let cc = linalg::to_complex::<T>(&comp.c().view());
    let output_modes = cc.dot(&vecs);

    let mut zero_count = 0usize;
    let mut candidates: Vec<PoleInfo<T>> = Vec::new();
    let mut any_stable = false;
    for (k, &l) in vals.iter().enumerate() {
        if l.abs() < zero_tol {
            zero_count += 1;
            continue;
        }
        if !(l.re() < T::zero()) {
            log::warn!("reduced companion pole {l} is not stable; excluded from shift selection");
            continue;
        }
        any_stable = true;
        if l.im() < -zero_tol {
            continue; // lower-half partner of a conjugate pair
        }
        let is_real = Float::abs(l.im()) <= zero_tol;
        let pole = if is_real {
            T::cx(l.re(), T::zero())
        } else {
            l
        };
        let out_norm = output_modes.column(k).norm_l2();
        let in_row = input_modes.row(k).to_owned();
        let in_norm = in_row.norm_l2();
        let dominance = out_norm * in_norm / Float::abs(l.re());
        candidates.push(PoleInfo {
            pole,
            is_real,
            dominance,
            input_row: in_row,
        });
    }
    if !any_stable && candidates.is_empty() {
        return Err(Error::Unstable(
            "no stable nonzero poles in the reduced companion spectrum \
             (Galerkin projection should prevent this)"
                .into(),
        ));
    }
    if null_vec.is_none() && zero_count > 0 {
        return Err(Error::Precondition(
            "reduced model has a zero pole but no null vector was supplied for replacement".into(),
        ));
    }
    if zero_count > 1 {
        log::warn!("{zero_count} near-zero reduced poles; model may be degenerate");
    }

    // deterministic dominance ordering
    candidates.sort_by(|a, b| {
        b.dominance
            .partial_cmp(&a.dominance)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(
                a.pole
                    .re()
                    .partial_cmp(&b.pole.re())
                    .unwrap_or(std::cmp::Ordering::Equal),
            )
            .then(
                a.pole
                    .im()
                    .partial_cmp(&b.pole.im())
                    .unwrap_or(std::cmp::Ordering::Equal),
            )
    });

    Ok(IterateState {
        set: set.clone(),
        basis: cols,
        tags,
        reduced,
        candidates,
        zero_count,
    })
}

/// Mirror the selected dominant poles into the next shift set.
fn propose_next<T: Real>(
    so: &SecondOrderSystem<T>,
    state: &IterateState<T>,
    shift_budget: usize,
    with_null: bool,
) -> Result<InterpolationSet<T>> {
    let mut budget = shift_budget;
    let mut points: Vec<InterpPoint<T>> = Vec::new();
    let mut skipped_pairs: Vec<&PoleInfo<T>> = Vec::new();
    let guard = shift_guard(so);

    for cand in &state.candidates {
        if budget == 0 {
            break;
        }
        let sigma = -cand.pole.conj();
        if sigma.abs() < guard {
            // near-zero proposal: the null-vector column already covers it
            if with_null {
                continue;
            }
        }
        if cand.is_real {
            points.push(InterpPoint {
                shift: T::Cx::from_real(Float::abs(sigma.re())),
                direction: normalize_direction::<T>(&cand.input_row, true),
                kind: ShiftKind::Real,
            });
            budget -= 1;
        } else if budget >= 2 {
            points.push(InterpPoint {
                shift: sigma,
                direction: normalize_direction::<T>(&cand.input_row, false),
                kind: ShiftKind::ConjugatePair,
            });
            budget -= 2;
        } else {
            skipped_pairs.push(cand);
        }
    }
    // a single leftover slot: fill with a lone complex representative only
    // when no null column bounds the basis size (plain stable systems)
    if budget == 1 && !with_null {
        if let Some(cand) = skipped_pairs.first() {
            points.push(InterpPoint {
                shift: -cand.pole.conj(),
                direction: normalize_direction::<T>(&cand.input_row, false),
                kind: ShiftKind::LoneComplex,
            });
        }
    }
    InterpolationSet::new(points, with_null)
}

/// Near-zero shift guard: `10 * (1e-8 * sqrt(lambda_max(K)/m_min))`-flavored
/// scale; proposals below it are covered by the null-vector column.
fn shift_guard<T: Real>(so: &SecondOrderSystem<T>) -> T {
    let k_norm = so.stiffness.norm_l2();
    lit::<T>(10.0 * 1e-8) * Float::sqrt(Float::max(k_norm, T::epsilon()))
}

fn normalize_direction<T: Real>(row: &Array1<T::Cx>, force_real: bool) -> Array1<T::Cx> {
    let m = row.len();
    if force_real {
        let mut v: Array1<T> = row.mapv(|z| z.re());
        let n = v.norm_l2();
        if n > T::zero() {
            v.mapv_inplace(|x| x / n);
        } else {
            v = Array1::zeros(m);
            v[0] = T::one();
        }
        // deterministic sign: first entry of largest magnitude is positive
        let k = argmax_abs_real(&v);
        if v[k] < T::zero() {
            v.mapv_inplace(|x| -x);
        }
        return v.mapv(|x| T::Cx::from_real(x));
    }
    let n = row.norm_l2();
    if !(n > T::zero()) {
        let mut v = Array1::from_elem(m, T::Cx::from_real(T::zero()));
        v[0] = T::Cx::from_real(T::one());
        return v;
    }
    let mut v = row.mapv(|z| z.mul_real(T::one() / n));
    // deterministic phase: rotate the largest entry onto the positive real axis
    let k = argmax_abs_cx::<T>(&v);
    let a = v[k];
    let amag = a.abs();
    if amag > T::zero() {
        let phase = a.mul_real(T::one() / amag).conj();
        v.mapv_inplace(|z| z * phase);
    }
    v
}

fn argmax_abs_real<T: Real>(v: &Array1<T>) -> usize {
    let mut k = 0;
    let mut best = T::neg_infinity();
    for (i, &x) in v.iter().enumerate() {
        let a = Float::abs(x);
        if a > best {
            best = a;
            k = i;
        }
    }
    k
}

fn argmax_abs_cx<T: Real>(v: &Array1<T::Cx>) -> usize {
    let mut k = 0;
    let mut best = T::neg_infinity();
    for (i, z) in v.iter().enumerate() {
        let a = z.abs();
        if a > best {
            best = a;
            k = i;
        }
    }
    k
}

/// Spectral-interval initial shifts: conjugate pairs log-spaced on
/// `i * [sqrt(lambda_2)/10, sqrt(lambda_max/m_min) * 10]`, a real shift at
/// the geometric mean when the budget is odd, and the dominant right singular
/// vectors of `B` as initial directions.
fn initial_set<T: Real>(
    so: &SecondOrderSystem<T>,
    shift_budget: usize,
    with_null: bool,
) -> Result<InterpolationSet<T>> {
    if shift_budget == 0 {
        return InterpolationSet::new(Vec::new(), with_null);
    }
    let evals = linalg::eigvals_symmetric(&{
        let mut k = so.stiffness.clone();
        linalg::symmetrize(&mut k);
        k
    })?;
    let lam_max = evals[evals.len() - 1];
    let floor = Float::max(lam_max, T::one()) * lit::<T>(1e-12);
    let lam_lo = evals
        .iter()
        .copied()
        .find(|&l| l > floor)
        .unwrap_or(Float::max(lam_max, T::epsilon()));
    let m_min = match &so.mass {
        CoeffMatrix::Diag(d) => d.iter().copied().fold(T::infinity(), Float::min),
        CoeffMatrix::Dense(m) => {
            let ev = linalg::eigvals_symmetric(m)?;
            ev[0]
        }
    };
    let w_lo = Float::sqrt(lam_lo) / lit::<T>(10.0);
    let w_hi = Float::sqrt(lam_max / m_min) * lit::<T>(10.0);

    let npairs = shift_budget / 2;
    let nreal = shift_budget % 2;
    let directions = initial_directions(so, npairs + nreal)?;
    let mut points = Vec::new();
    for k in 0..npairs {
        let t = if npairs == 1 {
            lit::<T>(0.5)
        } else {
            T::real(k as f64) / T::real((npairs - 1) as f64)
        };
        let w = Float::exp(Float::ln(w_lo) + (Float::ln(w_hi) - Float::ln(w_lo)) * t);
        points.push(InterpPoint {
            shift: T::cx(T::zero(), w),
            direction: directions[k].mapv(|x| T::Cx::from_real(x)),
            kind: ShiftKind::ConjugatePair,
        });
    }
    if nreal == 1 {
        let w = Float::sqrt(w_lo * w_hi);
        points.push(InterpPoint {
            shift: T::Cx::from_real(w),
            direction: directions[npairs].mapv(|x| T::Cx::from_real(x)),
            kind: ShiftKind::Real,
        });
    }
    InterpolationSet::new(points, with_null)
}

fn initial_directions<T: Real>(so: &SecondOrderSystem<T>, count: usize) -> Result<Vec<Array1<T>>> {
    let m = so.num_inputs();
    if m == 1 {
        return Ok(vec![ndarray::array![T::one()]; count]);
    }
    linalg::ensure_blas();
    use ndarray_linalg::SVD;
    let (_, _, vt) = so.b.svd(false, true)?;
    let vt = vt.expect("requested right singular vectors");
    let avail = vt.nrows().min(m);
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let row = vt.row(k % avail);
        out.push(row.to_owned());
    }
    Ok(out)
}

/// Galerkin projection `(Q^T M Q, Q^T D Q, Q^T K Q, Q^T B, C Q)` with exact
/// symmetry for diagonal coefficients.
pub fn project_system<T: Real>(
    so: &SecondOrderSystem<T>,
    q: &ArrayView2<'_, T>,
) -> SecondOrderSystem<T> {
    let project_coeff = |cm: &CoeffMatrix<T>| -> CoeffMatrix<T> {
        match cm {
            CoeffMatrix::Diag(d) => {
                // Q^T diag(d) Q as W^T W with W = sqrt(d) Q: exactly symmetric
                let mut w = q.to_owned();
                for (i, mut row) in w.rows_mut().into_iter().enumerate() {
                    let s = Float::sqrt(d[i]);
                    row.mapv_inplace(|x| x * s);
                }
                CoeffMatrix::Dense(w.t().dot(&w))
            }
            CoeffMatrix::Dense(mat) => {
                let mut prod = q.t().dot(&mat.dot(q));
                linalg::symmetrize(&mut prod);
                CoeffMatrix::Dense(prod)
            }
        }
    };
    let mass = project_coeff(&so.mass);
    let damping = project_coeff(&so.damping);
    let mut stiffness = q.t().dot(&so.stiffness.dot(q));
    linalg::symmetrize(&mut stiffness);
    SecondOrderSystem {
        mass,
        damping,
        stiffness,
        b: q.t().dot(&so.b),
        c: so.c.dot(q),
    }
}
