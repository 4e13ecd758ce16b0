//! H2 and H-infinity machinery. The H2 norm has two independent routes: a
//! dense Lyapunov solve on the deflated stable part (primary) and adaptive
//! frequency-domain quadrature (cross-check oracle). The H-infinity value is
//! a grid maximum with golden-section refinement and is therefore a
//! documented lower bound.

use ndarray::prelude::*;
use ndarray_linalg::Scalar;
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::{lit, Real};
use crate::sysops::deflate::{SpectralSplit, StateSpace};
use crate::sysops::modal::ModalSystem;
use crate::sysops::residue::residue_deviation;
use crate::sysops::system::TransferEval;

/// Logarithmic frequency window for gain evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreqGrid<T> {
    pub omega_min: T,
    pub omega_max: T,
    pub points: usize,
}

impl<T: Real> Default for FreqGrid<T> {
    fn default() -> Self {
        Self {
            omega_min: lit::<T>(1e-4),
            omega_max: lit::<T>(1e4),
            points: 400,
        }
    }
}

impl<T: Real> FreqGrid<T> {
    pub fn new(omega_min: T, omega_max: T, points: usize) -> Result<Self> {
        if !(omega_min > T::zero()) || !(omega_max > omega_min) || points < 2 {
            return Err(Error::Precondition(format!(
                "frequency grid needs 0 < omega_min < omega_max and >= 2 points, \
                 got [{omega_min}, {omega_max}] with {points}"
            )));
        }
        Ok(Self {
            omega_min,
            omega_max,
            points,
        })
    }

    pub fn omegas(&self) -> Vec<T> {
        let lo = Float::ln(self.omega_min);
        let hi = Float::ln(self.omega_max);
        let m = self.points;
        (0..m)
            .map(|k| {
                let t = lo + (hi - lo) * T::real(k as f64) / T::real((m - 1) as f64);
                Float::exp(t)
            })
            .collect()
    }

    pub fn describe(&self) -> String {
        format!(
            "omega_min={} omega_max={} omega_points={}",
            self.omega_min, self.omega_max, self.points
        )
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PeakGain<T> {
    pub value: T,
    pub argmax_omega: T,
}

fn gain_at<T: Real>(sys: &dyn TransferEval<T>, omega: T) -> Result<T> {
    let h = sys.eval(T::cx(T::zero(), omega))?;
    linalg::sigma_max::<T>(&h.view())
}

/// Largest singular value of `H(i omega)` over the grid, refined around the
/// grid argmax by golden-section search in log frequency. A lower bound on
/// the true H-infinity norm by construction.
pub fn peak_gain<T: Real>(sys: &dyn TransferEval<T>, grid: &FreqGrid<T>) -> Result<PeakGain<T>> {
    let omegas = grid.omegas();
    let mut best = PeakGain {
        value: T::neg_infinity(),
        argmax_omega: omegas[0],
    };
    let mut best_idx = 0;
    for (k, &w) in omegas.iter().enumerate() {
        let g = gain_at(sys, w)?;
        if g > best.value {
            best = PeakGain {
                value: g,
                argmax_omega: w,
            };
            best_idx = k;
        }
    }
    let lo = if best_idx == 0 { omegas[0] } else { omegas[best_idx - 1] };
    let hi = if best_idx + 1 == omegas.len() {
        omegas[best_idx]
    } else {
        omegas[best_idx + 1]
    };
    if hi > lo {
        let refined = golden_max(sys, lo, hi)?;
        if refined.value > best.value {
            best = refined;
        }
    }
    Ok(best)
}

/// Golden-section maximization of the gain on `[lo, hi]`, in log frequency.
fn golden_max<T: Real>(sys: &dyn TransferEval<T>, lo: T, hi: T) -> Result<PeakGain<T>> {
    let inv_phi = lit::<T>(0.618_033_988_749_894_9);
    let mut a = Float::ln(lo);
    let mut b = Float::ln(hi);
    let mut x1 = b - (b - a) * inv_phi;
    let mut x2 = a + (b - a) * inv_phi;
    let mut f1 = gain_at(sys, Float::exp(x1))?;
    let mut f2 = gain_at(sys, Float::exp(x2))?;
    for _ in 0..40 {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + (b - a) * inv_phi;
            f2 = gain_at(sys, Float::exp(x2))?;
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - (b - a) * inv_phi;
            f1 = gain_at(sys, Float::exp(x1))?;
        }
    }
    let (fx, x) = if f1 > f2 { (f1, x1) } else { (f2, x2) };
    Ok(PeakGain {
        value: fx,
        argmax_omega: Float::exp(x),
    })
}

/// H-infinity lower bound of a single (stable or deflated) system.
pub fn hinf_norm<T: Real>(sys: &dyn TransferEval<T>, grid: &FreqGrid<T>) -> Result<PeakGain<T>> {
    peak_gain(sys, grid)
}

/// Error system of two spectral splits with the zero-pole terms combined
/// first, so that evaluation stays well conditioned at small frequencies.
pub struct SplitDiff<T: Real> {
    delta_phi0: Array2<T>,
    full_stable: ModalSystem<T>,
    reduced_stable: ModalSystem<T>,
}

impl<T: Real> SplitDiff<T> {
    pub fn new(full: &SpectralSplit<T>, reduced: &SpectralSplit<T>) -> Result<Self> {
        Ok(Self {
            delta_phi0: &full.zero_residue.phi0 - &reduced.zero_residue.phi0,
            full_stable: ModalSystem::from_state_space(&full.stable_part)?,
            reduced_stable: ModalSystem::from_state_space(&reduced.stable_part)?,
        })
    }
}

impl<T: Real> TransferEval<T> for SplitDiff<T> {
    fn dims(&self) -> (usize, usize) {
        self.full_stable.dims()
    }

    fn eval(&self, s: T::Cx) -> Result<Array2<T::Cx>> {
        let mut h = self.full_stable.eval(s);
        let hr = self.reduced_stable.eval(s);
        let inv_s = T::Cx::from_real(T::one()) / s;
        for ((i, j), v) in h.indexed_iter_mut() {
            *v = *v - hr[[i, j]] + inv_s.mul_real(self.delta_phi0[[i, j]]);
        }
        Ok(h)
    }
}

/// H-infinity lower bound of the error between two deflated systems.
/// Errors when the zero-pole residues do not match (the supremum over all
/// frequencies is then infinite).
pub fn hinf_error_norm<T: Real>(
    full: &SpectralSplit<T>,
    reduced: &SpectralSplit<T>,
    grid: &FreqGrid<T>,
    residue_tol: T,
) -> Result<PeakGain<T>> {
    let dev = residue_deviation(&full.zero_residue, &reduced.zero_residue);
    if dev > residue_tol {
        return Err(Error::ResidueMismatch {
            deviation: dev.to_f64().unwrap_or(f64::NAN),
        });
    }
    let diff = SplitDiff::new(full, reduced)?;
    peak_gain(&diff, grid)
}

/// H2 norm of a deflated system via the controllability Lyapunov equation of
/// its stable part: `sqrt(trace(C P C^T))` with `A P + P A^T + B B^T = 0`.
pub fn h2_norm_split<T: Real>(split: &SpectralSplit<T>) -> Result<T> {
    h2_norm_stable(&split.stable_part)
}

pub fn h2_norm_stable<T: Real>(ss: &StateSpace<T>) -> Result<T> {
    let q = ss.b.dot(&ss.b.t());
    let p = linalg::lyapunov_stable(&ss.a, &q)?;
    let cpc = ss.c.dot(&p).dot(&ss.c.t());
    let mut tr = T::zero();
    for i in 0..cpc.nrows() {
        tr = tr + cpc[[i, i]];
    }
    Ok(Float::sqrt(Float::max(tr, T::zero())))
}

/// H2 norm of the error between two deflated systems. The residues must
/// match within `residue_tol` (the norm is infinite otherwise); matched
/// residues are treated as identical and the zero modes cancel exactly.
pub fn h2_norm_error<T: Real>(
    full: &SpectralSplit<T>,
    reduced: &SpectralSplit<T>,
    residue_tol: T,
) -> Result<T> {
    let dev = residue_deviation(&full.zero_residue, &reduced.zero_residue);
    if dev > residue_tol {
        return Err(Error::ResidueMismatch {
            deviation: dev.to_f64().unwrap_or(f64::NAN),
        });
    }
    let err = block_diag_error(&full.stable_part, &reduced.stable_part)?;
    h2_norm_stable(&err)
}

/// Realize `H_a(s) - H_ar(s)` as a block-diagonal stable system.
pub fn block_diag_error<T: Real>(
    full: &StateSpace<T>,
    reduced: &StateSpace<T>,
) -> Result<StateSpace<T>> {
    let (nf, nr) = (full.order(), reduced.order());
    let m = full.b.ncols();
    let q = full.c.nrows();
    if reduced.b.ncols() != m || reduced.c.nrows() != q {
        return Err(Error::Precondition(
            "error pair input/output dimensions differ".into(),
        ));
    }
    let mut a = Array2::zeros((nf + nr, nf + nr));
    a.slice_mut(s![0..nf, 0..nf]).assign(&full.a);
    a.slice_mut(s![nf.., nf..]).assign(&reduced.a);
    let mut b = Array2::zeros((nf + nr, m));
    b.slice_mut(s![0..nf, ..]).assign(&full.b);
    b.slice_mut(s![nf.., ..]).assign(&reduced.b);
    let mut c = Array2::zeros((q, nf + nr));
    c.slice_mut(s![.., 0..nf]).assign(&full.c);
    c.slice_mut(s![.., nf..]).assign(&reduced.c.mapv(|x| -x));
    Ok(StateSpace { a, b, c })
}

/// Independent H2 cross-check: adaptive Simpson quadrature of
/// `||H(i omega)||_F^2 / pi` on a logarithmic axis, with tail corrections
/// assuming a flat integrand below `omega_lo` and `1/omega^2` decay above
/// `omega_hi`. Never touches the Lyapunov path.
pub fn h2_norm_quadrature<T: Real>(
    sys: &dyn TransferEval<T>,
    omega_lo: T,
    omega_hi: T,
    rel_tol: T,
) -> Result<T> {
    if !(omega_lo > T::zero()) || !(omega_hi > omega_lo) {
        return Err(Error::Precondition(format!(
            "quadrature window [{omega_lo}, {omega_hi}] invalid"
        )));
    }
    let frob_sq = |w: T| -> Result<T> {
        let h = sys.eval(T::cx(T::zero(), w))?;
        let mut acc = T::zero();
        for z in h.iter() {
            acc = acc + z.square();
        }
        Ok(acc)
    };
    // integrate g(e^t) e^t dt on [ln lo, ln hi]
    let f = |t: T| -> Result<T> {
        let w = Float::exp(t);
        Ok(frob_sq(w)? * w)
    };
    let a = Float::ln(omega_lo);
    let b = Float::ln(omega_hi);
    let integral = adaptive_simpson(&f, a, b, rel_tol)?;
    let tail_low = frob_sq(omega_lo)? * omega_lo;
    let tail_high = frob_sq(omega_hi)? * omega_hi;
    let total = (integral + tail_low + tail_high) / T::real(std::f64::consts::PI);
    Ok(Float::sqrt(Float::max(total, T::zero())))
}

fn adaptive_simpson<T: Real>(f: &dyn Fn(T) -> Result<T>, a: T, b: T, rel_tol: T) -> Result<T> {
    // split the range into panels first; resonance peaks are narrow in log space
    let panels = 32;
    let h = (b - a) / T::real(panels as f64);
    let mut total = T::zero();
    let mut evals: Vec<(T, T, T, T, T)> = Vec::with_capacity(panels);
    let two = lit::<T>(2.0);
    for k in 0..panels {
        let x0 = a + h * T::real(k as f64);
        let x1 = x0 + h;
        let xm = (x0 + x1) / two;
        let f0 = f(x0)?;
        let fm = f(xm)?;
        let f1 = f(x1)?;
        let s = simpson_rule(x0, x1, f0, fm, f1);
        evals.push((x0, x1, f0, fm, f1));
        total = total + s;
    }
    let scale = Float::max(Float::abs(total), lit::<T>(1e-300));
    let mut sum = T::zero();
    for (x0, x1, f0, fm, f1) in evals {
        let whole = simpson_rule(x0, x1, f0, fm, f1);
        sum = sum
            + simpson_recurse(
                f,
                x0,
                x1,
                f0,
                fm,
                f1,
                whole,
                rel_tol * scale / T::real(32.0),
                20,
            )?;
    }
    Ok(sum)
}

fn simpson_rule<T: Real>(a: T, b: T, fa: T, fm: T, fb: T) -> T {
    (b - a) / lit::<T>(6.0) * (fa + lit::<T>(4.0) * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn simpson_recurse<T: Real>(
    f: &dyn Fn(T) -> Result<T>,
    a: T,
    b: T,
    fa: T,
    fm: T,
    fb: T,
    whole: T,
    tol: T,
    depth: usize,
) -> Result<T> {
    let two = lit::<T>(2.0);
    let m = (a + b) / two;
    let lm = (a + m) / two;
    let rm = (m + b) / two;
    let flm = f(lm)?;
    let frm = f(rm)?;
    let left = simpson_rule(a, m, fa, flm, fm);
    let right = simpson_rule(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || Float::abs(delta) <= lit::<T>(15.0) * tol {
        return Ok(left + right + delta / lit::<T>(15.0));
    }
    let l = simpson_recurse(f, a, m, fa, flm, fm, left, tol / two, depth - 1)?;
    let r = simpson_recurse(f, m, b, fm, frm, fb, right, tol / two, depth - 1)?;
    Ok(l + r)
}
