use ndarray::prelude::*;
use ndarray_linalg::{Norm, Scalar};
use num_traits::Float;

use crate::error::Result;
use crate::linalg;
use crate::mor::ReducedModel;
use crate::netmodel::SecondOrderModel;
use crate::scalar::{lit, Real};
use crate::sysops::{
    model_zero_residue, realize, residue_deviation, FirstOrderRealization,
};

/// Tolerances backing the certificate booleans. Every boolean is derived
/// from the numeric fields with these gates, never set independently.
#[derive(Debug, Clone, Copy)]
pub struct CertTolerances<T> {
    /// relative zero-pole residue deviation
    pub residue_rel: T,
    /// smallest eigenvalue of `L_r(p)` relative to its norm
    pub zero_rel: T,
    /// required ratio between second-smallest eigenvalue and the zero gate
    pub gap_ratio: T,
    /// relative tangential interpolation residual
    pub interp_rel: T,
    /// principal angle of the null vector to the basis span
    pub angle: T,
}

impl<T: Real> Default for CertTolerances<T> {
    fn default() -> Self {
        Self {
            residue_rel: lit::<T>(1e-10),
            zero_rel: lit::<T>(1e-10),
            gap_ratio: lit::<T>(100.0),
            interp_rel: lit::<T>(1e-8),
            angle: lit::<T>(1e-8),
        }
    }
}

#[derive(Debug, Clone)]
pub struct InterpCheck<T> {
    pub sample: usize,
    pub sigma: (T, T),
    pub rel_residual: T,
    pub pass: bool,
}

/// Numeric evidence plus derived booleans for one (model, ROM, parameter)
/// triple. Failures are reported, not thrown.
#[derive(Debug, Clone)]
pub struct Certificate<T: Real> {
    pub p: Vec<T>,
    /// sine of the principal angle between the null vector and span(V)
    pub null_angle: T,
    pub residue_deviation: T,
    pub residue_match: bool,
    pub lr_smallest: T,
    pub lr_second_smallest: T,
    pub zero_simple: bool,
    /// spectral abscissa of the nonzero reduced companion modes
    pub spectral_abscissa: T,
    pub zero_mode_count: usize,
    pub stable_poles: bool,
    pub interpolation: Vec<InterpCheck<T>>,
    pub interpolation_pass: bool,
    pub tolerances: CertTolerances<T>,
}

impl<T: Real> Certificate<T> {
    pub fn all_pass(&self) -> bool {
        self.residue_match && self.zero_simple && self.stable_poles && self.interpolation_pass
    }

    pub fn summary_lines(&self) -> Vec<String> {
        let mut out = Vec::new();
        let fmt_pass = |b: bool| if b { "PASS" } else { "FAIL" };
        out.push(format!(
            "residue_match      {}  (rel deviation {:.3e}, gate {:.1e}; null-vector angle {:.3e})",
            fmt_pass(self.residue_match),
            self.residue_deviation,
            self.tolerances.residue_rel,
            self.null_angle,
        ));
        out.push(format!(
            "zero_simple        {}  (smallest {:.3e}, second {:.3e}, gap ratio gate {:.0}x)",
            fmt_pass(self.zero_simple),
            self.lr_smallest,
            self.lr_second_smallest,
            self.tolerances.gap_ratio,
        ));
        out.push(format!(
            "stable_poles       {}  (abscissa {:.3e}, {} zero modes)",
            fmt_pass(self.stable_poles),
            self.spectral_abscissa,
            self.zero_mode_count,
        ));
        let worst = self
            .interpolation
            .iter()
            .map(|c| c.rel_residual)
            .fold(T::zero(), |m, x| Float::max(m, x));
        out.push(format!(
            "interpolation      {}  ({} shifts, worst rel residual {:.3e}, gate {:.1e})",
            fmt_pass(self.interpolation_pass),
            self.interpolation.len(),
            worst,
            self.tolerances.interp_rel,
        ));
        out
    }
}

/// Certify a reduced model against the full one at a parameter value:
/// residue matching, simplicity of the reduced zero eigenvalue, reduced pole
/// stability, and the stored tangential interpolation conditions.
pub fn certify<T: Real>(
    model: &SecondOrderModel<T>,
    rom: &ReducedModel<T>,
    p: &[T],
    tols: &CertTolerances<T>,
) -> Result<Certificate<T>> {
    let upsilon = model.null_vector(p)?;
    let null_angle = rom.basis().angle_to(&upsilon.view());

    let full_res = model_zero_residue(model, p)?;
    let red_res = rom.zero_residue(model, p)?;
    let dev = residue_deviation(&full_res, &red_res);
    let residue_match = dev <= tols.residue_rel;

    let lr = rom.assemble_lr(model, p)?;
    let evals = linalg::eigvals_symmetric(&lr)?;
    let lr_norm = Float::max(lr.norm_l2(), T::epsilon());
    let smallest = evals[0];
    let second = if evals.len() > 1 { evals[1] } else { T::infinity() };
    let zero_gate = tols.zero_rel * lr_norm;
    let zero_simple = Float::abs(smallest) <= zero_gate && second > tols.gap_ratio * zero_gate;

    let reduced_sys = rom.realize(model, p)?;
    let comp = FirstOrderRealization::new(reduced_sys.clone())?;
    let zero_tol = comp.zero_tol();
    let vals = comp.eigenvalues()?;
    let mut zero_mode_count = 0usize;
    let mut abscissa = T::neg_infinity();
    for l in vals.iter() {
        if l.abs() < zero_tol {
            zero_mode_count += 1;
        } else {
            abscissa = Float::max(abscissa, l.re());
        }
    }
    let stable_poles = abscissa < zero_tol && zero_mode_count <= 1;

    // tangential interpolation residuals at the stored sample data
    let mut interpolation = Vec::new();
    for (sample_idx, rec) in rom.samples().iter().enumerate() {
        let full_sys = realize(model, &rec.p)?;
        let red_at_sample = rom.realize(model, &rec.p)?;
        for (shift, dir) in rec.shifts.iter().zip(&rec.directions) {
            let sigma = T::cx(shift.0, shift.1);
            let direction =
                Array1::from_iter(dir.iter().map(|&(re, im)| T::cx(re, im)));
            let hb = full_sys.eval(sigma)?.dot(&direction);
            let hrb = red_at_sample.eval(sigma)?.dot(&direction);
            let denom = Float::max(hb.norm_l2(), T::epsilon());
            let rel = (&hb - &hrb).norm_l2() / denom;
            interpolation.push(InterpCheck {
                sample: sample_idx,
                sigma: *shift,
                rel_residual: rel,
                pass: rel <= tols.interp_rel,
            });
        }
    }
    let interpolation_pass = interpolation.iter().all(|c| c.pass);

    Ok(Certificate {
        p: p.to_vec(),
        null_angle,
        residue_deviation: dev,
        residue_match,
        lr_smallest: smallest,
        lr_second_smallest: second,
        zero_simple,
        spectral_abscissa: abscissa,
        zero_mode_count,
        stable_poles,
        interpolation,
        interpolation_pass,
        tolerances: *tols,
    })
}
