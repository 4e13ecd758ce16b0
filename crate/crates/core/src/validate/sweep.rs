use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mor::ReducedModel;
use crate::netmodel::{ParameterSpace, SecondOrderModel};
use crate::scalar::{lit, Real};
use crate::sysops::{
    companion_form, deflate_zero_mode, h2_norm_error, h2_norm_split, peak_gain,
    FirstOrderRealization, FreqGrid, ModalSystem, TransferDiff, TransferEval,
};
use crate::validate::certificate::{certify, CertTolerances};

/// Parameter-grid specification. Random grids are seeded and the box corners
/// are always prepended so that every sweep covers the declared box.
#[derive(Debug, Clone, PartialEq)]
pub enum GridSpec {
    /// Linearly spaced tensor grid, `counts` per axis (a single entry is
    /// broadcast). Axes with one point sit at the box midpoint.
    Tensor { counts: Vec<usize> },
    /// Box corners plus `count` uniform random points.
    Random { count: usize, seed: u64 },
}

impl GridSpec {
    pub fn describe(&self) -> String {
        match self {
            GridSpec::Tensor { counts } => format!(
                "tensor:{}",
                counts
                    .iter()
                    .map(usize::to_string)
                    .collect::<Vec<_>>()
                    .join("x")
            ),
            GridSpec::Random { count, seed } => format!("random:{count}:seed={seed}"),
        }
    }

    pub fn points<T: Real>(&self, ps: &ParameterSpace<T>) -> Result<Vec<Vec<T>>> {
        let nu = ps.num_blocks();
        match self {
            GridSpec::Tensor { counts } => {
                let counts: Vec<usize> = match counts.len() {
                    1 => vec![counts[0]; nu],
                    k if k == nu => counts.clone(),
                    k => {
                        return Err(Error::Precondition(format!(
                            "{k} axis counts for nu = {nu}"
                        )))
                    }
                };
                if counts.iter().any(|&c| c == 0) {
                    return Err(Error::Precondition("zero-count grid axis".into()));
                }
                let axes: Vec<Vec<T>> = (0..nu)
                    .map(|k| {
                        let (lo, hi) = (ps.lower()[k], ps.upper()[k]);
                        let c = counts[k];
                        if c == 1 {
                            vec![(lo + hi) / lit::<T>(2.0)]
                        } else {
                            (0..c)
                                .map(|i| {
                                    lo + (hi - lo) * T::real(i as f64) / T::real((c - 1) as f64)
                                })
                                .collect()
                        }
                    })
                    .collect();
                let total: usize = counts.iter().product();
                let mut out = Vec::with_capacity(total);
                let mut idx = vec![0usize; nu];
                loop {
                    out.push((0..nu).map(|k| axes[k][idx[k]]).collect());
                    let mut k = nu;
                    loop {
                        if k == 0 {
                            return Ok(out);
                        }
                        k -= 1;
                        idx[k] += 1;
                        if idx[k] < counts[k] {
                            break;
                        }
                        idx[k] = 0;
                    }
                }
            }
            GridSpec::Random { count, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let mut out = ps.corners();
                for _ in 0..*count {
                    let p = (0..nu)
                        .map(|k| {
                            let lo = ps.lower()[k].to_f64().unwrap();
                            let hi = ps.upper()[k].to_f64().unwrap();
                            lit::<T>(rng.random_range(lo..hi))
                        })
                        .collect();
                    out.push(p);
                }
                Ok(out)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepOptions<T: Real> {
    pub grid: GridSpec,
    pub freq: FreqGrid<T>,
    /// Also compute the (deflated) relative H2 error per point.
    pub with_h2: bool,
    pub cert_tols: CertTolerances<T>,
}

impl<T: Real> SweepOptions<T> {
    pub fn new(grid: GridSpec) -> Self {
        Self {
            grid,
            freq: FreqGrid::default(),
            with_h2: false,
            cert_tols: CertTolerances::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepPoint<T> {
    pub p: Vec<T>,
    pub rel_hinf: T,
    pub argmax_omega: T,
    pub rel_h2: Option<T>,
}

#[derive(Debug, Clone)]
pub struct SweepReport<T: Real> {
    pub points: Vec<SweepPoint<T>>,
    pub wall_ms: Vec<f64>,
    pub argmax_index: usize,
    pub grid_desc: String,
    pub freq: FreqGrid<T>,
    pub with_h2: bool,
}

impl<T: Real> SweepReport<T> {
    pub fn max_rel_hinf(&self) -> T {
        self.points[self.argmax_index].rel_hinf
    }

    pub fn median_rel_hinf(&self) -> T {
        let mut vals: Vec<T> = self.points.iter().map(|pt| pt.rel_hinf).collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        let n = vals.len();
        if n % 2 == 1 {
            vals[n / 2]
        } else {
            (vals[n / 2 - 1] + vals[n / 2]) / lit::<T>(2.0)
        }
    }

    /// Plot-ready CSV: header records tool version, normalization and the
    /// frequency window; wall times are deliberately not part of the output
    /// so reruns with equal seeds are byte-identical.
    pub fn to_csv(&self) -> String {
        let nu = self.points.first().map_or(0, |pt| pt.p.len());
        let mut s = String::new();
        s.push_str(&format!(
            "# gridmor {} sweep normalization=per-point-grid-relative {} grid={}\n",
            crate::VERSION,
            self.freq.describe(),
            self.grid_desc
        ));
        for k in 1..=nu {
            s.push_str(&format!("p_{k},"));
        }
        s.push_str("rel_hinf,argmax_omega");
        if self.with_h2 {
            s.push_str(",rel_h2");
        }
        s.push('\n');
        for pt in &self.points {
            for v in &pt.p {
                s.push_str(&format!("{v},"));
            }
            s.push_str(&format!("{},{}", pt.rel_hinf, pt.argmax_omega));
            if self.with_h2 {
                match pt.rel_h2 {
                    Some(h) => s.push_str(&format!(",{h}")),
                    None => s.push_str(","),
                }
            }
            s.push('\n');
        }
        s
    }
}

/// Modal evaluator with a direct-solve fallback for defective spectra.
fn evaluator<T: Real>(comp: &FirstOrderRealization<T>) -> Box<dyn TransferEval<T>> {
    match ModalSystem::from_realization(comp) {
        Ok(m) => Box::new(m),
        Err(err) => {
            log::warn!("modal evaluation unavailable ({err}); falling back to direct solves");
            Box::new(comp.second_order().clone())
        }
    }
}

/// Relative H-infinity (and optionally H2) error over a parameter grid.
/// The reduced model is certified at the box corners first; a failing corner
/// aborts the sweep.
pub fn sweep<T: Real>(
    model: &SecondOrderModel<T>,
    rom: &ReducedModel<T>,
    opts: &SweepOptions<T>,
) -> Result<SweepReport<T>> {
    for corner in model.param_space().corners() {
        let cert = certify(model, rom, &corner, &opts.cert_tols)?;
        if !cert.all_pass() {
            return Err(Error::Certification(format!(
                "corner {corner:?} failed:\n{}",
                cert.summary_lines().join("\n")
            )));
        }
    }

    let points = opts.grid.points(model.param_space())?;
    let mut out = Vec::with_capacity(points.len());
    let mut wall_ms = Vec::with_capacity(points.len());
    let mut argmax_index = 0usize;
    for (idx, p) in points.iter().enumerate() {
        let t0 = Instant::now();
        let full_comp = companion_form(model, p)?;
        let red_comp = FirstOrderRealization::new(rom.realize(model, p)?)?;
        let full_eval = evaluator(&full_comp);
        let red_eval = evaluator(&red_comp);
        let diff = TransferDiff {
            full: full_eval.as_ref(),
            reduced: red_eval.as_ref(),
        };
        let err_peak = peak_gain(&diff, &opts.freq)?;
        let full_peak = peak_gain(full_eval.as_ref(), &opts.freq)?;
        let rel_hinf = err_peak.value / full_peak.value;

        let rel_h2 = if opts.with_h2 {
            let full_split = deflate_zero_mode(
                &full_comp,
                &crate::sysops::model_zero_residue(model, p)?,
            )?;
            let red_split = deflate_zero_mode(&red_comp, &rom.zero_residue(model, p)?)?;
            let err = h2_norm_error(&full_split, &red_split, lit::<T>(1e-8))?;
            let full_norm = h2_norm_split(&full_split)?;
            Some(err / full_norm)
        } else {
            None
        };

        if rel_hinf > out.get(argmax_index).map_or(T::neg_infinity(), |pt: &SweepPoint<T>| pt.rel_hinf) {
            argmax_index = idx;
        }
        out.push(SweepPoint {
            p: p.clone(),
            rel_hinf,
            argmax_omega: err_peak.argmax_omega,
            rel_h2,
        });
        wall_ms.push(t0.elapsed().as_secs_f64() * 1e3);
    }

    Ok(SweepReport {
        points: out,
        wall_ms,
        argmax_index,
        grid_desc: opts.grid.describe(),
        freq: opts.freq,
        with_h2: opts.with_h2,
    })
}
