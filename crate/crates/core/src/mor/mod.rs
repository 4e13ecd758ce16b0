//! Interpolatory model reduction: local H2-driven bases (SOR-IRKA), global
//! basis assembly with residue-matching enrichment, and reduced-model
//! construction with offline/online splitting.

mod basis;
mod interp;
mod irka;
mod local;
mod reduced;

pub use basis::{
    default_rank_tol, enrich_for_blocks, global_basis, ColumnSource, ReductionBasis,
};
pub use interp::{hausdorff_rel, InterpPoint, InterpolationSet, ShiftKind};
pub use irka::{
    project_system, sor_irka, sor_irka_system, SorIrkaDiagnostics, SorIrkaOptions, SorIrkaOutcome,
};
pub use local::{local_basis, local_basis_system, ColPart, LocalTag};
pub use reduced::{
    check_model_hash, default_angle_tol, load_rom, reduce, rom_from_json, rom_to_json, save_rom,
    EnrichMode, ReducedModel, RomFile, SampleRecord,
};

use ndarray::prelude::*;
use ndarray_linalg::Scalar;

use crate::error::{Error, Result};
use crate::linalg;
use crate::netmodel::SecondOrderModel;
use crate::scalar::{lit, Real};

/// Options of the end-to-end reduction pipeline.
#[derive(Debug, Clone)]
pub struct RomBuildOptions<T: Real> {
    /// Local order per sample; a single entry is broadcast to every sample.
    pub orders: Vec<usize>,
    pub enrich: EnrichMode,
    pub irka: SorIrkaOptions<T>,
    pub rank_tol: T,
}

impl<T: Real> RomBuildOptions<T> {
    pub fn new(order: usize, enrich: EnrichMode) -> Self {
        Self {
            orders: vec![order],
            enrich,
            irka: SorIrkaOptions::default(),
            rank_tol: default_rank_tol::<T>(),
        }
    }
}

#[derive(Debug)]
pub struct RomBuild<T: Real> {
    pub rom: ReducedModel<T>,
    pub diagnostics: Vec<SorIrkaDiagnostics<T>>,
}

/// Run SOR-IRKA per sample, concatenate the local bases, apply the requested
/// enrichment and project.
pub fn build_rom<T: Real>(
    model: &SecondOrderModel<T>,
    samples: &[Vec<T>],
    opts: &RomBuildOptions<T>,
) -> Result<RomBuild<T>> {
    if samples.is_empty() {
        return Err(Error::Precondition("at least one parameter sample required".into()));
    }
    let nu = model.param_space().num_blocks();
    for (i, p) in samples.iter().enumerate() {
        if p.len() != nu {
            return Err(Error::Precondition(format!(
                "sample {i} has {} entries, expected nu = {nu}",
                p.len()
            )));
        }
        model.param_space().check_positive(p)?;
    }
    if opts.enrich == EnrichMode::Samples && samples.len() < nu {
        return Err(Error::Precondition(format!(
            "enrichment mode 'samples' needs at least nu = {nu} parameter samples, got {} \
             (use more samples or --enrich blocks)",
            samples.len()
        )));
    }
    let orders: Vec<usize> = match opts.orders.len() {
        1 => vec![opts.orders[0]; samples.len()],
        k if k == samples.len() => opts.orders.clone(),
        k => {
            return Err(Error::Precondition(format!(
                "{k} local orders given for {} samples",
                samples.len()
            )))
        }
    };

    let mut locals = Vec::with_capacity(samples.len());
    let mut diagnostics = Vec::with_capacity(samples.len());
    let mut records = Vec::with_capacity(samples.len());
    for (p, &order) in samples.iter().zip(&orders) {
        let out = sor_irka(model, p, order, &opts.irka)?;
        records.push(sample_record(p, &out.interp));
        diagnostics.push(out.diagnostics.clone());
        locals.push((out.basis, out.tags));
    }

    let extras = match opts.enrich {
        EnrichMode::Blocks => enrich_for_blocks(model.param_space()),
        EnrichMode::Samples | EnrichMode::PerParameter => Vec::new(),
    };
    let basis = global_basis(&locals, &extras, opts.rank_tol)?;

    if opts.enrich == EnrichMode::Samples {
        verify_sample_span(model, samples, &basis)?;
    }

    let mut rom = reduce(model, basis)?;
    rom.set_enrich_mode(opts.enrich);
    rom.set_samples(records);
    Ok(RomBuild { rom, diagnostics })
}

/// The 'samples' enrichment route is only sound when the sampled null
/// vectors span every block indicator; verify by principal angles.
fn verify_sample_span<T: Real>(
    model: &SecondOrderModel<T>,
    samples: &[Vec<T>],
    basis: &ReductionBasis<T>,
) -> Result<()> {
    let n = model.node_count();
    let mut null_cols = Array2::zeros((n, samples.len()));
    for (j, p) in samples.iter().enumerate() {
        null_cols
            .column_mut(j)
            .assign(&model.null_vector(p)?);
    }
    let orth = linalg::orthonormalize_cols(&null_cols.view(), lit::<T>(1e-12));
    for (k, e) in model.param_space().block_indicators().iter().enumerate() {
        let angle = linalg::orthogonal_residual(&orth.q.view(), &e.view());
        if angle > lit::<T>(1e-8) {
            return Err(Error::Precondition(format!(
                "sampled null vectors do not span block indicator e_{k} \
                 (principal angle {angle:.3e}); samples are too close to collinear -- \
                 use distinct samples or --enrich blocks"
            )));
        }
        // the basis itself must contain them too
        let basis_angle = basis.angle_to(&e.view());
        if basis_angle > lit::<T>(1e-6) {
            return Err(Error::Precondition(format!(
                "block indicator e_{k} is not in the reduction basis span \
                 (principal angle {basis_angle:.3e})"
            )));
        }
    }
    Ok(())
}

fn sample_record<T: Real>(p: &[T], interp: &InterpolationSet<T>) -> SampleRecord<T> {
    let mut shifts = Vec::new();
    let mut directions = Vec::new();
    for pt in interp.points() {
        shifts.push((pt.shift.re(), pt.shift.im()));
        directions.push(pt.direction.iter().map(|z| (z.re(), z.im())).collect());
    }
    SampleRecord {
        p: p.to_vec(),
        shifts,
        directions,
    }
}
