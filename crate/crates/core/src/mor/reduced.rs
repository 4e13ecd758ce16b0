use std::path::Path;

use ndarray::prelude::*;
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::mor::basis::{ColumnSource, ReductionBasis};
use crate::netmodel::{sha256_hex, SecondOrderModel};
use crate::scalar::{lit, Real};
use crate::sysops::{CoeffMatrix, SecondOrderSystem};

/// How residue matching over the parameter box is achieved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnrichMode {
    /// Append the block indicator vectors `e_k`.
    Blocks,
    /// Rely on the null vectors of at least `nu` parameter samples.
    Samples,
    /// Keep the basis lean; augment with the null vector per evaluation
    /// parameter on demand.
    PerParameter,
}

impl std::str::FromStr for EnrichMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "blocks" => Ok(EnrichMode::Blocks),
            "samples" => Ok(EnrichMode::Samples),
            "per-p" | "per_p" | "per-parameter" => Ok(EnrichMode::PerParameter),
            other => Err(format!(
                "unknown enrichment mode '{other}' (expected blocks, samples or per-p)"
            )),
        }
    }
}

/// Interpolation data of one parameter sample, kept for certification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord<T> {
    pub p: Vec<T>,
    /// shifts as (re, im); conjugate partners implicit
    pub shifts: Vec<(T, T)>,
    /// tangent directions, entries as (re, im), one per shift
    pub directions: Vec<Vec<(T, T)>>,
}

/// Galerkin-projected parametric reduced model. `L_r(p)` is assembled online
/// as `(P V)^T L (P V)` against the originating model.
#[derive(Debug, Clone)]
pub struct ReducedModel<T: Real> {
    basis: ReductionBasis<T>,
    m_r: Array2<T>,
    d_r: Array2<T>,
    b_r: Array2<T>,
    c_r: Array2<T>,
    param_blocks: Vec<usize>,
    enrich: EnrichMode,
    samples: Vec<SampleRecord<T>>,
    model_hash: Option<String>,
}

/// Project the model onto an orthonormal basis.
pub fn reduce<T: Real>(
    model: &SecondOrderModel<T>,
    basis: ReductionBasis<T>,
) -> Result<ReducedModel<T>> {
    if basis.dim() != model.node_count() {
        return Err(Error::Precondition(format!(
            "basis has {} rows for a model with {} nodes",
            basis.dim(),
            model.node_count()
        )));
    }
    let v = basis.matrix();
    let m_r = congruence_diag(model.inertia(), v);
    let d_r = congruence_diag(model.damping(), v);
    let b_r = v.t().dot(&model.input_matrix());
    let c_r = model.output_matrix().dot(v);
    Ok(ReducedModel {
        basis,
        m_r,
        d_r,
        b_r,
        c_r,
        param_blocks: model.param_space().block_sizes().to_vec(),
        enrich: EnrichMode::PerParameter,
        samples: Vec::new(),
        model_hash: None,
    })
}

/// `V^T diag(d) V` computed as `W^T W`, which is exactly symmetric and PSD.
fn congruence_diag<T: Real>(d: &Array1<T>, v: &Array2<T>) -> Array2<T> {
    let mut w = v.clone();
    for (i, mut row) in w.rows_mut().into_iter().enumerate() {
        let s = Float::sqrt(d[i]);
        row.mapv_inplace(|x| x * s);
    }
    w.t().dot(&w)
}

impl<T: Real> ReducedModel<T> {
    pub fn order(&self) -> usize {
        self.basis.rank()
    }

    pub fn full_dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn basis(&self) -> &ReductionBasis<T> {
        &self.basis
    }

    pub fn mass(&self) -> &Array2<T> {
        &self.m_r
    }

    pub fn damping(&self) -> &Array2<T> {
        &self.d_r
    }

    pub fn input(&self) -> &Array2<T> {
        &self.b_r
    }

    pub fn output(&self) -> &Array2<T> {
        &self.c_r
    }

    pub fn enrich_mode(&self) -> EnrichMode {
        self.enrich
    }

    pub fn set_enrich_mode(&mut self, mode: EnrichMode) {
        self.enrich = mode;
    }

    pub fn samples(&self) -> &[SampleRecord<T>] {
        &self.samples
    }

    pub fn set_samples(&mut self, samples: Vec<SampleRecord<T>>) {
        self.samples = samples;
    }

    pub fn model_hash(&self) -> Option<&str> {
        self.model_hash.as_deref()
    }

    pub fn set_model_hash(&mut self, hash: String) {
        self.model_hash = Some(hash);
    }

    pub fn param_blocks(&self) -> &[usize] {
        &self.param_blocks
    }

    /// Online assembly of `L_r(p) = (P V)^T L (P V)`.
    pub fn assemble_lr(&self, model: &SecondOrderModel<T>, p: &[T]) -> Result<Array2<T>> {
        let scale = model.param_space().expand(p)?;
        let v = self.basis.matrix();
        let mut pv = v.clone();
        for (i, mut row) in pv.rows_mut().into_iter().enumerate() {
            let s = scale[i];
            row.mapv_inplace(|x| x * s);
        }
        let mut lr = pv.t().dot(&model.base_laplacian().dot(&pv));
        linalg::symmetrize(&mut lr);
        Ok(lr)
    }

    /// The reduced system frozen at a parameter.
    pub fn realize(&self, model: &SecondOrderModel<T>, p: &[T]) -> Result<SecondOrderSystem<T>> {
        Ok(SecondOrderSystem {
            mass: CoeffMatrix::Dense(self.m_r.clone()),
            damping: CoeffMatrix::Dense(self.d_r.clone()),
            stiffness: self.assemble_lr(model, p)?,
            b: self.b_r.clone(),
            c: self.c_r.clone(),
        })
    }

    /// Reduced-side null vector `V^T v(p)`.
    pub fn reduced_null_vector(&self, model: &SecondOrderModel<T>, p: &[T]) -> Result<Array1<T>> {
        let upsilon = model.null_vector(p)?;
        Ok(self.basis.matrix().t().dot(&upsilon))
    }

    /// Zero-pole residue of the reduced model at a parameter, computed from
    /// the reduced matrices and `V^T v`.
    pub fn zero_residue(
        &self,
        model: &SecondOrderModel<T>,
        p: &[T],
    ) -> Result<crate::sysops::ResidueData<T>> {
        let vr = self.reduced_null_vector(model, p)?;
        crate::sysops::zero_residue(
            &self.c_r.view(),
            &self.b_r.view(),
            &CoeffMatrix::Dense(self.d_r.clone()),
            &vr.view(),
        )
    }

    /// If the null vector of `L(p)` is outside the basis span (principal
    /// angle above `angle_tol`), append its orthogonal complement and update
    /// the projected matrices incrementally; otherwise return a clone. The
    /// second return value reports whether the basis grew.
    pub fn augment_for_parameter(
        &self,
        model: &SecondOrderModel<T>,
        p: &[T],
        angle_tol: T,
    ) -> Result<(Self, bool)> {
        let upsilon = model.null_vector(p)?;
        let angle = self.basis.angle_to(&upsilon.view());
        if angle <= angle_tol {
            return Ok((self.clone(), false));
        }
        let v = self.basis.matrix();
        // orthogonalize with one re-orthogonalization pass
        let mut w = upsilon.clone();
        for _ in 0..2 {
            let coeffs = v.t().dot(&w);
            w.scaled_add(-T::one(), &v.dot(&coeffs));
        }
        use ndarray_linalg::Norm;
        let nw = w.norm_l2();
        if !(nw > T::zero()) {
            return Ok((self.clone(), false));
        }
        w.mapv_inplace(|x| x / nw);

        let r = self.order();
        // only products against the single new column are needed
        let mw = Array1::from_iter(model.inertia().iter().zip(&w).map(|(&mi, &wi)| mi * wi));
        let dw = Array1::from_iter(model.damping().iter().zip(&w).map(|(&di, &wi)| di * wi));
        let m_r = bordered(&self.m_r, &v.t().dot(&mw), w.dot(&mw));
        let d_r = bordered(&self.d_r, &v.t().dot(&dw), w.dot(&dw));

        let b_full = model.input_matrix();
        let mut b_r = Array2::zeros((r + 1, self.b_r.ncols()));
        b_r.slice_mut(s![..r, ..]).assign(&self.b_r);
        b_r.row_mut(r).assign(&w.dot(&b_full));
        let c_full = model.output_matrix();
        let mut c_r = Array2::zeros((self.c_r.nrows(), r + 1));
        c_r.slice_mut(s![.., ..r]).assign(&self.c_r);
        c_r.column_mut(r).assign(&c_full.dot(&w));

        let basis = self.basis.appended(
            &w.view(),
            ColumnSource::ParameterNullVector { p: p.to_vec() },
        );
        Ok((
            Self {
                basis,
                m_r,
                d_r,
                b_r,
                c_r,
                param_blocks: self.param_blocks.clone(),
                enrich: self.enrich,
                samples: self.samples.clone(),
                model_hash: self.model_hash.clone(),
            },
            true,
        ))
    }

    /// Negative-control variant: drop every enrichment column (sample null
    /// vectors, block indicators, per-parameter augmentations) and re-project.
    pub fn without_enrichment(&self, model: &SecondOrderModel<T>) -> Result<Self> {
        let stripped = self.basis.without_enrichment()?;
        let mut rm = reduce(model, stripped)?;
        rm.enrich = self.enrich;
        rm.samples = self.samples.clone();
        rm.model_hash = self.model_hash.clone();
        Ok(rm)
    }
}

/// Symmetric bordered extension `[[A, col], [col^T, corner]]`.
fn bordered<T: Real>(a: &Array2<T>, col: &Array1<T>, corner: T) -> Array2<T> {
    let r = a.nrows();
    let mut out = Array2::zeros((r + 1, r + 1));
    out.slice_mut(s![..r, ..r]).assign(a);
    for i in 0..r {
        out[[i, r]] = col[i];
        out[[r, i]] = col[i];
    }
    out[[r, r]] = corner;
    out
}

/// On-disk ROM schema (matrices as row-major nested arrays).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "")]
pub struct RomFile<T: Real> {
    pub r: usize,
    pub m_r: Vec<Vec<T>>,
    pub d_r: Vec<Vec<T>>,
    pub b_r: Vec<Vec<T>>,
    pub c_r: Vec<Vec<T>>,
    pub v: Vec<Vec<T>>,
    pub provenance: Vec<ColumnSource<T>>,
    pub param_blocks: Vec<usize>,
    pub enrich: EnrichMode,
    pub samples: Vec<SampleRecord<T>>,
    pub model_hash: Option<String>,
}

fn to_rows<T: Real>(a: &Array2<T>) -> Vec<Vec<T>> {
    a.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn from_rows<T: Real>(rows: &[Vec<T>], what: &str) -> Result<Array2<T>> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|row| row.len() != c) {
        return Err(Error::Schema {
            path: what.to_string(),
            msg: "ragged matrix rows".into(),
        });
    }
    Ok(Array2::from_shape_fn((r, c), |(i, j)| rows[i][j]))
}

impl<T: Real> RomFile<T> {
    pub fn from_model(rm: &ReducedModel<T>) -> Self {
        Self {
            r: rm.order(),
            m_r: to_rows(&rm.m_r),
            d_r: to_rows(&rm.d_r),
            b_r: to_rows(&rm.b_r),
            c_r: to_rows(&rm.c_r),
            v: to_rows(rm.basis.matrix()),
            provenance: rm.basis.provenance().to_vec(),
            param_blocks: rm.param_blocks.clone(),
            enrich: rm.enrich,
            samples: rm.samples.clone(),
            model_hash: rm.model_hash.clone(),
        }
    }

    pub fn into_model(self) -> Result<ReducedModel<T>> {
        let v = from_rows(&self.v, "v")?;
        if v.ncols() != self.r {
            return Err(Error::Schema {
                path: "v".into(),
                msg: format!("{} columns but r = {}", v.ncols(), self.r),
            });
        }
        let basis = ReductionBasis::new(v, self.provenance)?;
        let m_r = from_rows(&self.m_r, "m_r")?;
        let d_r = from_rows(&self.d_r, "d_r")?;
        let b_r = from_rows(&self.b_r, "b_r")?;
        let c_r = from_rows(&self.c_r, "c_r")?;
        for (name, mat, dim) in [
            ("m_r", &m_r, (self.r, self.r)),
            ("d_r", &d_r, (self.r, self.r)),
        ] {
            if mat.dim() != dim {
                return Err(Error::Schema {
                    path: name.into(),
                    msg: format!("expected {dim:?}, got {:?}", mat.dim()),
                });
            }
        }
        if b_r.nrows() != self.r || c_r.ncols() != self.r {
            return Err(Error::Schema {
                path: "b_r/c_r".into(),
                msg: "row/column counts do not match r".into(),
            });
        }
        Ok(ReducedModel {
            basis,
            m_r,
            d_r,
            b_r,
            c_r,
            param_blocks: self.param_blocks,
            enrich: self.enrich,
            samples: self.samples,
            model_hash: self.model_hash,
        })
    }
}

pub fn rom_to_json<T: Real>(rm: &ReducedModel<T>) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&RomFile::from_model(rm))?;
    s.push('\n');
    Ok(s)
}

pub fn rom_from_json<T: Real>(text: &str) -> Result<ReducedModel<T>> {
    let file: RomFile<T> = serde_json::from_str(text)?;
    file.into_model()
}

pub fn save_rom<T: Real>(path: &Path, rm: &ReducedModel<T>) -> Result<String> {
    let text = rom_to_json(rm)?;
    std::fs::write(path, &text)?;
    Ok(sha256_hex(text.as_bytes()))
}

pub fn load_rom<T: Real>(path: &Path) -> Result<ReducedModel<T>> {
    let bytes = std::fs::read(path)?;
    rom_from_json(&String::from_utf8_lossy(&bytes))
}

/// Guard used by CLI eval/check: verify the ROM was built from this model.
pub fn check_model_hash<T: Real>(rm: &ReducedModel<T>, model_hash: &str) -> Result<()> {
    match rm.model_hash() {
        Some(h) if h == model_hash => Ok(()),
        Some(h) => Err(Error::Precondition(format!(
            "ROM references model {h} but the supplied model hashes to {model_hash}"
        ))),
        None => {
            log::warn!("ROM carries no model hash; skipping consistency check");
            Ok(())
        }
    }
}

/// Default principal-angle tolerance deciding whether a null vector already
/// lies in the basis span.
pub fn default_angle_tol<T: Real>() -> T {
    lit::<T>(1e-8)
}
