use ndarray::prelude::*;
use ndarray_linalg::Scalar;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::mor::local::{ColPart, LocalTag};
use crate::netmodel::ParameterSpace;
use crate::scalar::{lit, Real};

/// Where a surviving basis column came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ColumnSource<T> {
    /// Tangential solve at a shift (complex shifts stored as re/im, with the
    /// realified part recorded).
    Shift {
        sample: usize,
        sigma: (T, T),
        part: String,
    },
    /// Null vector of `L(p)` at a parameter sample.
    SampleNullVector { sample: usize },
    /// Block indicator enrichment vector `e_k`.
    BlockIndicator { block: usize },
    /// Null vector appended for an unsampled parameter.
    ParameterNullVector { p: Vec<T> },
    Extra { label: String },
}

fn part_name(part: ColPart) -> String {
    match part {
        ColPart::Full => "full".into(),
        ColPart::RealPart => "re".into(),
        ColPart::ImagPart => "im".into(),
    }
}

/// Orthonormal global reduction basis with per-column provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct ReductionBasis<T: Real> {
    v: Array2<T>,
    provenance: Vec<ColumnSource<T>>,
}

impl<T: Real> ReductionBasis<T> {
    pub fn new(v: Array2<T>, provenance: Vec<ColumnSource<T>>) -> Result<Self> {
        if v.ncols() != provenance.len() {
            return Err(Error::Precondition(format!(
                "{} provenance records for {} columns",
                provenance.len(),
                v.ncols()
            )));
        }
        if v.ncols() == 0 {
            return Err(Error::Precondition("empty reduction basis".into()));
        }
        let basis = Self { v, provenance };
        let defect = basis.orthonormality_defect();
        let gate = lit::<T>(1e-12) * T::real(basis.rank() as f64);
        if defect > gate {
            return Err(Error::Precondition(format!(
                "basis is not orthonormal: ||V^T V - I|| = {defect:.3e} > {gate:.3e}"
            )));
        }
        Ok(basis)
    }

    /// Identity basis (exact reduction, r = n).
    pub fn identity(n: usize) -> Self {
        Self {
            v: Array2::eye(n),
            provenance: (0..n)
                .map(|i| ColumnSource::Extra {
                    label: format!("identity e_{i}"),
                })
                .collect(),
        }
    }

    pub fn matrix(&self) -> &Array2<T> {
        &self.v
    }

    pub fn rank(&self) -> usize {
        self.v.ncols()
    }

    pub fn dim(&self) -> usize {
        self.v.nrows()
    }

    pub fn provenance(&self) -> &[ColumnSource<T>] {
        &self.provenance
    }

    pub fn orthonormality_defect(&self) -> T {
        use ndarray_linalg::Norm;
        let r = self.rank();
        let gram = self.v.t().dot(&self.v) - Array2::<T>::eye(r);
        gram.norm_l2()
    }

    /// Sine of the principal angle between a vector and the basis span.
    pub fn angle_to(&self, vec: &ArrayView1<'_, T>) -> T {
        linalg::orthogonal_residual(&self.v.view(), vec)
    }

    /// Append one (already orthogonalized and normalized) column.
    pub(crate) fn appended(&self, col: &ArrayView1<'_, T>, source: ColumnSource<T>) -> Self {
        let mut v = Array2::zeros((self.dim(), self.rank() + 1));
        v.slice_mut(s![.., ..self.rank()]).assign(&self.v);
        v.column_mut(self.rank()).assign(col);
        let mut provenance = self.provenance.clone();
        provenance.push(source);
        Self { v, provenance }
    }

    /// Columns that did not come from enrichment (shift columns only).
    pub fn without_enrichment(&self) -> Result<Self> {
        let keep: Vec<usize> = self
            .provenance
            .iter()
            .enumerate()
            .filter(|(_, src)| matches!(src, ColumnSource::Shift { .. }))
            .map(|(i, _)| i)
            .collect();
        if keep.is_empty() {
            return Err(Error::Precondition(
                "stripping enrichment would empty the basis".into(),
            ));
        }
        let mut v = Array2::zeros((self.dim(), keep.len()));
        let mut provenance = Vec::with_capacity(keep.len());
        for (j, &i) in keep.iter().enumerate() {
            v.column_mut(j).assign(&self.v.column(i));
            provenance.push(self.provenance[i].clone());
        }
        // columns of an orthonormal matrix stay orthonormal when dropped
        Self::new(v, provenance)
    }
}

/// Orthonormalize the horizontal concatenation of local bases and enrichment
/// vectors (enrichment appended before orthonormalization). Duplicate
/// directions are dropped by the rank test; provenance records the surviving
/// sources. The span of every enrichment vector is verified to be inside the
/// span of the result.
pub fn global_basis<T: Real>(
    locals: &[(Array2<T>, Vec<LocalTag<T>>)],
    extras: &[(Array1<T>, ColumnSource<T>)],
    rank_tol: T,
) -> Result<ReductionBasis<T>> {
    if locals.is_empty() && extras.is_empty() {
        return Err(Error::Precondition("no basis input".into()));
    }
    let n = locals
        .first()
        .map(|(b, _)| b.nrows())
        .or_else(|| extras.first().map(|(v, _)| v.len()))
        .unwrap();
    let total: usize = locals.iter().map(|(b, _)| b.ncols()).sum::<usize>() + extras.len();
    let mut cols = Array2::zeros((n, total));
    let mut sources: Vec<ColumnSource<T>> = Vec::with_capacity(total);
    let mut j = 0;
    for (sample, (b, tags)) in locals.iter().enumerate() {
        if b.nrows() != n {
            return Err(Error::Precondition(format!(
                "local basis {sample} has {} rows, expected {n}",
                b.nrows()
            )));
        }
        for (k, tag) in tags.iter().enumerate() {
            cols.column_mut(j).assign(&b.column(k));
            sources.push(match tag {
                LocalTag::Shift { sigma, part } => ColumnSource::Shift {
                    sample,
                    sigma: (sigma.re(), sigma.im()),
                    part: part_name(*part),
                },
                LocalTag::NullVector => ColumnSource::SampleNullVector { sample },
            });
            j += 1;
        }
    }
    for (vec, src) in extras {
        if vec.len() != n {
            return Err(Error::Precondition(format!(
                "enrichment vector has length {}, expected {n}",
                vec.len()
            )));
        }
        cols.column_mut(j).assign(vec);
        sources.push(src.clone());
        j += 1;
    }

    let orth = linalg::orthonormalize_cols(&cols.view(), rank_tol);
    if orth.q.ncols() == 0 {
        return Err(Error::Precondition("basis inputs are all zero".into()));
    }
    let provenance = orth.kept.iter().map(|&i| sources[i].clone()).collect();
    let basis = ReductionBasis::new(orth.q, provenance)?;

    for (vec, _) in extras {
        let angle = basis.angle_to(&vec.view());
        if angle > lit::<T>(1e-8) {
            return Err(Error::Precondition(format!(
                "enrichment vector left the basis span (principal angle {angle:.3e}); \
                 rank tolerance too aggressive"
            )));
        }
    }
    Ok(basis)
}

/// Default rank tolerance for global-basis deduplication.
pub fn default_rank_tol<T: Real>() -> T {
    lit::<T>(1e-10)
}

/// Block indicator enrichment: the vectors `e_k` whose span contains the
/// null vector of `L(p)` for every parameter in the box.
pub fn enrich_for_blocks<T: Real>(ps: &ParameterSpace<T>) -> Vec<(Array1<T>, ColumnSource<T>)> {
    ps.block_indicators()
        .into_iter()
        .enumerate()
        .map(|(k, e)| (e, ColumnSource::BlockIndicator { block: k }))
        .collect()
}
