use ndarray::prelude::*;
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// Input/output map of a network model: either an explicit dense matrix or a
/// node-selector shorthand (`B` columns / `C` rows are canonical unit vectors).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, bound = "")]
pub enum IoMap<T: Real> {
    Selector { selector: Vec<usize> },
    Dense(Vec<Vec<T>>),
}

impl<T: Real> IoMap<T> {
    pub fn identity(n: usize) -> Self {
        IoMap::Selector {
            selector: (0..n).collect(),
        }
    }

    pub fn selector(indices: Vec<usize>) -> Self {
        IoMap::Selector { selector: indices }
    }

    /// Number of channels (columns of `B`, rows of `C`).
    pub fn channels(&self, n: usize) -> usize {
        match self {
            IoMap::Selector { selector } => selector.len(),
            IoMap::Dense(rows) => {
                // dense input maps are stored as n x m row-major; outputs as q x n
                if rows.len() == n {
                    rows.first().map_or(0, Vec::len)
                } else {
                    rows.len()
                }
            }
        }
    }

    /// Materialize as the n x m input matrix `B`.
    pub fn input_matrix(&self, n: usize) -> Array2<T> {
        match self {
            IoMap::Selector { selector } => {
                let mut b = Array2::zeros((n, selector.len()));
                for (k, &i) in selector.iter().enumerate() {
                    b[[i, k]] = T::one();
                }
                b
            }
            IoMap::Dense(rows) => dense_from_rows(rows),
        }
    }

    /// Materialize as the q x n output matrix `C`.
    pub fn output_matrix(&self, n: usize) -> Array2<T> {
        match self {
            IoMap::Selector { selector } => {
                let mut c = Array2::zeros((selector.len(), n));
                for (k, &i) in selector.iter().enumerate() {
                    c[[k, i]] = T::one();
                }
                c
            }
            IoMap::Dense(rows) => dense_from_rows(rows),
        }
    }

    fn validate(&self, n: usize, field: &str, is_input: bool) -> Result<()> {
        match self {
            IoMap::Selector { selector } => {
                for &i in selector {
                    if i >= n {
                        return Err(Error::Schema {
                            path: field.to_string(),
                            msg: format!("selector index {i} out of range for n = {n}"),
                        });
                    }
                }
            }
            IoMap::Dense(rows) => {
                let width = rows.first().map_or(0, Vec::len);
                if rows.iter().any(|r| r.len() != width) {
                    return Err(Error::Schema {
                        path: field.to_string(),
                        msg: "ragged matrix rows".to_string(),
                    });
                }
                let ok = if is_input {
                    rows.len() == n
                } else {
                    width == n
                };
                if !ok {
                    return Err(Error::Schema {
                        path: field.to_string(),
                        msg: format!(
                            "expected {} {n} for a {} map, got {} x {}",
                            if is_input { "row count" } else { "column count" },
                            if is_input { "input" } else { "output" },
                            rows.len(),
                            width
                        ),
                    });
                }
            }
        }
        Ok(())
    }
}

fn dense_from_rows<T: Real>(rows: &[Vec<T>]) -> Array2<T> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    Array2::from_shape_fn((r, c), |(i, j)| rows[i][j])
}

/// A power network: connected weighted graph plus per-node swing coefficients
/// and input/output maps.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkModel<T: Real> {
    n: usize,
    edges: Vec<(usize, usize, T)>,
    inertia: Array1<T>,
    damping: Array1<T>,
    input: IoMap<T>,
    output: IoMap<T>,
}

impl<T: Real> NetworkModel<T> {
    /// Build and validate. Edges are undirected `(i, j, b_ij)` with `b_ij > 0`;
    /// duplicates and self-loops are rejected, and the graph must be connected.
    pub fn new(
        n: usize,
        edges: Vec<(usize, usize, T)>,
        inertia: Array1<T>,
        damping: Array1<T>,
        input: IoMap<T>,
        output: IoMap<T>,
    ) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidModel(format!("need at least 2 nodes, got {n}")));
        }
        if inertia.len() != n || damping.len() != n {
            return Err(Error::InvalidModel(format!(
                "inertia/damping length ({}/{}) does not match n = {n}",
                inertia.len(),
                damping.len()
            )));
        }
        for (i, &m) in inertia.iter().enumerate() {
            if !(m > T::zero()) {
                return Err(Error::InvalidModel(format!("inertia[{i}] = {m} must be > 0")));
            }
        }
        for (i, &d) in damping.iter().enumerate() {
            if !(d > T::zero()) {
                return Err(Error::InvalidModel(format!("damping[{i}] = {d} must be > 0")));
            }
        }
        let mut normalized = Vec::with_capacity(edges.len());
        let mut seen = std::collections::HashSet::new();
        for (idx, &(i, j, b)) in edges.iter().enumerate() {
            if i == j {
                return Err(Error::InvalidModel(format!("edge {idx} is a self-loop at node {i}")));
            }
            if i >= n || j >= n {
                return Err(Error::InvalidModel(format!(
                    "edge {idx} = ({i}, {j}) references a node >= n = {n}"
                )));
            }
            if !(b > T::zero()) {
                return Err(Error::InvalidModel(format!(
                    "edge ({i}, {j}) has nonpositive susceptance {b}"
                )));
            }
            let key = (i.min(j), i.max(j));
            if !seen.insert(key) {
                return Err(Error::InvalidModel(format!(
                    "duplicate undirected edge ({}, {})",
                    key.0, key.1
                )));
            }
            normalized.push((key.0, key.1, b));
        }
        input.validate(n, "input_map", true)?;
        output.validate(n, "output_map", false)?;
        let model = Self {
            n,
            edges: normalized,
            inertia,
            damping,
            input,
            output,
        };
        model.check_connected()?;
        Ok(model)
    }

    /// Union-find connectivity check; on failure the components are named.
    fn check_connected(&self) -> Result<()> {
        let comps = self.components();
        if comps.len() > 1 {
            let mut desc: Vec<String> = comps
                .iter()
                .map(|c| {
                    let head: Vec<String> = c.iter().take(5).map(usize::to_string).collect();
                    let ell = if c.len() > 5 { ", ..." } else { "" };
                    format!("{{{}{}}} ({} nodes)", head.join(", "), ell, c.len())
                })
                .collect();
            desc.truncate(8);
            Err(Error::Disconnected(format!(
                "{} components: {}",
                comps.len(),
                desc.join(", ")
            )))
        } else {
            Ok(())
        }
    }

    fn components(&self) -> Vec<Vec<usize>> {
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(parent: &mut Vec<usize>, x: usize) -> usize {
            let mut r = x;
            while parent[r] != r {
                r = parent[r];
            }
            let mut c = x;
            while parent[c] != r {
                let next = parent[c];
                parent[c] = r;
                c = next;
            }
            r
        }
        for &(i, j, _) in &self.edges {
            let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
            if ri != rj {
                parent[ri] = rj;
            }
        }
        let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for v in 0..self.n {
            let r = find(&mut parent, v);
            groups.entry(r).or_default().push(v);
        }
        groups.into_values().collect()
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize, T)] {
        &self.edges
    }

    pub fn inertia(&self) -> &Array1<T> {
        &self.inertia
    }

    pub fn damping(&self) -> &Array1<T> {
        &self.damping
    }

    pub fn input_map(&self) -> &IoMap<T> {
        &self.input
    }

    pub fn output_map(&self) -> &IoMap<T> {
        &self.output
    }

    pub fn num_inputs(&self) -> usize {
        self.input.channels(self.n)
    }

    pub fn num_outputs(&self) -> usize {
        self.output.channels(self.n)
    }

    pub fn input_matrix(&self) -> Array2<T> {
        self.input.input_matrix(self.n)
    }

    pub fn output_matrix(&self) -> Array2<T> {
        self.output.output_matrix(self.n)
    }
}

/// Block structure and box bounds of the parameter domain.
///
/// A parameter vector `p` of length `nu` scales the Laplacian as `P L P`
/// where `P` repeats `p_k` over the `k`-th node block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ParameterSpace<T: Real> {
    block_sizes: Vec<usize>,
    lower: Vec<T>,
    upper: Vec<T>,
}

/// Default half-width of the parameter box around the nominal value 1.
pub const DEFAULT_BOX_HALF_WIDTH: f64 = 0.15;

impl<T: Real> ParameterSpace<T> {
    pub fn new(block_sizes: Vec<usize>, lower: Vec<T>, upper: Vec<T>) -> Result<Self> {
        let nu = block_sizes.len();
        if nu == 0 {
            return Err(Error::InvalidModel("parameter space needs at least one block".into()));
        }
        if block_sizes.iter().any(|&s| s == 0) {
            return Err(Error::InvalidModel("zero-sized parameter block".into()));
        }
        if lower.len() != nu || upper.len() != nu {
            return Err(Error::InvalidModel(format!(
                "parameter box bounds must have length nu = {nu}, got {}/{}",
                lower.len(),
                upper.len()
            )));
        }
        for k in 0..nu {
            if !(lower[k] > T::zero()) || !(lower[k] <= upper[k]) {
                return Err(Error::InvalidModel(format!(
                    "parameter box for block {k} must satisfy 0 < lower <= upper, got [{}, {}]",
                    lower[k], upper[k]
                )));
            }
        }
        Ok(Self {
            block_sizes,
            lower,
            upper,
        })
    }

    /// Box `[1 - alpha, 1 + alpha]` for each of the given blocks.
    pub fn around_unity(block_sizes: Vec<usize>, alpha: f64) -> Result<Self> {
        let nu = block_sizes.len();
        Self::new(
            block_sizes,
            vec![lit::<T>(1.0 - alpha); nu],
            vec![lit::<T>(1.0 + alpha); nu],
        )
    }

    /// Full parametrization: one parameter per node.
    pub fn per_node(n: usize, alpha: f64) -> Result<Self> {
        Self::around_unity(vec![1; n], alpha)
    }

    pub fn num_blocks(&self) -> usize {
        self.block_sizes.len()
    }

    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }

    pub fn total_nodes(&self) -> usize {
        self.block_sizes.iter().sum()
    }

    pub fn lower(&self) -> &[T] {
        &self.lower
    }

    pub fn upper(&self) -> &[T] {
        &self.upper
    }

    pub fn contains(&self, p: &[T]) -> bool {
        p.len() == self.num_blocks()
            && p.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(&pk, (&lo, &hi))| pk >= lo && pk <= hi)
    }

    pub fn check_positive(&self, p: &[T]) -> Result<()> {
        if p.len() != self.num_blocks() {
            return Err(Error::Precondition(format!(
                "parameter vector length {} does not match nu = {}",
                p.len(),
                self.num_blocks()
            )));
        }
        for (k, &pk) in p.iter().enumerate() {
            if !(pk > T::zero()) {
                return Err(Error::Precondition(format!(
                    "parameter p[{k}] = {pk} must be > 0 (diagonal scaling would be singular)"
                )));
            }
        }
        Ok(())
    }

    /// Expand a block parameter vector to one scaling entry per node.
    pub fn expand(&self, p: &[T]) -> Result<Array1<T>> {
        self.check_positive(p)?;
        let mut full = Array1::zeros(self.total_nodes());
        let mut offset = 0;
        for (k, &sz) in self.block_sizes.iter().enumerate() {
            for i in offset..offset + sz {
                full[i] = p[k];
            }
            offset += sz;
        }
        Ok(full)
    }

    /// The null vector `v` of `L(p)`: `v_i = 1 / p_{block(i)}`. Not normalized.
    pub fn null_vector(&self, p: &[T]) -> Result<Array1<T>> {
        let mut v = self.expand(p)?;
        v.mapv_inplace(|x| T::one() / x);
        Ok(v)
    }

    /// Indicator vectors `e_k` (ones on block `k`), whose span contains the
    /// null vector for every admissible parameter.
    pub fn block_indicators(&self) -> Vec<Array1<T>> {
        let n = self.total_nodes();
        let mut out = Vec::with_capacity(self.num_blocks());
        let mut offset = 0;
        for &sz in &self.block_sizes {
            let mut e = Array1::zeros(n);
            for i in offset..offset + sz {
                e[i] = T::one();
            }
            out.push(e);
            offset += sz;
        }
        out
    }

    /// Corner points of the box (2^nu vectors, lexicographic order).
    pub fn corners(&self) -> Vec<Vec<T>> {
        let nu = self.num_blocks();
        let mut out = Vec::with_capacity(1 << nu);
        for mask in 0..(1_usize << nu) {
            let p = (0..nu)
                .map(|k| {
                    if mask >> k & 1 == 0 {
                        self.lower[k]
                    } else {
                        self.upper[k]
                    }
                })
                .collect();
            out.push(p);
        }
        out
    }

    pub fn nominal(&self) -> Vec<T> {
        vec![T::one(); self.num_blocks()]
    }
}

/// The parametric second-order model `M x'' + D x' + L(p) x = B u`, `y = C x`
/// with `L(p) = P L P`.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondOrderModel<T: Real> {
    network: NetworkModel<T>,
    laplacian: Array2<T>,
    param_space: ParameterSpace<T>,
}

impl<T: Real> SecondOrderModel<T> {
    pub fn from_network(network: NetworkModel<T>, param_space: ParameterSpace<T>) -> Result<Self> {
        if param_space.total_nodes() != network.node_count() {
            return Err(Error::InvalidModel(format!(
                "parameter blocks sum to {} but the network has {} nodes",
                param_space.total_nodes(),
                network.node_count()
            )));
        }
        let laplacian = build_laplacian(&network)?;
        Ok(Self {
            network,
            laplacian,
            param_space,
        })
    }

    /// Network with a full per-node parametrization and the default box.
    pub fn with_default_params(network: NetworkModel<T>) -> Result<Self> {
        let ps = ParameterSpace::per_node(network.node_count(), DEFAULT_BOX_HALF_WIDTH)?;
        Self::from_network(network, ps)
    }

    pub fn network(&self) -> &NetworkModel<T> {
        &self.network
    }

    pub fn param_space(&self) -> &ParameterSpace<T> {
        &self.param_space
    }

    pub fn node_count(&self) -> usize {
        self.network.node_count()
    }

    pub fn base_laplacian(&self) -> &Array2<T> {
        &self.laplacian
    }

    pub fn inertia(&self) -> &Array1<T> {
        self.network.inertia()
    }

    pub fn damping(&self) -> &Array1<T> {
        self.network.damping()
    }

    pub fn input_matrix(&self) -> Array2<T> {
        self.network.input_matrix()
    }

    pub fn output_matrix(&self) -> Array2<T> {
        self.network.output_matrix()
    }

    pub fn num_inputs(&self) -> usize {
        self.network.num_inputs()
    }

    pub fn num_outputs(&self) -> usize {
        self.network.num_outputs()
    }

    /// `L(p) = P L P`. Errors on nonpositive parameters; parameters outside
    /// the box are accepted with a warning.
    pub fn scaled_laplacian(&self, p: &[T]) -> Result<Array2<T>> {
        self.param_space.check_positive(p)?;
        if !self.param_space.contains(p) {
            log::warn!("parameter {p:?} is outside the declared box; proceeding");
        }
        let scale = self.param_space.expand(p)?;
        let n = self.node_count();
        let mut out = self.laplacian.clone();
        for i in 0..n {
            for j in 0..n {
                out[[i, j]] = out[[i, j]] * scale[i] * scale[j];
            }
        }
        Ok(out)
    }

    /// Null vector of `L(p)`; see [`ParameterSpace::null_vector`].
    pub fn null_vector(&self, p: &[T]) -> Result<Array1<T>> {
        self.param_space.null_vector(p)
    }

    /// Smallest nonzero Laplacian eigenvalue estimate (algebraic connectivity).
    pub fn lambda2(&self) -> Result<T> {
        use ndarray_linalg::{Eigh, UPLO};
        let (vals, _) = self.laplacian.eigh(UPLO::Lower)?;
        Ok(vals[1])
    }
}

/// Susceptance Laplacian of the network: off-diagonal `-b_ij` for edges,
/// diagonal row sums. Symmetric PSD with a simple zero eigenvalue by
/// connectivity (checked at model construction).
pub fn build_laplacian<T: Real>(net: &NetworkModel<T>) -> Result<Array2<T>> {
    let n = net.node_count();
    let mut l = Array2::zeros((n, n));
    for &(i, j, b) in net.edges() {
        l[[i, j]] = l[[i, j]] - b;
        l[[j, i]] = l[[j, i]] - b;
        l[[i, i]] = l[[i, i]] + b;
        l[[j, j]] = l[[j, j]] + b;
    }
    Ok(l)
}

/// Frobenius-relative residual of `L(p) v` for the closed-form null vector;
/// used by validation reports.
pub fn null_residual<T: Real>(lp: &Array2<T>, v: &Array1<T>) -> T {
    use ndarray_linalg::Norm;
    let num = lp.dot(v).norm_l2();
    let den = Float::max(lp.norm(), T::epsilon()) * v.norm_l2();
    num / den
}
