use ndarray::prelude::*;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::netmodel::types::{IoMap, NetworkModel};
use crate::scalar::{lit, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NetworkKind {
    Path,
    Ring,
    RandomConnected,
}

impl std::str::FromStr for NetworkKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "path" => Ok(NetworkKind::Path),
            "ring" => Ok(NetworkKind::Ring),
            "random_connected" | "random" => Ok(NetworkKind::RandomConnected),
            other => Err(format!(
                "unknown network kind '{other}' (expected path, ring or random_connected)"
            )),
        }
    }
}

/// Positive sampling ranges for the physical coefficients.
#[derive(Debug, Clone, Copy)]
pub struct CoefficientRanges {
    pub inertia: (f64, f64),
    pub damping: (f64, f64),
    pub susceptance: (f64, f64),
}

impl Default for CoefficientRanges {
    fn default() -> Self {
        Self {
            inertia: (0.5, 2.0),
            damping: (0.5, 2.0),
            susceptance: (0.5, 2.0),
        }
    }
}

impl CoefficientRanges {
    fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in [
            ("inertia", self.inertia),
            ("damping", self.damping),
            ("susceptance", self.susceptance),
        ] {
            if !(lo > 0.0) || !(hi >= lo) {
                return Err(Error::Precondition(format!(
                    "{name} range [{lo}, {hi}] must satisfy 0 < lo <= hi"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct GeneratorConfig {
    pub ranges: CoefficientRanges,
    /// Extra random edges added on top of the spanning tree, as a fraction
    /// of the node count (random_connected only).
    pub extra_edge_density: f64,
    /// Input/output selector indices; `None` gives the n x n identity.
    pub input_nodes: Option<Vec<usize>>,
    pub output_nodes: Option<Vec<usize>>,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            ranges: CoefficientRanges::default(),
            extra_edge_density: 0.5,
            input_nodes: Some(vec![0]),
            output_nodes: Some(vec![0]),
        }
    }
}

/// Deterministically generate a connected network. The draw order is fixed
/// (topology, then susceptances, then inertia, then damping), so a given
/// `(kind, n, seed, config)` always produces the same model.
pub fn generate_network<T: Real>(
    kind: NetworkKind,
    n: usize,
    seed: u64,
    config: &GeneratorConfig,
) -> Result<NetworkModel<T>> {
    if n < 2 {
        return Err(Error::Precondition(format!("need n >= 2, got {n}")));
    }
    config.ranges.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let pairs: Vec<(usize, usize)> = match kind {
        NetworkKind::Path => (0..n - 1).map(|i| (i, i + 1)).collect(),
        NetworkKind::Ring => {
            if n < 3 {
                return Err(Error::Precondition("a ring needs n >= 3".into()));
            }
            let mut v: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
            v.push((0, n - 1));
            v
        }
        NetworkKind::RandomConnected => {
            let mut v = random_spanning_tree(n, &mut rng);
            let extra = (config.extra_edge_density * n as f64).floor() as usize;
            let mut have: std::collections::HashSet<(usize, usize)> = v.iter().copied().collect();
            let max_extra = n * (n - 1) / 2 - v.len();
            let mut added = 0;
            while added < extra.min(max_extra) {
                let i = rng.random_range(0..n);
                let j = rng.random_range(0..n);
                if i == j {
                    continue;
                }
                let key = (i.min(j), i.max(j));
                if have.insert(key) {
                    v.push(key);
                    added += 1;
                }
            }
            v
        }
    };

    let (blo, bhi) = config.ranges.susceptance;
    let edges: Vec<(usize, usize, T)> = pairs
        .into_iter()
        .map(|(i, j)| (i, j, lit::<T>(sample(&mut rng, blo, bhi))))
        .collect();
    let (mlo, mhi) = config.ranges.inertia;
    let inertia = Array1::from_iter((0..n).map(|_| lit::<T>(sample(&mut rng, mlo, mhi))));
    let (dlo, dhi) = config.ranges.damping;
    let damping = Array1::from_iter((0..n).map(|_| lit::<T>(sample(&mut rng, dlo, dhi))));

    let input = match &config.input_nodes {
        Some(sel) => IoMap::selector(sel.clone()),
        None => IoMap::identity(n),
    };
    let output = match &config.output_nodes {
        Some(sel) => IoMap::selector(sel.clone()),
        None => IoMap::identity(n),
    };

    NetworkModel::new(n, edges, inertia, damping, input, output)
}

fn sample(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

/// Uniform random labeled tree via a Pruefer sequence.
fn random_spanning_tree(n: usize, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    if n == 2 {
        return vec![(0, 1)];
    }
    let seq: Vec<usize> = (0..n - 2).map(|_| rng.random_range(0..n)).collect();
    let mut degree = vec![1_usize; n];
    for &a in &seq {
        degree[a] += 1;
    }
    let mut edges = Vec::with_capacity(n - 1);
    // min-heap of current leaves
    let mut heap: std::collections::BinaryHeap<std::cmp::Reverse<usize>> = (0..n)
        .filter(|&v| degree[v] == 1)
        .map(std::cmp::Reverse)
        .collect();
    for &a in &seq {
        let std::cmp::Reverse(leaf) = heap.pop().expect("pruefer invariant");
        edges.push((leaf.min(a), leaf.max(a)));
        degree[leaf] -= 1;
        degree[a] -= 1;
        if degree[a] == 1 {
            heap.push(std::cmp::Reverse(a));
        }
    }
    let std::cmp::Reverse(u) = heap.pop().expect("two leaves left");
    let std::cmp::Reverse(v) = heap.pop().expect("two leaves left");
    edges.push((u.min(v), u.max(v)));
    edges
}
