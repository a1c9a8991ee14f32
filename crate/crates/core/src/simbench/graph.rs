use super::SimError;
use crate::data::{Column, Dataset, Schema};
use crate::numerics::{sym_eigen, Matrix, StreamRng};
use serde::{Deserialize, Serialize};

const MIN_PRECISION_EIGENVALUE: f64 = 0.05;

/// Gaussian graphical model: `x ~ N(0, precision⁻¹)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphTruth {
    pub adjacency: Vec<Vec<bool>>,
    pub precision: Matrix,
}

impl GraphTruth {
    /// Precision `I + coupling·A`, diagonal-loaded until its smallest eigenvalue is at least 0.05.
    pub fn from_adjacency(adjacency: Vec<Vec<bool>>, coupling: f64) -> Result<Self, SimError> {
        let p = adjacency.len();
        if p == 0 || adjacency.iter().any(|r| r.len() != p) {
            return Err(SimError::InvalidGraph("adjacency must be square and nonempty".into()));
        }
        for i in 0..p {
            if adjacency[i][i] {
                return Err(SimError::InvalidGraph(format!("self-loop at node {i}")));
            }
            for j in 0..i {
                if adjacency[i][j] != adjacency[j][i] {
                    return Err(SimError::InvalidGraph(format!("adjacency asymmetric at ({i}, {j})")));
                }
            }
        }
        if !coupling.is_finite() || coupling == 0.0 {
            return Err(SimError::InvalidGraph(format!("coupling {coupling} must be finite and nonzero")));
        }
        let mut precision = Matrix::from_fn(p, p, |i, j| {
            if i == j {
                1.0
            } else if adjacency[i][j] {
                coupling
            } else {
                0.0
            }
        });
        loop {
            let lmin = *sym_eigen(&precision)?.values.last().expect("p > 0");
            if lmin >= MIN_PRECISION_EIGENVALUE {
                break;
            }
            // Jacobi eigenvalues are accurate to roundoff, so a tiny margin settles it in one or two passes.
            let load = MIN_PRECISION_EIGENVALUE - lmin + 1e-9;
            for i in 0..p {
                precision[(i, i)] += load;
            }
        }
        Ok(Self { adjacency, precision })
    }

    pub fn p(&self) -> usize {
        self.adjacency.len()
    }

    /// Edges `(i, j)` with `i < j`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let p = self.p();
        let mut out = Vec::new();
        for i in 0..p {
            for j in i + 1..p {
                if self.adjacency[i][j] {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Column names `v1..vp`; the last one carries the response flag only because a schema needs one.
    pub fn schema(&self) -> Schema {
        let p = self.p();
        let columns = (1..=p).map(|j| Column::continuous(format!("v{j}"))).collect();
        Schema::new(columns, p - 1).expect("valid generated schema")
    }

    /// `n` rows from `N(0, Θ⁻¹)` using `Θ^{-1/2}` as the mixing matrix.
    pub fn sample(&self, n: usize, rng: &mut StreamRng) -> Result<Dataset, SimError> {
        let p = self.p();
        let root = sym_eigen(&self.precision)?.reconstruct_with(|l| 1.0 / l.sqrt());
        let z = Matrix::from_fn(n, p, |_, _| rng.normal());
        Ok(Dataset::new(self.schema(), z.matmul(&root))?)
    }
}

/// Watts–Strogatz ring with `k_neighbors` nearest neighbours and random rewiring.
pub fn make_small_world(
    p: usize,
    k_neighbors: usize,
    rewire_prob: f64,
    coupling: f64,
    rng: &mut StreamRng,
) -> Result<GraphTruth, SimError> {
    if k_neighbors < 2 || k_neighbors % 2 != 0 {
        return Err(SimError::InvalidGraph(format!("k_neighbors {k_neighbors} must be even and >= 2")));
    }
    if k_neighbors >= p {
        return Err(SimError::InvalidGraph(format!("k_neighbors {k_neighbors} must be < p = {p}")));
    }
    if !(0.0..=1.0).contains(&rewire_prob) {
        return Err(SimError::InvalidGraph(format!("rewire_prob {rewire_prob} outside [0, 1]")));
    }
    let mut adj = vec![vec![false; p]; p];
    for i in 0..p {
        for d in 1..=k_neighbors / 2 {
            let j = (i + d) % p;
            adj[i][j] = true;
            adj[j][i] = true;
        }
    }
    for d in 1..=k_neighbors / 2 {
        for i in 0..p {
            let j = (i + d) % p;
            if !adj[i][j] || !rng.bernoulli(rewire_prob) {
                continue;
            }
            let free: Vec<usize> = (0..p).filter(|&t| t != i && !adj[i][t]).collect();
            if free.is_empty() {
                continue;
            }
            let t = free[rng.index(free.len())];
            adj[i][j] = false;
            adj[j][i] = false;
            adj[i][t] = true;
            adj[t][i] = true;
        }
    }
    GraphTruth::from_adjacency(adj, coupling)
}

/// Path graph `0 — 1 — … — (p−1)`.
pub fn make_chain(p: usize, coupling: f64) -> Result<GraphTruth, SimError> {
    let adj = (0..p)
        .map(|i| (0..p).map(|j| i.abs_diff(j) == 1).collect())
        .collect();
    GraphTruth::from_adjacency(adj, coupling)
}

pub fn make_empty_graph(p: usize) -> Result<GraphTruth, SimError> {
    let adj = vec![vec![false; p]; p];
    Ok(GraphTruth {
        adjacency: adj,
        precision: Matrix::identity(p),
    })
}
