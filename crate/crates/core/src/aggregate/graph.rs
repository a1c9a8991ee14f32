use super::{map_replicates, AggregateError, ReplicateSource};
use crate::numerics::Matrix;
use crate::selectors::{select_lambda_ebic, EbicOptions, Family};
use serde::{Deserialize, Serialize};

/// How the two neighbourhood regressions of a node pair are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphRule {
    /// Edge if either regression selects the other node.
    #[default]
    Or,
    /// Edge only if both do.
    And,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphOptions {
    pub replicates: usize,
    pub pi_thres: f64,
    pub rule: GraphRule,
    pub ebic: EbicOptions,
}

impl Default for GraphOptions {
    fn default() -> Self {
        Self {
            replicates: 20,
            pi_thres: 0.7,
            rule: GraphRule::Or,
            ebic: EbicOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphResult {
    /// Symmetric with zero diagonal.
    pub edge_pi_hat: Matrix,
    pub threshold: f64,
    pub rule: GraphRule,
    /// `(i, j)` with `i < j`.
    pub edge_set: Vec<(usize, usize)>,
    #[serde(rename = "B")]
    pub replicate_count: usize,
}

pub fn edge_set(freq: &Matrix, pi_thres: f64) -> Vec<(usize, usize)> {
    let p = freq.rows();
    let mut out = Vec::new();
    for i in 0..p {
        for j in i + 1..p {
            if freq[(i, j)] >= pi_thres {
                out.push((i, j));
            }
        }
    }
    out
}

/// Neighbourhood selection on every replicate: each column is regressed on all
/// others with the EBIC-tuned lasso and edge indicators are averaged over replicates.
pub fn run_graph_selection(
    g: &dyn ReplicateSource,
    opts: &GraphOptions,
    seed: u64,
) -> Result<GraphResult, AggregateError> {
    if opts.replicates == 0 {
        return Err(AggregateError::InvalidOptions("B must be >= 1".into()));
    }
    if !(opts.pi_thres > 0.0 && opts.pi_thres <= 1.0) {
        return Err(AggregateError::InvalidOptions(format!("pi_thres {} outside (0, 1]", opts.pi_thres)));
    }
    let adjacency = map_replicates(opts.replicates, |b| {
        let d = g.generate_replicate(b, seed)?;
        if let Some(c) = d.schema().columns.iter().find(|c| !c.is_continuous()) {
            return Err(AggregateError::InvalidOptions(format!(
                "graph selection needs continuous columns; '{}' is categorical",
                c.name
            )));
        }
        let v = d.values();
        let p = v.cols();
        let mut nbr = vec![vec![false; p]; p];
        for (j, row) in nbr.iter_mut().enumerate() {
            let others: Vec<usize> = (0..p).filter(|&k| k != j).collect();
            let fit = select_lambda_ebic(&v.select_columns(&others), &v.column(j), Family::Linear, &opts.ebic)?;
            for &a in &fit.active_set {
                row[others[a]] = true;
            }
        }
        Ok(nbr)
    })?;
    let p = adjacency[0].len();
    let mut counts = vec![0usize; p * p];
    for nbr in &adjacency {
        for i in 0..p {
            for j in i + 1..p {
                let on = match opts.rule {
                    GraphRule::Or => nbr[i][j] || nbr[j][i],
                    GraphRule::And => nbr[i][j] && nbr[j][i],
                };
                if on {
                    counts[i * p + j] += 1;
                    counts[j * p + i] += 1;
                }
            }
        }
    }
    let b = opts.replicates as f64;
    let edge_pi_hat = Matrix::from_fn(p, p, |i, j| counts[i * p + j] as f64 / b);
    Ok(GraphResult {
        edge_set: edge_set(&edge_pi_hat, opts.pi_thres),
        edge_pi_hat,
        threshold: opts.pi_thres,
        rule: opts.rule,
        replicate_count: opts.replicates,
    })
}
