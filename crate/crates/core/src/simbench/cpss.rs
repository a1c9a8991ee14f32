use super::SimError;
use crate::data::Dataset;
use crate::numerics::{Matrix, StreamRng};
use crate::selectors::{lambda_grid, lambda_max, lasso_path, logistic_lambda_max, Family};
use serde::{Deserialize, Serialize};

const PATH_GRID: usize = 100;
const PATH_MIN_RATIO: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CpssOptions {
    pub b_pairs: usize,
    /// `None` means `⌈√(0.8·p)⌉`.
    pub q_keep: Option<usize>,
    pub tau: f64,
}

impl Default for CpssOptions {
    fn default() -> Self {
        Self {
            b_pairs: 50,
            q_keep: None,
            tau: 0.6,
        }
    }
}

pub fn default_q_keep(p: usize) -> usize {
    ((0.8 * p as f64).sqrt().ceil() as usize).max(1)
}

/// A random split of `0..n` into two disjoint halves covering every row.
pub fn complementary_halves(n: usize, rng: &mut StreamRng) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut idx);
    let second = idx.split_off(n / 2);
    (idx, second)
}

/// Variables ordered by when they enter the lasso path. Variables that never
/// enter are ranked after all others by absolute marginal covariance with `y`.
pub fn entry_order(x: &Matrix, y: &[f64], family: Family) -> Result<Vec<usize>, SimError> {
    let p = x.cols();
    let lmax = match family {
        Family::Linear => lambda_max(x, y),
        Family::Logistic => logistic_lambda_max(x, y),
    };
    let mut key: Vec<(usize, f64)> = vec![(usize::MAX, 0.0); p];
    if lmax > 0.0 {
        let grid = lambda_grid(lmax, PATH_GRID, PATH_MIN_RATIO);
        let fits = lasso_path(x, y, family, &grid)?;
        for (step, fit) in fits.iter().enumerate() {
            for &j in &fit.active_set {
                if key[j].0 == usize::MAX {
                    key[j] = (step, -(fit.coefficients[j] * column_sd(x, j)).abs());
                }
            }
        }
    }
    let ybar = y.iter().sum::<f64>() / y.len() as f64;
    for (j, k) in key.iter_mut().enumerate() {
        if k.0 == usize::MAX {
            let sd = column_sd(x, j);
            let cov: f64 = (0..x.rows()).map(|i| x[(i, j)] * (y[i] - ybar)).sum();
            k.1 = if sd > 0.0 { -(cov / sd).abs() } else { 0.0 };
        }
    }
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| {
        key[a]
            .0
            .cmp(&key[b].0)
            .then(key[a].1.total_cmp(&key[b].1))
            .then(a.cmp(&b))
    });
    Ok(order)
}

fn column_sd(x: &Matrix, j: usize) -> f64 {
    let n = x.rows() as f64;
    let m = (0..x.rows()).map(|i| x[(i, j)]).sum::<f64>() / n;
    ((0..x.rows()).map(|i| (x[(i, j)] - m).powi(2)).sum::<f64>() / n).sqrt()
}

/// Per-variable frequency of landing among the first `q_keep` entrants across `2·b_pairs` half-samples.
pub fn cpss_frequencies(
    d: &Dataset,
    opts: &CpssOptions,
    family: Family,
    rng: &mut StreamRng,
) -> Result<Vec<f64>, SimError> {
    let n = d.n();
    let p = d.p();
    if n < 4 {
        return Err(SimError::InvalidCpss(format!("need n >= 4, got {n}")));
    }
    if opts.b_pairs == 0 {
        return Err(SimError::InvalidCpss("b_pairs must be >= 1".into()));
    }
    if !(opts.tau > 0.5 && opts.tau <= 1.0) {
        return Err(SimError::InvalidCpss(format!("tau {} outside (0.5, 1]", opts.tau)));
    }
    let q = opts.q_keep.unwrap_or_else(|| default_q_keep(p));
    if q == 0 {
        return Err(SimError::InvalidCpss("q_keep must be >= 1".into()));
    }
    let x = d.features();
    let y = d.response();
    let mut counts = vec![0usize; p];
    for _ in 0..opts.b_pairs {
        let (a, b) = complementary_halves(n, rng);
        for half in [a, b] {
            let xh = x.select_rows(&half);
            let yh: Vec<f64> = half.iter().map(|&i| y[i]).collect();
            for &j in entry_order(&xh, &yh, family)?.iter().take(q) {
                counts[j] += 1;
            }
        }
    }
    let total = (2 * opts.b_pairs) as f64;
    Ok(counts.into_iter().map(|c| c as f64 / total).collect())
}

pub fn cpss_baseline(
    d: &Dataset,
    opts: &CpssOptions,
    family: Family,
    rng: &mut StreamRng,
) -> Result<Vec<usize>, SimError> {
    let freq = cpss_frequencies(d, opts, family, rng)?;
    Ok((0..freq.len()).filter(|&j| freq[j] >= opts.tau).collect())
}
