//! Base ℓ1 selectors and the extended BIC used to tune them.

mod design;
mod lasso;
mod logistic;

pub use lasso::{kkt_violation, lambda_max, lasso_fit, lasso_objective, LassoFit};
pub use logistic::{
    logistic_deviance, logistic_kkt_violation, logistic_lambda_max, logistic_lasso_fit,
    logistic_objective, SEPARATION_BOUND,
};

use crate::data::{ColumnKind, Dataset};
use crate::numerics::{ols_fit, with_intercept, Matrix};
use design::StandardizedDesign;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SelectorError {
    #[error("design has {rows} rows but {responses} responses")]
    DimensionMismatch { rows: usize, responses: usize },
    #[error("need at least 2 rows, got {0}")]
    TooFewRows(usize),
    #[error("invalid lambda {0}")]
    InvalidLambda(f64),
    #[error("non-finite input")]
    NonFinite,
    #[error("logistic response must be 0/1")]
    NonBinaryResponse,
    #[error("logistic response has a single class")]
    SingleClass,
    #[error("lambda grid needs at least 2 values, got {0}")]
    GridTooSmall(usize),
    #[error("response column kind {0:?} has no selector family")]
    UnsupportedResponse(ColumnKind),
    #[error("index {index} out of range for {p} features")]
    IndexOutOfRange { index: usize, p: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Linear,
    Logistic,
}

impl Family {
    /// Continuous response → linear; binary categorical → logistic.
    pub fn for_dataset(d: &Dataset) -> Result<Family, SelectorError> {
        match d.schema().response().kind {
            ColumnKind::Continuous => Ok(Family::Linear),
            ColumnKind::Categorical { cardinality: 2 } => Ok(Family::Logistic),
            other => Err(SelectorError::UnsupportedResponse(other)),
        }
    }
}

/// Which fit supplies the goodness-of-fit term when scoring a point on the λ path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathScore {
    /// The penalized fit's own residuals (or deviance).
    #[default]
    Penalized,
    /// An unpenalized refit on the path point's active set.
    Refit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EbicOptions {
    pub grid_size: usize,
    pub gamma: f64,
    /// `λ_min / λ_max`.
    pub min_ratio: f64,
    pub score: PathScore,
}

impl Default for EbicOptions {
    fn default() -> Self {
        Self {
            grid_size: 50,
            gamma: 1.0,
            min_ratio: 0.01,
            score: PathScore::Penalized,
        }
    }
}

/// `fit_term + k·log(n) + 2γ·k·log(p)`, where `fit_term` is `n·log(RSS/n)` for
/// linear models or the deviance for logistic ones.
fn ebic_penalty(n: usize, k: usize, p: usize, gamma: f64) -> f64 {
    let k = k as f64;
    k * (n as f64).ln() + 2.0 * gamma * k * (p as f64).ln()
}

/// Linear-model EBIC `n·log(RSS/n) + k·log(n) + 2γ·k·log(p)`.
/// A perfect fit (`RSS ≤ 0`) returns `−∞`.
pub fn ebic(rss: f64, n: usize, k: usize, p: usize, gamma: f64) -> f64 {
    if rss <= 0.0 {
        log::warn!("ebic: non-positive RSS {rss}; returning -inf");
        return f64::NEG_INFINITY;
    }
    n as f64 * (rss / n as f64).ln() + ebic_penalty(n, k, p, gamma)
}

/// Logistic EBIC `deviance + k·log(n) + 2γ·k·log(p)`.
pub fn ebic_deviance(deviance: f64, n: usize, k: usize, p: usize, gamma: f64) -> f64 {
    deviance + ebic_penalty(n, k, p, gamma)
}

/// Log-spaced grid from `λ_max` down to `min_ratio · λ_max`.
pub fn lambda_grid(lambda_max: f64, grid_size: usize, min_ratio: f64) -> Vec<f64> {
    if grid_size == 1 {
        return vec![lambda_max];
    }
    let step = min_ratio.ln() / (grid_size - 1) as f64;
    (0..grid_size)
        .map(|k| lambda_max * (step * k as f64).exp())
        .collect()
}

/// Warm-started fits along `lambdas` (which should be descending).
pub fn lasso_path(
    x: &Matrix,
    y: &[f64],
    family: Family,
    lambdas: &[f64],
) -> Result<Vec<LassoFit>, SelectorError> {
    lasso::check_inputs(x, y, 0.0)?;
    if let Some(bad) = lambdas.iter().find(|l| !(**l >= 0.0) || !l.is_finite()) {
        return Err(SelectorError::InvalidLambda(*bad));
    }
    let design = StandardizedDesign::new(x);
    path_std(&design, y, family, lambdas)
}

fn path_std(
    design: &StandardizedDesign,
    y: &[f64],
    family: Family,
    lambdas: &[f64],
) -> Result<Vec<LassoFit>, SelectorError> {
    let mut beta = vec![0.0; design.p];
    let mut fits = Vec::with_capacity(lambdas.len());
    match family {
        Family::Linear => {
            for &lambda in lambdas {
                fits.push(lasso::lasso_fit_std(design, y, lambda, &mut beta));
            }
        }
        Family::Logistic => {
            logistic_check(y)?;
            let ybar = y.iter().sum::<f64>() / y.len() as f64;
            let mut b0 = (ybar / (1.0 - ybar)).ln();
            for &lambda in lambdas {
                let fit = logistic::logistic_fit_std(design, y, lambda, &mut beta, &mut b0);
                let separated = fit.separated;
                fits.push(fit);
                if separated {
                    // Smaller λ only pushes further along the separating direction.
                    break;
                }
            }
        }
    }
    Ok(fits)
}

fn logistic_check(y: &[f64]) -> Result<(), SelectorError> {
    if y.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(SelectorError::NonBinaryResponse);
    }
    let ones = y.iter().filter(|&&v| v == 1.0).count();
    if ones == 0 || ones == y.len() {
        return Err(SelectorError::SingleClass);
    }
    Ok(())
}

/// EBIC of a path point under the chosen scoring rule.
fn fit_ebic(x: &Matrix, y: &[f64], fit: &LassoFit, family: Family, opts: &EbicOptions) -> f64 {
    let (n, p) = (x.rows(), x.cols());
    let k = fit.active_set.len();
    if k + 1 >= n {
        return f64::INFINITY;
    }
    match opts.score {
        PathScore::Penalized => match family {
            Family::Linear => {
                let pred = fit.predict(x);
                let rss: f64 = y.iter().zip(&pred).map(|(a, b)| (a - b) * (a - b)).sum();
                ebic(rss, n, k, p, opts.gamma)
            }
            Family::Logistic => ebic_deviance(logistic_deviance(x, y, fit), n, k, p, opts.gamma),
        },
        PathScore::Refit => refit_score(x, y, &fit.active_set, family, opts.gamma),
    }
}

fn refit_score(x: &Matrix, y: &[f64], selected: &[usize], family: Family, gamma: f64) -> f64 {
    let (n, p) = (x.rows(), x.cols());
    let k = selected.len();
    if k + 1 >= n {
        return f64::INFINITY;
    }
    match family {
        Family::Linear => {
            if k == 0 {
                let ybar = y.iter().sum::<f64>() / n as f64;
                let tss: f64 = y.iter().map(|v| (v - ybar) * (v - ybar)).sum();
                return ebic(tss, n, 0, p, gamma);
            }
            match ols_fit(&with_intercept(&x.select_columns(selected)), y) {
                Ok(fit) => ebic(fit.rss, n, k, p, gamma),
                Err(_) => f64::INFINITY,
            }
        }
        Family::Logistic => {
            if k == 0 {
                let ybar = y.iter().sum::<f64>() / n as f64;
                let ll: f64 = y
                    .iter()
                    .map(|&t| if t == 1.0 { ybar.ln() } else { (1.0 - ybar).ln() })
                    .sum();
                return ebic_deviance(-2.0 * ll, n, 0, p, gamma);
            }
            let xs = x.select_columns(selected);
            match logistic_lasso_fit(&xs, y, 0.0) {
                Ok(fit) => ebic_deviance(logistic_deviance(&xs, y, &fit), n, k, p, gamma),
                Err(_) => f64::INFINITY,
            }
        }
    }
}

/// Fits the λ path and returns the EBIC-minimizing fit; ties go to the larger λ.
pub fn select_lambda_ebic(
    x: &Matrix,
    y: &[f64],
    family: Family,
    opts: &EbicOptions,
) -> Result<LassoFit, SelectorError> {
    if opts.grid_size < 2 {
        return Err(SelectorError::GridTooSmall(opts.grid_size));
    }
    lasso::check_inputs(x, y, 0.0)?;
    let design = StandardizedDesign::new(x);
    let lmax = lasso::lambda_max_std(&design, y);
    // An all-degenerate design has λ_max = 0; the grid then collapses to zeros.
    let grid = lambda_grid(lmax, opts.grid_size, opts.min_ratio);
    let fits = path_std(&design, y, family, &grid)?;
    let mut best: Option<(f64, usize)> = None;
    let mut last_set: Option<(&[usize], f64)> = None;
    for (i, fit) in fits.iter().enumerate() {
        // Consecutive path points often share an active set; refits are reused.
        let score = match last_set {
            Some((set, score)) if opts.score == PathScore::Refit && set == fit.active_set.as_slice() => score,
            _ => fit_ebic(x, y, fit, family, opts),
        };
        last_set = Some((&fit.active_set, score));
        if best.is_none_or(|(b, _)| score < b) {
            best = Some((score, i));
        }
    }
    let (_, idx) = best.expect("grid is nonempty");
    Ok(fits.into_iter().nth(idx).expect("index from enumerate"))
}

/// EBIC of the unpenalized refit on `selected` features of the original data.
/// Returns `+∞` when the refit is infeasible (`|Ŝ| + 1 ≥ n` or a rank-deficient design).
pub fn refit_ebic(original: &Dataset, selected: &[usize], gamma: f64) -> Result<f64, SelectorError> {
    let family = Family::for_dataset(original)?;
    let x = original.features();
    let y = original.response();
    let p = x.cols();
    if let Some(&bad) = selected.iter().find(|&&j| j >= p) {
        return Err(SelectorError::IndexOutOfRange { index: bad, p });
    }
    if family == Family::Logistic {
        logistic_check(&y)?;
    }
    Ok(refit_score(&x, &y, selected, family, gamma))
}
