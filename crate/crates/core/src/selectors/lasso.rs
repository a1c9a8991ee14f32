//! Lasso by cyclic coordinate descent on an internally standardized design.
//!
//! The solver minimizes `(1/(2n))‖y − β₀ − Zβ‖² + λ‖β‖₁` where `Z` is the
//! design with every column centered and scaled to `(1/n)‖z_j‖² = 1`.
//! Coefficients are reported on the original scale, so the equivalent
//! original-scale penalty is `λ Σ_j s_j |β_j|` with `s_j` the column sd.

use super::design::{dot, soft_threshold, StandardizedDesign};
use super::SelectorError;
use crate::numerics::Matrix;
use serde::{Deserialize, Serialize};

pub const COEF_TOL: f64 = 1e-8;
pub const MAX_SWEEPS: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LassoFit {
    pub lambda: f64,
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub active_set: Vec<usize>,
    pub iterations: usize,
    pub converged: bool,
    /// Set by the logistic solver when coefficients blow past the separation bound.
    #[serde(default)]
    pub separated: bool,
}

impl LassoFit {
    pub(crate) fn from_standardized(
        design: &StandardizedDesign,
        lambda: f64,
        beta_std: &[f64],
        center: f64,
        iterations: usize,
        converged: bool,
    ) -> Self {
        let coefficients = design.to_original(beta_std);
        let intercept = design.intercept(center, &coefficients);
        let active_set = coefficients
            .iter()
            .enumerate()
            .filter(|(_, b)| **b != 0.0)
            .map(|(j, _)| j)
            .collect();
        Self {
            lambda,
            coefficients,
            intercept,
            active_set,
            iterations,
            converged,
            separated: false,
        }
    }

    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        x.matvec(&self.coefficients)
            .into_iter()
            .map(|v| v + self.intercept)
            .collect()
    }
}

pub(crate) fn check_inputs(x: &Matrix, y: &[f64], lambda: f64) -> Result<(), SelectorError> {
    if y.len() != x.rows() {
        return Err(SelectorError::DimensionMismatch {
            rows: x.rows(),
            responses: y.len(),
        });
    }
    if x.rows() < 2 {
        return Err(SelectorError::TooFewRows(x.rows()));
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(SelectorError::InvalidLambda(lambda));
    }
    if x.as_slice().iter().chain(y).any(|v| !v.is_finite()) {
        return Err(SelectorError::NonFinite);
    }
    Ok(())
}

/// Smallest λ with an empty active set: `max_j |(1/n) z_jᵀ (y − ȳ)|`.
pub fn lambda_max(x: &Matrix, y: &[f64]) -> f64 {
    let design = StandardizedDesign::new(x);
    lambda_max_std(&design, y)
}

pub(crate) fn lambda_max_std(design: &StandardizedDesign, y: &[f64]) -> f64 {
    let ybar = y.iter().sum::<f64>() / y.len() as f64;
    let yc: Vec<f64> = y.iter().map(|v| v - ybar).collect();
    design
        .correlations(&yc)
        .into_iter()
        .fold(0.0, |m, c| m.max(c.abs()))
}

pub fn lasso_fit(
    x: &Matrix,
    y: &[f64],
    lambda: f64,
    warm_start: Option<&[f64]>,
) -> Result<LassoFit, SelectorError> {
    check_inputs(x, y, lambda)?;
    let design = StandardizedDesign::new(x);
    let mut beta = match warm_start {
        Some(w) if w.len() == design.p => design.to_standardized(w),
        Some(w) => {
            return Err(SelectorError::DimensionMismatch {
                rows: design.p,
                responses: w.len(),
            })
        }
        None => vec![0.0; design.p],
    };
    Ok(lasso_fit_std(&design, y, lambda, &mut beta))
}

/// Coordinate descent from the given standardized start; `beta` is updated in place.
pub(crate) fn lasso_fit_std(
    design: &StandardizedDesign,
    y: &[f64],
    lambda: f64,
    beta: &mut [f64],
) -> LassoFit {
    let n = design.n as f64;
    let ybar = y.iter().sum::<f64>() / n;
    let mut resid: Vec<f64> = y.iter().map(|v| v - ybar).collect();
    for (j, b) in beta.iter_mut().enumerate() {
        if design.is_degenerate(j) {
            *b = 0.0;
        } else if *b != 0.0 {
            for (r, z) in resid.iter_mut().zip(design.col(j)) {
                *r -= z * *b;
            }
        }
    }

    let update = |j: usize, beta: &mut [f64], resid: &mut [f64]| -> f64 {
        if design.is_degenerate(j) {
            return 0.0;
        }
        let z = design.col(j);
        let old = beta[j];
        let new = soft_threshold(dot(z, resid) / n + old, lambda);
        let delta = new - old;
        if delta != 0.0 {
            for (r, zi) in resid.iter_mut().zip(z) {
                *r -= zi * delta;
            }
            beta[j] = new;
        }
        delta.abs()
    };

    let mut sweeps = 0;
    let mut converged = false;
    while sweeps < MAX_SWEEPS {
        // Full sweep over every coordinate.
        sweeps += 1;
        let mut max_change = 0.0f64;
        for j in 0..design.p {
            max_change = max_change.max(update(j, beta, &mut resid));
        }
        if max_change < COEF_TOL {
            converged = true;
            break;
        }
        // Then iterate on the current active set until it settles.
        let active: Vec<usize> = (0..design.p).filter(|&j| beta[j] != 0.0).collect();
        while sweeps < MAX_SWEEPS {
            sweeps += 1;
            let mut change = 0.0f64;
            for &j in &active {
                change = change.max(update(j, beta, &mut resid));
            }
            if change < COEF_TOL {
                break;
            }
        }
    }

    LassoFit::from_standardized(design, lambda, beta, ybar, sweeps, converged)
}

/// Objective on the standardized problem, evaluated through original-scale coefficients:
/// `(1/(2n))‖y − β₀ − Xβ‖² + λ Σ s_j |β_j|`.
pub fn lasso_objective(x: &Matrix, y: &[f64], fit: &LassoFit) -> f64 {
    let design = StandardizedDesign::new(x);
    let n = y.len() as f64;
    let pred = fit.predict(x);
    let rss: f64 = y.iter().zip(&pred).map(|(a, b)| (a - b) * (a - b)).sum();
    let penalty: f64 = fit
        .coefficients
        .iter()
        .zip(&design.scales)
        .map(|(b, s)| (b * s).abs())
        .sum();
    rss / (2.0 * n) + fit.lambda * penalty
}

/// Largest KKT violation of a linear lasso fit, measured on the standardized design.
pub fn kkt_violation(x: &Matrix, y: &[f64], fit: &LassoFit) -> f64 {
    let design = StandardizedDesign::new(x);
    let pred = fit.predict(x);
    let resid: Vec<f64> = y.iter().zip(&pred).map(|(a, b)| a - b).collect();
    let grads = design.correlations(&resid);
    let beta_std = design.to_standardized(&fit.coefficients);
    kkt_from_gradient(&grads, &beta_std, fit.lambda, &design)
}

pub(crate) fn kkt_from_gradient(
    grads: &[f64],
    beta_std: &[f64],
    lambda: f64,
    design: &StandardizedDesign,
) -> f64 {
    let mut worst = 0.0f64;
    for j in 0..design.p {
        if design.is_degenerate(j) {
            continue;
        }
        let v = if beta_std[j] == 0.0 {
            (grads[j].abs() - lambda).max(0.0)
        } else {
            (grads[j] - lambda * beta_std[j].signum()).abs()
        };
        worst = worst.max(v);
    }
    worst
}
