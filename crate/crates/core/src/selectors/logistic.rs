//! ℓ1-penalized logistic regression by proximal Newton (IRLS outer loop,
//! coordinate descent on the weighted quadratic model inside).

use super::design::{soft_threshold, StandardizedDesign};
use super::lasso::{check_inputs, kkt_from_gradient, LassoFit, COEF_TOL};
use super::SelectorError;
use crate::numerics::Matrix;

/// Coefficients beyond this magnitude are taken as evidence of separation.
pub const SEPARATION_BOUND: f64 = 50.0;
const KKT_TOL: f64 = 1e-7;
const MAX_OUTER: usize = 200;
const MAX_INNER: usize = 10_000;

fn sigmoid(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^η) − yη`, evaluated without overflow.
fn logistic_loss(eta: f64, y: f64) -> f64 {
    let softplus = if eta > 0.0 {
        eta + (-eta).exp().ln_1p()
    } else {
        eta.exp().ln_1p()
    };
    softplus - y * eta
}

fn weighted_dot(a: &[f64], w: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(w).zip(b).map(|((x, wi), y)| x * wi * y).sum()
}

fn check_binary(y: &[f64]) -> Result<(), SelectorError> {
    if y.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(SelectorError::NonBinaryResponse);
    }
    let ones = y.iter().filter(|&&v| v == 1.0).count();
    if ones == 0 || ones == y.len() {
        return Err(SelectorError::SingleClass);
    }
    Ok(())
}

/// Logistic λ_max: `max_j |(1/n) z_jᵀ (y − ȳ)|`.
pub fn logistic_lambda_max(x: &Matrix, y: &[f64]) -> f64 {
    super::lasso::lambda_max(x, y)
}

/// Mean logistic loss plus `λ Σ s_j |β_j|` (standardized-scale penalty).
pub fn logistic_objective(x: &Matrix, y: &[f64], fit: &LassoFit) -> f64 {
    let design = StandardizedDesign::new(x);
    let eta = fit.predict(x);
    let loss: f64 = eta.iter().zip(y).map(|(&e, &t)| logistic_loss(e, t)).sum::<f64>() / y.len() as f64;
    let penalty: f64 = fit
        .coefficients
        .iter()
        .zip(&design.scales)
        .map(|(b, s)| (b * s).abs())
        .sum();
    loss + fit.lambda * penalty
}

/// Largest KKT violation of a logistic fit on the standardized design,
/// including the unpenalized intercept's stationarity.
pub fn logistic_kkt_violation(x: &Matrix, y: &[f64], fit: &LassoFit) -> f64 {
    let design = StandardizedDesign::new(x);
    let eta = fit.predict(x);
    let resid: Vec<f64> = eta.iter().zip(y).map(|(&e, &t)| t - sigmoid(e)).collect();
    let grads = design.correlations(&resid);
    let beta_std = design.to_standardized(&fit.coefficients);
    let intercept_grad = (resid.iter().sum::<f64>() / y.len() as f64).abs();
    kkt_from_gradient(&grads, &beta_std, fit.lambda, &design).max(intercept_grad)
}

pub fn logistic_lasso_fit(x: &Matrix, y: &[f64], lambda: f64) -> Result<LassoFit, SelectorError> {
    check_inputs(x, y, lambda)?;
    check_binary(y)?;
    let design = StandardizedDesign::new(x);
    let mut beta = vec![0.0; design.p];
    let ybar = y.iter().sum::<f64>() / y.len() as f64;
    let mut b0 = (ybar / (1.0 - ybar)).ln();
    Ok(logistic_fit_std(&design, y, lambda, &mut beta, &mut b0))
}

/// Standardized-scale objective: mean loss + `λ‖β‖₁`.
fn objective_std(design: &StandardizedDesign, y: &[f64], lambda: f64, beta: &[f64], b0: f64) -> f64 {
    let eta = linear_predictor(design, beta, b0);
    eta.iter().zip(y).map(|(&e, &t)| logistic_loss(e, t)).sum::<f64>() / design.n as f64
        + lambda * beta.iter().map(|b| b.abs()).sum::<f64>()
}

fn linear_predictor(design: &StandardizedDesign, beta: &[f64], b0: f64) -> Vec<f64> {
    let mut eta = vec![b0; design.n];
    for (j, &b) in beta.iter().enumerate() {
        if b != 0.0 {
            for (e, z) in eta.iter_mut().zip(design.col(j)) {
                *e += z * b;
            }
        }
    }
    eta
}

pub(crate) fn logistic_fit_std(
    design: &StandardizedDesign,
    y: &[f64],
    lambda: f64,
    beta: &mut [f64],
    b0: &mut f64,
) -> LassoFit {
    let n = design.n as f64;
    let mut iterations = 0;
    let mut converged = false;
    let mut separated = false;
    let mut current = objective_std(design, y, lambda, beta, *b0);

    for _outer in 0..MAX_OUTER {
        let eta = linear_predictor(design, beta, *b0);
        let probs: Vec<f64> = eta.iter().map(|&e| sigmoid(e)).collect();

        // Stationarity on the true objective decides convergence.
        let resid: Vec<f64> = y.iter().zip(&probs).map(|(t, p)| t - p).collect();
        let grads = design.correlations(&resid);
        let kkt = kkt_from_gradient(&grads, beta, lambda, design)
            .max((resid.iter().sum::<f64>() / n).abs());
        if kkt <= KKT_TOL {
            converged = true;
            break;
        }

        let w: Vec<f64> = probs.iter().map(|p| (p * (1.0 - p)).max(1e-6)).collect();
        let z: Vec<f64> = eta
            .iter()
            .zip(y)
            .zip(&probs)
            .zip(&w)
            .map(|(((e, t), p), wi)| e + (t - p) / wi)
            .collect();
        let wsum: f64 = w.iter().sum();
        let col_curv: Vec<f64> = (0..design.p)
            .map(|j| design.col(j).iter().zip(&w).map(|(zj, wi)| wi * zj * zj).sum::<f64>() / n)
            .collect();

        // Weighted lasso on the quadratic model, warm-started from the current iterate.
        let mut nb = beta.to_vec();
        let mut nb0 = *b0;
        let mut r: Vec<f64> = z.iter().zip(&eta).map(|(zi, e)| zi - e).collect();
        for _ in 0..MAX_INNER {
            iterations += 1;
            let mut max_change = 0.0f64;
            let shift = r.iter().zip(&w).map(|(ri, wi)| ri * wi).sum::<f64>() / wsum;
            if shift != 0.0 {
                nb0 += shift;
                r.iter_mut().for_each(|ri| *ri -= shift);
                max_change = max_change.max(shift.abs());
            }
            for j in 0..design.p {
                if design.is_degenerate(j) || col_curv[j] <= 0.0 {
                    continue;
                }
                let zj = design.col(j);
                let g = weighted_dot(zj, &w, &r) / n + col_curv[j] * nb[j];
                let new = soft_threshold(g, lambda) / col_curv[j];
                let delta = new - nb[j];
                if delta != 0.0 {
                    for (ri, zi) in r.iter_mut().zip(zj) {
                        *ri -= zi * delta;
                    }
                    nb[j] = new;
                    max_change = max_change.max(delta.abs());
                }
            }
            if max_change < COEF_TOL * 0.1 {
                break;
            }
        }

        // Backtracking on the true objective.
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let cand: Vec<f64> = beta.iter().zip(&nb).map(|(o, n)| o + step * (n - o)).collect();
            let cand0 = *b0 + step * (nb0 - *b0);
            let obj = objective_std(design, y, lambda, &cand, cand0);
            if obj <= current + 1e-15 * current.abs().max(1.0) {
                beta.copy_from_slice(&cand);
                *b0 = cand0;
                current = obj;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            // No descent possible at working precision.
            converged = kkt <= 1e-5;
            break;
        }
        let orig = design.to_original(beta);
        if orig.iter().any(|b| b.abs() > SEPARATION_BOUND) {
            separated = true;
            break;
        }
    }

    if lambda == 0.0 && !separated {
        // Without a penalty, complete separation has no finite optimum; the
        // gradient merely becomes too small to notice.
        let eta = linear_predictor(design, beta, *b0);
        separated = eta
            .iter()
            .zip(y)
            .all(|(&e, &t)| (t == 1.0 && e > 0.0) || (t == 0.0 && e < 0.0));
    }
    let mut fit = LassoFit::from_standardized(
        design,
        lambda,
        beta,
        *b0,
        iterations,
        converged && !separated,
    );
    fit.separated = separated;
    fit
}

/// Binomial deviance `−2 Σ log-likelihood` of a fit.
pub fn logistic_deviance(x: &Matrix, y: &[f64], fit: &LassoFit) -> f64 {
    let eta = fit.predict(x);
    2.0 * eta.iter().zip(y).map(|(&e, &t)| logistic_loss(e, t)).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RngStream;

    fn logistic_data(n: usize, p: usize, seed: u64) -> (Matrix, Vec<f64>) {
        let mut rng = RngStream::new(seed, 31).rng();
        let x = Matrix::from_fn(n, p, |_, _| rng.normal());
        let beta: Vec<f64> = (0..p).map(|j| [1.5, -1.0, 0.0, 0.5][j % 4]).collect();
        let y = x
            .matvec(&beta)
            .into_iter()
            .map(|e| if rng.uniform() < sigmoid(e) { 1.0 } else { 0.0 })
            .collect();
        (x, y)
    }

    #[test]
    fn lambda_max_gives_zero_and_kkt_holds() {
        let (x, y) = logistic_data(60, 5, 1);
        let lm = logistic_lambda_max(&x, &y);
        let fit = logistic_lasso_fit(&x, &y, lm).unwrap();
        assert!(fit.coefficients.iter().all(|&b| b == 0.0));
        let ybar = y.iter().sum::<f64>() / 60.0;
        assert!((fit.intercept - (ybar / (1.0 - ybar)).ln()).abs() < 1e-8);
        for frac in [0.8, 0.3, 0.05] {
            let fit = logistic_lasso_fit(&x, &y, lm * frac).unwrap();
            assert!(fit.converged);
            assert!(logistic_kkt_violation(&x, &y, &fit) <= 1e-5);
        }
    }

    #[test]
    fn flipped_feature_pair_gets_opposite_coefficients() {
        // Every row (a, b) is mirrored by (-b, -a) with the same label, so the
        // problem is invariant under (β1, β2) -> (-β2, -β1).
        let (base, _) = logistic_data(30, 2, 2);
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..30 {
            let (a, b) = (base[(i, 0)], base[(i, 1)]);
            let label = if a - 0.5 * b + 0.4 * ((i * 7) % 5) as f64 - 0.8 > 0.0 { 1.0 } else { 0.0 };
            rows.push(vec![a, b]);
            rows.push(vec![-b, -a]);
            y.extend([label, label]);
        }
        let x = Matrix::from_rows(&rows);
        let lm = logistic_lambda_max(&x, &y);
        let fit = logistic_lasso_fit(&x, &y, 0.2 * lm).unwrap();
        assert!(fit.coefficients[0] != 0.0);
        assert!((fit.coefficients[0] + fit.coefficients[1]).abs() < 1e-4);
    }

    #[test]
    fn single_class_rejected() {
        let (x, _) = logistic_data(10, 2, 3);
        assert!(matches!(
            logistic_lasso_fit(&x, &[1.0; 10], 0.1),
            Err(SelectorError::SingleClass)
        ));
        assert!(matches!(
            logistic_lasso_fit(&x, &[0.5; 10], 0.1),
            Err(SelectorError::NonBinaryResponse)
        ));
    }

    #[test]
    fn separable_data_flagged() {
        let x = Matrix::from_rows(&(0..20).map(|i| vec![i as f64 - 9.5]).collect::<Vec<_>>());
        let y: Vec<f64> = (0..20).map(|i| if i >= 10 { 1.0 } else { 0.0 }).collect();
        let fit = logistic_lasso_fit(&x, &y, 0.0).unwrap();
        assert!(fit.separated);
        assert!(!fit.converged);
    }
}
