use super::{map_replicates, AggregateError, ReplicateSource};
use crate::numerics::{ols_fit, two_sided_normal_pvalue, with_intercept, Matrix};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceResult {
    /// `B × p`.
    pub t_stats: Matrix,
    /// `B × p`.
    pub pvals_per_rep: Matrix,
    pub pvals: Vec<f64>,
    pub alpha_level: f64,
    pub significant: Vec<usize>,
    #[serde(rename = "B")]
    pub replicate_count: usize,
}

/// Column means of a `B × p` matrix of p-values. Each column is summed in
/// sorted order so the result does not depend on replicate order.
pub fn average_pvalues(per_rep: &Matrix) -> Vec<f64> {
    let b = per_rep.rows();
    (0..per_rep.cols())
        .map(|j| {
            let mut col = per_rep.column(j);
            col.sort_by(f64::total_cmp);
            col.iter().sum::<f64>() / b as f64
        })
        .collect()
}

/// OLS with intercept on every replicate; the p-value of each coefficient's
/// normal T-test is averaged over replicates and compared with `alpha_level`.
pub fn run_inference(
    g: &dyn ReplicateSource,
    replicates: usize,
    alpha_level: f64,
    seed: u64,
) -> Result<InferenceResult, AggregateError> {
    if replicates == 0 {
        return Err(AggregateError::InvalidOptions("B must be >= 1".into()));
    }
    if !(alpha_level > 0.0 && alpha_level < 1.0) {
        return Err(AggregateError::InvalidOptions(format!("alpha_level {alpha_level} outside (0, 1)")));
    }
    let per_rep = map_replicates(replicates, |b| {
        let d = g.generate_replicate(b, seed)?;
        let fit = ols_fit(&with_intercept(&d.features()), &d.response())?;
        let t: Vec<f64> = fit.coefficients[1..]
            .iter()
            .zip(&fit.standard_errors[1..])
            .map(|(c, s)| c / s)
            .collect();
        Ok(t)
    })?;
    let p = per_rep[0].len();
    let t_stats = Matrix::from_fn(replicates, p, |i, j| per_rep[i][j]);
    let pvals_per_rep = Matrix::from_fn(replicates, p, |i, j| two_sided_normal_pvalue(t_stats[(i, j)]));
    let pvals = average_pvalues(&pvals_per_rep);
    let significant = (0..p).filter(|&j| pvals[j] < alpha_level).collect();
    Ok(InferenceResult {
        t_stats,
        pvals_per_rep,
        pvals,
        alpha_level,
        significant,
        replicate_count: replicates,
    })
}
