use super::{map_replicates, AggregateError, ReplicateSource};
use crate::data::{empirical_moments, Dataset};
use crate::numerics::{frechet_distance, RngStream};
use crate::selectors::{
    lasso_fit, logistic_lasso_fit, refit_ebic, select_lambda_ebic, EbicOptions, Family, LassoFit,
};
use serde::{Deserialize, Serialize};

pub const DEFAULT_THRESHOLDS: [f64; 5] = [0.5, 0.6, 0.7, 0.8, 0.9];

/// Per-replicate regularization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LambdaMode {
    /// EBIC over a log-spaced path on every replicate.
    #[default]
    Ebic,
    /// The same λ on every replicate.
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionOptions {
    pub replicates: usize,
    pub pi_thres: f64,
    pub family: Family,
    pub ebic: EbicOptions,
    pub lambda: LambdaMode,
}

impl Default for SelectionOptions {
    fn default() -> Self {
        Self {
            replicates: 20,
            pi_thres: 0.7,
            family: Family::Linear,
            ebic: EbicOptions::default(),
            lambda: LambdaMode::Ebic,
        }
    }
}

impl SelectionOptions {
    fn validate(&self) -> Result<(), AggregateError> {
        if self.replicates == 0 {
            return Err(AggregateError::InvalidOptions("B must be >= 1".into()));
        }
        check_threshold(self.pi_thres)
    }
}

fn check_threshold(t: f64) -> Result<(), AggregateError> {
    if t > 0.0 && t <= 1.0 {
        Ok(())
    } else {
        Err(AggregateError::InvalidOptions(format!("pi_thres {t} outside (0, 1]")))
    }
}

fn serialize_indicators<S: serde::Serializer>(v: &[bool], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|&b| b as u8))
}

fn deserialize_indicators<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Vec<bool>, D::Error> {
    let raw: Vec<u8> = Vec::deserialize(d)?;
    raw.into_iter()
        .map(|v| match v {
            0 => Ok(false),
            1 => Ok(true),
            other => Err(serde::de::Error::custom(format!("indicator {other} is not 0 or 1"))),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub b: usize,
    pub lambda: f64,
    #[serde(serialize_with = "serialize_indicators", deserialize_with = "deserialize_indicators")]
    pub indicators: Vec<bool>,
    #[serde(skip)]
    pub coefficients: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningEntry {
    pub generator: String,
    pub pi_thres: f64,
    pub active_set: Vec<usize>,
    /// `null` in JSON when the refit is infeasible.
    pub ebic: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub pi_hat: Vec<f64>,
    pub threshold: f64,
    pub active_set: Vec<usize>,
    #[serde(rename = "B")]
    pub replicate_count: usize,
    #[serde(rename = "per_replicate")]
    pub replicates: Vec<ReplicateRecord>,
    pub tuning_trace: Vec<TuningEntry>,
    /// Name of the winning candidate; `None` outside tuning.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub generator: Option<String>,
}

/// `Π̂_j = (1/B)·Σ_b I_bj`.
pub fn selection_frequencies(indicators: &[Vec<bool>]) -> Vec<f64> {
    let b = indicators.len();
    let p = indicators.first().map_or(0, Vec::len);
    let mut counts = vec![0usize; p];
    for row in indicators {
        for (c, &on) in counts.iter_mut().zip(row) {
            *c += on as usize;
        }
    }
    counts.into_iter().map(|c| c as f64 / b as f64).collect()
}

/// `{j : Π̂_j ≥ π_thres}`.
pub fn active_set(pi_hat: &[f64], pi_thres: f64) -> Vec<usize> {
    (0..pi_hat.len()).filter(|&j| pi_hat[j] >= pi_thres).collect()
}

fn fit_replicate(d: &Dataset, opts: &SelectionOptions) -> Result<LassoFit, AggregateError> {
    let x = d.features();
    let y = d.response();
    Ok(match opts.lambda {
        LambdaMode::Ebic => select_lambda_ebic(&x, &y, opts.family, &opts.ebic)?,
        LambdaMode::Fixed(l) => match opts.family {
            Family::Linear => lasso_fit(&x, &y, l, None)?,
            Family::Logistic => logistic_lasso_fit(&x, &y, l)?,
        },
    })
}

/// Draws `B` replicates, fits the selector on each and thresholds the selection frequencies.
pub fn run_selection(
    g: &dyn ReplicateSource,
    opts: &SelectionOptions,
    seed: u64,
) -> Result<SelectionResult, AggregateError> {
    opts.validate()?;
    let replicates = map_replicates(opts.replicates, |b| {
        let d = g.generate_replicate(b, seed)?;
        let fit = fit_replicate(&d, opts)?;
        log::info!("replicate {b}: lambda {:.4e}, {} selected", fit.lambda, fit.active_set.len());
        Ok(ReplicateRecord {
            b,
            lambda: fit.lambda,
            indicators: fit.coefficients.iter().map(|&c| c != 0.0).collect(),
            coefficients: fit.coefficients,
        })
    })?;
    let indicators: Vec<Vec<bool>> = replicates.iter().map(|r| r.indicators.clone()).collect();
    let pi_hat = selection_frequencies(&indicators);
    Ok(SelectionResult {
        active_set: active_set(&pi_hat, opts.pi_thres),
        pi_hat,
        threshold: opts.pi_thres,
        replicate_count: opts.replicates,
        replicates,
        tuning_trace: Vec::new(),
        generator: None,
    })
}

/// One generator in a tuning grid.
pub struct Candidate<'a> {
    pub name: String,
    pub source: &'a dyn ReplicateSource,
}

/// Runs the selection for every generator, thresholds at every `π_thres` in
/// `thresholds`, and keeps the combination whose active set has the lowest
/// refit EBIC on `original`. Ties go to the smaller set, then to the larger
/// threshold, then to the earlier generator.
pub fn tune_selection(
    candidates: &[Candidate<'_>],
    thresholds: &[f64],
    original: &Dataset,
    opts: &SelectionOptions,
    seed: u64,
) -> Result<SelectionResult, AggregateError> {
    if candidates.is_empty() || thresholds.is_empty() {
        return Err(AggregateError::NoCandidates);
    }
    for &t in thresholds {
        check_threshold(t)?;
    }
    let mut trace = Vec::new();
    let mut best: Option<(f64, usize, f64, usize, SelectionResult)> = None;
    for (ci, cand) in candidates.iter().enumerate() {
        let base = run_selection(cand.source, opts, seed)?;
        for &t in thresholds {
            let set = active_set(&base.pi_hat, t);
            let score = refit_ebic(original, &set, opts.ebic.gamma)?;
            trace.push(TuningEntry {
                generator: cand.name.clone(),
                pi_thres: t,
                active_set: set.clone(),
                ebic: score.is_finite().then_some(score),
            });
            if score == f64::INFINITY {
                continue;
            }
            let better = match &best {
                None => true,
                Some((bs, bk, bt, _, _)) => {
                    score < *bs || (score == *bs && (set.len() < *bk || (set.len() == *bk && t > *bt)))
                }
            };
            if better {
                let mut chosen = base.clone();
                chosen.threshold = t;
                chosen.active_set = set.clone();
                best = Some((score, set.len(), t, ci, chosen));
            }
        }
    }
    let (_, _, _, ci, mut result) = best.ok_or(AggregateError::AllCandidatesInfeasible)?;
    log::info!("tuning chose generator '{}' at threshold {}", candidates[ci].name, result.threshold);
    result.tuning_trace = trace;
    result.generator = Some(candidates[ci].name.clone());
    Ok(result)
}

const FID_STREAM: u64 = 0;

/// Index of the candidate whose `m_samples`-row sample is closest in Fréchet
/// distance to the continuous columns of `original`. Ties go to the earlier candidate.
pub fn tune_with_fid(
    candidates: &[&dyn ReplicateSource],
    original: &Dataset,
    m_samples: usize,
    seed: u64,
) -> Result<(usize, Vec<f64>), AggregateError> {
    if candidates.is_empty() {
        return Err(AggregateError::NoCandidates);
    }
    if m_samples < 2 {
        return Err(AggregateError::InvalidOptions(format!("m_samples {m_samples} must be >= 2")));
    }
    let cols = original.schema().continuous_indices();
    let (m0, c0) = empirical_moments(original, &cols)?;
    let mut scores = Vec::with_capacity(candidates.len());
    for cand in candidates {
        // Every candidate sees the same stream so the comparison is paired.
        let mut rng = RngStream::new(seed, FID_STREAM).rng();
        let sample = cand.sample(m_samples, &mut rng)?;
        let (m1, c1) = empirical_moments(&sample, &cols)?;
        scores.push(frechet_distance(&m0, &c0, &m1, &c1)?);
    }
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s < scores[best] {
            best = i;
        }
    }
    Ok((best, scores))
}
