use super::{
    cpss_baseline, make_true_model, sample_dataset, score_selection, CpssOptions, Link, Scenario, ScenarioOptions,
    SimError,
};
use crate::aggregate::{tune_selection, Candidate, Generator, SelectionOptions, DEFAULT_THRESHOLDS};
use crate::data::Dataset;
use crate::diffusion::{DiffusionModel, TrainConfig};
use crate::numerics::{mean, mix_seed, round_sig, sample_sd, RngStream};
use crate::selectors::{select_lambda_ebic, EbicOptions, Family};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    RawLasso,
    Cpss,
    AggregateOracle,
    AggregateBootstrap,
    AggregateDiffusion,
    /// Diffusion model pre-trained on a larger sample from the same process, then fine-tuned.
    AggregateDiffusionTransfer,
    /// Reserved; not implemented.
    Knockoff,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::RawLasso => "raw_lasso",
            Method::Cpss => "cpss",
            Method::AggregateOracle => "aggregate_oracle",
            Method::AggregateBootstrap => "aggregate_bootstrap",
            Method::AggregateDiffusion => "aggregate_diffusion",
            Method::AggregateDiffusionTransfer => "aggregate_diffusion_transfer",
            Method::Knockoff => "knockoff",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub n: usize,
    pub p: usize,
    pub trials: usize,
    pub methods: Vec<Method>,
    /// Replicates per aggregate run.
    pub replicates: usize,
    pub thresholds: Vec<f64>,
    pub sigma: f64,
    pub iid_perturbation_sd: f64,
    pub gamma: f64,
    pub cpss: CpssOptions,
    pub diffusion: TrainConfig,
    /// Pre-training sample size for the transfer method.
    pub pretrain_n: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::Block5,
            n: 500,
            p: 50,
            trials: 10,
            methods: vec![Method::RawLasso, Method::Cpss, Method::AggregateOracle],
            replicates: 20,
            thresholds: DEFAULT_THRESHOLDS.to_vec(),
            sigma: 1.0,
            iid_perturbation_sd: 0.1,
            gamma: 1.0,
            cpss: CpssOptions::default(),
            diffusion: TrainConfig::default(),
            pretrain_n: 2000,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |key: &str, message: String| {
            Err(SimError::InvalidExperiment {
                key: key.to_string(),
                message,
            })
        };
        if self.n < 4 {
            return bad("n", format!("{} must be >= 4", self.n));
        }
        if self.p == 0 {
            return bad("p", "must be >= 1".into());
        }
        if self.trials == 0 {
            return bad("trials", "must be >= 1".into());
        }
        if self.methods.is_empty() {
            return bad("methods", "must list at least one method".into());
        }
        if self.methods.contains(&Method::Knockoff) {
            return bad("methods", "'knockoff' is a reserved name and is not implemented".into());
        }
        for (i, m) in self.methods.iter().enumerate() {
            if self.methods[..i].contains(m) {
                return bad("methods", format!("'{}' listed twice", m.name()));
            }
        }
        if self.replicates == 0 {
            return bad("replicates", "must be >= 1".into());
        }
        if self.thresholds.is_empty() {
            return bad("thresholds", "must be nonempty".into());
        }
        if let Some(t) = self.thresholds.iter().find(|t| !(**t > 0.0 && **t <= 1.0)) {
            return bad("thresholds", format!("{t} outside (0, 1]"));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return bad("sigma", format!("{} must be finite and >= 0", self.sigma));
        }
        if !(self.iid_perturbation_sd >= 0.0 && self.iid_perturbation_sd.is_finite()) {
            return bad("iid_perturbation_sd", format!("{} must be finite and >= 0", self.iid_perturbation_sd));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return bad("gamma", format!("{} must be finite and >= 0", self.gamma));
        }
        if self.cpss.b_pairs == 0 {
            return bad("cpss.b_pairs", "must be >= 1".into());
        }
        if !(self.cpss.tau > 0.5 && self.cpss.tau <= 1.0) {
            return bad("cpss.tau", format!("{} outside (0.5, 1]", self.cpss.tau));
        }
        if self.cpss.q_keep == Some(0) {
            return bad("cpss.q_keep", "must be >= 1".into());
        }
        if let Err(e) = self.diffusion.validate() {
            return bad("diffusion", e.to_string());
        }
        if self.pretrain_n < 2 {
            return bad("pretrain_n", format!("{} must be >= 2", self.pretrain_n));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub trial: usize,
    pub method: Method,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub selected: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub mean_precision: f64,
    pub mean_recall: f64,
    pub mean_f1: f64,
    pub sd_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub seed: u64,
    pub rows: Vec<TrialRow>,
    pub summary: Vec<MethodSummary>,
}

pub const CSV_HEADER: &str = "trial,method,precision,recall,f1";

impl ExperimentReport {
    pub fn summary_for(&self, method: Method) -> Option<&MethodSummary> {
        self.summary.iter().find(|s| s.method == method)
    }

    /// One row per (trial, method); reals at 10 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{}",
                r.trial,
                r.method.name(),
                round_sig(r.precision, 10),
                round_sig(r.recall, 10),
                round_sig(r.f1, 10)
            )?;
        }
        Ok(())
    }
}

const CPSS_STREAM: u64 = 1;
const PRETRAIN_LABEL: u64 = 2;
const DIFFUSION_LABEL: u64 = 3;

fn run_method(
    method: Method,
    cfg: &ExperimentConfig,
    data: &Dataset,
    tm: &super::TrueModel,
    trial_seed: u64,
    data_stream: RngStream,
) -> Result<Vec<usize>, Box<dyn std::error::Error + Send + Sync>> {
    let family = match tm.link {
        Link::Linear => Family::Linear,
        Link::Logistic => Family::Logistic,
    };
    let ebic = EbicOptions {
        gamma: cfg.gamma,
        ..EbicOptions::default()
    };
    let sel_opts = SelectionOptions {
        replicates: cfg.replicates,
        family,
        ebic,
        ..SelectionOptions::default()
    };
    let aggregate = |g: &Generator| -> Result<Vec<usize>, Box<dyn std::error::Error + Send + Sync>> {
        let cands = [Candidate {
            name: g.name().to_string(),
            source: g,
        }];
        Ok(tune_selection(&cands, &cfg.thresholds, data, &sel_opts, trial_seed)?.active_set)
    };
    let diffusion_cfg = TrainConfig {
        seed: mix_seed(mix_seed(trial_seed, DIFFUSION_LABEL), cfg.diffusion.seed),
        ..cfg.diffusion.clone()
    };
    Ok(match method {
        Method::RawLasso => select_lambda_ebic(&data.features(), &data.response(), family, &ebic)?.active_set,
        Method::Cpss => {
            let mut rng = RngStream::new(trial_seed, CPSS_STREAM).rng();
            cpss_baseline(data, &cfg.cpss, family, &mut rng)?
        }
        Method::AggregateOracle => aggregate(&Generator::oracle(tm.clone(), data.n()))?,
        Method::AggregateBootstrap => aggregate(&Generator::bootstrap(Arc::new(data.clone())))?,
        Method::AggregateDiffusion => {
            let m = DiffusionModel::train(data, &diffusion_cfg)?;
            aggregate(&Generator::diffusion(Arc::new(m)))?
        }
        Method::AggregateDiffusionTransfer => {
            let mut rng = data_stream.derive(PRETRAIN_LABEL).rng();
            let pre = sample_dataset(tm, cfg.pretrain_n, &mut rng)?;
            let base = DiffusionModel::train(&pre, &diffusion_cfg)?;
            let tuned = base.fine_tune(data, &diffusion_cfg)?;
            aggregate(&Generator::diffusion(Arc::new(tuned)))?
        }
        Method::Knockoff => return Err("knockoff is reserved and not implemented".into()),
    })
}

/// Runs every configured method on `trials` fresh datasets. Trial `t` draws its
/// truth and data from stream `(seed, t)`.
pub fn run_experiment(cfg: &ExperimentConfig, seed: u64) -> Result<ExperimentReport, SimError> {
    cfg.validate()?;
    let scen_opts = ScenarioOptions {
        n: cfg.n,
        sigma: cfg.sigma,
        iid_perturbation_sd: cfg.iid_perturbation_sd,
    };
    let mut rows = Vec::with_capacity(cfg.trials * cfg.methods.len());
    for trial in 1..=cfg.trials {
        let stream = RngStream::new(seed, trial as u64);
        let mut rng = stream.rng();
        let tm = make_true_model(cfg.scenario, cfg.p, &scen_opts, &mut rng)?;
        let data = sample_dataset(&tm, cfg.n, &mut rng)?;
        let trial_seed = mix_seed(seed, trial as u64);
        for &method in &cfg.methods {
            let selected =
                run_method(method, cfg, &data, &tm, trial_seed, stream).map_err(|source| SimError::Trial {
                    trial,
                    method: method.name().to_string(),
                    source,
                })?;
            let m = score_selection(&selected, &tm.support, cfg.p);
            log::info!("trial {trial} {}: f1 {:.3}", method.name(), m.f1);
            rows.push(TrialRow {
                trial,
                method,
                precision: m.precision,
                recall: m.recall,
                f1: m.f1,
                selected,
            });
        }
    }
    let summary = cfg
        .methods
        .iter()
        .map(|&method| {
            let pick = |f: fn(&TrialRow) -> f64| -> Vec<f64> {
                rows.iter().filter(|r| r.method == method).map(f).collect()
            };
            let f1 = pick(|r| r.f1);
            MethodSummary {
                method,
                mean_precision: mean(&pick(|r| r.precision)),
                mean_recall: mean(&pick(|r| r.recall)),
                mean_f1: mean(&f1),
                sd_f1: sample_sd(&f1),
            }
        })
        .collect();
    Ok(ExperimentReport {
        config: cfg.clone(),
        seed,
        rows,
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            n: 80,
            p: 10,
            trials: 2,
            replicates: 4,
            methods: vec![Method::RawLasso, Method::Cpss, Method::AggregateOracle, Method::AggregateBootstrap],
            cpss: CpssOptions {
                b_pairs: 5,
                ..CpssOptions::default()
            },
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn rows_and_determinism() {
        let cfg = small();
        let a = run_experiment(&cfg, 3).unwrap();
        assert_eq!(a.rows.len(), 2 * 4);
        assert_eq!(a.summary.len(), 4);
        let b = run_experiment(&cfg, 3).unwrap();
        assert_eq!(a, b);
        let mut csv = Vec::new();
        a.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("trial,method,precision,recall,f1\n"));
        assert_eq!(text.lines().count(), 9);
    }

    #[test]
    fn knockoff_is_reserved() {
        let cfg = ExperimentConfig {
            methods: vec![Method::Knockoff],
            ..small()
        };
        match run_experiment(&cfg, 0) {
            Err(SimError::InvalidExperiment { key, .. }) => assert_eq!(key, "methods"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn config_keys_named_in_errors() {
        let cfg = ExperimentConfig {
            thresholds: vec![1.5],
            ..small()
        };
        assert!(matches!(cfg.validate(), Err(SimError::InvalidExperiment { key, .. }) if key == "thresholds"));
    }
}
