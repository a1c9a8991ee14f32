use crate::error::CliError;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use synthsel_core::aggregate::{GraphRule, DEFAULT_THRESHOLDS};
use synthsel_core::diffusion::{CategoricalMode, ScheduleKind, TrainConfig};
use synthsel_core::simbench::ExperimentConfig;

/// One document drives one command; sections a command does not use are ignored
/// but still validated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub data: DataSection,
    pub diffusion: TrainConfig,
    /// Extra diffusion candidates for the tuning loop; each entry overrides fields of `diffusion`.
    pub diffusion_grid: Vec<GridPoint>,
    pub generate: GenerateSection,
    pub selection: SelectionSection,
    pub inference: InferenceSection,
    pub graph: GraphSection,
    pub simulate: ExperimentConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            data: DataSection::default(),
            diffusion: TrainConfig::default(),
            diffusion_grid: Vec::new(),
            generate: GenerateSection::default(),
            selection: SelectionSection::default(),
            inference: InferenceSection::default(),
            graph: GraphSection::default(),
            simulate: ExperimentConfig::default(),
        }
    }
}

/// Paths are relative to the config file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    pub csv: Option<PathBuf>,
    pub schema: Option<PathBuf>,
    /// Diffusion checkpoint to load instead of training.
    pub checkpoint: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridPoint {
    pub epochs: Option<usize>,
    pub timesteps: Option<usize>,
    pub learning_rate: Option<f64>,
    pub hidden_dims: Option<Vec<usize>>,
    pub schedule: Option<ScheduleKind>,
    pub categorical_mode: Option<CategoricalMode>,
}

impl GridPoint {
    pub fn apply(&self, base: &TrainConfig) -> TrainConfig {
        let mut c = base.clone();
        if let Some(v) = self.epochs {
            c.epochs = v;
        }
        if let Some(v) = self.timesteps {
            c.timesteps = v;
        }
        if let Some(v) = self.learning_rate {
            c.learning_rate = v;
        }
        if let Some(v) = &self.hidden_dims {
            c.hidden_dims = v.clone();
        }
        if let Some(v) = self.schedule {
            c.schedule = v;
        }
        if let Some(v) = self.categorical_mode {
            c.categorical_mode = v;
        }
        c
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerateSection {
    /// Rows to draw; defaults to the checkpoint's training size.
    pub n: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorChoice {
    #[default]
    Diffusion,
    Bootstrap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyChoice {
    /// Logistic for a binary categorical response, linear otherwise.
    #[default]
    Auto,
    Linear,
    Logistic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionSection {
    pub generator: GeneratorChoice,
    #[serde(rename = "B")]
    pub replicates: usize,
    /// Fixes the threshold; otherwise every value in `thresholds` is tried.
    pub pi_thres: Option<f64>,
    pub thresholds: Vec<f64>,
    pub gamma: f64,
    pub family: FamilyChoice,
    pub grid_size: usize,
    /// Rows per synthetic replicate; defaults to the training size.
    pub n_syn: Option<usize>,
    /// When nonempty, each size becomes a separate tuning candidate.
    pub n_syn_grid: Vec<usize>,
}

impl Default for SelectionSection {
    fn default() -> Self {
        Self {
            generator: GeneratorChoice::Diffusion,
            replicates: 20,
            pi_thres: None,
            thresholds: DEFAULT_THRESHOLDS.to_vec(),
            gamma: 1.0,
            family: FamilyChoice::Auto,
            grid_size: 50,
            n_syn: None,
            n_syn_grid: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InferenceSection {
    pub alpha_level: f64,
}

impl Default for InferenceSection {
    fn default() -> Self {
        Self { alpha_level: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphSection {
    pub rule: GraphRule,
    pub pi_thres: f64,
}

impl Default for GraphSection {
    fn default() -> Self {
        Self {
            rule: GraphRule::Or,
            pi_thres: 0.7,
        }
    }
}

fn range(key: &str, message: String) -> CliError {
    CliError::Config {
        key: key.to_string(),
        message,
    }
}

fn check_prob(key: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v <= 1.0 {
        Ok(())
    } else {
        Err(range(key, format!("{v} outside (0, 1]")))
    }
}

fn check_train(prefix: &str, c: &TrainConfig) -> Result<(), CliError> {
    let key = |k: &str| format!("{prefix}.{k}");
    if c.epochs == 0 {
        return Err(range(&key("epochs"), "must be >= 1 (no training performed)".into()));
    }
    if c.timesteps < 2 {
        return Err(range(&key("timesteps"), format!("{} must be >= 2", c.timesteps)));
    }
    if c.batch_size == 0 {
        return Err(range(&key("batch_size"), "must be >= 1".into()));
    }
    if !(c.learning_rate > 0.0 && c.learning_rate < 1.0) {
        return Err(range(&key("learning_rate"), format!("{} outside (0, 1)", c.learning_rate)));
    }
    if c.hidden_dims.is_empty() || c.hidden_dims.contains(&0) {
        return Err(range(&key("hidden_dims"), "must be nonempty with positive widths".into()));
    }
    if c.embedding_dim < 2 || c.embedding_dim % 2 != 0 {
        return Err(range(&key("embedding_dim"), format!("{} must be even and >= 2", c.embedding_dim)));
    }
    // Remaining checks (e.g. a schedule that does not reach noise) come from the library.
    c.validate().map_err(|e| range(prefix, e.to_string()))
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| {
            let message = e.message().replace('\n', " ");
            let key = e
                .span()
                .and_then(|s| text.get(s))
                .map(|s| s.trim().trim_matches('"').to_string())
                .filter(|s| !s.is_empty() && !s.contains('\n'))
                .unwrap_or_else(|| "<document>".into());
            CliError::Config { key, message }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config always serializes")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        check_train("diffusion", &self.diffusion)?;
        for (i, g) in self.diffusion_grid.iter().enumerate() {
            check_train(&format!("diffusion_grid[{i}]"), &g.apply(&self.diffusion))?;
        }
        if self.generate.n == Some(0) {
            return Err(range("generate.n", "must be >= 1".into()));
        }
        let s = &self.selection;
        if s.replicates == 0 {
            return Err(range("selection.B", "must be >= 1".into()));
        }
        if let Some(t) = s.pi_thres {
            check_prob("selection.pi_thres", t)?;
        }
        if s.thresholds.is_empty() {
            return Err(range("selection.thresholds", "must be nonempty".into()));
        }
        for &t in &s.thresholds {
            check_prob("selection.thresholds", t)?;
        }
        if !(s.gamma >= 0.0 && s.gamma.is_finite()) {
            return Err(range("selection.gamma", format!("{} must be finite and >= 0", s.gamma)));
        }
        if s.grid_size < 2 {
            return Err(range("selection.grid_size", format!("{} must be >= 2", s.grid_size)));
        }
        if let Some(n) = s.n_syn {
            if n < 2 {
                return Err(range("selection.n_syn", format!("{n} must be >= 2")));
            }
        }
        if let Some(&n) = s.n_syn_grid.iter().find(|&&n| n < 2) {
            return Err(range("selection.n_syn_grid", format!("{n} must be >= 2")));
        }
        if !(self.inference.alpha_level > 0.0 && self.inference.alpha_level < 1.0) {
            return Err(range(
                "inference.alpha_level",
                format!("{} outside (0, 1)", self.inference.alpha_level),
            ));
        }
        check_prob("graph.pi_thres", self.graph.pi_thres)?;
        self.simulate.validate().map_err(|e| match e {
            synthsel_core::simbench::SimError::InvalidExperiment { key, message } => {
                range(&format!("simulate.{key}"), message)
            }
            other => range("simulate", other.to_string()),
        })?;
        if self.simulate.diffusion != TrainConfig::default() {
            check_train("simulate.diffusion", &self.simulate.diffusion)?;
        }
        Ok(())
    }
}

/// Reads and validates a config; the directory holding it anchors relative data paths.
pub fn parse_config(path: &Path) -> Result<(RunConfig, PathBuf), CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let cfg = RunConfig::from_toml_str(&text)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((cfg, base))
}

/// Resolves a required path from the `data` section.
pub fn required_path(base: &Path, value: &Option<PathBuf>, key: &str) -> Result<PathBuf, CliError> {
    match value {
        Some(p) if p.is_absolute() => Ok(p.clone()),
        Some(p) => Ok(base.join(p)),
        None => Err(range(key, "missing required key".into())),
    }
}

pub fn optional_path(base: &Path, value: &Option<PathBuf>) -> Option<PathBuf> {
    value.as_ref().map(|p| if p.is_absolute() { p.clone() } else { base.join(p) })
}
