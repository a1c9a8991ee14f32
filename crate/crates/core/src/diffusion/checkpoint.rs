use super::mlp::DenoiserMlp;
use super::model::{DiffusionModel, Layout, TrainConfig};
use super::schedule::NoiseSchedule;
use super::DiffusionError;
use crate::data::{Schema, StandardizationStats};
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

pub const CHECKPOINT_VERSION: u32 = 1;
const FORMAT: &str = "synthsel-diffusion";

/// Header fields are plain JSON; every real array is a hex string of
/// little-endian IEEE-754 doubles so the round trip is bit-exact.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Doc {
    format: String,
    version: u32,
    config: TrainConfig,
    schema: Schema,
    n_train: usize,
    stats_columns: Vec<usize>,
    stats_means: String,
    stats_sds: String,
    beta: String,
    alpha_bar: String,
    dims: Vec<usize>,
    weights: Vec<String>,
    biases: Vec<String>,
    train_log: String,
}

fn enc(v: &[f64]) -> String {
    let mut bytes = Vec::with_capacity(v.len() * 8);
    for x in v {
        bytes.extend_from_slice(&x.to_le_bytes());
    }
    hex::encode(bytes)
}

fn dec(s: &str, expected: Option<usize>, what: &str) -> Result<Vec<f64>, DiffusionError> {
    let bytes = hex::decode(s).map_err(|e| DiffusionError::CheckpointCorrupt(format!("{what}: {e}")))?;
    if bytes.len() % 8 != 0 {
        return Err(DiffusionError::CheckpointCorrupt(format!("{what}: {} bytes is not a multiple of 8", bytes.len())));
    }
    let v: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    if let Some(n) = expected {
        if v.len() != n {
            return Err(DiffusionError::CheckpointCorrupt(format!("{what}: {} values, expected {n}", v.len())));
        }
    }
    Ok(v)
}

pub fn write_checkpoint<W: Write>(m: &DiffusionModel, mut w: W) -> Result<(), DiffusionError> {
    let doc = Doc {
        format: FORMAT.into(),
        version: CHECKPOINT_VERSION,
        config: m.config.clone(),
        schema: m.schema.clone(),
        n_train: m.n_train,
        stats_columns: m.stats.column_indices.clone(),
        stats_means: enc(&m.stats.means),
        stats_sds: enc(&m.stats.sds),
        beta: enc(&m.schedule.beta),
        alpha_bar: enc(&m.schedule.alpha_bar),
        dims: m.net.dims.clone(),
        weights: m.net.weights.iter().map(|w| enc(w)).collect(),
        biases: m.net.biases.iter().map(|b| enc(b)).collect(),
        train_log: enc(&m.train_log),
    };
    let text = serde_json::to_string_pretty(&doc).expect("checkpoint serializes");
    let io = |source| DiffusionError::Io {
        path: "<checkpoint writer>".into(),
        source,
    };
    w.write_all(text.as_bytes()).map_err(io)?;
    w.write_all(b"\n").map_err(io)?;
    Ok(())
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<DiffusionModel, DiffusionError> {
    let mut text = String::new();
    r.read_to_string(&mut text).map_err(|source| DiffusionError::Io {
        path: "<checkpoint reader>".into(),
        source,
    })?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| DiffusionError::CheckpointCorrupt(e.to_string()))?;
    if value.get("format").and_then(|f| f.as_str()) != Some(FORMAT) {
        return Err(DiffusionError::CheckpointCorrupt("missing or unknown format tag".into()));
    }
    match value.get("version") {
        Some(v) if v.as_u64() == Some(CHECKPOINT_VERSION as u64) => {}
        other => {
            return Err(DiffusionError::CheckpointVersion {
                found: other.map_or_else(|| "none".to_string(), |v| v.to_string()),
                expected: CHECKPOINT_VERSION,
            })
        }
    }
    let doc: Doc = serde_json::from_value(value).map_err(|e| DiffusionError::CheckpointCorrupt(e.to_string()))?;
    doc.config
        .validate()
        .map_err(|e| DiffusionError::CheckpointCorrupt(format!("config: {e}")))?;
    doc.schema
        .validate()
        .map_err(|e| DiffusionError::CheckpointCorrupt(format!("schema: {e}")))?;

    let layout = Layout::new(&doc.schema, doc.config.categorical_mode);
    let mut expected_dims = vec![layout.data_dim() + doc.config.embedding_dim];
    expected_dims.extend(&doc.config.hidden_dims);
    expected_dims.push(layout.data_dim());
    if doc.dims != expected_dims {
        return Err(DiffusionError::CheckpointCorrupt(format!(
            "layer dims {:?} do not match schema and config ({expected_dims:?})",
            doc.dims
        )));
    }
    let layers = doc.dims.len() - 1;
    if doc.weights.len() != layers || doc.biases.len() != layers {
        return Err(DiffusionError::CheckpointCorrupt("layer count mismatch".into()));
    }
    let mut weights = Vec::with_capacity(layers);
    let mut biases = Vec::with_capacity(layers);
    for l in 0..layers {
        weights.push(dec(&doc.weights[l], Some(doc.dims[l] * doc.dims[l + 1]), "weights")?);
        biases.push(dec(&doc.biases[l], Some(doc.dims[l + 1]), "biases")?);
    }
    let n_cont = doc.schema.continuous_indices();
    if doc.stats_columns != n_cont {
        return Err(DiffusionError::CheckpointCorrupt("standardization columns do not match schema".into()));
    }
    let stats = StandardizationStats {
        column_indices: doc.stats_columns,
        means: dec(&doc.stats_means, Some(n_cont.len()), "stats_means")?,
        sds: dec(&doc.stats_sds, Some(n_cont.len()), "stats_sds")?,
    };
    let t = doc.config.timesteps;
    let schedule = NoiseSchedule {
        kind: doc.config.schedule,
        beta: dec(&doc.beta, Some(t), "beta")?,
        alpha_bar: dec(&doc.alpha_bar, Some(t), "alpha_bar")?,
    };
    Ok(DiffusionModel {
        net: DenoiserMlp {
            dims: doc.dims,
            weights,
            biases,
        },
        train_log: dec(&doc.train_log, None, "train_log")?,
        config: doc.config,
        schema: doc.schema,
        stats,
        schedule,
        n_train: doc.n_train,
    })
}

pub fn save_checkpoint(m: &DiffusionModel, path: &Path) -> Result<(), DiffusionError> {
    let io = |source| DiffusionError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut buf = Vec::new();
    write_checkpoint(m, &mut buf)?;
    std::fs::write(path, buf).map_err(io)
}

pub fn load_checkpoint(path: &Path) -> Result<DiffusionModel, DiffusionError> {
    let file = std::fs::File::open(path).map_err(|source| DiffusionError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_checkpoint(std::io::BufReader::new(file))
}
