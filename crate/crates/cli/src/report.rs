use crate::config::RunConfig;
use crate::error::CliError;
use serde::Serialize;
use serde_json::{Map, Number, Value};
use std::path::{Path, PathBuf};
use synthsel_core::numerics::round_sig;

pub const TOOL: &str = "synthsel";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const SIG_DIGITS: usize = 10;

/// Rounds every non-integer number to `SIG_DIGITS` significant digits.
pub fn round_floats(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("f64 number");
            Number::from_f64(round_sig(x, SIG_DIGITS)).map_or(Value::Null, Value::Number)
        }
        Value::Array(items) => Value::Array(items.into_iter().map(round_floats).collect()),
        Value::Object(map) => Value::Object(map.into_iter().map(|(k, v)| (k, round_floats(v))).collect()),
        other => other,
    }
}

/// Result document: keys sorted, floats at 10 significant digits, with the
/// config echo, seed and tool version alongside the result.
pub fn envelope<T: Serialize>(command: &str, cfg: &RunConfig, seed: u64, result: &T) -> Result<String, CliError> {
    let mut m = Map::new();
    m.insert("tool".into(), Value::String(TOOL.into()));
    m.insert("version".into(), Value::String(VERSION.into()));
    m.insert("command".into(), Value::String(command.into()));
    m.insert("seed".into(), Value::from(seed));
    m.insert("config".into(), to_value(cfg)?);
    m.insert("result".into(), to_value(result)?);
    let mut text = serde_json::to_string_pretty(&round_floats(Value::Object(m))).expect("value serializes");
    text.push('\n');
    Ok(text)
}

fn to_value<T: Serialize>(v: &T) -> Result<Value, CliError> {
    serde_json::to_value(v).map_err(|e| CliError::Usage(format!("cannot serialize report: {e}")))
}

/// Files written by one command. Everything is staged under a temporary name and
/// only renamed into place by `commit`; dropping an uncommitted set deletes the staged files.
pub struct Outputs {
    dir: PathBuf,
    staged: Vec<(PathBuf, PathBuf)>,
    committed: bool,
}

impl Outputs {
    pub fn new(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        Ok(Self {
            dir: dir.to_path_buf(),
            staged: Vec::new(),
            committed: false,
        })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let target = self.dir.join(name);
        let tmp = self.dir.join(format!(".{name}.partial"));
        self.staged.push((tmp.clone(), target.clone()));
        std::fs::write(&tmp, bytes).map_err(|source| CliError::Io { path: tmp, source })?;
        Ok(target)
    }

    pub fn commit(mut self) -> Result<Vec<PathBuf>, CliError> {
        let mut done = Vec::new();
        for (tmp, target) in &self.staged {
            std::fs::rename(tmp, target).map_err(|source| CliError::Io {
                path: target.clone(),
                source,
            })?;
            done.push(target.clone());
        }
        self.committed = true;
        Ok(done)
    }
}

impl Drop for Outputs {
    fn drop(&mut self) {
        if !self.committed {
            for (tmp, _) in &self.staged {
                let _ = std::fs::remove_file(tmp);
            }
        }
    }
}
