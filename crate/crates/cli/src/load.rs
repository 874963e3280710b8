//! Config loading with positioned diagnostics.

use specweights_core::config::{Command, ConfigIssue, RunConfig};
use std::fmt;
use std::path::{Path, PathBuf};

/// Anything that makes a config unusable before computation starts.
#[derive(Debug)]
pub struct SchemaError {
    pub file: PathBuf,
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub field: Option<String>,
    pub message: String,
}

impl fmt::Display for SchemaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.file.display())?;
        if let Some(l) = self.line {
            write!(f, ":{l}")?;
            if let Some(c) = self.column {
                write!(f, ":{c}")?;
            }
        }
        write!(f, ": ")?;
        if let Some(field) = &self.field {
            write!(f, "field `{field}`: ")?;
        }
        write!(f, "{}", self.message)
    }
}

pub struct Loaded {
    pub config: RunConfig,
    pub seed: Option<u64>,
    /// Directory holding the config; relative paths resolve against it.
    pub base: PathBuf,
}

pub fn load(path: &Path, command: Command, env_seed: Option<&str>) -> Result<Loaded, SchemaError> {
    let err = |line, column, field, message: String| SchemaError {
        file: path.to_path_buf(),
        line,
        column,
        field,
        message,
    };
    let text = std::fs::read_to_string(path).map_err(|e| err(None, None, None, format!("cannot read config: {e}")))?;
    let mut de = serde_json::Deserializer::from_str(&text);
    let mut config: RunConfig = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let field = (path != ".").then_some(path);
        err(Some(inner.line()), Some(inner.column()), field, strip_position(&inner.to_string()))
    })?;
    de.end()
        .map_err(|e| err(Some(e.line()), Some(e.column()), None, strip_position(&e.to_string())))?;

    let seed = match env_seed {
        Some(s) => Some(s.trim().parse::<u64>().map_err(|_| {
            err(None, None, Some("seed".into()), format!("SPECWEIGHTS_SEED `{s}` is not an unsigned integer"))
        })?),
        None => config.seed,
    };
    config.validate(command, seed).map_err(|ConfigIssue { field, message }| {
        let line = locate(&text, &field);
        err(line, None, Some(field), message)
    })?;

    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    config = resolve_mesh_paths(config, &base).map_err(|m| err(None, None, None, m))?;
    Ok(Loaded { config, seed, base })
}

/// serde_json appends " at line L column C"; the position is reported
/// separately.
fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

/// Line of the first occurrence of the last key in a dotted field path.
fn locate(text: &str, field: &str) -> Option<usize> {
    let key = field.rsplit('.').next()?;
    let needle = format!("\"{key}\"");
    text.lines().position(|l| l.contains(&needle)).map(|i| i + 1)
}

/// Rewrites relative OFF paths anywhere in the config to be relative to
/// the config file's directory.
fn resolve_mesh_paths(config: RunConfig, base: &Path) -> Result<RunConfig, String> {
    fn walk(v: &mut serde_json::Value, base: &Path) {
        match v {
            serde_json::Value::Object(map) => {
                if map.get("kind").and_then(|k| k.as_str()) == Some("off_mesh") {
                    if let Some(serde_json::Value::String(p)) = map.get_mut("path") {
                        if Path::new(p.as_str()).is_relative() {
                            *p = base.join(p.as_str()).to_string_lossy().into_owned();
                        }
                    }
                }
                map.values_mut().for_each(|x| walk(x, base));
            }
            serde_json::Value::Array(a) => a.iter_mut().for_each(|x| walk(x, base)),
            _ => {}
        }
    }
    let mut v = serde_json::to_value(&config).map_err(|e| e.to_string())?;
    walk(&mut v, base);
    serde_json::from_value(v).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn locate_finds_key_lines() {
        let t = "{\n  \"spec_version\": 1,\n  \"seed\": 3\n}";
        assert_eq!(locate(t, "seed"), Some(3));
        assert_eq!(locate(t, "domain"), None);
    }

    #[test]
    fn position_suffix_is_removed() {
        assert_eq!(strip_position("unknown field `x` at line 3 column 7"), "unknown field `x`");
    }
}
