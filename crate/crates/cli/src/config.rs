//! JSON config loading, `K=V` overrides and typed deserialization.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde_json::{Map, Value};

use crate::CliError;

/// Reads `path` (or starts from `{}`) and applies overrides in order.
pub fn load_value(path: Option<&Path>, overrides: &[String]) -> Result<Value, CliError> {
    let mut root = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
        }
        None => Value::Object(Map::new()),
    };
    for item in overrides {
        let (key, raw) = item
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("override {item:?} is not K=V")))?;
        set_path(&mut root, key, parse_scalar(raw))?;
    }
    Ok(root)
}

/// JSON if it parses, otherwise a plain string.
fn parse_scalar(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

/// Sets a dotted path such as `kernel.family` or `collections.0.a`.
pub fn set_path(root: &mut Value, key: &str, value: Value) -> Result<(), CliError> {
    if key.is_empty() {
        return Err(CliError::Config("override with empty key".into()));
    }
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let last = i + 1 == parts.len();
        node = match node {
            Value::Array(items) => {
                let idx: usize = part.parse().map_err(|_| {
                    CliError::Config(format!("override {key}: {part:?} is not an array index"))
                })?;
                let len = items.len();
                items.get_mut(idx).ok_or_else(|| {
                    CliError::Config(format!("override {key}: index {idx} out of range ({len})"))
                })?
            }
            Value::Object(map) => map.entry(part.to_string()).or_insert(Value::Null),
            other => {
                *other = Value::Object(Map::new());
                other
                    .as_object_mut()
                    .expect("just created")
                    .entry(part.to_string())
                    .or_insert(Value::Null)
            }
        };
        if last {
            *node = value;
            return Ok(());
        }
    }
    unreachable!("non-empty key always has a last segment")
}

/// Deserializes with the offending field path in the error.
pub fn typed<T: DeserializeOwned>(value: Value) -> Result<T, CliError> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        CliError::Config(format!("at `{path}`: {}", e.into_inner()))
    })
}
