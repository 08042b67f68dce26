//! Parameter resolution: built-in defaults, then the JSON config file, then explicit flags.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::CliError;

pub const OUT_DIR_ENV: &str = "ZENO_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "zeno-out";

/// A flat JSON object, or a run manifest whose `config` echo is used.
pub fn load_config(path: &Path) -> Result<Map<String, Value>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::io(format!("cannot read config {}: {e}", path.display())))?;
    let v: Value =
        serde_json::from_str(&text).map_err(|e| CliError::parse(format!("config {}: {e}", path.display())))?;
    let obj = match v {
        Value::Object(mut o) if o.contains_key("command") && o.contains_key("config") => {
            o.remove("config").unwrap_or_default()
        }
        other => other,
    };
    match obj {
        Value::Object(o) => Ok(o),
        _ => Err(CliError::parse(format!("config {} is not a JSON object", path.display()))),
    }
}

fn overlay(base: &mut Map<String, Value>, top: Map<String, Value>, source: &str) -> Result<(), CliError> {
    for (k, v) in top {
        if !base.contains_key(&k) {
            return Err(CliError::param(format!("unknown {source} key '{k}'")));
        }
        if !v.is_null() {
            base.insert(k, v);
        }
    }
    Ok(())
}

/// Defaults of `P`, overlaid by the config file and then by every flag that was given.
/// `flags` serializes to an object whose absent options are null.
pub fn resolve<P: Serialize + DeserializeOwned + Default>(
    file: Option<&Map<String, Value>>,
    flags: &impl Serialize,
) -> Result<(P, Value), CliError> {
    let mut merged = match serde_json::to_value(P::default()).map_err(CliError::internal)? {
        Value::Object(o) => o,
        _ => return Err(CliError::internal("parameters must serialize to an object")),
    };
    // Keys whose default is null (optional parameters) are still valid keys.
    if let Some(f) = file {
        overlay(&mut merged, f.clone(), "config")?;
    }
    if let Value::Object(o) = serde_json::to_value(flags).map_err(CliError::internal)? {
        overlay(&mut merged, o, "flag")?;
    }
    let value = Value::Object(merged);
    let params =
        serde_json::from_value(value.clone()).map_err(|e| CliError::param(format!("invalid parameters: {e}")))?;
    Ok((params, value))
}

/// Flag, then the environment override, then the config file's `out_dir`, then the default.
pub fn out_dir(flag: Option<&Path>, file: Option<&Map<String, Value>>) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Ok(p) = std::env::var(OUT_DIR_ENV) {
        if !p.is_empty() {
            return PathBuf::from(p);
        }
    }
    file.and_then(|f| f.get("out_dir"))
        .and_then(Value::as_str)
        .map_or_else(|| PathBuf::from(DEFAULT_OUT_DIR), PathBuf::from)
}

/// Parses "2..5" (inclusive), "2,3,4" or "3".
pub fn parse_n_list(s: &str) -> Result<Vec<usize>, String> {
    let bad = |_| format!("invalid n list '{s}'");
    if let Some((a, b)) = s.split_once("..") {
        let (a, b): (usize, usize) = (a.trim().parse().map_err(bad)?, b.trim().parse().map_err(bad)?);
        if a > b {
            return Err(format!("empty range '{s}'"));
        }
        return Ok((a..=b).collect());
    }
    s.split(',').map(|x| x.trim().parse().map_err(bad)).collect()
}
