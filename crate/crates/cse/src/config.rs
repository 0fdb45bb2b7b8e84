//! Key=value config files: one `key = value` pair per line, `#` comments,
//! keys named exactly like the corresponding CLI flags (without `--`).
//! Explicit flags override config values; config values override defaults.

use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};

pub fn read_config(path: &Path) -> Result<HashMap<String, String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut map = HashMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::format(path, format!("line {}: expected key=value", lineno + 1))
        })?;
        let key = key.trim().to_string();
        if key.is_empty() {
            return Err(Error::format(path, format!("line {}: empty key", lineno + 1)));
        }
        if map.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(Error::format(path, format!("duplicate key '{key}'")));
        }
    }
    Ok(map)
}

/// Fetch and parse one optional typed value.
pub fn get<T: std::str::FromStr>(
    map: &HashMap<String, String>,
    path: &Path,
    key: &str,
) -> Result<Option<T>> {
    match map.get(key) {
        None => Ok(None),
        Some(raw) => raw
            .parse::<T>()
            .map(Some)
            .map_err(|_| Error::format(path, format!("bad value '{raw}' for key '{key}'"))),
    }
}
