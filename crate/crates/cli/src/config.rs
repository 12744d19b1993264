//! Option resolution: command-line flags override config-file entries, which
//! override environment variables, which override built-in defaults.

use std::collections::BTreeMap;
use std::path::Path;

use trajcluster::{ArgValue, Error, Result};

/// Environment variables providing global defaults for the index columns.
pub const ENV_ID: &str = "TRAJCLUSTER_ID";
pub const ENV_TIME: &str = "TRAJCLUSTER_TIME";

/// Flat `key = value` config file; `#` starts a comment.
pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path)?;
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::InvalidSpec(format!(
                "config line {} is not `key = value`: `{raw}`",
                lineno + 1
            ))
        })?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

/// Resolved column names and shared settings for data-facing commands.
#[derive(Debug, Clone)]
pub struct Columns {
    pub id: String,
    pub time: String,
    pub response: String,
    pub group: Option<String>,
}

pub struct Resolver {
    file: BTreeMap<String, String>,
}

impl Resolver {
    pub fn new(config_path: Option<&Path>) -> Result<Self> {
        let file = match config_path {
            Some(p) => read_config_file(p)?,
            None => BTreeMap::new(),
        };
        Ok(Self { file })
    }

    /// flag > config file > env > default.
    fn resolve(
        &self,
        flag: Option<&str>,
        key: &str,
        env: Option<&str>,
        default: &str,
    ) -> String {
        if let Some(v) = flag {
            return v.to_string();
        }
        if let Some(v) = self.file.get(key) {
            return v.clone();
        }
        if let Some(env_key) = env {
            if let Ok(v) = std::env::var(env_key) {
                if !v.is_empty() {
                    return v;
                }
            }
        }
        default.to_string()
    }

    pub fn columns(
        &self,
        id: Option<&str>,
        time: Option<&str>,
        response: Option<&str>,
        group: Option<&str>,
    ) -> Columns {
        Columns {
            id: self.resolve(id, "id", Some(ENV_ID), "id"),
            time: self.resolve(time, "time", Some(ENV_TIME), "time"),
            response: self.resolve(response, "response", None, "value"),
            group: group
                .map(str::to_string)
                .or_else(|| self.file.get("group").cloned()),
        }
    }

    pub fn string(&self, flag: Option<&str>, key: &str, default: &str) -> String {
        self.resolve(flag, key, None, default)
    }

    pub fn file_value(&self, key: &str) -> Option<&str> {
        self.file.get(key).map(String::as_str)
    }
}

/// Parse `--arg name=value` overrides into method arguments. Values are read
/// as integer, then real, then boolean, then string.
pub fn parse_arg_overrides(args: &[String]) -> Result<Vec<(String, ArgValue)>> {
    args.iter()
        .map(|raw| {
            let (key, value) = raw.split_once('=').ok_or_else(|| {
                Error::InvalidSpec(format!("--arg needs `name=value`, got `{raw}`"))
            })?;
            Ok((key.trim().to_string(), parse_arg_value(value.trim())))
        })
        .collect()
}

pub fn parse_arg_value(value: &str) -> ArgValue {
    if let Ok(v) = value.parse::<i64>() {
        return ArgValue::Int(v);
    }
    if let Ok(v) = value.parse::<f64>() {
        return ArgValue::Real(v);
    }
    match value {
        "true" => ArgValue::Bool(true),
        "false" => ArgValue::Bool(false),
        other => ArgValue::Str(other.to_string()),
    }
}

/// Cluster counts: `K`, `A..B` (inclusive), or a comma list.
pub fn parse_cluster_range(text: &str) -> Result<Vec<usize>> {
    let bad = || Error::InvalidSpec(format!("invalid cluster range `{text}`"));
    let parse_one = |s: &str| s.trim().parse::<usize>().map_err(|_| bad());
    let values: Vec<usize> = if let Some((a, b)) = text.split_once("..") {
        let (a, b) = (parse_one(a)?, parse_one(b)?);
        if a > b {
            return Err(bad());
        }
        (a..=b).collect()
    } else if text.contains(',') {
        text.split(',').map(parse_one).collect::<Result<_>>()?
    } else {
        vec![parse_one(text)?]
    };
    if values.is_empty() || values.contains(&0) {
        return Err(bad());
    }
    let mut sorted = values.clone();
    sorted.sort_unstable();
    if sorted != values {
        return Err(Error::InvalidSpec(format!(
            "cluster range `{text}` must be ascending"
        )));
    }
    Ok(values)
}
