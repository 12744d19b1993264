//! Immutable method specifications.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};

use super::args::ArgValue;
use super::registry;

/// Keys present in every specification regardless of method.
pub const BASE_KEYS: [&str; 4] = ["id", "time", "response", "nClusters"];

fn base_defaults() -> Vec<(&'static str, ArgValue)> {
    vec![
        ("id", ArgValue::Str("id".into())),
        ("time", ArgValue::Str("time".into())),
        ("response", ArgValue::Str("value".into())),
        ("nClusters", ArgValue::Int(2)),
    ]
}

/// An immutable named-argument bundle identifying a clustering method and its
/// settings. Updates produce new specs; equality compares method and
/// arguments but not provenance.
#[derive(Debug, Clone)]
pub struct MethodSpec {
    method: String,
    args: BTreeMap<String, ArgValue>,
    provenance: String,
}

impl PartialEq for MethodSpec {
    fn eq(&self, other: &Self) -> bool {
        self.method == other.method && self.args == other.args
    }
}

impl MethodSpec {
    /// Create a spec for a registered method: method defaults merged with
    /// `overrides`. Unknown argument *names* are accepted here and rejected
    /// at estimation time.
    pub fn new<K, V, I>(method: &str, overrides: I) -> Result<Self>
    where
        I: IntoIterator<Item = (K, V)>,
        K: Into<String>,
        V: Into<ArgValue>,
    {
        let backend = registry::backend(method)?;
        let mut args: BTreeMap<String, ArgValue> = BTreeMap::new();
        for (k, v) in base_defaults() {
            args.insert(k.to_string(), v);
        }
        for (k, v) in backend.defaults() {
            args.insert(k.to_string(), v);
        }
        let mut shown = Vec::new();
        for (k, v) in overrides {
            let (k, v) = (k.into(), v.into());
            shown.push(format!("{k}: {v}"));
            args.insert(k, v);
        }
        let spec = Self {
            method: method.to_string(),
            args,
            provenance: format!("{method}({})", shown.join(", ")),
        };
        spec.check_invariants()?;
        Ok(spec)
    }

    /// Internal constructor for models that are built without a registered
    /// backend (for example direct partitions).
    pub(crate) fn bare(method: &str, args: BTreeMap<String, ArgValue>) -> Self {
        let mut full: BTreeMap<String, ArgValue> = BTreeMap::new();
        for (k, v) in base_defaults() {
            full.insert(k.to_string(), v);
        }
        full.extend(args);
        Self {
            method: method.to_string(),
            args: full,
            provenance: format!("{method}()"),
        }
    }

    fn check_invariants(&self) -> Result<()> {
        for key in BASE_KEYS {
            if !self.args.contains_key(key) {
                return Err(Error::InvalidSpec(format!("missing required key `{key}`")));
            }
        }
        match self.args["nClusters"].as_int() {
            Some(k) if k >= 1 => Ok(()),
            _ => Err(Error::InvalidSpec(
                "nClusters must be an integer >= 1".into(),
            )),
        }
    }

    /// New spec with `overrides` applied; the original is unchanged.
    pub fn update<K, V, I>(&self, overrides: I) -> Result<Self>
    where
        I: IntoIterator<Item = (K, V)>,
        K: Into<String>,
        V: Into<ArgValue>,
    {
        let mut args = self.args.clone();
        let mut shown = Vec::new();
        for (k, v) in overrides {
            let (k, v) = (k.into(), v.into());
            shown.push(format!("{k}: {v}"));
            args.insert(k, v);
        }
        let spec = Self {
            method: self.method.clone(),
            args,
            provenance: format!("update({}, {})", self.provenance, shown.join(", ")),
        };
        spec.check_invariants()?;
        Ok(spec)
    }

    /// One spec per value of `arg`, in order.
    pub fn permute<V: Into<ArgValue>>(&self, arg: &str, values: Vec<V>) -> Result<Vec<Self>> {
        if values.is_empty() {
            return Err(Error::InvalidSpec(format!(
                "permute over `{arg}` needs at least one value"
            )));
        }
        values
            .into_iter()
            .map(|v| self.update([(arg, v.into())]))
            .collect()
    }

    pub fn method(&self) -> &str {
        &self.method
    }

    pub fn args(&self) -> &BTreeMap<String, ArgValue> {
        &self.args
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn get(&self, name: &str) -> Option<&ArgValue> {
        self.args.get(name)
    }

    pub fn int(&self, name: &str) -> Option<i64> {
        self.get(name).and_then(ArgValue::as_int)
    }

    pub fn real(&self, name: &str) -> Option<f64> {
        self.get(name).and_then(ArgValue::as_real)
    }

    pub fn bool_arg(&self, name: &str) -> Option<bool> {
        self.get(name).and_then(ArgValue::as_bool)
    }

    pub fn str_arg(&self, name: &str) -> Option<&str> {
        self.get(name).and_then(ArgValue::as_str)
    }

    pub fn n_clusters(&self) -> usize {
        self.int("nClusters").map(|k| k.max(1) as usize).unwrap_or(1)
    }

    pub fn response(&self) -> &str {
        self.str_arg("response").unwrap_or("value")
    }

    pub fn time_name(&self) -> &str {
        self.str_arg("time").unwrap_or("time")
    }

    pub fn id_name(&self) -> &str {
        self.str_arg("id").unwrap_or("id")
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let args: serde_json::Map<String, serde_json::Value> = self
            .args
            .iter()
            .map(|(k, v)| (k.clone(), v.to_json()))
            .collect();
        serde_json::json!({ "method": self.method, "args": args })
    }

    pub(crate) fn from_json_value(value: &serde_json::Value) -> Result<Self> {
        let method = value
            .get("method")
            .and_then(|m| m.as_str())
            .ok_or_else(|| Error::InvalidSpec("model json is missing `method`".into()))?;
        let mut args = BTreeMap::new();
        if let Some(obj) = value.get("args").and_then(|a| a.as_object()) {
            for (k, v) in obj {
                let parsed = ArgValue::from_json(v).ok_or_else(|| {
                    Error::InvalidSpec(format!("argument `{k}` has an unsupported json value"))
                })?;
                args.insert(k.clone(), parsed);
            }
        }
        Ok(Self::bare(method, args))
    }
}

impl fmt::Display for MethodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "method {}", self.method)?;
        for (k, v) in &self.args {
            writeln!(f, "  {k}: {v}")?;
        }
        Ok(())
    }
}
