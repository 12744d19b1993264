//! Method argument values: scalars, names, and small lists.

use std::fmt;

/// An argument value inside a [`super::MethodSpec`]. Arguments are evaluated
/// eagerly at construction; the specification's provenance string keeps the
/// human-readable construction form.
#[derive(Debug, Clone, PartialEq)]
pub enum ArgValue {
    Int(i64),
    Real(f64),
    Bool(bool),
    Str(String),
    List(Vec<ArgValue>),
}

impl ArgValue {
    pub fn as_int(&self) -> Option<i64> {
        match self {
            ArgValue::Int(v) => Some(*v),
            _ => None,
        }
    }

    /// Numeric view: integers widen to `f64`.
    pub fn as_real(&self) -> Option<f64> {
        match self {
            ArgValue::Real(v) => Some(*v),
            ArgValue::Int(v) => Some(*v as f64),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            ArgValue::Bool(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            ArgValue::Str(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&[ArgValue]> {
        match self {
            ArgValue::List(v) => Some(v),
            _ => None,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            ArgValue::Int(v) => serde_json::json!(v),
            ArgValue::Real(v) => serde_json::json!(v),
            ArgValue::Bool(v) => serde_json::json!(v),
            ArgValue::Str(v) => serde_json::json!(v),
            ArgValue::List(v) => {
                serde_json::Value::Array(v.iter().map(ArgValue::to_json).collect())
            }
        }
    }

    pub fn from_json(value: &serde_json::Value) -> Option<ArgValue> {
        match value {
            serde_json::Value::Bool(b) => Some(ArgValue::Bool(*b)),
            serde_json::Value::Number(n) => {
                if let Some(i) = n.as_i64() {
                    Some(ArgValue::Int(i))
                } else {
                    n.as_f64().map(ArgValue::Real)
                }
            }
            serde_json::Value::String(s) => Some(ArgValue::Str(s.clone())),
            serde_json::Value::Array(items) => items
                .iter()
                .map(ArgValue::from_json)
                .collect::<Option<Vec<_>>>()
                .map(ArgValue::List),
            _ => None,
        }
    }
}

impl fmt::Display for ArgValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArgValue::Int(v) => write!(f, "{v}"),
            ArgValue::Real(v) => write!(f, "{v}"),
            ArgValue::Bool(v) => write!(f, "{v}"),
            ArgValue::Str(v) => write!(f, "\"{v}\""),
            ArgValue::List(v) => {
                write!(f, "[")?;
                for (i, item) in v.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{item}")?;
                }
                write!(f, "]")
            }
        }
    }
}

impl From<i64> for ArgValue {
    fn from(v: i64) -> Self {
        ArgValue::Int(v)
    }
}

impl From<usize> for ArgValue {
    fn from(v: usize) -> Self {
        ArgValue::Int(v as i64)
    }
}

impl From<f64> for ArgValue {
    fn from(v: f64) -> Self {
        ArgValue::Real(v)
    }
}

impl From<bool> for ArgValue {
    fn from(v: bool) -> Self {
        ArgValue::Bool(v)
    }
}

impl From<&str> for ArgValue {
    fn from(v: &str) -> Self {
        ArgValue::Str(v.to_string())
    }
}

impl From<String> for ArgValue {
    fn from(v: String) -> Self {
        ArgValue::Str(v)
    }
}
