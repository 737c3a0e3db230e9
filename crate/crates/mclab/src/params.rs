//! Declared parameter schemas and validated parameter maps.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{bad, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ParamValue {
    Int(i64),
    Real(f64),
    Text(String),
}

#[derive(Clone, Copy, Debug)]
pub enum ParamKind {
    /// Inclusive range.
    Int { min: i64, max: i64 },
    /// Inclusive range; use `f64::MIN_POSITIVE` for an open zero.
    Real { min: f64, max: f64 },
    Text,
    Choice(&'static [&'static str]),
}

#[derive(Clone, Copy, Debug)]
pub struct ParamSpec {
    pub name: &'static str,
    pub kind: ParamKind,
    pub default: &'static str,
    pub help: &'static str,
}

impl ParamSpec {
    pub fn parse(&self, raw: &str) -> Result<ParamValue> {
        let name = self.name;
        match self.kind {
            ParamKind::Int { min, max } => {
                let v: i64 = raw
                    .trim()
                    .parse()
                    .map_err(|_| bad(format!("--{name}: expected an integer, got {raw:?}")))?;
                if v < min || v > max {
                    return Err(bad(format!("--{name}: {v} outside [{min}, {max}]")));
                }
                Ok(ParamValue::Int(v))
            }
            ParamKind::Real { min, max } => {
                let v: f64 = raw
                    .trim()
                    .parse()
                    .map_err(|_| bad(format!("--{name}: expected a number, got {raw:?}")))?;
                if !(v >= min && v <= max) {
                    return Err(bad(format!("--{name}: {v} outside [{min}, {max}]")));
                }
                Ok(ParamValue::Real(v))
            }
            ParamKind::Text => {
                if raw.trim().is_empty() {
                    return Err(bad(format!("--{name}: empty value")));
                }
                Ok(ParamValue::Text(raw.trim().to_string()))
            }
            ParamKind::Choice(options) => {
                if options.contains(&raw) {
                    Ok(ParamValue::Text(raw.to_string()))
                } else {
                    Err(bad(format!("--{name}: {raw:?} is not one of {options:?}")))
                }
            }
        }
    }

    /// Short type description for listings.
    pub fn kind_label(&self) -> String {
        match self.kind {
            ParamKind::Int { min, max } => format!("int in [{min}, {max}]"),
            ParamKind::Real { min, max } if min == f64::MIN_POSITIVE => format!("real in (0, {max}]"),
            ParamKind::Real { min, max } => format!("real in [{min}, {max}]"),
            ParamKind::Text => "text".into(),
            ParamKind::Choice(options) => options.join("|"),
        }
    }
}

/// Parameters after validation, with every declared name present.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Params(BTreeMap<String, ParamValue>);

impl Params {
    /// Validates `raw` against `schema` and fills in defaults.
    pub fn resolve(schema: &[ParamSpec], raw: &BTreeMap<String, String>) -> Result<Self> {
        for key in raw.keys() {
            if !schema.iter().any(|p| p.name == key) {
                let known: Vec<&str> = schema.iter().map(|p| p.name).collect();
                return Err(bad(format!("unknown parameter --{key} (known: {known:?})")));
            }
        }
        let mut out = BTreeMap::new();
        for spec in schema {
            let text = raw.get(spec.name).map(String::as_str).unwrap_or(spec.default);
            out.insert(spec.name.to_string(), spec.parse(text)?);
        }
        Ok(Self(out))
    }

    pub fn int(&self, name: &str) -> Result<i64> {
        match self.0.get(name) {
            Some(ParamValue::Int(v)) => Ok(*v),
            _ => Err(bad(format!("missing integer parameter {name}"))),
        }
    }

    pub fn usize(&self, name: &str) -> Result<usize> {
        usize::try_from(self.int(name)?).map_err(|_| bad(format!("--{name} must be non-negative")))
    }

    pub fn real(&self, name: &str) -> Result<f64> {
        match self.0.get(name) {
            Some(ParamValue::Real(v)) => Ok(*v),
            Some(ParamValue::Int(v)) => Ok(*v as f64),
            _ => Err(bad(format!("missing numeric parameter {name}"))),
        }
    }

    pub fn text(&self, name: &str) -> Result<&str> {
        match self.0.get(name) {
            Some(ParamValue::Text(v)) => Ok(v),
            _ => Err(bad(format!("missing text parameter {name}"))),
        }
    }

    /// A comma-separated list of numbers.
    pub fn list<T: std::str::FromStr>(&self, name: &str) -> Result<Vec<T>> {
        let raw = self.text(name)?;
        let items = raw
            .split(',')
            .map(|s| s.trim().parse::<T>())
            .collect::<std::result::Result<Vec<T>, _>>()
            .map_err(|_| bad(format!("--{name}: cannot parse list {raw:?}")))?;
        if items.is_empty() {
            return Err(bad(format!("--{name}: empty list")));
        }
        Ok(items)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &ParamValue)> {
        self.0.iter()
    }
}
