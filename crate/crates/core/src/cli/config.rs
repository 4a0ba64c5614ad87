//! Flat key-value experiment configuration.
//!
//! A config file is a TOML document without tables: one `key = value` per
//! line, values being numbers, strings or arrays of numbers. `--set k=v`
//! overrides use the same value syntax; a bare word is read as a string.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(i64),
    Float(f64),
    Text(String),
    List(Vec<f64>),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Float(x) => write!(f, "{x:?}"),
            Value::Text(s) => write!(f, "{s:?}"),
            Value::List(v) => {
                let items: Vec<String> = v.iter().map(|x| format!("{x:?}")).collect();
                write!(f, "[{}]", items.join(", "))
            }
        }
    }
}

impl Value {
    fn from_toml(key: &str, v: toml::Value) -> Result<Self> {
        Ok(match v {
            toml::Value::Integer(i) => Value::Int(i),
            toml::Value::Float(x) => Value::Float(x),
            toml::Value::String(s) => Value::Text(s),
            toml::Value::Array(items) => Value::List(
                items
                    .into_iter()
                    .map(|item| match item {
                        toml::Value::Integer(i) => Ok(i as f64),
                        toml::Value::Float(x) => Ok(x),
                        other => Err(field(key, &format!("array entries must be numbers, got {other}"))),
                    })
                    .collect::<Result<_>>()?,
            ),
            other => return Err(field(key, &format!("unsupported value {other}"))),
        })
    }

    /// Parse the right-hand side of `key = value`.
    pub fn parse(key: &str, text: &str) -> Result<Self> {
        let doc = format!("v = {text}");
        match doc.parse::<toml::Table>() {
            Ok(mut t) => Value::from_toml(key, t.remove("v").expect("key v was written")),
            Err(_) => Ok(Value::Text(text.trim().to_string())),
        }
    }
}

fn field(key: &str, reason: &str) -> Error {
    Error::Config(format!("`{key}`: {reason}"))
}

/// A configuration key accepted by an experiment, with its default.
#[derive(Debug, Clone)]
pub struct Key {
    pub name: &'static str,
    pub default: Value,
    pub doc: &'static str,
}

/// Resolved parameters of one experiment run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub params: BTreeMap<String, Value>,
    pub seed: u64,
    pub tol: f64,
}

impl ExperimentConfig {
    /// Merge defaults, the config file and overrides (in that order) and
    /// reject keys the experiment does not know.
    pub fn resolve(
        experiment: &str,
        keys: &[Key],
        file: Option<&str>,
        overrides: &[(String, String)],
        seed: Option<u64>,
        tol: Option<f64>,
        default_tol: f64,
    ) -> Result<Self> {
        let mut given: BTreeMap<String, Value> = BTreeMap::new();
        if let Some(text) = file {
            let table: toml::Table = text.parse().map_err(|e| Error::Config(format!("config file: {e}")))?;
            for (k, v) in table {
                given.insert(k.clone(), Value::from_toml(&k, v)?);
            }
        }
        for (k, v) in overrides {
            given.insert(k.clone(), Value::parse(k, v)?);
        }
        let mut seed = seed;
        let mut tol = tol;
        if let Some(v) = given.remove("seed") {
            let s = match v {
                Value::Int(i) if i >= 0 => i as u64,
                other => return Err(field("seed", &format!("expected a nonnegative integer, got {other}"))),
            };
            seed = seed.or(Some(s));
        }
        if let Some(v) = given.remove("tol") {
            let t = as_f64("tol", &v)?;
            tol = tol.or(Some(t));
        }
        let tol = tol.unwrap_or(default_tol);
        if !(tol > 0.0) {
            return Err(field("tol", "must be positive"));
        }
        let mut params = BTreeMap::new();
        for key in keys {
            let v = given.remove(key.name).unwrap_or_else(|| key.default.clone());
            params.insert(key.name.to_string(), v);
        }
        if let Some(unknown) = given.keys().next() {
            let known: Vec<&str> = keys.iter().map(|k| k.name).collect();
            return Err(field(unknown, &format!("unknown key for `{experiment}`; known keys: seed, tol, {}", known.join(", "))));
        }
        Ok(Self { experiment: experiment.to_string(), params, seed: seed.unwrap_or(0), tol })
    }

    fn get(&self, key: &str) -> &Value {
        self.params.get(key).unwrap_or_else(|| panic!("experiment reads undeclared key `{key}`"))
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        as_f64(key, self.get(key))
    }

    /// A strictly positive count.
    pub fn count(&self, key: &str) -> Result<usize> {
        match self.get(key) {
            Value::Int(i) if *i > 0 => Ok(*i as usize),
            Value::Int(_) => Err(field(key, "must be positive")),
            other => Err(field(key, &format!("expected an integer, got {other}"))),
        }
    }

    pub fn list(&self, key: &str) -> Result<Vec<f64>> {
        match self.get(key) {
            Value::List(v) => Ok(v.clone()),
            other => Err(field(key, &format!("expected an array of numbers, got {other}"))),
        }
    }

    pub fn text(&self, key: &str) -> Result<String> {
        match self.get(key) {
            Value::Text(s) => Ok(s.clone()),
            other => Err(field(key, &format!("expected a string, got {other}"))),
        }
    }

    /// Semiaxes² of a given dimension, strictly decreasing and positive.
    pub fn axes<const N: usize>(&self, key: &str) -> Result<[f64; N]> {
        let v = self.list(key)?;
        let a: [f64; N] = v.clone().try_into().map_err(|_| field(key, &format!("expected {N} entries, got {}", v.len())))?;
        if a.windows(2).any(|w| !(w[0] > w[1])) || !(a[N - 1] > 0.0) {
            return Err(field(key, "entries must be positive and strictly decreasing"));
        }
        Ok(a)
    }
}

fn as_f64(key: &str, v: &Value) -> Result<f64> {
    match v {
        Value::Int(i) => Ok(*i as f64),
        Value::Float(x) => Ok(*x),
        other => Err(field(key, &format!("expected a number, got {other}"))),
    }
}
