//! State shorthand: `center`, `pure:eK` (1-based), `v:[x, y, ...]` for a
//! Bloch vector, or a full JSON state `{"d": .., "v": [..], "s": 0.5}`.

use serde_json::Value;
use spinfactor::{Error, Result, State};

/// A parsed state argument; shorthands without a dimension resolve later.
#[derive(Clone, Debug, PartialEq)]
pub enum StateArg {
    Center,
    Basis(usize),
    Explicit(State),
}

impl StateArg {
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "center" {
            return Ok(StateArg::Center);
        }
        if let Some(k) = s.strip_prefix("pure:e") {
            let k: usize = k
                .parse()
                .map_err(|_| Error::Parse(format!("bad basis index in {s:?}")))?;
            if k == 0 {
                return Err(Error::Parse("basis index starts at 1".into()));
            }
            return Ok(StateArg::Basis(k - 1));
        }
        if let Some(v) = s.strip_prefix("v:") {
            let v: Vec<f64> =
                serde_json::from_str(v).map_err(|e| Error::Parse(format!("bad vector {v:?}: {e}")))?;
            return Ok(StateArg::Explicit(State::from_bloch(v)?));
        }
        let value: Value =
            serde_json::from_str(s).map_err(|e| Error::Parse(format!("bad state {s:?}: {e}")))?;
        Self::from_json(value)
    }

    /// JSON string (shorthand), number array (Bloch vector) or state object.
    pub fn from_json(value: Value) -> Result<Self> {
        match value {
            Value::String(s) => Self::parse(&s),
            Value::Array(_) => {
                let v: Vec<f64> =
                    serde_json::from_value(value).map_err(|e| Error::Parse(e.to_string()))?;
                Ok(StateArg::Explicit(State::from_bloch(v)?))
            }
            other => serde_json::from_value(other)
                .map(StateArg::Explicit)
                .map_err(|e| Error::Parse(e.to_string())),
        }
    }

    pub fn dim(&self) -> Option<usize> {
        match self {
            StateArg::Explicit(s) => Some(s.dim()),
            _ => None,
        }
    }

    pub fn resolve(&self, d: usize) -> Result<State> {
        match self {
            StateArg::Center => Ok(State::center(d)),
            StateArg::Basis(k) => State::basis_pure(d, *k),
            StateArg::Explicit(s) if s.dim() == d => Ok(s.clone()),
            StateArg::Explicit(s) => Err(Error::DimensionMismatch {
                left: s.dim(),
                right: d,
            }),
        }
    }
}

/// Common dimension of several arguments: explicit states win, then `fallback`.
pub fn common_dim(args: &[&StateArg], fallback: Option<usize>) -> Result<usize> {
    let mut d = None;
    for a in args {
        if let Some(k) = a.dim() {
            match d {
                Some(prev) if prev != k => return Err(Error::DimensionMismatch { left: prev, right: k }),
                _ => d = Some(k),
            }
        }
    }
    match (d, fallback) {
        (Some(a), Some(b)) if a != b => Err(Error::DimensionMismatch { left: a, right: b }),
        (Some(a), _) => Ok(a),
        (None, Some(b)) => Ok(b),
        (None, None) => Ok(2),
    }
}
