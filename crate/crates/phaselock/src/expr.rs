//! Real numbers written as config expressions.
//!
//! Accepted forms: decimal literals, `golden`, `sqrt(<int>)` and
//! rationals `<int>/<int>`, each with an optional leading minus sign.

use std::fmt;

use phaselock_core::frequency::golden;
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

/// Evaluate one expression to the nearest binary float.
pub fn parse_real(text: &str) -> Result<f64, ConfigError> {
    let t = text.trim();
    let bad = || ConfigError::Expression(text.to_string());
    let (sign, body) = match t.strip_prefix('-') {
        Some(rest) => (-1.0, rest.trim_start()),
        None => (1.0, t),
    };
    let value = if body == "golden" {
        golden()
    } else if let Some(inner) = body.strip_prefix("sqrt(").and_then(|s| s.strip_suffix(')')) {
        let n: u64 = inner.trim().parse().map_err(|_| bad())?;
        (n as f64).sqrt()
    } else if let Some((p, q)) = body.split_once('/') {
        let p: i64 = p.trim().parse().map_err(|_| bad())?;
        let q: i64 = q.trim().parse().map_err(|_| bad())?;
        if q == 0 {
            return Err(bad());
        }
        p as f64 / q as f64
    } else {
        body.parse::<f64>().map_err(|_| bad())?
    };
    if !value.is_finite() {
        return Err(bad());
    }
    Ok(sign * value)
}

/// Comma-separated list of expressions, as taken by `--omega`.
pub fn parse_list(text: &str) -> Result<Vec<f64>, ConfigError> {
    text.split(',').map(parse_real).collect()
}

/// A config number: either a JSON number or an expression string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Real {
    Number(f64),
    Expr(String),
}

impl Real {
    pub fn value(&self) -> Result<f64, ConfigError> {
        match self {
            Real::Number(v) if v.is_finite() => Ok(*v),
            Real::Number(v) => Err(ConfigError::Expression(v.to_string())),
            Real::Expr(s) => parse_real(s),
        }
    }
}

impl From<f64> for Real {
    fn from(v: f64) -> Self {
        Real::Number(v)
    }
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Real::Number(v) => write!(f, "{v}"),
            Real::Expr(s) => f.write_str(s),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forms() {
        assert_eq!(parse_real("golden").unwrap(), golden());
        assert_eq!(parse_real("sqrt(2)").unwrap(), 2f64.sqrt());
        assert_eq!(parse_real(" 3/4 ").unwrap(), 0.75);
        assert_eq!(parse_real("-1/3").unwrap(), -1.0 / 3.0);
        assert_eq!(parse_real("1e-3").unwrap(), 1e-3);
        assert_eq!(parse_list("golden,1").unwrap(), vec![golden(), 1.0]);
    }

    #[test]
    fn rejects() {
        for s in ["", "gold", "sqrt(-2)", "1/0", "sqrt(2", "inf", "NaN", "1/2/3"] {
            assert!(parse_real(s).is_err(), "{s}");
        }
    }
}
