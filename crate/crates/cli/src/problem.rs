//! Problem files: JSON documents carrying `m`, the prior, the moment
//! constraints and one or more sample sizes. Every rational is a decimal
//! string so that constraint arithmetic stays exact.
//!
//! ```json
//! {"m": 4, "q": ["0.13", "0.09", "0.42", "0.36"],
//!  "constraints": [{"x": ["1", "2", "3", "4"], "target": "3.2"}],
//!  "n": [10, 50, 100, 500, 1000]}
//! ```

use std::fmt;

use maxprob_core::model::{MomentConstraint, PriorGenerator};
use maxprob_core::rational::{self, Rational};
use maxprob_core::WorkingSetSpec;
use serde_json::{json, Map, Value};

/// Tolerance on `|Σq − 1|` before exact renormalization.
pub const PRIOR_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PriorSpec {
    Uniform,
    Values(Vec<Rational>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SampleSizes {
    Single(u64),
    List(Vec<u64>),
}

impl SampleSizes {
    pub fn values(&self) -> Vec<u64> {
        match self {
            SampleSizes::Single(n) => vec![*n],
            SampleSizes::List(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProblemFile {
    pub m: usize,
    pub q: PriorSpec,
    pub constraints: Vec<MomentConstraint>,
    pub n: SampleSizes,
}

/// A malformed problem file, naming the offending field path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for SpecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "field `{}`: {}", self.field, self.message)
    }
}

impl std::error::Error for SpecError {}

fn bad(field: impl Into<String>, message: impl Into<String>) -> SpecError {
    SpecError {
        field: field.into(),
        message: message.into(),
    }
}

fn decimal(value: &Value, field: &str) -> Result<Rational, SpecError> {
    match value {
        Value::String(s) => rational::parse_decimal(s).map_err(|e| bad(field, e.to_string())),
        Value::Number(_) => Err(bad(field, "numbers must be written as decimal strings, e.g. \"3.2\"")),
        _ => Err(bad(field, "expected a decimal string")),
    }
}

fn decimals(value: &Value, field: &str, len: usize) -> Result<Vec<Rational>, SpecError> {
    let arr = value.as_array().ok_or_else(|| bad(field, "expected an array of decimal strings"))?;
    if arr.len() != len {
        return Err(bad(field, format!("expected {len} entries, found {}", arr.len())));
    }
    arr.iter().enumerate().map(|(i, v)| decimal(v, &format!("{field}[{i}]"))).collect()
}

fn count(value: &Value, field: &str) -> Result<u64, SpecError> {
    value.as_u64().ok_or_else(|| bad(field, "expected a nonnegative integer"))
}

fn within(a: &Rational, b: &Rational, tol: f64) -> bool {
    rational::to_real::<f64>(&(a - b)).abs() <= tol
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self, SpecError> {
        let doc: Value = serde_json::from_str(text).map_err(|e| bad("<document>", e.to_string()))?;
        let obj = doc.as_object().ok_or_else(|| bad("<document>", "expected a JSON object"))?;
        if let Some(key) = obj.keys().find(|k| !["m", "q", "constraints", "n"].contains(&k.as_str())) {
            return Err(bad(key.as_str(), "unknown field"));
        }
        let field = |name: &str| obj.get(name).ok_or_else(|| bad(name, "missing"));

        let m = count(field("m")?, "m")? as usize;
        if m == 0 {
            return Err(bad("m", "must be at least 1"));
        }

        let q = match field("q")? {
            Value::String(s) if s == "uniform" => PriorSpec::Uniform,
            other => {
                let q = decimals(other, "q", m)?;
                if let Some(i) = q.iter().position(|v| v < &Rational::from_integer(0.into())) {
                    return Err(bad(format!("q[{i}]"), "negative probability"));
                }
                let total: Rational = q.iter().cloned().sum();
                if !within(&total, &rational::from_u64(1), PRIOR_SUM_TOL) {
                    return Err(bad("q", format!("entries sum to {}, not 1", rational::format_decimal(&total))));
                }
                PriorSpec::Values(q)
            }
        };

        let constraints = match obj.get("constraints") {
            None | Some(Value::Null) => Vec::new(),
            Some(Value::Array(items)) => items
                .iter()
                .enumerate()
                .map(|(k, item)| {
                    let path = format!("constraints[{k}]");
                    let c = item.as_object().ok_or_else(|| bad(&path, "expected an object with x and target"))?;
                    if let Some(key) = c.keys().find(|key| !["x", "target"].contains(&key.as_str())) {
                        return Err(bad(format!("{path}.{key}"), "unknown field"));
                    }
                    let x = c.get("x").ok_or_else(|| bad(format!("{path}.x"), "missing"))?;
                    let x = decimals(x, &format!("{path}.x"), m)?;
                    let target = c.get("target").ok_or_else(|| bad(format!("{path}.target"), "missing"))?;
                    let target = decimal(target, &format!("{path}.target"))?;
                    Ok(MomentConstraint::new(x, target))
                })
                .collect::<Result<_, _>>()?,
            Some(_) => return Err(bad("constraints", "expected an array")),
        };

        let n = match field("n")? {
            Value::Array(items) => {
                if items.is_empty() {
                    return Err(bad("n", "empty list"));
                }
                let list = items
                    .iter()
                    .enumerate()
                    .map(|(i, v)| count(v, &format!("n[{i}]")))
                    .collect::<Result<Vec<_>, _>>()?;
                SampleSizes::List(list)
            }
            other => SampleSizes::Single(count(other, "n")?),
        };

        Ok(Self { m, q, constraints, n })
    }

    pub fn to_json(&self) -> String {
        let strings = |v: &[Rational]| Value::Array(v.iter().map(|r| json!(rational::format_decimal(r))).collect());
        let mut obj = Map::new();
        obj.insert("m".into(), json!(self.m));
        obj.insert(
            "q".into(),
            match &self.q {
                PriorSpec::Uniform => json!("uniform"),
                PriorSpec::Values(q) => strings(q),
            },
        );
        let constraints: Vec<Value> = self
            .constraints
            .iter()
            .map(|c| json!({"x": strings(&c.x), "target": rational::format_decimal(&c.target)}))
            .collect();
        obj.insert("constraints".into(), Value::Array(constraints));
        obj.insert(
            "n".into(),
            match &self.n {
                SampleSizes::Single(n) => json!(n),
                SampleSizes::List(v) => json!(v),
            },
        );
        serde_json::to_string_pretty(&Value::Object(obj)).expect("json values serialize")
    }

    /// Exact prior: the file's values renormalized, or `1/m` per cell.
    pub fn prior_rationals(&self) -> Vec<Rational> {
        match &self.q {
            PriorSpec::Uniform => vec![Rational::new(1.into(), (self.m as u64).into()); self.m],
            PriorSpec::Values(q) => q.clone(),
        }
    }

    pub fn prior(&self) -> maxprob_core::Result<PriorGenerator<f64>> {
        PriorGenerator::from_rationals(&self.prior_rationals())
    }

    pub fn working_set(&self, n: u64) -> maxprob_core::Result<WorkingSetSpec> {
        WorkingSetSpec::new(self.m, n, self.constraints.clone())
    }
}
