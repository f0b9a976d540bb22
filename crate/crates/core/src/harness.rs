//! Convergence sweeps over `n` and their reports.

use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::enumerate::{count_working_set_with, Budget};
use crate::error::{Error, Result};
use crate::model::{MomentConstraint, PriorGenerator, ProbabilityVector, WorkingSetSpec};
use crate::scalar::Real;
use crate::solve::{expoc, maxprob, rem_solve, wallis_limit_check, RemOptions, SolveOptions};

/// Which computations a sweep runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Modes {
    pub maxprob: bool,
    pub expoc: bool,
    pub wallis: bool,
}

impl Default for Modes {
    fn default() -> Self {
        Self {
            maxprob: true,
            expoc: true,
            wallis: false,
        }
    }
}

impl FromStr for Modes {
    type Err = Error;

    /// Comma-separated subset of `maxprob`, `expoc`, `wallis`.
    fn from_str(s: &str) -> Result<Self> {
        let mut modes = Modes {
            maxprob: false,
            expoc: false,
            wallis: false,
        };
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part {
                "maxprob" => modes.maxprob = true,
                "expoc" => modes.expoc = true,
                "wallis" => modes.wallis = true,
                other => return Err(Error::InvalidArgument(format!("unknown mode {other:?}"))),
            }
        }
        if !(modes.maxprob || modes.expoc || modes.wallis) {
            return Err(Error::InvalidArgument("no modes selected".into()));
        }
        Ok(modes)
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec<T> {
    pub q: PriorGenerator<T>,
    pub constraints: Vec<MomentConstraint>,
    pub n_values: Vec<u64>,
    pub modes: Modes,
}

impl<T: Real> ExperimentSpec<T> {
    pub fn new(
        q: PriorGenerator<T>,
        constraints: Vec<MomentConstraint>,
        n_values: Vec<u64>,
        modes: Modes,
    ) -> Result<Self> {
        if n_values.is_empty() {
            return Err(Error::InvalidArgument("no n values".into()));
        }
        if n_values[0] == 0 || n_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument("n values must be positive and strictly increasing".into()));
        }
        if let Some(c) = constraints.iter().find(|c| c.m() != q.m()) {
            return Err(Error::DimensionMismatch {
                expected: q.m(),
                found: c.m(),
            });
        }
        Ok(Self {
            q,
            constraints,
            n_values,
            modes,
        })
    }
}

/// One `n` of a sweep. Frequencies and gaps are `None` for modes that were
/// not run and for infeasible rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow<T> {
    pub n: u64,
    pub j_count: u128,
    pub maxprob_freq: Option<Vec<T>>,
    pub maxprob_log_prob: Option<T>,
    pub maxprob_ties: Option<usize>,
    pub expoc_freq: Option<Vec<T>>,
    pub rem_target: Vec<T>,
    /// `max |n̂/n − p̂|`
    pub maxprob_gap: Option<T>,
    /// `max |n̄/n − p̂|`
    pub expoc_gap: Option<T>,
    pub wallis_gap: Option<T>,
    /// Set when the working set is empty or carries no prior mass.
    pub infeasible: Option<String>,
}

impl<T: Real> ConvergenceRow<T> {
    pub fn is_infeasible(&self) -> bool {
        self.infeasible.is_some()
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct HarnessOptions {
    pub solve: SolveOptions,
    pub rem: RemOptions,
}

fn sup_gap<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc.max((x - y).abs()))
}

/// Runs every requested mode at every `n`; the REM target is solved once.
/// Rows are computed independently and returned in `n` order.
pub fn run_convergence<T: Real>(exp: &ExperimentSpec<T>, opts: &HarnessOptions) -> Result<Vec<ConvergenceRow<T>>> {
    let rem = rem_solve(&exp.q, &exp.constraints, &opts.rem)?;
    let target = rem.p_hat.as_slice().to_vec();
    let row = |&n: &u64| run_row(exp, n, &rem.p_hat, &target, opts);
    if opts.solve.parallel {
        exp.n_values.par_iter().map(row).collect()
    } else {
        exp.n_values.iter().map(row).collect()
    }
}

fn run_row<T: Real>(
    exp: &ExperimentSpec<T>,
    n: u64,
    p_hat: &ProbabilityVector<T>,
    target: &[T],
    opts: &HarnessOptions,
) -> Result<ConvergenceRow<T>> {
    let spec = WorkingSetSpec::new(exp.q.m(), n, exp.constraints.clone())?;
    let mut row = ConvergenceRow {
        n,
        j_count: 0,
        maxprob_freq: None,
        maxprob_log_prob: None,
        maxprob_ties: None,
        expoc_freq: None,
        rem_target: target.to_vec(),
        maxprob_gap: None,
        expoc_gap: None,
        wallis_gap: None,
        infeasible: None,
    };
    let budget: &Budget = &opts.solve.budget;
    row.j_count = count_working_set_with(&spec, budget)?.j_count;

    let outcome = (|| -> Result<()> {
        if exp.modes.maxprob {
            let r = maxprob(&spec, &exp.q, &opts.solve)?;
            let f = r.frequency();
            row.maxprob_gap = Some(sup_gap(&f, target));
            row.maxprob_freq = Some(f);
            row.maxprob_log_prob = Some(r.log_prob);
            row.maxprob_ties = Some(r.tie_count);
        }
        if exp.modes.expoc {
            let r = expoc(&spec, &exp.q, &opts.solve)?;
            let f = r.frequency();
            row.expoc_gap = Some(sup_gap(&f, target));
            row.expoc_freq = Some(f);
        }
        Ok(())
    })();
    match outcome {
        Ok(()) => {}
        Err(e) if e.is_infeasible() => {
            row.maxprob_freq = None;
            row.maxprob_log_prob = None;
            row.maxprob_ties = None;
            row.maxprob_gap = None;
            row.infeasible = Some(e.to_string());
        }
        Err(e) => return Err(e),
    }
    if exp.modes.wallis {
        let rec = wallis_limit_check(&exp.q, p_hat, &[n])?;
        row.wallis_gap = Some(rec[0].gap);
    }
    Ok(row)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
    Pretty,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            "pretty" => Ok(Self::Pretty),
            other => Err(Error::UnsupportedFormat(other.to_string())),
        }
    }
}

/// Half-away-from-zero rounding to `places` decimals, for display only.
pub fn round_half_away(value: f64, places: u32) -> f64 {
    let scale = 10f64.powi(places as i32);
    let r = (value * scale).round() / scale;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// Fixed four-decimal cell.
pub fn cell4(value: f64) -> String {
    format!("{:.4}", round_half_away(value, 4))
}

/// Ten significant digits; scientific notation outside `[1e-5, 1e10)`.
pub fn sig10(value: f64) -> String {
    if value == 0.0 {
        return "0".into();
    }
    if !value.is_finite() {
        return value.to_string();
    }
    let sci = format!("{value:.9e}");
    let exp: i32 = sci.rsplit('e').next().and_then(|e| e.parse().ok()).unwrap_or(0);
    if (-5..10).contains(&exp) {
        format!("{value:.*}", (9 - exp).max(0) as usize)
    } else {
        sci
    }
}

fn columns<T: Real>(rows: &[ConvergenceRow<T>]) -> (bool, bool, bool) {
    let any = |f: &dyn Fn(&ConvergenceRow<T>) -> bool| rows.iter().any(f);
    (
        any(&|r| r.maxprob_freq.is_some() || r.maxprob_gap.is_some()),
        any(&|r| r.expoc_freq.is_some() || r.expoc_gap.is_some()),
        any(&|r| r.wallis_gap.is_some()),
    )
}

/// Serializes a sweep.
///
/// * `csv`: header `n,J,maxprob_1..m,expoc_1..m,rem_1..m,maxprob_gap,expoc_gap,wallis_gap`,
///   numbers to ten significant digits, empty cells where a value is absent.
/// * `json`: array of row objects at full precision; infeasible rows carry
///   `"infeasible": true` and no frequency fields.
/// * `pretty`: fixed-width table at four decimals with the REM target as
///   the last line.
pub fn emit_report<T: Real>(rows: &[ConvergenceRow<T>], format: ReportFormat) -> Result<Vec<u8>> {
    if rows.is_empty() {
        return Err(Error::EmptyInput("emit_report"));
    }
    Ok(match format {
        ReportFormat::Csv => csv_report(rows),
        ReportFormat::Json => json_report(rows),
        ReportFormat::Pretty => pretty_report(rows),
    }
    .into_bytes())
}

fn csv_report<T: Real>(rows: &[ConvergenceRow<T>]) -> String {
    let m = rows[0].rem_target.len();
    let mut header = vec!["n".to_string(), "J".to_string()];
    for prefix in ["maxprob", "expoc", "rem"] {
        header.extend((1..=m).map(|i| format!("{prefix}_{i}")));
    }
    header.extend(["maxprob_gap", "expoc_gap", "wallis_gap"].map(String::from));
    let mut out = header.join(",");
    out.push('\n');
    let num = |v: T| sig10(v.as_f64());
    let vec_cells = |v: &Option<Vec<T>>| -> Vec<String> {
        match v {
            Some(v) => v.iter().map(|&x| num(x)).collect(),
            None => vec![String::new(); m],
        }
    };
    for r in rows {
        let mut cells = vec![r.n.to_string(), r.j_count.to_string()];
        cells.extend(vec_cells(&r.maxprob_freq));
        cells.extend(vec_cells(&r.expoc_freq));
        cells.extend(r.rem_target.iter().map(|&x| num(x)));
        for gap in [r.maxprob_gap, r.expoc_gap, r.wallis_gap] {
            cells.push(gap.map(num).unwrap_or_default());
        }
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn json_number(v: f64) -> Value {
    serde_json::Number::from_f64(v).map(Value::Number).unwrap_or(Value::Null)
}

fn json_vec<T: Real>(v: &[T]) -> Value {
    Value::Array(v.iter().map(|x| json_number(x.as_f64())).collect())
}

fn json_report<T: Real>(rows: &[ConvergenceRow<T>]) -> String {
    let array: Vec<Value> = rows
        .iter()
        .map(|r| {
            let mut obj = Map::new();
            obj.insert("n".into(), json!(r.n));
            obj.insert("j_count".into(), json!(r.j_count));
            obj.insert("infeasible".into(), json!(r.is_infeasible()));
            if let Some(reason) = &r.infeasible {
                obj.insert("reason".into(), json!(reason));
                return Value::Object(obj);
            }
            if let Some(f) = &r.maxprob_freq {
                obj.insert("maxprob_freq".into(), json_vec(f));
            }
            if let Some(lp) = r.maxprob_log_prob {
                obj.insert("maxprob_log_prob".into(), json_number(lp.as_f64()));
            }
            if let Some(t) = r.maxprob_ties {
                obj.insert("maxprob_ties".into(), json!(t));
            }
            if let Some(f) = &r.expoc_freq {
                obj.insert("expoc_freq".into(), json_vec(f));
            }
            obj.insert("rem_target".into(), json_vec(&r.rem_target));
            for (key, gap) in [("maxprob_gap", r.maxprob_gap), ("expoc_gap", r.expoc_gap), ("wallis_gap", r.wallis_gap)] {
                if let Some(g) = gap {
                    obj.insert(key.into(), json_number(g.as_f64()));
                }
            }
            Value::Object(obj)
        })
        .collect();
    let mut s = serde_json::to_string_pretty(&Value::Array(array)).expect("json values serialize");
    s.push('\n');
    s
}

fn pretty_cells<T: Real>(v: &[T]) -> String {
    v.iter().map(|x| cell4(x.as_f64())).collect::<Vec<_>>().join(" ")
}

fn pretty_report<T: Real>(rows: &[ConvergenceRow<T>]) -> String {
    let (show_maxprob, show_expoc, show_wallis) = columns(rows);
    let m = rows[0].rem_target.len();
    let width = (7 * m).saturating_sub(1).max(10);
    let mut out = String::new();
    let _ = write!(out, "{:>6} | {:>8}", "n", "J");
    if show_maxprob {
        let _ = write!(out, " | {:<width$}", "MaxProb n^/n");
    }
    if show_expoc {
        let _ = write!(out, " | {:<width$}", "ExpOc n-/n");
    }
    if show_wallis {
        let _ = write!(out, " | {:>10}", "Wallis gap");
    }
    out.push('\n');
    let rule = out.trim_end().len();
    out.push_str(&"-".repeat(rule));
    out.push('\n');
    for r in rows {
        let _ = write!(out, "{:>6} | {:>8}", r.n, r.j_count);
        if let Some(reason) = &r.infeasible {
            let _ = writeln!(out, " | infeasible: {reason}");
            continue;
        }
        if show_maxprob {
            let cells = r.maxprob_freq.as_deref().map(pretty_cells).unwrap_or_default();
            let _ = write!(out, " | {cells:<width$}");
        }
        if show_expoc {
            let cells = r.expoc_freq.as_deref().map(pretty_cells).unwrap_or_default();
            let _ = write!(out, " | {cells:<width$}");
        }
        if show_wallis {
            let cell = r.wallis_gap.map(|g| format!("{:.3e}", g.as_f64())).unwrap_or_default();
            let _ = write!(out, " | {cell:>10}");
        }
        out.push('\n');
    }
    out.push_str(&"-".repeat(rule));
    out.push('\n');
    let target = pretty_cells(&rows[0].rem_target);
    let _ = write!(out, "{:>6} | {:>8}", "p^", "");
    if show_maxprob {
        let _ = write!(out, " | {target:<width$}");
    }
    if show_expoc {
        let _ = write!(out, " | {target:<width$}");
    }
    out.push('\n');
    out
}
