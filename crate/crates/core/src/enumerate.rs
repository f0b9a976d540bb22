//! Exact generation and counting of the working set `H_n`.
//!
//! Rational moment constraints are first scaled to integer equations
//! `Σ aᵢ nᵢ = b`. Enumeration assigns `n₁, ..., n_{m−1}` depth first; at each
//! depth every constraint, together with the remaining total, confines the
//! current coordinate to an integer interval computed from the extreme
//! coefficients of the cells still to be filled. `n_m` is solved and checked.

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::ToPrimitive;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{MomentConstraint, OccurrenceVector, WorkingSetSpec};
use crate::rational::{self, Rational};

/// Limits on enumeration and counting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    pub max_cells: usize,
    pub max_vectors: u128,
    pub max_states: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Self {
            max_cells: 16,
            max_vectors: 100_000_000,
            max_states: 1_000_000_000,
        }
    }
}

/// `Σ coeffs[i]·nᵢ = rhs` over the integers.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct ScaledConstraint {
    pub coeffs: Vec<i64>,
    pub rhs: i64,
}

impl fmt::Display for ScaledConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let coeffs: Vec<String> = self.coeffs.iter().map(i64::to_string).collect();
        write!(f, "[{}] | {}", coeffs.join(","), self.rhs)
    }
}

fn to_i64(v: &BigInt, what: &str) -> Result<i64> {
    v.to_i64().ok_or_else(|| Error::Overflow(format!("scaling {what}")))
}

impl ScaledConstraint {
    /// `Σ nᵢ xᵢ = μ n` multiplied by the LCM of the denominators of `x`
    /// and `μ`. Not reduced.
    pub fn scale(constraint: &MomentConstraint, n: u64) -> Result<Self> {
        let lcm = rational::lcm_denominators(constraint.x.iter().chain([&constraint.target]));
        let scale = Rational::from_integer(lcm);
        let coeffs = constraint
            .x
            .iter()
            .map(|x| to_i64(&(x * &scale).to_integer(), "coefficient"))
            .collect::<Result<Vec<_>>>()?;
        let rhs = (&constraint.target * &scale).to_integer() * BigInt::from(n);
        Ok(Self {
            coeffs,
            rhs: to_i64(&rhs, "target")?,
        })
    }

    /// Divides out the common gcd and makes the leading nonzero entry positive.
    pub fn canonical(mut self) -> Self {
        let g = self.coeffs.iter().fold(self.rhs.abs(), |g, &a| g.gcd(&a));
        if g > 1 {
            self.coeffs.iter_mut().for_each(|a| *a /= g);
            self.rhs /= g;
        }
        let lead = self.coeffs.iter().copied().chain([self.rhs]).find(|&a| a != 0);
        if lead.is_some_and(|a| a < 0) {
            self.coeffs.iter_mut().for_each(|a| *a = -*a);
            self.rhs = -self.rhs;
        }
        self
    }

    /// Every coefficient equal, so the equation only restates `Σ nᵢ = n`
    /// (or contradicts it).
    pub fn is_degenerate(&self) -> bool {
        self.coeffs.windows(2).all(|w| w[0] == w[1])
    }

    pub fn is_satisfied(&self, counts: &[u64]) -> bool {
        let lhs: i128 = self
            .coeffs
            .iter()
            .zip(counts)
            .map(|(&a, &c)| a as i128 * c as i128)
            .sum();
        lhs == self.rhs as i128
    }
}

/// The non-degenerate integer equations describing one working set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScaledSystem {
    pub m: usize,
    pub n: u64,
    pub constraints: Vec<ScaledConstraint>,
    /// Indices of input constraints implied by the adding-up constraint.
    pub dropped: Vec<usize>,
}

/// Scales every constraint of `spec` to canonical integer form.
///
/// Degenerate constraints are dropped when redundant; a contradictory one
/// yields [`Error::EmptyWorkingSet`].
pub fn scale_constraints(spec: &WorkingSetSpec) -> Result<ScaledSystem> {
    let n = i64::try_from(spec.n).map_err(|_| Error::Overflow("converting n".into()))?;
    let mut constraints = Vec::with_capacity(spec.constraints.len());
    let mut dropped = Vec::new();
    for (index, c) in spec.constraints.iter().enumerate() {
        if c.m() != spec.m {
            return Err(Error::DimensionMismatch {
                expected: spec.m,
                found: c.m(),
            });
        }
        let scaled = ScaledConstraint::scale(c, spec.n)?.canonical();
        let widest = scaled.coeffs.iter().map(|a| a.unsigned_abs()).max().unwrap_or(0);
        (widest as i128 * n as i128 + scaled.rhs.unsigned_abs() as i128)
            .to_i64()
            .ok_or_else(|| Error::Overflow(format!("bounding residuals of constraint {index}")))?;
        if scaled.is_degenerate() {
            if scaled.coeffs[0] as i128 * n as i128 == scaled.rhs as i128 {
                log::info!("constraint {index} ({scaled}) is implied by the adding-up constraint; dropped");
                dropped.push(index);
                continue;
            }
            return Err(Error::EmptyWorkingSet(format!(
                "constraint {index} ({scaled}) contradicts the adding-up constraint at n = {}",
                spec.n
            )));
        }
        constraints.push(scaled);
    }
    Ok(ScaledSystem {
        m: spec.m,
        n: spec.n,
        constraints,
        dropped,
    })
}

/// Per-depth extremes of the coefficients of the cells after that depth.
#[derive(Debug, Clone)]
struct Pruner {
    m: usize,
    coeffs: Vec<Vec<i64>>,
    // [constraint][depth] over cells depth+1..m
    suffix_min: Vec<Vec<i64>>,
    suffix_max: Vec<Vec<i64>>,
}

impl Pruner {
    fn new(system: &ScaledSystem) -> Self {
        let m = system.m;
        let coeffs: Vec<Vec<i64>> = system.constraints.iter().map(|c| c.coeffs.clone()).collect();
        let mut suffix_min = Vec::with_capacity(coeffs.len());
        let mut suffix_max = Vec::with_capacity(coeffs.len());
        for a in &coeffs {
            let mut lo = vec![0; m];
            let mut hi = vec![0; m];
            if m >= 2 {
                lo[m - 2] = a[m - 1];
                hi[m - 2] = a[m - 1];
                for d in (0..m.saturating_sub(2)).rev() {
                    lo[d] = lo[d + 1].min(a[d + 1]);
                    hi[d] = hi[d + 1].max(a[d + 1]);
                }
            }
            suffix_min.push(lo);
            suffix_max.push(hi);
        }
        Self {
            m,
            coeffs,
            suffix_min,
            suffix_max,
        }
    }

    /// Values of cell `depth < m − 1` compatible with the remaining total
    /// and residuals.
    fn interval(&self, depth: usize, remaining: i64, residuals: &[i64]) -> Option<(i64, i64)> {
        debug_assert!(depth + 1 < self.m);
        let (mut lo, mut hi) = (0i128, remaining as i128);
        let total = remaining as i128;
        for (k, &r) in residuals.iter().enumerate() {
            let a = self.coeffs[k][depth] as i128;
            let smin = self.suffix_min[k][depth] as i128;
            let smax = self.suffix_max[k][depth] as i128;
            let r = r as i128;
            // r − a t ≥ (R − t)·smin  ⇔  t (smin − a) ≥ R smin − r
            apply_ge(&mut lo, &mut hi, smin - a, total * smin - r)?;
            // r − a t ≤ (R − t)·smax  ⇔  t (smax − a) ≤ R smax − r
            apply_le(&mut lo, &mut hi, smax - a, total * smax - r)?;
            if lo > hi {
                return None;
            }
        }
        (lo <= hi).then_some((lo as i64, hi as i64))
    }

    fn last_cell_ok(&self, remaining: i64, residuals: &[i64]) -> bool {
        let last = self.m - 1;
        residuals
            .iter()
            .zip(&self.coeffs)
            .all(|(&r, a)| r as i128 == a[last] as i128 * remaining as i128)
    }
}

/// Restricts `[lo, hi]` to `c·t ≥ e`.
fn apply_ge(lo: &mut i128, hi: &mut i128, c: i128, e: i128) -> Option<()> {
    match c.signum() {
        1 => *lo = (*lo).max(Integer::div_ceil(&e, &c)),
        -1 => *hi = (*hi).min(Integer::div_floor(&e, &c)),
        _ if e > 0 => return None,
        _ => {}
    }
    Some(())
}

/// Restricts `[lo, hi]` to `c·t ≤ e`.
fn apply_le(lo: &mut i128, hi: &mut i128, c: i128, e: i128) -> Option<()> {
    match c.signum() {
        1 => *hi = (*hi).min(Integer::div_floor(&e, &c)),
        -1 => *lo = (*lo).max(Integer::div_ceil(&e, &c)),
        _ if e < 0 => return None,
        _ => {}
    }
    Some(())
}

/// Lexicographically ordered stream of the working set.
#[derive(Debug, Clone)]
pub struct WorkingSetIter {
    pruner: Pruner,
    first: (u64, u64),
    k: usize,
    counts: Vec<i64>,
    upper: Vec<i64>,
    // remaining total before each depth, length m
    remaining: Vec<i64>,
    // residuals before each depth, flat [depth * k + constraint]
    residuals: Vec<i64>,
    started: bool,
    done: bool,
}

impl WorkingSetIter {
    /// Streams the whole system without budget checks.
    pub fn new(system: &ScaledSystem) -> Self {
        Self::with_first_range(system, 0, system.n)
    }

    /// Streams only the vectors whose first cell lies in `[lo, hi]`.
    pub fn with_first_range(system: &ScaledSystem, lo: u64, hi: u64) -> Self {
        let m = system.m;
        let k = system.constraints.len();
        let mut remaining = vec![0; m];
        remaining[0] = system.n as i64;
        let mut residuals = vec![0; m * k];
        for (j, c) in system.constraints.iter().enumerate() {
            residuals[j] = c.rhs;
        }
        Self {
            pruner: Pruner::new(system),
            first: (lo, hi),
            k,
            counts: vec![0; m],
            upper: vec![0; m],
            remaining,
            residuals,
            started: false,
            done: false,
        }
    }

    /// Feasible values of the first cell, the natural partition keys.
    pub fn first_cell_values(system: &ScaledSystem) -> Vec<u64> {
        if system.m == 1 {
            return vec![system.n];
        }
        let pruner = Pruner::new(system);
        let residuals: Vec<i64> = system.constraints.iter().map(|c| c.rhs).collect();
        match pruner.interval(0, system.n as i64, &residuals) {
            Some((lo, hi)) => (lo as u64..=hi as u64).collect(),
            None => Vec::new(),
        }
    }

    fn emit(&self) -> OccurrenceVector {
        OccurrenceVector::new(self.counts.iter().map(|&c| c as u64).collect())
            .expect("counts are nonnegative and bounded by n")
    }

    fn single_cell(&mut self) -> Option<OccurrenceVector> {
        self.done = true;
        let n = self.remaining[0];
        let in_range = (self.first.0 as i64..=self.first.1 as i64).contains(&n);
        if in_range && self.pruner.last_cell_ok(n, &self.residuals[..self.k]) {
            self.counts[0] = n;
            Some(self.emit())
        } else {
            None
        }
    }
}

impl Iterator for WorkingSetIter {
    type Item = OccurrenceVector;

    fn next(&mut self) -> Option<OccurrenceVector> {
        if self.done {
            return None;
        }
        let m = self.counts.len();
        if m == 1 {
            return self.single_cell();
        }
        let k = self.k;
        let (mut depth, mut fresh) = if self.started {
            (m as isize - 2, false)
        } else {
            self.started = true;
            (0, true)
        };
        loop {
            if depth < 0 {
                self.done = true;
                return None;
            }
            let d = depth as usize;
            let base = d * k;
            if fresh {
                let res = &self.residuals[base..base + k];
                let bounds = self.pruner.interval(d, self.remaining[d], res).and_then(|(lo, hi)| {
                    let (lo, hi) = if d == 0 {
                        (lo.max(self.first.0 as i64), hi.min(self.first.1 as i64))
                    } else {
                        (lo, hi)
                    };
                    (lo <= hi).then_some((lo, hi))
                });
                match bounds {
                    Some((lo, hi)) => {
                        self.counts[d] = lo;
                        self.upper[d] = hi;
                    }
                    None => {
                        depth -= 1;
                        fresh = false;
                        continue;
                    }
                }
            } else if self.counts[d] >= self.upper[d] {
                depth -= 1;
                continue;
            } else {
                self.counts[d] += 1;
            }

            let t = self.counts[d];
            self.remaining[d + 1] = self.remaining[d] - t;
            for j in 0..k {
                self.residuals[base + k + j] = self.residuals[base + j] - self.pruner.coeffs[j][d] * t;
            }
            if d + 2 == m {
                let rest = self.remaining[m - 1];
                if self.pruner.last_cell_ok(rest, &self.residuals[base + k..base + 2 * k]) {
                    self.counts[m - 1] = rest;
                    return Some(self.emit());
                }
                fresh = false;
            } else {
                depth += 1;
                fresh = true;
            }
        }
    }
}

/// Cardinality of a working set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct WorkingSetStats {
    pub j_count: u128,
    pub n: u64,
    pub m: usize,
}

/// Exact `|H_n|` with the default [`Budget`].
pub fn count_working_set(spec: &WorkingSetSpec) -> Result<WorkingSetStats> {
    count_working_set_with(spec, &Budget::default())
}

/// Exact `|H_n|` by dynamic programming over (remaining total, residuals).
pub fn count_working_set_with(spec: &WorkingSetSpec, budget: &Budget) -> Result<WorkingSetStats> {
    let empty = WorkingSetStats {
        j_count: 0,
        n: spec.n,
        m: spec.m,
    };
    let system = match scale_constraints(spec) {
        Ok(s) => s,
        Err(Error::EmptyWorkingSet(_)) => return Ok(empty),
        Err(e) => return Err(e),
    };
    if spec.m > budget.max_cells {
        return Err(Error::BudgetExceeded(format!(
            "m = {} exceeds the {} cell limit",
            spec.m, budget.max_cells
        )));
    }
    Ok(WorkingSetStats {
        j_count: count_system(&system, budget)?,
        ..empty
    })
}

fn count_system(system: &ScaledSystem, budget: &Budget) -> Result<u128> {
    let m = system.m;
    let k = system.constraints.len();
    let pruner = Pruner::new(system);
    let mut root = Vec::with_capacity(k + 1);
    root.push(system.n as i64);
    root.extend(system.constraints.iter().map(|c| c.rhs));
    if m == 1 {
        return Ok(pruner.last_cell_ok(root[0], &root[1..]) as u128);
    }

    let mut layer: HashMap<Vec<i64>, u128> = HashMap::from([(root, 1)]);
    let mut visited: u64 = 0;
    let mut total: u128 = 0;
    for d in 0..m - 1 {
        let last = d + 2 == m;
        let mut next: HashMap<Vec<i64>, u128> = HashMap::new();
        for (state, ways) in &layer {
            let Some((lo, hi)) = pruner.interval(d, state[0], &state[1..]) else {
                continue;
            };
            for t in lo..=hi {
                visited += 1;
                if visited > budget.max_states {
                    return Err(Error::BudgetExceeded(format!(
                        "counting visited more than {} states",
                        budget.max_states
                    )));
                }
                let mut child = Vec::with_capacity(k + 1);
                child.push(state[0] - t);
                child.extend((0..k).map(|j| state[1 + j] - pruner.coeffs[j][d] * t));
                if last {
                    if pruner.last_cell_ok(child[0], &child[1..]) {
                        total += ways;
                    }
                } else {
                    *next.entry(child).or_insert(0) += ways;
                }
            }
        }
        layer = next;
    }
    Ok(total)
}

/// Streams `H_n` in lexicographic order with the default [`Budget`].
pub fn enumerate_working_set(spec: &WorkingSetSpec) -> Result<WorkingSetIter> {
    enumerate_working_set_with(spec, &Budget::default())
}

/// Streams `H_n` after checking its size against `budget`.
///
/// An empty working set is reported as [`Error::EmptyWorkingSet`].
pub fn enumerate_working_set_with(spec: &WorkingSetSpec, budget: &Budget) -> Result<WorkingSetIter> {
    Ok(WorkingSetIter::new(&checked_system(spec, budget)?.0))
}

/// Scales `spec` and verifies the working set is nonempty and within budget.
/// Returns the system and its exact size.
pub fn checked_system(spec: &WorkingSetSpec, budget: &Budget) -> Result<(ScaledSystem, u128)> {
    if spec.m > budget.max_cells {
        return Err(Error::BudgetExceeded(format!(
            "m = {} exceeds the {} cell limit",
            spec.m, budget.max_cells
        )));
    }
    let system = scale_constraints(spec)?;
    let j = count_system(&system, budget)?;
    if j == 0 {
        let detail: Vec<String> = system.constraints.iter().map(ToString::to_string).collect();
        return Err(Error::EmptyWorkingSet(format!(
            "no occurrence vector of total {} over {} cells satisfies {}",
            spec.n,
            spec.m,
            if detail.is_empty() { "the adding-up constraint".to_string() } else { detail.join(" and ") }
        )));
    }
    if j > budget.max_vectors {
        return Err(Error::BudgetExceeded(format!(
            "working set has {j} vectors, limit is {}",
            budget.max_vectors
        )));
    }
    Ok((system, j))
}
