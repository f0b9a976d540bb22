//! Priors, probability vectors, occurrence vectors and moment constraints.

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, Rational};
use crate::scalar::{CompensatedSum, Real};

/// Deviation from unit mass that is silently renormalized.
pub const NORMALIZE_TOL: f64 = 1e-9;

/// The pmf `q` that generates occurrence vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorGenerator<T> {
    q: Vec<T>,
}

impl<T: Real> PriorGenerator<T> {
    /// Validates `q`. Masses within [`NORMALIZE_TOL`] of one are rescaled;
    /// anything further off is rejected.
    pub fn new(q: Vec<T>) -> Result<Self> {
        if q.is_empty() {
            return Err(Error::InvalidPrior("prior has no cells".into()));
        }
        if let Some((i, v)) = q.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= T::zero())) {
            return Err(Error::InvalidPrior(format!("q[{i}] = {v} is not a nonnegative number")));
        }
        let total: T = q.iter().copied().collect::<CompensatedSum<T>>().value();
        let deviation = (total - T::one()).abs().as_f64();
        if deviation > NORMALIZE_TOL {
            return Err(Error::InvalidPrior(format!("prior sums to {total}, not 1")));
        }
        let q = if deviation > 0.0 {
            if deviation > T::SIMPLEX_TOL {
                log::warn!("prior sums to {total}; renormalizing");
            }
            q.into_iter().map(|v| v / total).collect()
        } else {
            q
        };
        Ok(Self { q })
    }

    /// `[1/m, ..., 1/m]`.
    pub fn uniform(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidPrior("prior has no cells".into()));
        }
        let w = T::from_u64_lossy(m as u64).recip();
        Ok(Self { q: vec![w; m] })
    }

    /// Builds a prior from exact rationals, normalizing exactly before
    /// rounding each cell once.
    pub fn from_rationals(q: &[Rational]) -> Result<Self> {
        if q.is_empty() {
            return Err(Error::InvalidPrior("prior has no cells".into()));
        }
        if let Some((i, v)) = q.iter().enumerate().find(|(_, v)| v.is_negative()) {
            return Err(Error::InvalidPrior(format!(
                "q[{i}] = {} is negative",
                rational::format_decimal(v)
            )));
        }
        let total: Rational = q.iter().sum();
        let off = (&total - Rational::from_integer(1.into())).abs();
        if rational::to_real::<f64>(&off) > NORMALIZE_TOL {
            return Err(Error::InvalidPrior(format!(
                "prior sums to {}, not 1",
                rational::format_decimal(&total)
            )));
        }
        if !off.is_zero() {
            log::warn!("prior sums to {}; renormalizing", rational::format_decimal(&total));
        }
        Ok(Self {
            q: q.iter().map(|v| rational::to_real(&(v / &total))).collect(),
        })
    }

    pub fn m(&self) -> usize {
        self.q.len()
    }

    pub fn q(&self) -> &[T] {
        &self.q
    }

    /// Indices with `qᵢ > 0`.
    pub fn support(&self) -> Vec<usize> {
        (0..self.q.len()).filter(|&i| self.q[i] > T::zero()).collect()
    }

    /// `ln qᵢ`, with `-∞` on zero cells.
    pub fn log_q(&self) -> Vec<T> {
        self.q
            .iter()
            .map(|&v| if v > T::zero() { v.ln() } else { T::neg_infinity() })
            .collect()
    }

    pub fn is_uniform(&self) -> bool {
        self.q.windows(2).all(|w| w[0] == w[1])
    }
}

/// A point of the probability simplex.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ProbabilityVector<T> {
    p: Vec<T>,
}

impl<T: Real> ProbabilityVector<T> {
    pub fn new(p: Vec<T>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::InvalidProbability("vector has no cells".into()));
        }
        if let Some((i, v)) = p.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= T::zero())) {
            return Err(Error::InvalidProbability(format!("p[{i}] = {v} is not a nonnegative number")));
        }
        let total = p.iter().copied().collect::<CompensatedSum<T>>().value();
        if (total - T::one()).abs().as_f64() > T::SIMPLEX_TOL {
            return Err(Error::InvalidProbability(format!("entries sum to {total}, not 1")));
        }
        Ok(Self { p })
    }

    /// Normalizes nonnegative weights.
    pub fn from_weights(weights: &[T]) -> Result<Self> {
        let total = weights.iter().copied().collect::<CompensatedSum<T>>().value();
        if !total.is_finite() || total <= T::zero() {
            return Err(Error::InvalidProbability("weights have no positive mass".into()));
        }
        Self::new(weights.iter().map(|&w| w / total).collect())
    }

    pub fn m(&self) -> usize {
        self.p.len()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.p
    }

    pub fn into_vec(self) -> Vec<T> {
        self.p
    }

    /// `max |pᵢ − oᵢ|`.
    pub fn max_abs_diff(&self, other: &[T]) -> T {
        self.p
            .iter()
            .zip(other)
            .fold(T::zero(), |acc, (&a, &b)| acc.max((a - b).abs()))
    }
}

/// Absolute cell counts `n₁, ..., n_m` with total `n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<u64>", into = "Vec<u64>")]
pub struct OccurrenceVector {
    counts: Vec<u64>,
    total: u64,
}

impl OccurrenceVector {
    pub fn new(counts: Vec<u64>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::InvalidOccurrence("vector has no cells".into()));
        }
        let total = counts
            .iter()
            .try_fold(0u64, |acc, &c| acc.checked_add(c))
            .ok_or_else(|| Error::Overflow("summing occurrence counts".into()))?;
        Ok(Self { counts, total })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn m(&self) -> usize {
        self.counts.len()
    }

    /// Exact type vector `n_vec / n`.
    pub fn frequency_exact(&self) -> Result<Vec<Rational>> {
        if self.total == 0 {
            return Err(Error::InvalidOccurrence("zero total has no frequency".into()));
        }
        let n = rational::from_u64(self.total);
        Ok(self.counts.iter().map(|&c| rational::from_u64(c) / &n).collect())
    }
}

impl TryFrom<Vec<u64>> for OccurrenceVector {
    type Error = Error;

    fn try_from(counts: Vec<u64>) -> Result<Self> {
        Self::new(counts)
    }
}

impl From<OccurrenceVector> for Vec<u64> {
    fn from(v: OccurrenceVector) -> Self {
        v.counts
    }
}

/// `Σ pᵢ xᵢ = μ`, equivalently `Σ nᵢ xᵢ = μ n` on counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MomentConstraint {
    pub x: Vec<Rational>,
    pub target: Rational,
}

impl MomentConstraint {
    pub fn new(x: Vec<Rational>, target: Rational) -> Self {
        Self { x, target }
    }

    /// Parses decimal literals such as `"3.2"`.
    pub fn from_decimals(x: &[&str], target: &str) -> Result<Self> {
        let x = x.iter().map(|s| rational::parse_decimal(s)).collect::<Result<_>>()?;
        Ok(Self::new(x, rational::parse_decimal(target)?))
    }

    pub fn m(&self) -> usize {
        self.x.len()
    }

    /// All coefficients equal: the constraint is either implied by the
    /// adding-up constraint or contradicts it.
    pub fn is_constant(&self) -> bool {
        self.x.windows(2).all(|w| w[0] == w[1])
    }

    /// Exact check of `Σ nᵢ xᵢ = μ n`.
    pub fn satisfied_by_counts(&self, v: &OccurrenceVector) -> bool {
        let lhs: Rational = self
            .x
            .iter()
            .zip(v.counts())
            .map(|(x, &c)| x * rational::from_u64(c))
            .sum();
        lhs == &self.target * rational::from_u64(v.total())
    }

    /// Exact check of `Σ (nᵢ/n) xᵢ = μ`.
    pub fn satisfied_by_frequency(&self, freq: &[Rational]) -> bool {
        let lhs: Rational = self.x.iter().zip(freq).map(|(x, p)| x * p).sum();
        lhs == self.target
    }

    /// `(min, max)` of the coefficients over `support`.
    pub fn range_on(&self, support: &[usize]) -> Option<(Rational, Rational)> {
        let mut it = support.iter().map(|&i| &self.x[i]);
        let first = it.next()?.clone();
        Some(it.fold((first.clone(), first), |(lo, hi), v| {
            (if v < &lo { v.clone() } else { lo }, if v > &hi { v.clone() } else { hi })
        }))
    }

    pub fn coefficients<T: Real>(&self) -> Vec<T> {
        self.x.iter().map(rational::to_real).collect()
    }
}

/// The working set `H_n`: all occurrence vectors of total `n` over `m`
/// cells satisfying every moment constraint. The adding-up constraint is
/// implicit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkingSetSpec {
    pub m: usize,
    pub n: u64,
    pub constraints: Vec<MomentConstraint>,
}

impl WorkingSetSpec {
    pub fn new(m: usize, n: u64, constraints: Vec<MomentConstraint>) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidOccurrence("working set needs m >= 1".into()));
        }
        if let Some(c) = constraints.iter().find(|c| c.m() != m) {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: c.m(),
            });
        }
        Ok(Self { m, n, constraints })
    }

    pub fn with_n(&self, n: u64) -> Self {
        Self { n, ..self.clone() }
    }

    /// Exact membership test.
    pub fn contains(&self, v: &OccurrenceVector) -> bool {
        v.m() == self.m && v.total() == self.n && self.constraints.iter().all(|c| c.satisfied_by_counts(v))
    }
}

/// `H(p, q) = −Σ pᵢ ln(pᵢ/qᵢ)`, with `0·ln(0/qᵢ) = 0` and `-∞` when `p`
/// puts mass where `q` has none.
pub fn relative_entropy<T: Real>(p: &ProbabilityVector<T>, q: &PriorGenerator<T>) -> Result<T> {
    if p.m() != q.m() {
        return Err(Error::DimensionMismatch {
            expected: q.m(),
            found: p.m(),
        });
    }
    let mut acc = CompensatedSum::new();
    for (&pi, &qi) in p.as_slice().iter().zip(q.q()) {
        if pi == T::zero() {
            continue;
        }
        if qi == T::zero() {
            return Ok(T::neg_infinity());
        }
        acc.add(pi * (qi.ln() - pi.ln()));
    }
    // Gibbs' inequality; rounding can only push the sum above zero.
    Ok(acc.value().min(T::zero()))
}

/// `H(p) = −Σ pᵢ ln pᵢ`.
pub fn shannon_entropy<T: Real>(p: &ProbabilityVector<T>) -> T {
    let acc: CompensatedSum<T> = p
        .as_slice()
        .iter()
        .filter(|&&v| v > T::zero())
        .map(|&v| -v * v.ln())
        .collect();
    acc.value().max(T::zero())
}

/// The type vector `n_vec / n`.
pub fn frequency<T: Real>(v: &OccurrenceVector) -> Result<ProbabilityVector<T>> {
    if v.total() == 0 {
        return Err(Error::InvalidOccurrence("zero total has no frequency".into()));
    }
    let n = T::from_u64_lossy(v.total());
    ProbabilityVector::new(v.counts().iter().map(|&c| T::from_u64_lossy(c) / n).collect())
}
