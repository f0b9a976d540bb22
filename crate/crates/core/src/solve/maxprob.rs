use serde::Serialize;

use super::{check_dims, map_partitions, Scorer, SolveOptions};
use crate::enumerate::checked_system;
use crate::error::{Error, Result};
use crate::model::{frequency, OccurrenceVector, PriorGenerator, WorkingSetSpec};
use crate::scalar::Real;

/// Most probable member of a working set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaxProbResult<T> {
    /// Lexicographically smallest vector among the tied maximizers.
    pub argmax: OccurrenceVector,
    pub log_prob: T,
    pub tie_count: usize,
    /// Every vector scoring within the tie tolerance of the maximum, in
    /// lexicographic order.
    pub tied: Vec<OccurrenceVector>,
    pub j_scanned: u128,
}

impl<T: Real> MaxProbResult<T> {
    /// `argmax / n`.
    pub fn frequency(&self) -> Vec<T> {
        frequency(&self.argmax)
            .map(|p| p.into_vec())
            .unwrap_or_else(|_| vec![T::zero(); self.argmax.m()])
    }
}

#[derive(Debug)]
struct Candidates<T> {
    best: T,
    tied: Vec<(OccurrenceVector, T)>,
    scanned: u128,
}

impl<T: Real> Candidates<T> {
    fn new() -> Self {
        Self {
            best: T::neg_infinity(),
            tied: Vec::new(),
            scanned: 0,
        }
    }

    fn offer(&mut self, v: OccurrenceVector, score: T, tol: T) {
        if score == T::neg_infinity() {
            return;
        }
        if score > self.best {
            self.best = score;
            let floor = score - tol;
            self.tied.retain(|(_, s)| *s >= floor);
            self.tied.push((v, score));
        } else if score >= self.best - tol {
            self.tied.push((v, score));
        }
    }

    /// Later partitions hold lexicographically larger vectors, so
    /// concatenation preserves order.
    fn merge(mut self, other: Self, tol: T) -> Self {
        self.scanned += other.scanned;
        self.best = self.best.max(other.best);
        self.tied.extend(other.tied);
        let floor = self.best - tol;
        self.tied.retain(|(_, s)| *s >= floor);
        self
    }
}

/// `argmax_{n ∈ H_n} π(n | q)`.
///
/// Ties within `opts.tie_tolerance` (log domain) resolve to the
/// lexicographically smallest vector.
pub fn maxprob<T: Real>(
    spec: &WorkingSetSpec,
    q: &PriorGenerator<T>,
    opts: &SolveOptions,
) -> Result<MaxProbResult<T>> {
    check_dims(spec, q)?;
    let (system, _) = checked_system(spec, &opts.budget)?;
    let scorer = Scorer::new(q, spec.n)?;
    let tol = T::lit(opts.tie_tolerance);

    let parts = map_partitions(&system, opts.parallel, |iter| {
        let mut cand = Candidates::new();
        for v in iter {
            cand.scanned += 1;
            let s = scorer.score(v.counts());
            cand.offer(v, s, tol);
        }
        cand
    });
    let merged = parts
        .into_iter()
        .fold(Candidates::new(), |acc, part| acc.merge(part, tol));

    let Some((argmax, log_prob)) = merged.tied.first().cloned() else {
        return Err(Error::AllZeroProbability);
    };
    Ok(MaxProbResult {
        argmax,
        log_prob,
        tie_count: merged.tied.len(),
        tied: merged.tied.into_iter().map(|(v, _)| v).collect(),
        j_scanned: merged.scanned,
    })
}
