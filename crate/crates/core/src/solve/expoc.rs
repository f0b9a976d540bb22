use serde::Serialize;

use super::{check_dims, map_partitions, Scorer, SolveOptions};
use crate::enumerate::checked_system;
use crate::error::{Error, Result};
use crate::model::{PriorGenerator, WorkingSetSpec};
use crate::numerics::LogSumExp;
use crate::scalar::{CompensatedSum, Real};

/// Probability-weighted mean of a working set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpOcResult<T> {
    pub mean: Vec<T>,
    /// `ln Σ_j π(n_j | q)`, the prior mass of the working set.
    pub log_total_prob: T,
    pub j_scanned: u128,
}

impl<T: Real> ExpOcResult<T> {
    /// `mean / n`.
    pub fn frequency(&self) -> Vec<T> {
        let n: T = self.mean.iter().copied().sum();
        self.mean.iter().map(|&v| v / n).collect()
    }
}

/// `n̄ = Σ_j π(n_j|q) n_j / Σ_j π(n_j|q)`.
///
/// The first pass computes the log normalizer; the second accumulates
/// `exp(ln π_j − ln W) · n_j`, so nothing underflows at large `n`.
pub fn expoc<T: Real>(spec: &WorkingSetSpec, q: &PriorGenerator<T>, opts: &SolveOptions) -> Result<ExpOcResult<T>> {
    check_dims(spec, q)?;
    let (system, _) = checked_system(spec, &opts.budget)?;
    let scorer = Scorer::new(q, spec.n)?;
    let m = spec.m;

    let normalizers = map_partitions(&system, opts.parallel, |iter| {
        let mut acc = LogSumExp::new();
        acc.extend(iter.map(|v| scorer.score(v.counts())));
        acc
    });
    let mut log_total = LogSumExp::new();
    for part in &normalizers {
        log_total.merge(part);
    }
    let scanned = log_total.len() as u128;
    let log_w = log_total.value();
    if log_w == T::neg_infinity() {
        return Err(Error::AllZeroProbability);
    }

    let moments = map_partitions(&system, opts.parallel, |iter| {
        let mut weight = CompensatedSum::new();
        let mut cells = vec![CompensatedSum::new(); m];
        for v in iter {
            let w = (scorer.score(v.counts()) - log_w).exp();
            if w == T::zero() {
                continue;
            }
            weight.add(w);
            for (acc, &c) in cells.iter_mut().zip(v.counts()) {
                if c > 0 {
                    acc.add(w * T::from_u64_lossy(c));
                }
            }
        }
        (weight.value(), cells.iter().map(CompensatedSum::value).collect::<Vec<T>>())
    });
    let mut weight = CompensatedSum::new();
    let mut cells = vec![CompensatedSum::new(); m];
    for (w, part) in moments {
        weight.add(w);
        for (acc, v) in cells.iter_mut().zip(part) {
            acc.add(v);
        }
    }
    let total_weight = weight.value();
    Ok(ExpOcResult {
        mean: cells.iter().map(|c| c.value() / total_weight).collect(),
        log_total_prob: log_w.min(T::zero()),
        j_scanned: scanned,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::MomentConstraint;

    #[test]
    fn singleton_working_set_is_its_own_mean() {
        // x = [1, 0, 0], target 1 forces [n, 0, 0]
        let c = MomentConstraint::from_decimals(&["1", "0", "0"], "1").unwrap();
        let spec = WorkingSetSpec::new(3, 6, vec![c]).unwrap();
        let q = PriorGenerator::new(vec![0.2, 0.3, 0.5]).unwrap();
        let r = expoc(&spec, &q, &SolveOptions::default()).unwrap();
        assert_eq!(r.mean, vec![6.0, 0.0, 0.0]);
        assert_eq!(r.j_scanned, 1);
        assert!((r.log_total_prob - 6.0 * 0.2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn unconstrained_mean_is_n_times_q() {
        let spec = WorkingSetSpec::new(3, 12, vec![]).unwrap();
        let q = PriorGenerator::new(vec![0.2f64, 0.3, 0.5]).unwrap();
        let r = expoc(&spec, &q, &SolveOptions::default()).unwrap();
        for (got, want) in r.mean.iter().zip([2.4, 3.6, 6.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!(r.log_total_prob.abs() < 1e-12);
    }

    #[test]
    fn serial_and_parallel_agree_bitwise() {
        let c = MomentConstraint::from_decimals(&["1", "2", "3", "4"], "3.2").unwrap();
        let spec = WorkingSetSpec::new(4, 200, vec![c]).unwrap();
        let q = PriorGenerator::new(vec![0.13, 0.09, 0.42, 0.36]).unwrap();
        let a = expoc(&spec, &q, &SolveOptions::serial()).unwrap();
        let b = expoc(&spec, &q, &SolveOptions::default()).unwrap();
        assert_eq!(a, b);
        let total: f64 = a.mean.iter().sum();
        assert!((total - 200.0).abs() < 1e-9);
    }

    #[test]
    fn zero_mass_is_an_error() {
        let c = MomentConstraint::from_decimals(&["1", "0"], "1").unwrap();
        let spec = WorkingSetSpec::new(2, 2, vec![c]).unwrap();
        let q = PriorGenerator::new(vec![0.0, 1.0]).unwrap();
        assert!(matches!(expoc(&spec, &q, &SolveOptions::default()), Err(Error::AllZeroProbability)));
    }
}
