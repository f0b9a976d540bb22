use serde::Serialize;

use super::log_multinomial_prob;
use crate::error::{Error, Result};
use crate::model::{relative_entropy, OccurrenceVector, PriorGenerator, ProbabilityVector};
use crate::scalar::Real;

/// One point of the `ln π(n|q) / n → H(p, q)` limit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WallisRecord<T> {
    pub n: u64,
    pub rounded_vector: OccurrenceVector,
    /// `ln π(n|q) / n`.
    pub normalized_log_prob: T,
    /// `H(p, q)`.
    pub target_entropy: T,
    pub gap: T,
}

/// Apportions `n` among the cells in proportion to `p`: floors first, then
/// one extra unit per cell by descending remainder, lowest index first on
/// equal remainders.
pub fn largest_remainder_round<T: Real>(p: &ProbabilityVector<T>, n: u64) -> OccurrenceVector {
    let n_real = T::from_u64_lossy(n);
    let mut counts = Vec::with_capacity(p.m());
    let mut remainders = Vec::with_capacity(p.m());
    for &pi in p.as_slice() {
        let share = pi * n_real;
        let floor = share.floor().max(T::zero());
        counts.push(floor.to_u64().unwrap_or(0).min(n));
        remainders.push(share - floor);
    }
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| {
        remainders[b]
            .partial_cmp(&remainders[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut assigned: u64 = counts.iter().sum();
    let mut cursor = 0;
    while assigned < n {
        counts[order[cursor % order.len()]] += 1;
        assigned += 1;
        cursor += 1;
    }
    // Only reachable when rounding pushed the floors past n.
    let mut cursor = order.len();
    while assigned > n {
        cursor = if cursor == 0 { order.len() - 1 } else { cursor - 1 };
        let i = order[cursor];
        if counts[i] > 0 {
            counts[i] -= 1;
            assigned -= 1;
        }
    }
    OccurrenceVector::new(counts).expect("counts sum to n")
}

/// Evaluates `ln π(n⁽ᵏ⁾|q) / n` along `n_values` for the rounded vectors
/// `n⁽ᵏ⁾ ≈ n·p` and compares with `H(p, q)`.
pub fn wallis_limit_check<T: Real>(
    q: &PriorGenerator<T>,
    p: &ProbabilityVector<T>,
    n_values: &[u64],
) -> Result<Vec<WallisRecord<T>>> {
    if p.m() != q.m() {
        return Err(Error::DimensionMismatch {
            expected: q.m(),
            found: p.m(),
        });
    }
    if p.as_slice().iter().zip(q.q()).any(|(&pi, &qi)| pi > T::zero() && qi == T::zero()) {
        return Err(Error::InvalidArgument("p puts mass outside the prior's support".into()));
    }
    if n_values.first() == Some(&0) || n_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("n values must be positive and strictly increasing".into()));
    }
    let target = relative_entropy(p, q)?;
    n_values
        .iter()
        .map(|&n| {
            let rounded = largest_remainder_round(p, n);
            let normalized = log_multinomial_prob(&rounded, q)? / T::from_u64_lossy(n);
            Ok(WallisRecord {
                n,
                rounded_vector: rounded,
                normalized_log_prob: normalized,
                target_entropy: target,
                gap: (normalized - target).abs(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pv(p: &[f64]) -> ProbabilityVector<f64> {
        ProbabilityVector::new(p.to_vec()).unwrap()
    }

    #[test]
    fn rounding_preserves_the_total() {
        let p = ProbabilityVector::from_weights(&[0.0788, 0.1462, 0.2714, 0.5037]).unwrap();
        let v = largest_remainder_round(&p, 100);
        assert_eq!(v.counts(), &[8, 15, 27, 50]);
        let thirds = pv(&[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]);
        // equal remainders: the lowest index gets the extra unit
        assert_eq!(largest_remainder_round(&thirds, 4).counts(), &[2, 1, 1]);
        assert_eq!(largest_remainder_round(&thirds, 5).counts(), &[2, 2, 1]);
        for n in 1..50 {
            assert_eq!(largest_remainder_round(&thirds, n).total(), n);
        }
    }

    #[test]
    fn degenerate_vector_has_no_gap() {
        let q = PriorGenerator::<f64>::uniform(2).unwrap();
        let recs = wallis_limit_check(&q, &pv(&[1.0, 0.0]), &[1, 10, 1000]).unwrap();
        for r in recs {
            assert!(r.gap < 1e-12, "{r:?}");
            assert!((r.target_entropy + std::f64::consts::LN_2).abs() < 1e-15);
        }
    }

    #[test]
    fn gap_shrinks_for_p_equal_q() {
        let q = PriorGenerator::new(vec![0.13, 0.09, 0.42, 0.36]).unwrap();
        let p = pv(q.q());
        let recs = wallis_limit_check(&q, &p, &[100, 10_000]).unwrap();
        assert!(recs[1].gap < recs[0].gap);
        assert_eq!(recs[0].target_entropy, 0.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let q = PriorGenerator::new(vec![0.0, 1.0]).unwrap();
        assert!(wallis_limit_check(&q, &pv(&[0.5, 0.5]), &[10]).is_err());
        let u = PriorGenerator::<f64>::uniform(2).unwrap();
        assert!(wallis_limit_check(&u, &pv(&[0.5, 0.5]), &[10, 10]).is_err());
        assert!(wallis_limit_check(&u, &pv(&[0.5, 0.5]), &[0, 10]).is_err());
    }
}
