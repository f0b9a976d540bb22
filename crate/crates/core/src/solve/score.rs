use crate::error::{Error, Result};
use crate::model::{OccurrenceVector, PriorGenerator};
use crate::numerics::log_gamma;
use crate::scalar::{CompensatedSum, Real};

/// `ln π(n|q) = ln n! − Σ ln nᵢ! + Σ nᵢ ln qᵢ`, `-∞` when a count falls on
/// a zero-prior cell.
pub fn log_multinomial_prob<T: Real>(v: &OccurrenceVector, q: &PriorGenerator<T>) -> Result<T> {
    if v.m() != q.m() {
        return Err(Error::DimensionMismatch {
            expected: q.m(),
            found: v.m(),
        });
    }
    let mut acc = CompensatedSum::new();
    acc.add(log_gamma(T::from_u64_lossy(v.total()) + T::one())?);
    for (&c, &qi) in v.counts().iter().zip(q.q()) {
        if c == 0 {
            continue;
        }
        if qi == T::zero() {
            return Ok(T::neg_infinity());
        }
        let c_real = T::from_u64_lossy(c);
        acc.add(-log_gamma(c_real + T::one())?);
        acc.add(c_real * qi.ln());
    }
    Ok(acc.value())
}

/// Table-driven scorer for many vectors of one total.
#[derive(Debug, Clone)]
pub struct Scorer<T> {
    log_factorial: Vec<T>,
    log_q: Vec<T>,
}

impl<T: Real> Scorer<T> {
    pub fn new(q: &PriorGenerator<T>, n: u64) -> Result<Self> {
        let len = usize::try_from(n)
            .ok()
            .and_then(|n| n.checked_add(1))
            .ok_or_else(|| Error::Overflow("sizing the log-factorial table".into()))?;
        let log_factorial = (0..len)
            .map(|k| log_gamma(T::from_u64_lossy(k as u64) + T::one()))
            .collect::<Result<Vec<T>>>()?;
        Ok(Self {
            log_factorial,
            log_q: q.log_q(),
        })
    }

    /// Score of counts whose total is the table size minus one.
    #[inline]
    pub fn score(&self, counts: &[u64]) -> T {
        let mut acc = CompensatedSum::new();
        acc.add(self.log_factorial[self.log_factorial.len() - 1]);
        for (&c, &lq) in counts.iter().zip(&self.log_q) {
            if c == 0 {
                continue;
            }
            if lq == T::neg_infinity() {
                return lq;
            }
            acc.add(T::from_u64_lossy(c) * lq - self.log_factorial[c as usize]);
        }
        acc.value()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{self, Rational};
    use num_bigint::BigInt;
    use num_traits::{One, ToPrimitive};

    fn v(c: &[u64]) -> OccurrenceVector {
        OccurrenceVector::new(c.to_vec()).unwrap()
    }

    fn factorial(k: u64) -> BigInt {
        (1..=k).fold(BigInt::one(), |acc, j| acc * BigInt::from(j))
    }

    fn exact_prob(counts: &[u64], q: &[Rational]) -> Rational {
        let n: u64 = counts.iter().sum();
        let mut p = Rational::from_integer(factorial(n));
        for (&c, qi) in counts.iter().zip(q) {
            p /= Rational::from_integer(factorial(c));
            p *= num_traits::pow(qi.clone(), c as usize);
        }
        p
    }

    #[test]
    fn trivial_examples() {
        let one = PriorGenerator::new(vec![1.0f64]).unwrap();
        assert_eq!(log_multinomial_prob(&v(&[5]), &one).unwrap(), 0.0);
        let half = PriorGenerator::<f64>::uniform(2).unwrap();
        let lp = log_multinomial_prob(&v(&[1, 1]), &half).unwrap();
        assert!((lp - 0.5f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn reference_row_against_exact_rational() {
        let qs: Vec<Rational> = ["0.13", "0.09", "0.42", "0.36"]
            .iter()
            .map(|s| rational::parse_decimal(s).unwrap())
            .collect();
        let q = PriorGenerator::<f64>::from_rationals(&qs).unwrap();
        let counts = [1, 0, 5, 4];
        let exact = exact_prob(&counts, &qs);
        // ln of an exact rational through big-integer digits
        let id = exact.numer().to_f64().unwrap().ln() - exact.denom().to_f64().unwrap().ln();
        let got = log_multinomial_prob(&v(&counts), &q).unwrap();
        assert!(((got - id) / id).abs() < 1e-10, "{got} vs {id}");
        let scorer = Scorer::new(&q, 10).unwrap();
        assert!((scorer.score(&counts) - got).abs() < 1e-12);
    }

    #[test]
    fn zero_prior_cells() {
        let q = PriorGenerator::new(vec![0.0, 0.5, 0.5]).unwrap();
        assert_eq!(log_multinomial_prob(&v(&[1, 1, 0]), &q).unwrap(), f64::NEG_INFINITY);
        assert!(log_multinomial_prob(&v(&[0, 1, 1]), &q).unwrap().is_finite());
        assert!(matches!(
            log_multinomial_prob(&v(&[1, 1]), &q),
            Err(Error::DimensionMismatch { .. })
        ));
        let scorer = Scorer::new(&q, 2).unwrap();
        assert_eq!(scorer.score(&[1, 1, 0]), f64::NEG_INFINITY);
    }
}
