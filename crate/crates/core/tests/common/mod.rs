//! Independent oracles shared by the integration suites: naive composition
//! enumeration, exact rational multinomial scoring, random instances.

#![allow(dead_code)]

use maxprob_core::model::{MomentConstraint, OccurrenceVector, PriorGenerator, WorkingSetSpec};
use maxprob_core::rational::{self, Rational};
use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::Rng;

pub const REFERENCE_Q: [&str; 4] = ["0.13", "0.09", "0.42", "0.36"];
pub const REFERENCE_N: [u64; 5] = [10, 50, 100, 500, 1000];
pub const REFERENCE_J: [u128; 5] = [10, 154, 574, 13534, 53734];

pub fn reference_constraint() -> MomentConstraint {
    MomentConstraint::from_decimals(&["1", "2", "3", "4"], "3.2").unwrap()
}

pub fn reference_spec(n: u64) -> WorkingSetSpec {
    WorkingSetSpec::new(4, n, vec![reference_constraint()]).unwrap()
}

pub fn reference_prior() -> PriorGenerator<f64> {
    PriorGenerator::from_rationals(&rationals(&REFERENCE_Q)).unwrap()
}

pub fn rationals(values: &[&str]) -> Vec<Rational> {
    values.iter().map(|s| rational::parse_decimal(s).unwrap()).collect()
}

pub fn r(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Every composition of `n` into `m` nonnegative parts, lexicographic.
pub fn compositions(m: usize, n: u64) -> Vec<Vec<u64>> {
    fn rec(m: usize, n: u64, prefix: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if m == 1 {
            prefix.push(n);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for t in 0..=n {
            prefix.push(t);
            rec(m - 1, n - t, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(m, n, &mut Vec::new(), &mut out);
    out
}

/// Naive filter of all compositions by exact rational constraint checks.
pub fn naive_working_set(spec: &WorkingSetSpec) -> Vec<OccurrenceVector> {
    compositions(spec.m, spec.n)
        .into_iter()
        .map(|c| OccurrenceVector::new(c).unwrap())
        .filter(|v| spec.constraints.iter().all(|c| c.satisfied_by_counts(v)))
        .collect()
}

fn factorial(k: u64) -> BigInt {
    (1..=k).fold(BigInt::one(), |acc, j| acc * BigInt::from(j))
}

/// `π(n|q)` in exact arithmetic.
pub fn exact_prob(counts: &[u64], q: &[Rational]) -> Rational {
    let n: u64 = counts.iter().sum();
    let mut p = Rational::from_integer(factorial(n));
    for (&c, qi) in counts.iter().zip(q) {
        p /= Rational::from_integer(factorial(c));
        p *= num_traits::pow(qi.clone(), c as usize);
    }
    p
}

/// All exact maximizers of `π(n|q)` over `set`, lexicographic.
pub fn exact_argmax_set(set: &[OccurrenceVector], q: &[Rational]) -> Vec<OccurrenceVector> {
    let scored: Vec<(Rational, &OccurrenceVector)> = set.iter().map(|v| (exact_prob(v.counts(), q), v)).collect();
    let Some(best) = scored.iter().map(|(p, _)| p).max().cloned() else {
        return Vec::new();
    };
    if best.is_zero() {
        return Vec::new();
    }
    scored.into_iter().filter(|(p, _)| *p == best).map(|(_, v)| v.clone()).collect()
}

/// Strictly positive rational prior with small denominators.
pub fn random_rational_prior(rng: &mut impl Rng, m: usize) -> Vec<Rational> {
    let weights: Vec<i64> = (0..m).map(|_| rng.gen_range(1..=9)).collect();
    let total: i64 = weights.iter().sum();
    weights.into_iter().map(|w| r(w, total)).collect()
}

/// Random constraint with denominators ≤ 5; most targets are hit by some
/// composition of `n`.
pub fn random_constraint(rng: &mut impl Rng, m: usize, n: u64) -> MomentConstraint {
    let x: Vec<Rational> = (0..m).map(|_| r(rng.gen_range(-5..=5), rng.gen_range(1..=5))).collect();
    let target = if n > 0 && rng.gen_bool(0.8) {
        let mut counts = vec![0u64; m];
        for _ in 0..n {
            counts[rng.gen_range(0..m)] += 1;
        }
        let sum: Rational = x.iter().zip(&counts).map(|(a, &c)| a * rational::from_u64(c)).sum();
        sum / rational::from_u64(n)
    } else {
        r(rng.gen_range(-5..=5), rng.gen_range(1..=5))
    };
    MomentConstraint::new(x, target)
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub spec: WorkingSetSpec,
    pub q: Vec<Rational>,
}

pub fn random_instance(rng: &mut impl Rng, max_m: usize, max_n: u64) -> Instance {
    let m = rng.gen_range(1..=max_m);
    let n = rng.gen_range(1..=max_n);
    let k = rng.gen_range(0..=2);
    let constraints = (0..k).map(|_| random_constraint(rng, m, n)).collect();
    Instance {
        spec: WorkingSetSpec::new(m, n, constraints).unwrap(),
        q: random_rational_prior(rng, m),
    }
}

/// Vertices of `{p ∈ simplex : Σ pᵢ xᵢ = μ}` for a single constraint.
pub fn feasible_vertices(x: &[f64], mu: f64) -> Vec<Vec<f64>> {
    let m = x.len();
    let mut out = Vec::new();
    for i in 0..m {
        if x[i] == mu {
            let mut p = vec![0.0; m];
            p[i] = 1.0;
            out.push(p);
        }
        for j in 0..m {
            if x[i] < mu && mu < x[j] {
                let mut p = vec![0.0; m];
                p[i] = (x[j] - mu) / (x[j] - x[i]);
                p[j] = (mu - x[i]) / (x[j] - x[i]);
                out.push(p);
            }
        }
    }
    out
}

/// Random convex combination of `vertices`.
pub fn random_mixture(rng: &mut impl Rng, vertices: &[Vec<f64>]) -> Vec<f64> {
    let w: Vec<f64> = vertices.iter().map(|_| -rng.gen::<f64>().max(1e-300).ln()).collect();
    let total: f64 = w.iter().sum();
    let m = vertices[0].len();
    let mut p = vec![0.0; m];
    for (wi, v) in w.iter().zip(vertices) {
        for i in 0..m {
            p[i] += wi / total * v[i];
        }
    }
    p
}

pub fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |acc, (x, y)| acc.max((x - y).abs()))
}
