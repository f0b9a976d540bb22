//! Relative-entropy maximization under linear moment constraints.
//!
//! The maximizer has the exponential-family form
//! `pᵢ = qᵢ exp(Σ_k λ_k x_{k,i}) / Z(λ)`; the multipliers solve
//! `∇ ln Z(λ) = μ`, i.e. minimize the convex dual `ln Z(λ) − λ·μ`. Newton
//! steps use the covariance of `x` under `p(λ)` as the Hessian.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{MomentConstraint, PriorGenerator, ProbabilityVector};
use crate::numerics::log_sum_exp;
use crate::rational::{self, Rational};
use crate::scalar::{CompensatedSum, Real};

const MAX_HALVINGS: usize = 60;
const BISECTION_STEPS: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RemOptions {
    /// Bound on the largest absolute moment violation.
    pub tolerance: f64,
    pub max_iter: usize,
}

impl Default for RemOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-12,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RemResult<T> {
    pub p_hat: ProbabilityVector<T>,
    /// One per input constraint. `±∞` marks a target on the boundary of its
    /// attainable interval; `0` a constraint implied by the others.
    pub multipliers: Vec<T>,
    /// `ln Z(λ)`.
    pub log_normalizer: T,
    pub iterations: usize,
    /// `max_k |Σ p̂ᵢ x_{k,i} − μ_k|`.
    pub residual: T,
}

/// Maximizes `H(p, q)` subject to every constraint in `constraints`.
pub fn rem_solve<T: Real>(
    q: &PriorGenerator<T>,
    constraints: &[MomentConstraint],
    opts: &RemOptions,
) -> Result<RemResult<T>> {
    let m = q.m();
    if let Some(c) = constraints.iter().find(|c| c.m() != m) {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: c.m(),
        });
    }

    let reduced = reduce(q.support(), constraints)?;
    let problem = Dual::new(q, constraints, &reduced);
    let tol = T::lit(opts.tolerance);

    let (lambda, iterations) = if problem.active.is_empty() {
        (Vec::new(), 0)
    } else {
        problem.solve(tol, opts.max_iter)?
    };

    let (log_z, weights) = problem.log_weights(&lambda);
    let mut p = vec![T::zero(); m];
    for (&i, &w) in reduced.support.iter().zip(&weights) {
        p[i] = (w - log_z).exp();
    }
    let p_hat = ProbabilityVector::from_weights(&p)?;

    let mut multipliers = vec![T::zero(); constraints.len()];
    for (&k, &l) in problem.active.iter().zip(&lambda) {
        multipliers[k] = l;
    }
    for &(k, upper) in &reduced.boundary {
        multipliers[k] = if upper { T::infinity() } else { T::neg_infinity() };
    }
    let residual = moment_residual(p_hat.as_slice(), constraints);
    if residual > tol {
        return Err(Error::NoConvergence {
            iterations,
            residual: residual.as_f64(),
            reason: "final moments outside tolerance".into(),
        });
    }
    Ok(RemResult {
        p_hat,
        multipliers,
        log_normalizer: log_z,
        iterations,
        residual,
    })
}

/// `max_k |Σ pᵢ x_{k,i} − μ_k|`.
pub fn moment_residual<T: Real>(p: &[T], constraints: &[MomentConstraint]) -> T {
    constraints
        .iter()
        .map(|c| {
            let mean: CompensatedSum<T> = c.coefficients::<T>().iter().zip(p).map(|(&x, &pi)| x * pi).collect();
            (mean.value() - rational::to_real::<T>(&c.target)).abs()
        })
        .fold(T::zero(), T::max)
}

/// Support and constraint set after resolving boundary targets exactly.
#[derive(Debug)]
struct Reduced {
    support: Vec<usize>,
    active: Vec<usize>,
    /// (constraint, target at the upper end)
    boundary: Vec<(usize, bool)>,
}

fn reduce(mut support: Vec<usize>, constraints: &[MomentConstraint]) -> Result<Reduced> {
    let mut boundary = Vec::new();
    'restart: loop {
        let mut active = Vec::new();
        for (k, c) in constraints.iter().enumerate() {
            if boundary.iter().any(|&(b, _)| b == k) {
                continue;
            }
            let (lo, hi) = c.range_on(&support).expect("prior support is nonempty");
            if c.target < lo || c.target > hi {
                return Err(Error::InfeasibleMoment {
                    index: k,
                    target: rational::format_decimal(&c.target),
                    min: rational::format_decimal(&lo),
                    max: rational::format_decimal(&hi),
                });
            }
            if lo == hi {
                continue;
            }
            if c.target == lo || c.target == hi {
                let edge: &Rational = if c.target == lo { &lo } else { &hi };
                support.retain(|&i| &c.x[i] == edge);
                boundary.push((k, c.target == hi));
                continue 'restart;
            }
            active.push(k);
        }
        return Ok(Reduced {
            support,
            active,
            boundary,
        });
    }
}

/// Dual problem restricted to the reduced support.
struct Dual<T> {
    log_q: Vec<T>,
    // [active constraint][support cell]
    x: Vec<Vec<T>>,
    mu: Vec<T>,
    active: Vec<usize>,
}

impl<T: Real> Dual<T> {
    fn new(q: &PriorGenerator<T>, constraints: &[MomentConstraint], reduced: &Reduced) -> Self {
        let log_q_full = q.log_q();
        let log_q = reduced.support.iter().map(|&i| log_q_full[i]).collect();
        let x = reduced
            .active
            .iter()
            .map(|&k| {
                let coeffs = constraints[k].coefficients::<T>();
                reduced.support.iter().map(|&i| coeffs[i]).collect()
            })
            .collect();
        let mu = reduced
            .active
            .iter()
            .map(|&k| rational::to_real(&constraints[k].target))
            .collect();
        Self {
            log_q,
            x,
            mu,
            active: reduced.active.clone(),
        }
    }

    fn log_weights(&self, lambda: &[T]) -> (T, Vec<T>) {
        let w: Vec<T> = (0..self.log_q.len())
            .map(|i| {
                self.x
                    .iter()
                    .zip(lambda)
                    .fold(self.log_q[i], |acc, (row, &l)| acc + l * row[i])
            })
            .collect();
        let log_z = log_sum_exp(&w).expect("support is nonempty");
        (log_z, w)
    }

    /// Gradient `E_p[x] − μ` and Hessian `Cov_p(x)`.
    fn derivatives(&self, lambda: &[T]) -> (Vec<T>, Vec<Vec<T>>) {
        let (log_z, w) = self.log_weights(lambda);
        let p: Vec<T> = w.iter().map(|&wi| (wi - log_z).exp()).collect();
        let means: Vec<T> = self
            .x
            .iter()
            .map(|row| row.iter().zip(&p).map(|(&x, &pi)| x * pi).collect::<CompensatedSum<T>>().value())
            .collect();
        let grad = means.iter().zip(&self.mu).map(|(&a, &b)| a - b).collect();
        let k = self.x.len();
        let mut hess = vec![vec![T::zero(); k]; k];
        for a in 0..k {
            for b in a..k {
                let cov: CompensatedSum<T> = p
                    .iter()
                    .enumerate()
                    .map(|(i, &pi)| pi * (self.x[a][i] - means[a]) * (self.x[b][i] - means[b]))
                    .collect();
                hess[a][b] = cov.value();
                hess[b][a] = hess[a][b];
            }
        }
        (grad, hess)
    }

    fn residual(&self, lambda: &[T]) -> T {
        self.derivatives(lambda).0.iter().fold(T::zero(), |acc, g| acc.max(g.abs()))
    }

    /// Damped Newton from `λ = 0`; a single constraint falls back to
    /// bisection when the line search stalls.
    fn solve(&self, tol: T, max_iter: usize) -> Result<(Vec<T>, usize)> {
        let k = self.x.len();
        let mut lambda = vec![T::zero(); k];
        let (mut grad, mut hess) = self.derivatives(&lambda);
        let mut residual = max_abs(&grad);
        for iter in 0..max_iter {
            if residual <= tol {
                return Ok((lambda, iter));
            }
            let step = solve_linear(&hess, &grad)
                .or_else(|| solve_linear(&ridge(&hess), &grad))
                .map(|s| s.into_iter().map(|v| -v).collect::<Vec<T>>());
            let mut accepted = false;
            if let Some(step) = step {
                let mut scale = T::one();
                for _ in 0..=MAX_HALVINGS {
                    let trial: Vec<T> = lambda.iter().zip(&step).map(|(&l, &s)| l + scale * s).collect();
                    if trial.iter().all(|v| v.is_finite()) {
                        let (g, h) = self.derivatives(&trial);
                        let r = max_abs(&g);
                        if r < residual {
                            lambda = trial;
                            grad = g;
                            hess = h;
                            residual = r;
                            accepted = true;
                            break;
                        }
                    }
                    scale = scale * T::lit(0.5);
                }
            }
            if !accepted {
                if k == 1 {
                    return self.bisect(tol, iter);
                }
                if residual <= tol {
                    return Ok((lambda, iter));
                }
                return Err(Error::NoConvergence {
                    iterations: iter,
                    residual: residual.as_f64(),
                    reason: "line search stalled; the constraints may be jointly infeasible".into(),
                });
            }
        }
        if residual <= tol {
            return Ok((lambda, max_iter));
        }
        if k == 1 {
            return self.bisect(tol, max_iter);
        }
        Err(Error::NoConvergence {
            iterations: max_iter,
            residual: residual.as_f64(),
            reason: "iteration cap reached".into(),
        })
    }

    /// Bracketing bisection on the increasing mean function of one
    /// constraint.
    fn bisect(&self, tol: T, spent: usize) -> Result<(Vec<T>, usize)> {
        let excess = |l: T| self.derivatives(&[l]).0[0];
        let (mut lo, mut hi) = (-T::one(), T::one());
        while excess(lo) > T::zero() {
            lo = lo * T::lit(2.0);
            if !lo.is_finite() {
                break;
            }
        }
        while excess(hi) < T::zero() {
            hi = hi * T::lit(2.0);
            if !hi.is_finite() {
                break;
            }
        }
        let mut best = (T::zero(), self.residual(&[T::zero()]));
        for step in 0..BISECTION_STEPS {
            let mid = lo + (hi - lo) * T::lit(0.5);
            let e = excess(mid);
            if e.abs() < best.1 {
                best = (mid, e.abs());
            }
            if best.1 <= tol {
                return Ok((vec![best.0], spent + step + 1));
            }
            if mid <= lo || mid >= hi {
                break;
            }
            if e < T::zero() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Err(Error::NoConvergence {
            iterations: spent + BISECTION_STEPS,
            residual: best.1.as_f64(),
            reason: "bisection exhausted the floating-point bracket".into(),
        })
    }
}

/// `H + δI` with `δ` small relative to the largest entry.
fn ridge<T: Real>(h: &[Vec<T>]) -> Vec<Vec<T>> {
    let scale = h.iter().flatten().fold(T::zero(), |acc, v| acc.max(v.abs())).max(T::min_positive_value());
    let delta = scale * T::lit(1e-10).max(T::epsilon() * T::lit(64.0));
    let mut out = h.to_vec();
    for (i, row) in out.iter_mut().enumerate() {
        row[i] = row[i] + delta;
    }
    out
}

fn max_abs<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |acc, g| acc.max(g.abs()))
}

/// Gaussian elimination with partial pivoting; `None` when singular.
fn solve_linear<T: Real>(a: &[Vec<T>], b: &[T]) -> Option<Vec<T>> {
    let n = b.len();
    let scale = a.iter().flatten().fold(T::zero(), |acc, v| acc.max(v.abs()));
    if scale.is_nan() || scale <= T::zero() {
        return None;
    }
    let mut m: Vec<Vec<T>> = a.iter().zip(b).map(|(row, &bi)| {
        let mut r = row.clone();
        r.push(bi);
        r
    }).collect();
    let eps = scale * T::epsilon() * T::from_u64_lossy(n as u64 * 16);
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap_or(std::cmp::Ordering::Equal))?;
        if m[pivot][col].abs() <= eps {
            return None;
        }
        m.swap(col, pivot);
        let (top, rest) = m.split_at_mut(col + 1);
        let pivot_row = &top[col];
        for row in rest.iter_mut() {
            let f = row[col] / pivot_row[col];
            for (r, &p) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                *r = *r - f * p;
            }
        }
    }
    let mut x = vec![T::zero(); n];
    for row in (0..n).rev() {
        let s = (row + 1..n).fold(m[row][n], |acc, c| acc - m[row][c] * x[c]);
        x[row] = s / m[row][row];
    }
    Some(x)
}
