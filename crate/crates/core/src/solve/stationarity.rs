//! First-order optimality of relative entropy on the constraint manifold.
//!
//! In the large-sample form the gradient of the log-probability is
//! `gᵢ = −ln nᵢ + ln qᵢ`; at frequencies it is `−ln pᵢ + ln qᵢ`. A point is
//! stationary when `g` is orthogonal to every direction preserving the
//! adding-up and moment constraints.

use crate::error::{Error, Result};
use crate::model::{MomentConstraint, PriorGenerator};
use crate::scalar::{CompensatedSum, Real};

fn support_values<T: Real>(v: &[T], q: &PriorGenerator<T>) -> Result<Vec<usize>> {
    if v.len() != q.m() {
        return Err(Error::DimensionMismatch {
            expected: q.m(),
            found: v.len(),
        });
    }
    let mut support = Vec::new();
    for (i, (&vi, &qi)) in v.iter().zip(q.q()).enumerate() {
        if qi > T::zero() {
            if !vi.is_finite() || vi <= T::zero() {
                return Err(Error::InvalidArgument(format!("component {i} is not positive on the prior's support")));
            }
            support.push(i);
        } else if vi != T::zero() {
            return Err(Error::InvalidArgument(format!("component {i} is nonzero where the prior is zero")));
        }
    }
    Ok(support)
}

/// `gᵢ = −ln vᵢ + ln qᵢ` on the prior's support, zero elsewhere.
pub fn asymptotic_gradient<T: Real>(v: &[T], q: &PriorGenerator<T>) -> Result<Vec<T>> {
    let support = support_values(v, q)?;
    let mut g = vec![T::zero(); v.len()];
    for i in support {
        g[i] = q.q()[i].ln() - v[i].ln();
    }
    Ok(g)
}

/// `Σ gᵢ(v) dᵢ`.
pub fn directional_derivative<T: Real>(v: &[T], q: &PriorGenerator<T>, d: &[T]) -> Result<T> {
    if d.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: v.len(),
            found: d.len(),
        });
    }
    let g = asymptotic_gradient(v, q)?;
    Ok(g.iter().zip(d).map(|(&a, &b)| a * b).collect::<CompensatedSum<T>>().value())
}

/// Euclidean norm of the gradient `−ln(vᵢ/Σv) + ln qᵢ` after projecting
/// out the span of the adding-up row and the moment rows, all restricted
/// to the prior's support.
pub fn stationarity_residual<T: Real>(
    v: &[T],
    q: &PriorGenerator<T>,
    constraints: &[MomentConstraint],
) -> Result<T> {
    let support = support_values(v, q)?;
    if let Some(c) = constraints.iter().find(|c| c.m() != q.m()) {
        return Err(Error::DimensionMismatch {
            expected: q.m(),
            found: c.m(),
        });
    }
    let scale: T = support.iter().map(|&i| v[i]).collect::<CompensatedSum<T>>().value();
    let mut g: Vec<T> = support.iter().map(|&i| q.q()[i].ln() - (v[i] / scale).ln()).collect();

    let mut rows: Vec<Vec<T>> = vec![vec![T::one(); support.len()]];
    for c in constraints {
        let x = c.coefficients::<T>();
        rows.push(support.iter().map(|&i| x[i]).collect());
    }
    // Modified Gram–Schmidt; dependent rows vanish and are skipped.
    let mut basis: Vec<Vec<T>> = Vec::new();
    for mut row in rows {
        let original = norm(&row);
        for b in &basis {
            let c = dot(&row, b);
            row.iter_mut().zip(b).for_each(|(r, &bi)| *r = *r - c * bi);
        }
        let len = norm(&row);
        if len > original * T::lit(1e-10) && len > T::zero() {
            row.iter_mut().for_each(|r| *r = *r / len);
            basis.push(row);
        }
    }
    for b in &basis {
        let c = dot(&g, b);
        g.iter_mut().zip(b).for_each(|(gi, &bi)| *gi = *gi - c * bi);
    }
    Ok(norm(&g))
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).collect::<CompensatedSum<T>>().value()
}

fn norm<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}
