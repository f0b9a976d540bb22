//! Direct (slow) series forms used to cross-check the fast kernels.
//!
//! The digamma function is `ψ(x) = g(x) − C` with
//! `g(x) = Σ_{j≥0} (1/(j+1) − 1/(j+x))` and `C` Euler's constant.

use crate::scalar::CompensatedSum;

/// Truncated series value with an absolute error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesTail {
    /// Truncated sum plus the midpoint estimate of the neglected tail.
    pub partial_sum: f64,
    pub terms_used: u64,
    /// Bound on `|exact − partial_sum|`.
    pub tail_bound: f64,
}

impl SeriesTail {
    pub fn contains(&self, value: f64) -> bool {
        (value - self.partial_sum).abs() <= self.tail_bound
    }
}

/// `g(x)` from its first `terms` terms.
///
/// The summand `(x−1)/((j+1)(j+x))` is monotone in `j`, so the tail
/// `Σ_{j≥J}` lies between the integrals from `J` and from `J−1`; both
/// are `ln((a+x)/(a+1))`. The midpoint is added to the partial sum and
/// the half-width (plus a rounding allowance) is the bound.
pub fn digamma_g_series(x: f64, terms: u64) -> SeriesTail {
    assert!(x > 0.0 && terms >= 1, "series requires x > 0 and at least one term");
    let mut acc = CompensatedSum::new();
    let mut magnitude = 0.0;
    for j in 0..terms {
        let j = j as f64;
        let term = (x - 1.0) / ((j + 1.0) * (j + x));
        magnitude += term.abs();
        acc.add(term);
    }
    let tail_integral = |a: f64| ((x - 1.0) / (a + 1.0)).ln_1p();
    let upper = tail_integral(terms as f64 - 1.0);
    let lower = tail_integral(terms as f64);
    let mid = 0.5 * (upper + lower);
    let half_width = 0.5 * (upper - lower).abs();
    SeriesTail {
        partial_sum: acc.value() + mid,
        terms_used: terms,
        tail_bound: half_width + 8.0 * f64::EPSILON * (magnitude + mid.abs()),
    }
}

/// Euler's constant from the harmonic limit `H(N) − ln N → C`, with the
/// Euler–Maclaurin corrections through `N⁻⁴`. The remainder is positive and
/// below `1/(252 N⁶)`.
pub fn euler_from_harmonic(terms: u64) -> SeriesTail {
    assert!(terms >= 1);
    // Reverse order keeps the small terms from being swamped.
    let harmonic: CompensatedSum<f64> = (1..=terms).rev().map(|j| 1.0 / j as f64).collect();
    let n = terms as f64;
    let n2 = n * n;
    let estimate = harmonic.value() - n.ln() - 0.5 / n + 1.0 / (12.0 * n2) - 1.0 / (120.0 * n2 * n2);
    let remainder = 1.0 / (252.0 * n2 * n2 * n2);
    SeriesTail {
        partial_sum: estimate + 0.5 * remainder,
        terms_used: terms,
        tail_bound: 0.5 * remainder + 16.0 * f64::EPSILON * (harmonic.value() + n.ln()),
    }
}
