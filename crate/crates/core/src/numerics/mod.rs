//! Special functions and log-domain accumulation.
//!
//! `log_gamma` and `digamma` shift the argument upward with the recurrence
//! until it clears [`ASYMPTOTIC_FROM`] and then apply the asymptotic
//! (Bernoulli) expansions. The slowly converging series form of the digamma
//! function lives in [`series`] and is used to validate the fast path.

pub mod series;

use crate::error::{Error, Result};
use crate::scalar::{CompensatedSum, Real};

/// Euler–Mascheroni constant, checked against [`series::euler_from_harmonic`].
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Arguments at or above this value go straight to the asymptotic expansions.
pub const ASYMPTOTIC_FROM: f64 = 10.0;

// B_{2k} / (2k (2k-1)) for k = 1..8, the Stirling series for ln Γ.
const LGAMMA_SERIES: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
];

// B_{2k} / (2k) for k = 1..7, the asymptotic series for ψ.
const DIGAMMA_SERIES: [f64; 7] = [
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32_760.0,
    1.0 / 12.0,
];

fn check_positive<T: Real>(function: &'static str, x: T) -> Result<()> {
    if x > T::zero() {
        Ok(())
    } else {
        Err(Error::Domain {
            function,
            arg: x.as_f64(),
        })
    }
}

/// Odd power series `Σ c_k / x^(2k-1)` evaluated by Horner in `1/x²`.
fn odd_series<T: Real>(coeffs: &[f64], x: T) -> T {
    let inv = x.recip();
    let inv2 = inv * inv;
    let mut acc = T::zero();
    for &c in coeffs.iter().rev() {
        acc = acc * inv2 + T::lit(c);
    }
    acc * inv
}

/// `ln Γ(x)` for `x > 0`.
pub fn log_gamma<T: Real>(x: T) -> Result<T> {
    check_positive("log_gamma", x)?;
    if x.is_infinite() {
        return Ok(x);
    }
    let threshold = T::lit(ASYMPTOTIC_FROM);
    let mut z = x;
    let mut shift_product = T::one();
    while z < threshold {
        shift_product = shift_product * z;
        z = z + T::one();
    }
    let half = T::lit(0.5);
    let half_ln_two_pi = T::lit(0.5) * (T::lit(2.0) * T::PI()).ln();
    let asymptotic = (z - half) * z.ln() - z + half_ln_two_pi + odd_series(&LGAMMA_SERIES, z);
    Ok(asymptotic - shift_product.ln())
}

/// `ψ(x) = d/dx ln Γ(x)` for `x > 0`.
pub fn digamma<T: Real>(x: T) -> Result<T> {
    check_positive("digamma", x)?;
    if x.is_infinite() {
        return Ok(x);
    }
    let threshold = T::lit(ASYMPTOTIC_FROM);
    let mut z = x;
    let mut shift = CompensatedSum::new();
    while z < threshold {
        shift.add(z.recip());
        z = z + T::one();
    }
    let inv = z.recip();
    // Even series in 1/z: reuse the odd evaluator and multiply by 1/z.
    let tail = odd_series(&DIGAMMA_SERIES, z) * inv;
    Ok(z.ln() - T::lit(0.5) * inv - tail - shift.value())
}

/// Four-term Stirling approximation
/// `ln n! ≈ n ln n − n + ln √(2πn) + 1/(12n)`.
///
/// The neglected remainder is below `1/(360 n³)`.
pub fn stirling_log_factorial<T: Real>(n: u64) -> Result<T> {
    if n < 1 {
        return Err(Error::Domain {
            function: "stirling_log_factorial",
            arg: n as f64,
        });
    }
    let n = T::from_u64_lossy(n);
    let two_pi_n = T::lit(2.0) * T::PI() * n;
    Ok(n * n.ln() - n + two_pi_n.sqrt().ln() + (T::lit(12.0) * n).recip())
}

/// `ln Σ exp(vᵢ)` without overflow or underflow.
///
/// Returns `-∞` iff every input is `-∞`.
pub fn log_sum_exp<T: Real>(values: &[T]) -> Result<T> {
    if values.is_empty() {
        return Err(Error::EmptyInput("log_sum_exp"));
    }
    let mut acc = LogSumExp::new();
    acc.extend(values.iter().copied());
    Ok(acc.value())
}

/// Streaming log-sum-exp: keeps a running maximum and a compensated sum of
/// `exp(v − max)`.
#[derive(Debug, Clone, Copy)]
pub struct LogSumExp<T> {
    max: T,
    scaled: CompensatedSum<T>,
    len: usize,
}

impl<T: Real> Default for LogSumExp<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> LogSumExp<T> {
    pub fn new() -> Self {
        Self {
            max: T::neg_infinity(),
            scaled: CompensatedSum::new(),
            len: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn push(&mut self, v: T) {
        self.len += 1;
        if v.is_nan() {
            self.max = v;
            return;
        }
        if v == T::neg_infinity() {
            return;
        }
        if v == T::infinity() {
            self.max = v;
            return;
        }
        if self.max.is_nan() || self.max == T::infinity() {
            return;
        }
        if v > self.max {
            let rescale = (self.max - v).exp();
            let old = self.scaled.value();
            self.scaled = CompensatedSum::new();
            self.scaled.add(old * rescale);
            self.scaled.add(T::one());
            self.max = v;
        } else {
            self.scaled.add((v - self.max).exp());
        }
    }

    /// Folds another accumulator into this one.
    pub fn merge(&mut self, other: &Self) {
        let len = self.len + other.len;
        if other.max == T::neg_infinity() {
            // contributes nothing
        } else if !other.max.is_finite() || !self.max.is_finite() && self.max != T::neg_infinity() {
            if !(self.max.is_nan()) {
                self.max = if other.max.is_nan() { other.max } else { self.max.max(other.max) };
            }
        } else if self.max == T::neg_infinity() {
            self.max = other.max;
            self.scaled = other.scaled;
        } else if other.max > self.max {
            let mine = self.scaled.value() * (self.max - other.max).exp();
            self.scaled = other.scaled;
            self.scaled.add(mine);
            self.max = other.max;
        } else {
            self.scaled
                .add(other.scaled.value() * (other.max - self.max).exp());
        }
        self.len = len;
    }

    pub fn value(&self) -> T {
        if !self.max.is_finite() {
            return self.max;
        }
        self.max + self.scaled.value().ln()
    }
}

impl<T: Real> Extend<T> for LogSumExp<T> {
    fn extend<I: IntoIterator<Item = T>>(&mut self, iter: I) {
        for v in iter {
            self.push(v);
        }
    }
}
