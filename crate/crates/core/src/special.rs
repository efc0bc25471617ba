//! Incomplete beta function.

use crate::error::{Error, Result};
use statrs::function::gamma::ln_gamma;

const MAX_ITER: usize = 10_000;
const TINY: f64 = 1e-300;

pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Complete beta function `B(a, b)`.
pub fn beta(a: f64, b: f64) -> f64 {
    ln_beta(a, b).exp()
}

fn check(x: f64, a: f64, b: f64) -> Result<()> {
    if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
        return Err(Error::DomainError(format!(
            "incomplete beta needs a, b > 0, got a = {a}, b = {b}"
        )));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::DomainError(format!(
            "incomplete beta needs 0 <= x <= 1, got {x}"
        )));
    }
    Ok(())
}

/// Regularized lower incomplete beta `I_x(a, b)`.
pub fn regularized_incomplete_beta(x: f64, a: f64, b: f64) -> Result<f64> {
    check(x, a, b)?;
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == 1.0 {
        return Ok(1.0);
    }
    // The continued fraction converges fast below the mean; use the mirror
    // identity I_x(a, b) = 1 - I_{1-x}(b, a) above it.
    if x > (a + 1.0) / (a + b + 2.0) {
        Ok(1.0 - continued_fraction(1.0 - x, b, a)?)
    } else {
        continued_fraction(x, a, b)
    }
}

/// Unregularized lower incomplete beta `B(x; a, b) = int_0^x t^(a-1) (1-t)^(b-1) dt`.
pub fn incomplete_beta_lower(x: f64, a: f64, b: f64) -> Result<f64> {
    Ok(regularized_incomplete_beta(x, a, b)? * beta(a, b))
}

/// `I_x(a, b)` from the standard continued fraction, evaluated with the
/// modified Lentz method.
fn continued_fraction(x: f64, a: f64, b: f64) -> Result<f64> {
    let ln_prefix = a * x.ln() + b * (-x).ln_1p() - ln_beta(a, b);
    let prefix = ln_prefix.exp() / a;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;

        let even = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + even * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + even / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;

        let odd = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + odd * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + odd / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() <= f64::EPSILON {
            return Ok((prefix * h).clamp(0.0, 1.0));
        }
    }
    Err(Error::NoConvergence {
        routine: "incomplete beta continued fraction",
        iterations: MAX_ITER,
    })
}
