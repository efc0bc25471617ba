//! Two-moment generalized-Beta approximation of John's statistic under H0.
//!
//! `T_J` lives on `[1/K, 1]`. It is modelled as `x = ((K-1) z + 1) / K` with
//! `z ~ Beta(alpha, beta)`, where `alpha` and `beta` are chosen so the first
//! two moments of `x` equal the exact `M_1`, `M_2`. The false-alarm
//! probability is then a regularized incomplete beta, and thresholds come
//! from inverting it by bisection.

use crate::error::{Error, Result};
use crate::moments::tj_first_two;
use crate::special::regularized_incomplete_beta;
use serde::{Deserialize, Serialize};

const BISECTION_MAX_ITER: usize = 200;
const THRESHOLD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaFit {
    pub alpha: f64,
    pub beta: f64,
    pub k: usize,
    pub m1: f64,
    pub m2: f64,
}

impl BetaFit {
    /// Fit from the exact H0 moments of `T_J` for `K` sensors and `N` samples.
    pub fn for_dimensions(k: usize, n: usize) -> Result<Self> {
        let (m1, m2) = tj_first_two(k, n)?;
        fit_generalized_beta(m1, m2, k)
    }

    pub fn lower_support(&self) -> f64 {
        1.0 / self.k as f64
    }
}

/// Moment-matched `alpha`, `beta` on `[1/K, 1]`.
pub fn fit_generalized_beta(m1: f64, m2: f64, k: usize) -> Result<BetaFit> {
    if k < 2 {
        return Err(Error::DegenerateMoments(format!(
            "need K >= 2 for a non-degenerate support, got {k}"
        )));
    }
    let kf = k as f64;
    if !(m1 > 1.0 / kf && m1 < 1.0) {
        return Err(Error::DegenerateMoments(format!(
            "M1 = {m1} outside (1/K, 1)"
        )));
    }
    if !(m2 > m1 * m1) {
        return Err(Error::DegenerateMoments(format!(
            "M2 = {m2} <= M1^2 = {} (no variance)",
            m1 * m1
        )));
    }
    if !(m2 < m1) {
        return Err(Error::DegenerateMoments(format!("M2 = {m2} >= M1 = {m1}")));
    }
    let shared = kf * m1 - kf * m2 + m1 - 1.0;
    let alpha = (kf * m1 - 1.0) * shared / ((kf - 1.0) * kf * (m2 - m1 * m1));
    let beta = (m1 - 1.0) * shared / ((kf - 1.0) * (m1 * m1 - m2));
    if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
        return Err(Error::DegenerateMoments(format!(
            "moments imply alpha = {alpha}, beta = {beta}"
        )));
    }
    Ok(BetaFit {
        alpha,
        beta,
        k,
        m1,
        m2,
    })
}

/// `E[x^m] = K^-m sum_i C(m,i) (K-1)^i (alpha)_i / (alpha+beta)_i`.
pub fn generalized_beta_moment(fit: &BetaFit, m: u32) -> f64 {
    let kf = fit.k as f64;
    let mut sum = 0.0;
    let mut binom = 1.0;
    let mut pow = 1.0;
    let mut ratio = 1.0; // (alpha)_i / (alpha+beta)_i
    for i in 0..=m {
        sum += binom * pow * ratio;
        let fi = i as f64;
        binom *= (m as f64 - fi) / (fi + 1.0);
        pow *= kf - 1.0;
        ratio *= (fit.alpha + fi) / (fit.alpha + fit.beta + fi);
    }
    sum / kf.powi(m as i32)
}

/// Approximate H0 CDF of `T_J`.
pub fn cdf_tj_approx(y: f64, fit: &BetaFit) -> Result<f64> {
    let lower = fit.lower_support();
    if y.is_nan() || y < lower {
        return Err(Error::DomainError(format!(
            "y = {y} below support start 1/K = {lower}"
        )));
    }
    if y >= 1.0 {
        return Ok(1.0);
    }
    Ok(1.0 - upper_tail(y, fit)?)
}

/// Approximate false-alarm probability of John's detector at threshold `zeta`.
pub fn pfa(zeta: f64, fit: &BetaFit) -> Result<f64> {
    let lower = fit.lower_support();
    if !(lower..=1.0).contains(&zeta) {
        return Err(Error::DomainError(format!(
            "threshold {zeta} outside [1/K, 1] = [{lower}, 1]"
        )));
    }
    upper_tail(zeta, fit)
}

/// `I_{K(1-y)/(K-1)}(beta, alpha)`.
fn upper_tail(y: f64, fit: &BetaFit) -> Result<f64> {
    let kf = fit.k as f64;
    let x = (kf * (1.0 - y) / (kf - 1.0)).clamp(0.0, 1.0);
    regularized_incomplete_beta(x, fit.beta, fit.alpha)
}

/// Threshold `zeta` with `pfa(zeta) = target`, found by bisection on `[1/K, 1]`.
pub fn threshold_for_pfa(target: f64, fit: &BetaFit) -> Result<f64> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::DomainError(format!(
            "target false-alarm probability must be in (0, 1), got {target}"
        )));
    }
    let mut lo = fit.lower_support();
    let mut hi = 1.0;
    // pfa(lo) = 1 > target > 0 = pfa(hi)
    let mut best = (f64::INFINITY, lo);
    for _ in 0..BISECTION_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let p = pfa(mid, fit)?;
        let err = (p - target).abs();
        if err < best.0 {
            best = (err, mid);
        }
        if p > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if best.0 <= THRESHOLD_TOL {
        Ok(best.1)
    } else {
        Err(Error::NoConvergence {
            routine: "threshold bisection",
            iterations: BISECTION_MAX_ITER,
        })
    }
}
