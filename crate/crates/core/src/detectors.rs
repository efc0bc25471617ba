//! Test statistics for the sphericity-type detectors and the thresholded decision.
//!
//! Eigenvalue-based statistics take the eigenvalues of the sample covariance
//! in any order. John's statistic works straight from traces of `R`.

use crate::error::{Error, Result};
use crate::matrix::{hermitian_eigenvalues, ComplexMatrix};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Hypothesis {
    H0,
    H1,
}

/// Which side of the threshold signals presence of primary users.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    H1Above,
    H1Below,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectorKind {
    #[serde(rename = "john")]
    John,
    #[serde(rename = "st")]
    SphericalTest,
    #[serde(rename = "sle")]
    ScaledLargestEigenvalue,
    #[serde(rename = "er")]
    EigenvalueRatio,
    #[serde(rename = "le")]
    LargestEigenvalue,
}

impl DetectorKind {
    pub const ALL: [DetectorKind; 5] = [
        DetectorKind::John,
        DetectorKind::SphericalTest,
        DetectorKind::ScaledLargestEigenvalue,
        DetectorKind::EigenvalueRatio,
        DetectorKind::LargestEigenvalue,
    ];

    pub fn orientation(self) -> Orientation {
        match self {
            DetectorKind::SphericalTest => Orientation::H1Below,
            _ => Orientation::H1Above,
        }
    }

    /// Short lowercase name used on the command line and in file names.
    pub fn name(self) -> &'static str {
        match self {
            DetectorKind::John => "john",
            DetectorKind::SphericalTest => "st",
            DetectorKind::ScaledLargestEigenvalue => "sle",
            DetectorKind::EigenvalueRatio => "er",
            DetectorKind::LargestEigenvalue => "le",
        }
    }

    pub fn needs_eigenvalues(self) -> bool {
        self != DetectorKind::John
    }

    /// Computes this detector's statistic from a sample covariance.
    pub fn evaluate(self, r: &ComplexMatrix, noise_power: f64) -> Result<Statistic> {
        if self == DetectorKind::John {
            return t_john(r);
        }
        let eig = hermitian_eigenvalues(r)?;
        self.evaluate_eigenvalues(&eig, noise_power)
    }

    pub fn evaluate_eigenvalues(self, eig: &[f64], noise_power: f64) -> Result<Statistic> {
        match self {
            DetectorKind::John => t_john_eigenvalues(eig),
            DetectorKind::SphericalTest => t_st(eig),
            DetectorKind::ScaledLargestEigenvalue => t_sle(eig),
            DetectorKind::EigenvalueRatio => t_er(eig),
            DetectorKind::LargestEigenvalue => t_le(eig, noise_power),
        }
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DetectorKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        DetectorKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                format!("unknown detector `{s}` (expected one of john, st, sle, er, le)")
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Statistic {
    pub value: f64,
    pub kind: DetectorKind,
}

/// `tr(R^2) / tr(R)^2`, no eigendecomposition.
pub fn t_john(r: &ComplexMatrix) -> Result<Statistic> {
    if !r.is_square() {
        return Err(Error::InvalidDims(
            "John statistic needs a square matrix".into(),
        ));
    }
    let trace = r.trace();
    // tr(R^2) = sum_ij |R_ij|^2 for Hermitian R
    let trace_sq: f64 = r.as_slice().iter().map(|z| z.norm_sqr()).sum();
    john_from_traces(trace, trace_sq)
}

pub(crate) fn john_from_traces(trace: f64, trace_sq: f64) -> Result<Statistic> {
    if trace <= 0.0 {
        return Err(Error::DegenerateInput("trace of R is zero"));
    }
    Ok(Statistic {
        value: trace_sq / (trace * trace),
        kind: DetectorKind::John,
    })
}

pub fn t_john_eigenvalues(eig: &[f64]) -> Result<Statistic> {
    let sum: f64 = eig.iter().sum();
    let sum_sq: f64 = eig.iter().map(|l| l * l).sum();
    john_from_traces(sum, sum_sq)
}

/// Product of eigenvalues over the K-th power of their arithmetic mean.
pub fn t_st(eig: &[f64]) -> Result<Statistic> {
    let k = eig.len() as f64;
    let sum: f64 = eig.iter().sum();
    if sum <= 0.0 {
        return Err(Error::DegenerateInput("eigenvalues sum to zero"));
    }
    let mean = sum / k;
    // ratio-by-ratio keeps the product in range for large K
    let value = eig.iter().map(|l| l.max(0.0) / mean).product();
    Ok(Statistic {
        value,
        kind: DetectorKind::SphericalTest,
    })
}

pub fn t_sle(eig: &[f64]) -> Result<Statistic> {
    let sum: f64 = eig.iter().sum();
    if sum <= 0.0 {
        return Err(Error::DegenerateInput("eigenvalues sum to zero"));
    }
    Ok(Statistic {
        value: largest(eig) / sum,
        kind: DetectorKind::ScaledLargestEigenvalue,
    })
}

pub fn t_er(eig: &[f64]) -> Result<Statistic> {
    let smallest = eig.iter().copied().fold(f64::INFINITY, f64::min);
    if !(smallest > 0.0) {
        return Err(Error::DegenerateInput(
            "smallest eigenvalue is zero (fewer samples than sensors?)",
        ));
    }
    Ok(Statistic {
        value: largest(eig) / smallest,
        kind: DetectorKind::EigenvalueRatio,
    })
}

/// Largest eigenvalue referenced to the (known) noise power.
pub fn t_le(eig: &[f64], noise_power: f64) -> Result<Statistic> {
    if !(noise_power > 0.0) {
        return Err(Error::DomainError(format!(
            "noise power must be positive, got {noise_power}"
        )));
    }
    Ok(Statistic {
        value: largest(eig) / noise_power,
        kind: DetectorKind::LargestEigenvalue,
    })
}

fn largest(eig: &[f64]) -> f64 {
    eig.iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
        .max(0.0)
}

/// Thresholded decision. A statistic exactly at the threshold is H0.
pub fn decide(stat: Statistic, threshold: f64) -> Hypothesis {
    if exceeds(stat.kind.orientation(), stat.value, threshold) {
        Hypothesis::H1
    } else {
        Hypothesis::H0
    }
}

#[inline]
pub(crate) fn exceeds(orientation: Orientation, value: f64, threshold: f64) -> bool {
    match orientation {
        Orientation::H1Above => value > threshold,
        Orientation::H1Below => value < threshold,
    }
}
