//! Dense complex matrices and the handful of factorizations the detectors need.

use crate::error::{Error, Result};
use crate::rng::RngStream;
use num_complex::Complex64;
use std::ops::{Index, IndexMut};

const HERMITIAN_TOL: f64 = 1e-12;
const JACOBI_TOL: f64 = 1e-13;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_real_diagonal(&vec![1.0; n])
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(d, 0.0);
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidDims(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let data = rows
            .iter()
            .flat_map(|row| row.iter().map(|&x| Complex64::new(x, 0.0)))
            .collect();
        Self::from_vec(r, c, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn matmul(&self, rhs: &ComplexMatrix) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::InvalidDims(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs.data[k * rhs.cols + j];
                }
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * c).collect(),
        }
    }

    pub fn sub(&self, rhs: &ComplexMatrix) -> Result<Self> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(Error::InvalidDims("shape mismatch in subtraction".into()));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data
            .iter()
            .map(Complex64::norm_sqr)
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Sum of the real parts of the diagonal.
    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)].re).sum()
    }

    /// Checks |A[i][j] - conj(A[j][i])| <= 1e-12 * max|A|.
    pub fn check_hermitian(&self) -> Result<()> {
        if !self.is_square() {
            return Err(Error::InvalidDims(format!(
                "Hermitian matrix must be square, got {}x{}",
                self.rows, self.cols
            )));
        }
        let tol = HERMITIAN_TOL * self.max_abs();
        for i in 0..self.rows {
            for j in i..self.cols {
                let deviation = (self[(i, j)] - self[(j, i)].conj()).norm();
                if deviation > tol {
                    return Err(Error::NotHermitian {
                        row: i,
                        col: j,
                        deviation,
                    });
                }
            }
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

/// `rows x cols` matrix of i.i.d. unit-variance circular complex Gaussians.
pub fn sample_standard_complex_gaussian(
    rows: usize,
    cols: usize,
    rng: &RngStream,
) -> Result<ComplexMatrix> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidDims(format!(
            "Gaussian matrix needs positive dimensions, got {rows}x{cols}"
        )));
    }
    let mut data = vec![Complex64::new(0.0, 0.0); rows * cols];
    rng.source().fill(&mut data);
    ComplexMatrix::from_vec(rows, cols, data)
}

/// Lower-triangular `L` with `L L^H = sigma`.
pub fn cholesky_lower(sigma: &ComplexMatrix) -> Result<ComplexMatrix> {
    sigma.check_hermitian()?;
    let n = sigma.rows();
    let mut l = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let mut pivot = sigma[(j, j)].re;
        for k in 0..j {
            pivot -= l[(j, k)].norm_sqr();
        }
        if pivot <= 0.0 || !pivot.is_finite() {
            return Err(Error::NotPositiveDefinite {
                pivot: j,
                value: pivot,
            });
        }
        let d = pivot.sqrt();
        l[(j, j)] = Complex64::new(d, 0.0);
        for i in j + 1..n {
            let mut s = sigma[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / d;
        }
    }
    Ok(l)
}

/// Draws `X = L G` with `L L^H = sigma`, so that `E[X X^H] = n * sigma`.
pub fn sample_data_matrix(
    sigma: &ComplexMatrix,
    n: usize,
    rng: &RngStream,
) -> Result<ComplexMatrix> {
    let l = cholesky_lower(sigma)?;
    let g = sample_standard_complex_gaussian(sigma.rows(), n, rng)?;
    l.matmul(&g)
}

/// `R = X X^H`.
pub fn sample_covariance(x: &ComplexMatrix) -> ComplexMatrix {
    let k = x.rows();
    let mut r = ComplexMatrix::zeros(k, k);
    gram_into(x.as_slice(), k, x.cols(), &mut r.data);
    r
}

/// Fills `out` (k x k, row-major) with `G G^H` for the row-major k x n block `g`.
pub(crate) fn gram_into(g: &[Complex64], k: usize, n: usize, out: &mut [Complex64]) {
    for i in 0..k {
        let gi = &g[i * n..(i + 1) * n];
        for j in i..k {
            let gj = &g[j * n..(j + 1) * n];
            let (mut re, mut im) = (0.0, 0.0);
            for (a, b) in gi.iter().zip(gj) {
                // a * conj(b)
                re += a.re * b.re + a.im * b.im;
                im += a.im * b.re - a.re * b.im;
            }
            if i == j {
                im = 0.0;
            }
            out[i * k + j] = Complex64::new(re, im);
            out[j * k + i] = Complex64::new(re, -im);
        }
    }
}

/// Eigenvalues of a Hermitian matrix, in descending order.
pub fn hermitian_eigenvalues(a: &ComplexMatrix) -> Result<Vec<f64>> {
    a.check_hermitian()?;
    let mut work = a.data.clone();
    jacobi_eigenvalues(&mut work, a.rows())
}

/// Cyclic complex Jacobi on a row-major Hermitian buffer, destroyed in place.
pub(crate) fn jacobi_eigenvalues(a: &mut [Complex64], n: usize) -> Result<Vec<f64>> {
    let total: f64 = a.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt();
    let target = JACOBI_TOL * total;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= target {
            let mut eig: Vec<f64> = (0..n).map(|i| a[i * n + i].re).collect();
            eig.sort_by(|x, y| y.total_cmp(x));
            return Ok(eig);
        }
        for p in 0..n {
            for q in p + 1..n {
                rotate(a, n, p, q);
            }
        }
    }
    Err(Error::NoConvergence {
        routine: "Hermitian Jacobi eigensolver",
        iterations: JACOBI_MAX_SWEEPS,
    })
}

/// One Jacobi rotation annihilating a[p][q].
fn rotate(a: &mut [Complex64], n: usize, p: usize, q: usize) {
    let apq = a[p * n + q];
    let r = apq.norm();
    if r == 0.0 {
        return;
    }
    // Rotate the phase out of column q so a[p][q] becomes the real r.
    let phase = apq / r;
    for k in 0..n {
        if k != q {
            a[k * n + q] *= phase.conj();
            a[q * n + k] = a[k * n + q].conj();
        }
    }
    let app = a[p * n + p].re;
    let aqq = a[q * n + q].re;
    let theta = (aqq - app) / (2.0 * r);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        let g = a[k * n + p];
        let h = a[k * n + q];
        let kp = g * c - h * s;
        let kq = g * s + h * c;
        a[k * n + p] = kp;
        a[p * n + k] = kp.conj();
        a[k * n + q] = kq;
        a[q * n + k] = kq.conj();
    }
    a[p * n + p] = Complex64::new(app - t * r, 0.0);
    a[q * n + q] = Complex64::new(aqq + t * r, 0.0);
    a[p * n + q] = Complex64::new(0.0, 0.0);
    a[q * n + p] = Complex64::new(0.0, 0.0);
}

/// `noise_power * (I + sum_i snr_i u_i u_i^H)` with `u_i = h_i / ||h_i||`.
///
/// SNRs are linear, not dB.
pub fn build_sigma_h1(
    snrs: &[f64],
    channels: &[Vec<Complex64>],
    noise_power: f64,
    k: usize,
) -> Result<ComplexMatrix> {
    if snrs.len() != channels.len() {
        return Err(Error::InvalidDims(format!(
            "{} SNRs but {} channel vectors",
            snrs.len(),
            channels.len()
        )));
    }
    if !(noise_power > 0.0 && noise_power.is_finite()) {
        return Err(Error::DomainError(format!(
            "noise power must be positive, got {noise_power}"
        )));
    }
    let mut sigma = ComplexMatrix::identity(k);
    for (index, (&snr, h)) in snrs.iter().zip(channels).enumerate() {
        if !(snr >= 0.0 && snr.is_finite()) {
            return Err(Error::DomainError(format!("SNR {index} is {snr}")));
        }
        if h.len() != k {
            return Err(Error::InvalidDims(format!(
                "channel {index} has length {} but K = {k}",
                h.len()
            )));
        }
        let norm = h.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::ZeroChannel { index });
        }
        for i in 0..k {
            for j in 0..k {
                sigma[(i, j)] += h[i] * h[j].conj() * (snr / (norm * norm));
            }
        }
    }
    Ok(sigma.scale(noise_power))
}

/// Haar-ish random unitary from Gram–Schmidt on a complex Gaussian matrix.
pub fn random_unitary(k: usize, rng: &RngStream) -> Result<ComplexMatrix> {
    let g = sample_standard_complex_gaussian(k, k, rng)?;
    let mut cols: Vec<Vec<Complex64>> = (0..k)
        .map(|j| (0..k).map(|i| g[(i, j)]).collect())
        .collect();
    for j in 0..k {
        let (done, rest) = cols.split_at_mut(j);
        let col = &mut rest[0];
        for prev in done.iter() {
            let proj: Complex64 = prev.iter().zip(col.iter()).map(|(p, c)| p.conj() * c).sum();
            for (c, p) in col.iter_mut().zip(prev) {
                *c -= proj * p;
            }
        }
        let norm = col.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt();
        for z in col.iter_mut() {
            *z /= norm;
        }
    }
    let mut u = ComplexMatrix::zeros(k, k);
    for (j, col) in cols.iter().enumerate() {
        for (i, &z) in col.iter().enumerate() {
            u[(i, j)] = z;
        }
    }
    Ok(u)
}

/// `U diag(spectrum) U^H`; with `unitary = None` the diagonal matrix itself.
pub fn sigma_from_spectrum(
    spectrum: &[f64],
    unitary: Option<&ComplexMatrix>,
) -> Result<ComplexMatrix> {
    let d = ComplexMatrix::from_real_diagonal(spectrum);
    match unitary {
        None => Ok(d),
        Some(u) => {
            let mut s = u.matmul(&d)?.matmul(&u.adjoint())?;
            // Restore exact Hermitian symmetry lost to rounding.
            let n = s.rows();
            for i in 0..n {
                s[(i, i)].im = 0.0;
                for j in i + 1..n {
                    let avg = (s[(i, j)] + s[(j, i)].conj()) * 0.5;
                    s[(i, j)] = avg;
                    s[(j, i)] = avg.conj();
                }
            }
            Ok(s)
        }
    }
}
