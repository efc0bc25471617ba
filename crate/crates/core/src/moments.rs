//! Exact moments of John's statistic under the white (noise-only) hypothesis.
//!
//! Every gamma function argument here is a positive integer, so all values
//! are exact rationals. Nothing is converted to floating point until the
//! caller asks for it.
//!
//! With eigenvalues `l_1..l_K` of a white complex Wishart `W_K(N, I)`:
//!
//! ```text
//! E[(sum l_i^2)^m] = C * sum_{a_1+..+a_K=m} m!/(a_1!..a_K!)
//!                      * prod_{i<j} (2a_j - 2a_i + j - i)
//!                      * prod_i Gamma(2a_i + N - K + i)
//! C = 1 / prod_i Gamma(N - i + 1) Gamma(K - i + 1)
//! E[(sum l_i)^(2m)] = Gamma(2m + KN) / Gamma(KN)
//! ```
//!
//! and the m-th moment of `T_J` is the ratio of the two, because the trace is
//! independent of `T_J` under H0.

use crate::error::{Error, Result};
use itertools::Itertools;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

pub type ExactRational = BigRational;

/// Default cap on the moment order.
pub const DEFAULT_MAX_ORDER: u32 = 16;

/// Largest K accepted by the permutation-sum oracle (K! terms).
pub const MONOMIAL_ORACLE_MAX_K: usize = 6;

/// One weak composition `a_1 + .. + a_K = m`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Composition {
    parts: Vec<u32>,
}

impl Composition {
    pub fn new(parts: Vec<u32>) -> Self {
        Self { parts }
    }

    pub fn parts(&self) -> &[u32] {
        &self.parts
    }

    pub fn total(&self) -> u32 {
        self.parts.iter().sum()
    }
}

/// Lazy enumeration of all weak compositions of `m` into `k` parts, in the
/// lexicographic order of the nested sums over `a_1, .., a_{K-1}`.
#[derive(Debug, Clone)]
pub struct Compositions {
    current: Vec<u32>,
    done: bool,
}

pub fn compositions(m: u32, k: usize) -> Compositions {
    assert!(k >= 1, "compositions need at least one part");
    let mut current = vec![0; k];
    current[k - 1] = m;
    Compositions {
        current,
        done: false,
    }
}

impl Iterator for Compositions {
    type Item = Composition;

    fn next(&mut self) -> Option<Composition> {
        if self.done {
            return None;
        }
        let out = Composition::new(self.current.clone());
        let k = self.current.len();
        // last nonzero among positions 1..k; move one unit left of it
        match (1..k).rev().find(|&t| self.current[t] > 0) {
            None => self.done = true,
            Some(t) => {
                let j = t - 1;
                let rest: u32 = self.current[t..].iter().sum();
                self.current[j] += 1;
                for a in &mut self.current[j + 1..] {
                    *a = 0;
                }
                self.current[k - 1] = rest - 1;
            }
        }
        Some(out)
    }
}

/// Binomial coefficient as a big integer.
pub fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// Factorial table `0! ..= max!`.
struct Factorials(Vec<BigInt>);

impl Factorials {
    fn up_to(max: u64) -> Self {
        let mut table = Vec::with_capacity(max as usize + 1);
        table.push(BigInt::one());
        for i in 1..=max {
            let next = &table[i as usize - 1] * BigInt::from(i);
            table.push(next);
        }
        Self(table)
    }

    fn fact(&self, n: u64) -> &BigInt {
        &self.0[n as usize]
    }

    /// Gamma(n) = (n-1)! for a positive integer n.
    fn gamma(&self, n: u64) -> &BigInt {
        debug_assert!(n >= 1);
        self.fact(n - 1)
    }
}

fn check_dims(k: usize, n: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidDims("K must be at least 1".into()));
    }
    if k > n {
        return Err(Error::InvalidDims(format!(
            "need N >= K for the white Wishart law, got K = {k}, N = {n}"
        )));
    }
    Ok(())
}

/// `prod_i Gamma(N - i + 1) Gamma(K - i + 1)`, the inverse of the density constant.
fn normalizer(f: &Factorials, k: usize, n: usize) -> BigInt {
    (1..=k as u64)
        .map(|i| f.gamma(n as u64 - i + 1) * f.gamma(k as u64 - i + 1))
        .product()
}

/// Moment calculator with a configurable cap on the order.
#[derive(Debug, Clone, Copy)]
pub struct Moments {
    pub max_order: u32,
}

impl Default for Moments {
    fn default() -> Self {
        Self {
            max_order: DEFAULT_MAX_ORDER,
        }
    }
}

impl Moments {
    pub fn with_max_order(max_order: u32) -> Self {
        Self { max_order }
    }

    fn check_order(&self, m: u32) -> Result<()> {
        if m > self.max_order {
            return Err(Error::TooLarge(format!(
                "moment order {m} exceeds the configured cap {}",
                self.max_order
            )));
        }
        Ok(())
    }

    /// `E[(sum l_i^2)^m]` under H0.
    pub fn sum_lambda_sq(&self, m: u32, k: usize, n: usize) -> Result<ExactRational> {
        check_dims(k, n)?;
        self.check_order(m)?;
        let f = Factorials::up_to((2 * m as u64 + n as u64).max(k as u64 + 1));
        let m_fact = f.fact(m as u64);
        let mut total = BigInt::zero();
        for comp in compositions(m, k) {
            let a = comp.parts();
            let mut vandermonde: i64 = 1;
            for j in 1..k {
                for i in 0..j {
                    vandermonde *= 2 * (a[j] as i64 - a[i] as i64) + (j - i) as i64;
                }
            }
            if vandermonde == 0 {
                continue;
            }
            let multinomial = a
                .iter()
                .fold(m_fact.clone(), |acc, &ai| acc / f.fact(ai as u64));
            let gammas: BigInt = a
                .iter()
                .enumerate()
                .map(|(i, &ai)| f.gamma(2 * ai as u64 + (n - k) as u64 + i as u64 + 1))
                .product();
            total += multinomial * BigInt::from(vandermonde) * gammas;
        }
        Ok(BigRational::new(total, normalizer(&f, k, n)))
    }

    /// `E[(sum l_i)^(2m)] = (KN)(KN+1)..(KN+2m-1)`.
    pub fn trace_power(&self, m: u32, k: usize, n: usize) -> Result<ExactRational> {
        if k == 0 || n == 0 {
            return Err(Error::InvalidDims("K and N must be positive".into()));
        }
        self.check_order(m)?;
        let kn = (k * n) as u64;
        let rising: BigInt = (0..2 * m as u64).map(|i| BigInt::from(kn + i)).product();
        Ok(BigRational::from_integer(rising))
    }

    /// m-th moment of John's statistic under H0.
    pub fn tj(&self, m: u32, k: usize, n: usize) -> Result<ExactRational> {
        Ok(self.sum_lambda_sq(m, k, n)? / self.trace_power(m, k, n)?)
    }
}

pub fn moment_sum_lambda_sq(m: u32, k: usize, n: usize) -> Result<ExactRational> {
    Moments::default().sum_lambda_sq(m, k, n)
}

pub fn moment_trace_power(m: u32, k: usize, n: usize) -> Result<ExactRational> {
    Moments::default().trace_power(m, k, n)
}

pub fn moment_tj(m: u32, k: usize, n: usize) -> Result<ExactRational> {
    Moments::default().tj(m, k, n)
}

/// First and second moments of `T_J` as doubles, ready for the Beta fit.
pub fn tj_first_two(k: usize, n: usize) -> Result<(f64, f64)> {
    let m1 = to_f64(&moment_tj(1, k, n)?);
    let m2 = to_f64(&moment_tj(2, k, n)?);
    Ok((m1, m2))
}

pub fn to_f64(x: &ExactRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Exact determinant of a square integer matrix by fraction-free (Bareiss)
/// elimination.
pub fn exact_determinant(mut a: Vec<Vec<BigInt>>) -> BigInt {
    let n = a.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&r| !a[r][k].is_zero()) {
                Some(r) => {
                    a.swap(k, r);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = (&a[i][j] * &a[k][k] - &a[i][k] * &a[k][j]) / &prev;
                a[i][j] = v;
            }
        }
        prev = a[k][k].clone();
    }
    sign * &a[n - 1][n - 1]
}

/// `|Gamma(b_i + j - 1)|_{i,j}` by exact elimination, paired with the product
/// form `prod_{i<j}(b_j - b_i) prod_i Gamma(b_i)`.
pub fn gamma_determinant_lemma2(b: &[u64]) -> Result<(ExactRational, ExactRational)> {
    if let Some(bad) = b.iter().find(|&&x| x == 0) {
        return Err(Error::DomainError(format!(
            "gamma determinant needs positive integers, got {bad}"
        )));
    }
    let k = b.len() as u64;
    let f = Factorials::up_to(b.iter().copied().max().unwrap_or(1) + k);
    let matrix = b
        .iter()
        .map(|&bi| (0..k).map(|j| f.gamma(bi + j).clone()).collect())
        .collect();
    let det = exact_determinant(matrix);
    let mut product: BigInt = b.iter().map(|&bi| f.gamma(bi).clone()).product();
    for j in 0..b.len() {
        for i in 0..j {
            product *= BigInt::from(b[j] as i64 - b[i] as i64);
        }
    }
    Ok((
        BigRational::from_integer(det),
        BigRational::from_integer(product),
    ))
}

/// `E[prod l_i^(2 a_i)]` over the unordered eigenvalue density, as the explicit
/// sum over all K! row permutations of integer gamma determinants.
pub fn monomial_moment_lemma1(a: &Composition, k: usize, n: usize) -> Result<ExactRational> {
    check_dims(k, n)?;
    if k > MONOMIAL_ORACLE_MAX_K {
        return Err(Error::TooLarge(format!(
            "permutation-sum oracle limited to K <= {MONOMIAL_ORACLE_MAX_K}, got {k}"
        )));
    }
    if a.parts().len() != k {
        return Err(Error::InvalidDims(format!(
            "composition has {} parts, K = {k}",
            a.parts().len()
        )));
    }
    let max_a = a.parts().iter().copied().max().unwrap_or(0) as u64;
    let f = Factorials::up_to(2 * max_a + (n + k) as u64 + 1);
    let mut sum = BigInt::zero();
    for perm in (0..k).permutations(k) {
        let matrix = (0..k)
            .map(|i| {
                (0..k)
                    .map(|j| {
                        let arg =
                            2 * a.parts()[perm[i]] as u64 + (n - k) as u64 + (i + j) as u64 + 1;
                        f.gamma(arg).clone()
                    })
                    .collect()
            })
            .collect();
        sum += exact_determinant(matrix);
    }
    let k_fact = f.fact(k as u64).clone();
    Ok(BigRational::new(sum, normalizer(&f, k, n) * k_fact))
}

/// Multinomial coefficient `m! / (a_1! .. a_K!)`.
pub fn multinomial(a: &Composition) -> BigInt {
    let mut acc = BigInt::one();
    let mut running = 0u64;
    for &ai in a.parts() {
        running += ai as u64;
        acc *= binomial(running, ai as u64);
    }
    acc
}
