//! Monte Carlo engine: false-alarm and detection rates, empirical thresholds,
//! ROC curves and the analytic-vs-simulated false-alarm study.
//!
//! Trial `t` of any pool always draws from sub-stream `t` of the pool's
//! [`RngStream`], so results are identical for every execution mode and
//! thread count.

use crate::beta_approx::{pfa, threshold_for_pfa, BetaFit};
use crate::detectors::{exceeds, john_from_traces, DetectorKind, Orientation};
use crate::error::{Error, Result};
use crate::exec::{run_chunks, Execution};
use crate::matrix::{
    build_sigma_h1, cholesky_lower, gram_into, jacobi_eigenvalues,
    sample_standard_complex_gaussian, sigma_from_spectrum, ComplexMatrix,
};
use crate::reference::db_to_linear;
use crate::rng::RngStream;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub const DEFAULT_CHUNK_SIZE: u64 = 1024;

/// Stream id used to draw channel realizations for a scenario seed.
pub const CHANNEL_STREAM: u64 = 0xC4A7;

/// Binomial proportion with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateWithCI {
    pub value: f64,
    pub stderr: f64,
    pub trials: u64,
}

impl EstimateWithCI {
    pub fn from_count(hits: u64, trials: u64) -> Self {
        let value = if trials == 0 {
            0.0
        } else {
            hits as f64 / trials as f64
        };
        Self {
            value,
            stderr: binomial_stderr(value, trials),
            trials,
        }
    }
}

pub fn binomial_stderr(p: f64, trials: u64) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

/// How covariance matrices are drawn: `R = L G G^H L^H` with `G` a K x N
/// standard complex Gaussian block and `L L^H = Sigma`.
#[derive(Debug, Clone)]
pub struct SamplingModel {
    k: usize,
    n: usize,
    cholesky: Option<ComplexMatrix>,
    noise_power: f64,
}

impl SamplingModel {
    /// H0 with `Sigma = noise_power * I`.
    pub fn white(k: usize, n: usize, noise_power: f64) -> Result<Self> {
        check_kn(k, n)?;
        if !(noise_power > 0.0 && noise_power.is_finite()) {
            return Err(Error::DomainError(format!("noise power {noise_power}")));
        }
        let cholesky = (noise_power != 1.0)
            .then(|| ComplexMatrix::from_real_diagonal(&vec![noise_power.sqrt(); k]));
        Ok(Self {
            k,
            n,
            cholesky,
            noise_power,
        })
    }

    pub fn correlated(sigma: &ComplexMatrix, n: usize, noise_power: f64) -> Result<Self> {
        check_kn(sigma.rows(), n)?;
        Ok(Self {
            k: sigma.rows(),
            n,
            cholesky: Some(cholesky_lower(sigma)?),
            noise_power,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

fn check_kn(k: usize, n: usize) -> Result<()> {
    if k == 0 || n == 0 {
        return Err(Error::InvalidDims(format!(
            "K = {k}, N = {n}; both must be positive"
        )));
    }
    Ok(())
}

/// Statistic values for several detectors over the same set of draws.
#[derive(Debug, Clone, PartialEq)]
pub struct StatisticPool {
    kinds: Vec<DetectorKind>,
    values: Vec<Vec<f64>>,
}

impl StatisticPool {
    pub fn kinds(&self) -> &[DetectorKind] {
        &self.kinds
    }

    pub fn trials(&self) -> u64 {
        self.values.first().map_or(0, |v| v.len() as u64)
    }

    pub fn values(&self, kind: DetectorKind) -> &[f64] {
        let idx = self
            .kinds
            .iter()
            .position(|&k| k == kind)
            .unwrap_or_else(|| panic!("detector {kind} not in pool"));
        &self.values[idx]
    }

    /// Fraction of draws the detector would declare H1 at `threshold`.
    pub fn rejection_rate(&self, kind: DetectorKind, threshold: f64) -> EstimateWithCI {
        let o = kind.orientation();
        let values = self.values(kind);
        let hits = values.iter().filter(|&&v| exceeds(o, v, threshold)).count() as u64;
        EstimateWithCI::from_count(hits, values.len() as u64)
    }
}

/// Per-thread scratch buffers for one chunk of trials.
struct Scratch {
    g: Vec<Complex64>,
    w: Vec<Complex64>,
    tmp: Vec<Complex64>,
    eig: Vec<Complex64>,
}

impl Scratch {
    fn new(k: usize, n: usize) -> Self {
        let z = Complex64::new(0.0, 0.0);
        Self {
            g: vec![z; k * n],
            w: vec![z; k * k],
            tmp: vec![z; k * k],
            eig: vec![z; k * k],
        }
    }
}

/// `w <- L w L^H` for lower-triangular L, in place via `tmp`.
fn congruence(l: &ComplexMatrix, w: &mut [Complex64], tmp: &mut [Complex64], k: usize) {
    let ls = l.as_slice();
    for i in 0..k {
        for j in 0..k {
            let mut s = Complex64::new(0.0, 0.0);
            for m in 0..=i {
                s += ls[i * k + m] * w[m * k + j];
            }
            tmp[i * k + j] = s;
        }
    }
    for i in 0..k {
        for j in i..k {
            let mut s = Complex64::new(0.0, 0.0);
            for m in 0..=j {
                s += tmp[i * k + m] * ls[j * k + m].conj();
            }
            if i == j {
                s.im = 0.0;
            }
            w[i * k + j] = s;
            w[j * k + i] = s.conj();
        }
    }
}

/// Monte Carlo driver: execution mode and chunking.
#[derive(Debug, Clone, Copy)]
pub struct MonteCarlo {
    pub execution: Execution,
    pub chunk_size: u64,
}

impl Default for MonteCarlo {
    fn default() -> Self {
        Self {
            execution: Execution::default(),
            chunk_size: DEFAULT_CHUNK_SIZE,
        }
    }
}

impl MonteCarlo {
    pub fn new(execution: Execution) -> Self {
        Self {
            execution,
            ..Self::default()
        }
    }

    /// Draws `trials` sample covariances from `model` and evaluates every
    /// detector in `kinds` on each of them.
    pub fn statistics(
        &self,
        kinds: &[DetectorKind],
        model: &SamplingModel,
        trials: u64,
        rng: &RngStream,
    ) -> Result<StatisticPool> {
        let (k, n) = (model.k, model.n);
        let needs_eig = kinds.iter().any(|kind| kind.needs_eigenvalues());
        let chunks = run_chunks(self.execution, trials, self.chunk_size, |range| {
            let mut scratch = Scratch::new(k, n);
            let mut out: Vec<Vec<f64>> =
                vec![Vec::with_capacity((range.end - range.start) as usize); kinds.len()];
            let mut eig = Vec::with_capacity(k);
            for t in range {
                rng.substream(t).fill(&mut scratch.g);
                gram_into(&scratch.g, k, n, &mut scratch.w);
                if let Some(l) = &model.cholesky {
                    congruence(l, &mut scratch.w, &mut scratch.tmp, k);
                }
                let r = &scratch.w;
                if needs_eig {
                    scratch.eig.copy_from_slice(r);
                    eig = jacobi_eigenvalues(&mut scratch.eig, k)?;
                }
                for (slot, &kind) in out.iter_mut().zip(kinds) {
                    let value = if kind == DetectorKind::John {
                        let trace: f64 = (0..k).map(|i| r[i * k + i].re).sum();
                        let trace_sq: f64 = r.iter().map(|z| z.norm_sqr()).sum();
                        john_from_traces(trace, trace_sq)?.value
                    } else {
                        kind.evaluate_eigenvalues(&eig, model.noise_power)?.value
                    };
                    slot.push(value);
                }
            }
            Ok(out)
        })?;
        let mut values: Vec<Vec<f64>> = vec![Vec::with_capacity(trials as usize); kinds.len()];
        for chunk in chunks {
            for (dst, src) in values.iter_mut().zip(chunk) {
                dst.extend(src);
            }
        }
        Ok(StatisticPool {
            kinds: kinds.to_vec(),
            values,
        })
    }

    pub fn estimate_pfa(
        &self,
        kind: DetectorKind,
        threshold: f64,
        k: usize,
        n: usize,
        trials: u64,
        rng: &RngStream,
    ) -> Result<EstimateWithCI> {
        check_trials(trials)?;
        let pool = self.statistics(&[kind], &SamplingModel::white(k, n, 1.0)?, trials, rng)?;
        Ok(pool.rejection_rate(kind, threshold))
    }

    /// Detection rate under `sigma`; LE is referenced to unit noise power.
    pub fn estimate_pd(
        &self,
        kind: DetectorKind,
        threshold: f64,
        sigma: &ComplexMatrix,
        n: usize,
        trials: u64,
        rng: &RngStream,
    ) -> Result<EstimateWithCI> {
        check_trials(trials)?;
        let pool = self.statistics(
            &[kind],
            &SamplingModel::correlated(sigma, n, 1.0)?,
            trials,
            rng,
        )?;
        Ok(pool.rejection_rate(kind, threshold))
    }

    pub fn empirical_threshold(
        &self,
        kind: DetectorKind,
        k: usize,
        n: usize,
        target_pfa: f64,
        trials: u64,
        rng: &RngStream,
    ) -> Result<f64> {
        check_target(target_pfa)?;
        check_calibration_trials(target_pfa, trials)?;
        let pool = self.statistics(&[kind], &SamplingModel::white(k, n, 1.0)?, trials, rng)?;
        quantile_threshold(pool.values(kind), kind.orientation(), target_pfa)
    }

    pub fn roc(
        &self,
        kind: DetectorKind,
        scenario: &Scenario,
        pfa_grid: &[f64],
        rng: &RngStream,
    ) -> Result<RocCurve> {
        Ok(self.roc_curves(&[kind], scenario, pfa_grid, rng)?.remove(0))
    }

    /// ROC curves for several detectors sharing the same calibration,
    /// validation and detection draws.
    pub fn roc_curves(
        &self,
        kinds: &[DetectorKind],
        scenario: &Scenario,
        pfa_grid: &[f64],
        rng: &RngStream,
    ) -> Result<Vec<RocCurve>> {
        scenario.validate()?;
        check_grid(pfa_grid)?;
        let (k, n) = (scenario.k, scenario.n);
        let sigma = scenario.sigma()?;
        let h0 = SamplingModel::white(k, n, scenario.noise_power)?;
        let h1 = SamplingModel::correlated(&sigma, n, scenario.noise_power)?;

        let empirical: Vec<DetectorKind> = kinds
            .iter()
            .copied()
            .filter(|&k| k != DetectorKind::John)
            .collect();
        let calibration = if empirical.is_empty() {
            None
        } else {
            let min_pfa = pfa_grid[0].min(1.0 - pfa_grid[pfa_grid.len() - 1]);
            let needed = (100.0 / min_pfa).ceil() as u64;
            let trials = scenario.trials.max(needed);
            Some(self.statistics(&empirical, &h0, trials, &rng.fork(0))?)
        };
        let john_fit = if kinds.contains(&DetectorKind::John) {
            Some(BetaFit::for_dimensions(k, n)?)
        } else {
            None
        };
        let validation = self.statistics(kinds, &h0, scenario.trials, &rng.fork(1))?;
        let detection = self.statistics(kinds, &h1, scenario.trials, &rng.fork(2))?;

        kinds
            .iter()
            .map(|&kind| {
                let points = pfa_grid
                    .iter()
                    .map(|&target| {
                        let threshold = match (kind, &john_fit, &calibration) {
                            (DetectorKind::John, Some(fit), _) => threshold_for_pfa(target, fit)?,
                            (_, _, Some(pool)) => {
                                quantile_threshold(pool.values(kind), kind.orientation(), target)?
                            }
                            _ => unreachable!("every detector has a threshold source"),
                        };
                        Ok(RocPoint {
                            pfa_target: target,
                            threshold,
                            pfa: validation.rejection_rate(kind, threshold),
                            pd: detection.rejection_rate(kind, threshold),
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(RocCurve {
                    detector: kind,
                    points,
                })
            })
            .collect()
    }

    /// Analytic against simulated false-alarm probability of John's detector
    /// on a uniform threshold grid. All grid points share one pool of H0 draws.
    #[allow(clippy::too_many_arguments)]
    pub fn pfa_curve(
        &self,
        k: usize,
        n: usize,
        zeta_lo: f64,
        zeta_hi: f64,
        grid_points: usize,
        trials: Option<u64>,
        rng: &RngStream,
    ) -> Result<Vec<PfaCurveRow>> {
        let fit = BetaFit::for_dimensions(k, n)?;
        let lower = fit.lower_support();
        if !(zeta_lo >= lower && zeta_lo < zeta_hi && zeta_hi <= 1.0) {
            return Err(Error::DomainError(format!(
                "threshold range [{zeta_lo}, {zeta_hi}] must satisfy 1/K <= lo < hi <= 1"
            )));
        }
        if grid_points < 2 {
            return Err(Error::DomainError("need at least two grid points".into()));
        }
        let sorted = match trials {
            Some(t) => {
                check_trials(t)?;
                let pool = self.statistics(
                    &[DetectorKind::John],
                    &SamplingModel::white(k, n, 1.0)?,
                    t,
                    rng,
                )?;
                let mut v = pool.values(DetectorKind::John).to_vec();
                v.sort_by(f64::total_cmp);
                Some(v)
            }
            None => None,
        };
        uniform_grid(zeta_lo, zeta_hi, grid_points)
            .into_iter()
            .map(|zeta| {
                let analytic = pfa(zeta, &fit)?;
                let empirical = sorted.as_ref().map(|v| {
                    let above = v.len() - v.partition_point(|&x| x <= zeta);
                    EstimateWithCI::from_count(above as u64, v.len() as u64)
                });
                Ok(PfaCurveRow {
                    zeta,
                    pfa_analytic: analytic,
                    empirical,
                })
            })
            .collect()
    }

    #[allow(clippy::too_many_arguments)]
    pub fn approximation_error_study(
        &self,
        k: usize,
        n: usize,
        zeta_lo: f64,
        zeta_hi: f64,
        grid_points: usize,
        trials: u64,
        rng: &RngStream,
    ) -> Result<f64> {
        let rows = self.pfa_curve(k, n, zeta_lo, zeta_hi, grid_points, Some(trials), rng)?;
        Ok(average_abs_error(&rows))
    }
}

/// Mean `|analytic - empirical|` over the rows that carry an empirical value.
pub fn average_abs_error(rows: &[PfaCurveRow]) -> f64 {
    let diffs: Vec<f64> = rows
        .iter()
        .filter_map(|r| r.empirical.map(|e| (r.pfa_analytic - e.value).abs()))
        .collect();
    diffs.iter().sum::<f64>() / diffs.len().max(1) as f64
}

pub fn uniform_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let step = (hi - lo) / (points - 1) as f64;
    (0..points)
        .map(|i| {
            if i + 1 == points {
                hi
            } else {
                lo + step * i as f64
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PfaCurveRow {
    pub zeta: f64,
    pub pfa_analytic: f64,
    pub empirical: Option<EstimateWithCI>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub pfa_target: f64,
    pub threshold: f64,
    pub pfa: EstimateWithCI,
    pub pd: EstimateWithCI,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub detector: DetectorKind,
    pub points: Vec<RocPoint>,
}

/// Threshold whose empirical rejection rate over `values` is `target`.
///
/// For H1-above detectors this is the (1 - target) sample quantile, for
/// H1-below detectors the target quantile; the threshold sits midway between
/// the two order statistics that bracket it.
pub fn quantile_threshold(values: &[f64], orientation: Orientation, target: f64) -> Result<f64> {
    check_target(target)?;
    let n = values.len();
    let rejections = (target * n as f64).round() as usize;
    if rejections == 0 || rejections >= n {
        return Err(Error::InsufficientTrials {
            trials: n as u64,
            required: (100.0 / target.min(1.0 - target)).ceil() as u64,
        });
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let cut = match orientation {
        Orientation::H1Above => n - rejections,
        Orientation::H1Below => rejections,
    };
    Ok(0.5 * (sorted[cut - 1] + sorted[cut]))
}

fn check_trials(trials: u64) -> Result<()> {
    if trials == 0 {
        return Err(Error::InsufficientTrials {
            trials,
            required: 1,
        });
    }
    Ok(())
}

fn check_target(target: f64) -> Result<()> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::DomainError(format!(
            "target false-alarm probability must be in (0, 1), got {target}"
        )));
    }
    Ok(())
}

fn check_calibration_trials(target: f64, trials: u64) -> Result<()> {
    let required = (100.0 / target).ceil() as u64;
    if trials < required {
        return Err(Error::InsufficientTrials { trials, required });
    }
    Ok(())
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::DomainError("empty false-alarm grid".into()));
    }
    if grid.iter().any(|&p| !(p > 0.0 && p < 1.0)) {
        return Err(Error::DomainError(
            "false-alarm grid values must lie in (0, 1)".into(),
        ));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::DomainError(
            "false-alarm grid must be strictly increasing".into(),
        ));
    }
    Ok(())
}

fn default_noise_power() -> f64 {
    1.0
}

/// A sensing experiment. Channel vectors are stored as `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(default)]
    pub snrs_db: Vec<f64>,
    #[serde(default = "default_noise_power")]
    pub noise_power: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_spectrum: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channels: Option<Vec<Vec<[f64; 2]>>>,
    pub seed: u64,
    pub trials: u64,
}

impl Scenario {
    /// Number of primary users.
    pub fn p(&self) -> usize {
        self.snrs_db.len()
    }

    pub fn snrs_linear(&self) -> Vec<f64> {
        self.snrs_db.iter().copied().map(db_to_linear).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field, reason: String| Err(Error::InvalidScenario { field, reason });
        if self.k == 0 {
            return bad("K", "must be at least 1".into());
        }
        if self.n == 0 {
            return bad("N", "must be at least 1".into());
        }
        if self.trials == 0 {
            return bad("trials", "must be at least 1".into());
        }
        if !(self.noise_power > 0.0 && self.noise_power.is_finite()) {
            return bad(
                "noise_power",
                format!("must be positive, got {}", self.noise_power),
            );
        }
        if let Some(db) = self.snrs_db.iter().find(|x| !x.is_finite()) {
            return bad("snrs_db", format!("non-finite SNR {db}"));
        }
        if let Some(spec) = &self.sigma_spectrum {
            if spec.len() != self.k {
                return bad(
                    "sigma_spectrum",
                    format!("has {} entries, K = {}", spec.len(), self.k),
                );
            }
            if spec.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
                return bad("sigma_spectrum", "entries must be positive".into());
            }
            let smallest = spec.iter().copied().fold(f64::INFINITY, f64::min);
            if (smallest - self.noise_power).abs() > 1e-9 * self.noise_power {
                return bad(
                    "sigma_spectrum",
                    format!(
                        "smallest entry {smallest} must equal noise_power {}",
                        self.noise_power
                    ),
                );
            }
        }
        if let Some(ch) = &self.channels {
            if ch.len() != self.p() {
                return bad(
                    "channels",
                    format!("{} vectors for {} SNRs", ch.len(), self.p()),
                );
            }
            if let Some(h) = ch.iter().find(|h| h.len() != self.k) {
                return bad(
                    "channels",
                    format!("vector of length {}, K = {}", h.len(), self.k),
                );
            }
        }
        Ok(())
    }

    /// The scenario's channel vectors: stored ones, or a fresh draw from the
    /// scenario seed on [`CHANNEL_STREAM`].
    pub fn channel_realization(&self) -> Result<Vec<Vec<Complex64>>> {
        if let Some(ch) = &self.channels {
            return Ok(ch
                .iter()
                .map(|h| h.iter().map(|&[re, im]| Complex64::new(re, im)).collect())
                .collect());
        }
        if self.p() == 0 {
            return Ok(Vec::new());
        }
        let h = sample_standard_complex_gaussian(
            self.k,
            self.p(),
            &RngStream::new(self.seed, CHANNEL_STREAM),
        )?;
        Ok((0..self.p())
            .map(|j| (0..self.k).map(|i| h[(i, j)]).collect())
            .collect())
    }

    /// Population covariance: from the spectrum when given, otherwise from
    /// the SNRs and channel realization.
    pub fn sigma(&self) -> Result<ComplexMatrix> {
        self.validate()?;
        match &self.sigma_spectrum {
            Some(spec) => sigma_from_spectrum(spec, None),
            None => build_sigma_h1(
                &self.snrs_linear(),
                &self.channel_realization()?,
                self.noise_power,
                self.k,
            ),
        }
    }
}

pub fn estimate_pfa_mc(
    kind: DetectorKind,
    threshold: f64,
    k: usize,
    n: usize,
    trials: u64,
    rng: &RngStream,
) -> Result<EstimateWithCI> {
    MonteCarlo::default().estimate_pfa(kind, threshold, k, n, trials, rng)
}

pub fn estimate_pd_mc(
    kind: DetectorKind,
    threshold: f64,
    sigma: &ComplexMatrix,
    n: usize,
    trials: u64,
    rng: &RngStream,
) -> Result<EstimateWithCI> {
    MonteCarlo::default().estimate_pd(kind, threshold, sigma, n, trials, rng)
}

pub fn empirical_threshold(
    kind: DetectorKind,
    k: usize,
    n: usize,
    target_pfa: f64,
    trials: u64,
    rng: &RngStream,
) -> Result<f64> {
    MonteCarlo::default().empirical_threshold(kind, k, n, target_pfa, trials, rng)
}

pub fn roc(
    kind: DetectorKind,
    scenario: &Scenario,
    pfa_grid: &[f64],
    rng: &RngStream,
) -> Result<RocCurve> {
    MonteCarlo::default().roc(kind, scenario, pfa_grid, rng)
}

pub fn approximation_error_study(
    k: usize,
    n: usize,
    zeta_lo: f64,
    zeta_hi: f64,
    grid_points: usize,
    trials: u64,
    rng: &RngStream,
) -> Result<f64> {
    MonteCarlo::default().approximation_error_study(
        k,
        n,
        zeta_lo,
        zeta_hi,
        grid_points,
        trials,
        rng,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{sample_covariance, sample_data_matrix};

    fn scenario(spectrum: Vec<f64>, n: usize, trials: u64) -> Scenario {
        Scenario {
            k: spectrum.len(),
            n,
            snrs_db: vec![],
            noise_power: 1.0,
            sigma_spectrum: Some(spectrum),
            channels: None,
            seed: 7,
            trials,
        }
    }

    #[test]
    fn fast_path_matches_data_matrix_path() {
        let sigma = ComplexMatrix::from_real_rows(&[
            vec![2.0, 0.5, 0.1],
            vec![0.5, 1.5, 0.2],
            vec![0.1, 0.2, 1.0],
        ])
        .unwrap();
        let model = SamplingModel::correlated(&sigma, 9, 1.0).unwrap();
        let rng = RngStream::new(3, 4);
        let pool = MonteCarlo::new(Execution::Sequential)
            .statistics(&DetectorKind::ALL, &model, 5, &rng)
            .unwrap();
        for t in 0..5u64 {
            // trial t uses sub-stream t; reproduce with the public matrix API
            let mut g = vec![Complex64::new(0.0, 0.0); 27];
            rng.substream(t).fill(&mut g);
            let gm = ComplexMatrix::from_vec(3, 9, g).unwrap();
            let x = cholesky_lower(&sigma).unwrap().matmul(&gm).unwrap();
            let r = sample_covariance(&x);
            for kind in DetectorKind::ALL {
                let want = kind.evaluate(&r, 1.0).unwrap().value;
                let got = pool.values(kind)[t as usize];
                assert!(
                    (got - want).abs() <= 1e-12 * want.abs().max(1.0),
                    "{kind}: {got} vs {want}"
                );
            }
        }
        // sample_data_matrix draws from sub-stream 0 as well
        let x0 = sample_data_matrix(&sigma, 9, &rng).unwrap();
        let john = DetectorKind::John
            .evaluate(&sample_covariance(&x0), 1.0)
            .unwrap()
            .value;
        assert!((john - pool.values(DetectorKind::John)[0]).abs() < 1e-12);
    }

    #[test]
    fn execution_modes_are_bit_identical() {
        let model = SamplingModel::white(4, 12, 1.0).unwrap();
        let rng = RngStream::new(99, 1);
        let seq = MonteCarlo {
            execution: Execution::Sequential,
            chunk_size: 64,
        }
        .statistics(&DetectorKind::ALL, &model, 3000, &rng)
        .unwrap();
        let par = MonteCarlo {
            execution: Execution::Parallel,
            chunk_size: 7,
        }
        .statistics(&DetectorKind::ALL, &model, 3000, &rng)
        .unwrap();
        assert_eq!(seq, par);
    }

    #[test]
    fn pfa_at_support_edges() {
        let rng = RngStream::new(1, 0);
        let at_max = estimate_pfa_mc(DetectorKind::John, 1.0, 4, 10, 2000, &rng).unwrap();
        assert_eq!(at_max.value, 0.0);
        let at_min = estimate_pfa_mc(DetectorKind::John, 0.25, 4, 10, 2000, &rng).unwrap();
        assert_eq!(at_min.value, 1.0);
    }

    #[test]
    fn estimate_stderr_is_binomial() {
        let e = EstimateWithCI::from_count(250, 1000);
        assert_eq!(e.value, 0.25);
        assert!((e.stderr - (0.25f64 * 0.75 / 1000.0).sqrt()).abs() < 1e-18);
    }

    #[test]
    fn quantile_threshold_median_and_orientation() {
        let values: Vec<f64> = (1..=1000).map(|i| i as f64).collect();
        let t = quantile_threshold(&values, Orientation::H1Above, 0.5).unwrap();
        assert_eq!(t, 500.5);
        let t = quantile_threshold(&values, Orientation::H1Above, 0.1).unwrap();
        assert_eq!(values.iter().filter(|&&v| v > t).count(), 100);
        let t = quantile_threshold(&values, Orientation::H1Below, 0.1).unwrap();
        assert_eq!(values.iter().filter(|&&v| v < t).count(), 100);
    }

    #[test]
    fn empirical_threshold_needs_enough_trials() {
        let rng = RngStream::new(0, 0);
        assert_eq!(
            empirical_threshold(DetectorKind::John, 4, 10, 0.01, 9_999, &rng),
            Err(Error::InsufficientTrials {
                trials: 9_999,
                required: 10_000
            })
        );
    }

    #[test]
    fn empirical_median_matches_pool_median() {
        let rng = RngStream::new(8, 2);
        for kind in [
            DetectorKind::SphericalTest,
            DetectorKind::ScaledLargestEigenvalue,
        ] {
            let t = empirical_threshold(kind, 3, 8, 0.5, 2000, &rng).unwrap();
            let pool = MonteCarlo::default()
                .statistics(
                    &[kind],
                    &SamplingModel::white(3, 8, 1.0).unwrap(),
                    2000,
                    &rng,
                )
                .unwrap();
            let mut v = pool.values(kind).to_vec();
            v.sort_by(f64::total_cmp);
            assert_eq!(t, 0.5 * (v[999] + v[1000]));
        }
    }

    #[test]
    fn roc_is_reproducible_and_monotone() {
        let s = scenario(vec![2.0, 1.4, 1.0, 1.0], 30, 4000);
        let grid = [0.05, 0.1, 0.2, 0.5];
        let rng = RngStream::new(s.seed, 0);
        let a = MonteCarlo::default()
            .roc_curves(&DetectorKind::ALL, &s, &grid, &rng)
            .unwrap();
        let b = MonteCarlo::new(Execution::Sequential)
            .roc_curves(&DetectorKind::ALL, &s, &grid, &rng)
            .unwrap();
        assert_eq!(a, b);
        for curve in &a {
            for w in curve.points.windows(2) {
                assert!(
                    w[1].pfa.value > w[0].pfa.value,
                    "{}: pfa not increasing",
                    curve.detector
                );
                assert!(w[1].pd.value >= w[0].pd.value);
            }
            // single-detector call gives the same curve
            let single = roc(curve.detector, &s, &grid, &rng).unwrap();
            assert_eq!(&single, curve);
        }
    }

    #[test]
    fn roc_scale_invariance() {
        let grid = [0.1, 0.3];
        let base = scenario(vec![1.8, 1.2, 1.0], 20, 3000);
        let mut scaled = base.clone();
        scaled.noise_power = 3.5;
        scaled.sigma_spectrum = Some(vec![1.8 * 3.5, 1.2 * 3.5, 3.5]);
        let rng = RngStream::new(5, 0);
        let kinds = [
            DetectorKind::John,
            DetectorKind::SphericalTest,
            DetectorKind::ScaledLargestEigenvalue,
            DetectorKind::EigenvalueRatio,
        ];
        let a = MonteCarlo::default()
            .roc_curves(&kinds, &base, &grid, &rng)
            .unwrap();
        let b = MonteCarlo::default()
            .roc_curves(&kinds, &scaled, &grid, &rng)
            .unwrap();
        for (ca, cb) in a.iter().zip(&b) {
            for (pa, pb) in ca.points.iter().zip(&cb.points) {
                assert_eq!(pa.pd.value, pb.pd.value);
                assert_eq!(pa.pfa.value, pb.pfa.value);
            }
        }
    }

    #[test]
    fn roc_rejects_bad_grid() {
        let s = scenario(vec![1.5, 1.0], 10, 100);
        let rng = RngStream::new(0, 0);
        assert!(roc(DetectorKind::John, &s, &[0.2, 0.1], &rng).is_err());
        assert!(roc(DetectorKind::John, &s, &[0.0, 0.1], &rng).is_err());
        assert!(roc(DetectorKind::John, &s, &[], &rng).is_err());
    }

    #[test]
    fn scenario_validation() {
        let mut s = scenario(vec![1.5, 1.0], 10, 100);
        assert!(s.validate().is_ok());
        s.sigma_spectrum = Some(vec![1.5, 1.2]);
        assert!(matches!(
            s.validate(),
            Err(Error::InvalidScenario {
                field: "sigma_spectrum",
                ..
            })
        ));
        s.sigma_spectrum = Some(vec![1.5]);
        assert!(s.validate().is_err());
        let mut s = scenario(vec![1.5, 1.0], 10, 100);
        s.trials = 0;
        assert!(matches!(
            s.validate(),
            Err(Error::InvalidScenario {
                field: "trials",
                ..
            })
        ));
    }

    #[test]
    fn scenario_channels_are_seeded() {
        let s = Scenario {
            k: 4,
            n: 40,
            snrs_db: vec![-3.0, 0.0],
            noise_power: 1.0,
            sigma_spectrum: None,
            channels: None,
            seed: 42,
            trials: 10,
        };
        assert_eq!(
            s.channel_realization().unwrap(),
            s.channel_realization().unwrap()
        );
        let sigma = s.sigma().unwrap();
        let expected = 4.0 + s.snrs_linear().iter().sum::<f64>();
        assert!((sigma.trace() - expected).abs() < 1e-12);
        let mut other = s.clone();
        other.seed = 43;
        assert_ne!(
            s.channel_realization().unwrap(),
            other.channel_realization().unwrap()
        );
    }

    #[test]
    fn pfa_curve_edges_and_errors() {
        let rng = RngStream::new(0, 0);
        let rows = MonteCarlo::default()
            .pfa_curve(4, 20, 0.25, 1.0, 4, None, &rng)
            .unwrap();
        assert_eq!(rows[0].pfa_analytic, 1.0);
        assert_eq!(rows[3].zeta, 1.0);
        assert_eq!(rows[3].pfa_analytic, 0.0);
        assert!(rows.iter().all(|r| r.empirical.is_none()));
        assert!(MonteCarlo::default()
            .pfa_curve(4, 20, 0.2, 0.3, 4, None, &rng)
            .is_err());
        assert!(MonteCarlo::default()
            .pfa_curve(4, 20, 0.3, 0.3, 4, None, &rng)
            .is_err());
        assert!(MonteCarlo::default()
            .pfa_curve(4, 20, 0.25, 0.3, 1, None, &rng)
            .is_err());
    }

    #[test]
    fn uniform_grid_hits_endpoints() {
        let g = uniform_grid(0.125, 0.3, 100);
        assert_eq!(g.len(), 100);
        assert_eq!(g[0], 0.125);
        assert_eq!(g[99], 0.3);
    }
}
