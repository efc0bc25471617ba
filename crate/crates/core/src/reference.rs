//! Reference three-user scenarios used for the ROC comparisons.
//!
//! Only the population-covariance spectra are known for these scenarios. The
//! channel realization below was fitted so that the low-SNR SNRs reproduce
//! the low-SNR spectrum to within 1e-5; it is kept so that the full
//! channel-to-covariance path can be exercised on realistic data.

use num_complex::Complex64;

pub const SENSORS: usize = 4;

pub const LOW_SNR_SNRS_DB: [f64; 3] = [-6.0, -5.0, -4.0];
pub const LOW_SNR_SAMPLES: usize = 400;
pub const LOW_SNR_SPECTRUM: [f64; 4] = [1.6225, 1.2217, 1.1213, 1.0];

pub const HIGH_SNR_SNRS_DB: [f64; 3] = [1.0, 2.0, 3.0];
pub const HIGH_SNR_SAMPLES: usize = 50;
pub const HIGH_SNR_SPECTRUM: [f64; 4] = [4.0417, 2.2375, 1.56, 1.0];

#[rustfmt::skip]
#[allow(clippy::excessive_precision)]
const LOW_SNR_CHANNEL_PARTS: [[(f64, f64); 4]; 3] = [
    [(2.22495694818423601e-01, -3.02702538901576668e-01), (4.76741912630142983e-01, -3.54805490009213687e-01),
     (-4.14063496834767397e-01, 8.46161507932815193e-01), (-2.57234802540905527e-01, 4.92025844010709978e-01)],
    [(-1.87398871639240933e-01, 2.96824238423716913e-01), (-2.80338400348737748e-01, 3.07833167091008109e-01),
     (-1.67583935130358158e-01, 4.27166509401314277e-03), (3.34025043797466503e-01, -2.31842197627608604e-01)],
    [(-7.97948299555747198e-01, -5.60660606080718216e-01), (-1.20546648002943541e-01, 1.49283998410035257e-01),
     (5.88001006051460731e-02, 1.25801163621978070e-02), (2.34773542770642413e-01, -4.04211160107337819e-01)],
];

/// Channel vectors (one per primary user, unnormalized) for the low-SNR scenario.
pub fn low_snr_channels() -> Vec<Vec<Complex64>> {
    LOW_SNR_CHANNEL_PARTS
        .iter()
        .map(|h| h.iter().map(|&(re, im)| Complex64::new(re, im)).collect())
        .collect()
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
