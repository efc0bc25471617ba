//! Simulation checks against analytic values. Trial counts follow the
//! tolerances they are checked at, so a few of these take tens of seconds.

use num_complex::Complex64;
use specsense::beta_approx::{pfa, threshold_for_pfa};
use specsense::matrix::{
    random_unitary, sample_covariance, sample_data_matrix, sigma_from_spectrum,
};
use specsense::moments::{moment_tj, monomial_moment_lemma1, to_f64, Composition};
use specsense::reference::{LOW_SNR_SAMPLES, LOW_SNR_SPECTRUM};
use specsense::simulator::{
    approximation_error_study, empirical_threshold, estimate_pd_mc, estimate_pfa_mc, SamplingModel,
};
use specsense::{BetaFit, ComplexMatrix, DetectorKind, Execution, MonteCarlo, RngStream, Scenario};

fn mean_and_stderr(xs: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut n, mut s, mut s2) = (0.0, 0.0, 0.0);
    for x in xs {
        n += 1.0;
        s += x;
        s2 += x * x;
    }
    let mean = s / n;
    let var = (s2 / n - mean * mean) * n / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn john_pool(k: usize, n: usize, trials: u64, rng: &RngStream) -> Vec<f64> {
    MonteCarlo::default()
        .statistics(
            &[DetectorKind::John],
            &SamplingModel::white(k, n, 1.0).unwrap(),
            trials,
            rng,
        )
        .unwrap()
        .values(DetectorKind::John)
        .to_vec()
}

#[test]
fn single_sensor_energy_is_chi_square() {
    let (sigma2, n, trials) = (2.5, 7usize, 100_000u64);
    let sigma = ComplexMatrix::from_real_diagonal(&[sigma2]);
    let draws: Vec<f64> = (0..trials)
        .map(|t| {
            let x = sample_data_matrix(&sigma, n, &RngStream::new(21, t)).unwrap();
            2.0 * sample_covariance(&x).trace() / sigma2
        })
        .collect();
    let (mean, se) = mean_and_stderr(draws.iter().copied());
    let dof = 2.0 * n as f64;
    assert!((mean - dof).abs() <= 4.0 * se, "mean {mean} vs {dof}");
    let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (trials as f64 - 1.0);
    // central fourth moment of chi-square; stderr of the sample variance is sqrt((mu4 - var^2)/T)
    let mu4 = 12.0 * dof * (dof + 4.0);
    let var_se = ((mu4 - (2.0 * dof).powi(2)) / trials as f64).sqrt();
    assert!(
        (var - 2.0 * dof).abs() <= 4.0 * var_se,
        "var {var} vs {}",
        2.0 * dof
    );
}

#[test]
fn sample_covariance_is_unbiased() {
    let (k, n, trials) = (3usize, 5usize, 100_000u64);
    let u = random_unitary(k, &RngStream::new(9, 9)).unwrap();
    let sigma = sigma_from_spectrum(&[2.0, 1.3, 1.0], Some(&u)).unwrap();
    let mut sum = vec![Complex64::new(0.0, 0.0); k * k];
    let mut sum_sq = vec![(0.0f64, 0.0f64); k * k];
    for t in 0..trials {
        let r = sample_covariance(&sample_data_matrix(&sigma, n, &RngStream::new(77, t)).unwrap());
        for (i, z) in r.as_slice().iter().enumerate() {
            sum[i] += z;
            sum_sq[i].0 += z.re * z.re;
            sum_sq[i].1 += z.im * z.im;
        }
    }
    let tf = trials as f64;
    for i in 0..k * k {
        let mean = sum[i] / tf;
        let want = sigma.as_slice()[i] * n as f64;
        let se_re = ((sum_sq[i].0 / tf - mean.re * mean.re) / tf).sqrt();
        let se_im = ((sum_sq[i].1 / tf - mean.im * mean.im) / tf).sqrt();
        assert!((mean.re - want.re).abs() <= 4.0 * se_re, "entry {i} re");
        if se_im > 0.0 {
            assert!((mean.im - want.im).abs() <= 4.0 * se_im, "entry {i} im");
        }
    }
}

/// The two-moment Beta law is not exact: against 10^6 draws its false-alarm
/// curve is off by up to ~2e-3 around the bulk of T_J (the fitted law has the
/// right mean and variance but slightly too little skew). Tests against the
/// analytic curve therefore allow this bias on top of binomial noise.
const FIT_BIAS: f64 = 2e-3;

#[test]
fn analytic_threshold_holds_false_alarm_rate() {
    for (k, n, target, seed) in [(8, 100, 0.05, 101), (4, 400, 0.1, 102)] {
        let zeta = threshold_for_pfa(target, &BetaFit::for_dimensions(k, n).unwrap()).unwrap();
        let est = estimate_pfa_mc(
            DetectorKind::John,
            zeta,
            k,
            n,
            1_000_000,
            &RngStream::new(seed, 0),
        )
        .unwrap();
        assert!(
            (est.value - target).abs() <= 3.0 * est.stderr + FIT_BIAS,
            "K={k} N={n}: {est:?}"
        );
    }
}

#[test]
fn empirical_threshold_matches_analytic_and_revalidates() {
    let analytic = threshold_for_pfa(0.1, &BetaFit::for_dimensions(8, 100).unwrap()).unwrap();
    let empirical = empirical_threshold(
        DetectorKind::John,
        8,
        100,
        0.1,
        1_000_000,
        &RngStream::new(103, 0),
    )
    .unwrap();
    assert!(
        (empirical - analytic).abs() <= 2e-3,
        "{empirical} vs {analytic}"
    );
    let check = estimate_pfa_mc(
        DetectorKind::John,
        empirical,
        8,
        100,
        200_000,
        &RngStream::new(104, 0),
    )
    .unwrap();
    assert!((check.value - 0.1).abs() <= 4.0 * check.stderr, "{check:?}");

    // spherical test, which is H1-below
    let st = empirical_threshold(
        DetectorKind::SphericalTest,
        4,
        50,
        0.1,
        100_000,
        &RngStream::new(105, 0),
    )
    .unwrap();
    let check = estimate_pfa_mc(
        DetectorKind::SphericalTest,
        st,
        4,
        50,
        100_000,
        &RngStream::new(106, 0),
    )
    .unwrap();
    assert!((check.value - 0.1).abs() <= 4.0 * check.stderr, "{check:?}");
}

#[test]
fn white_alternative_detects_at_false_alarm_rate() {
    let zeta = threshold_for_pfa(0.1, &BetaFit::for_dimensions(4, 40).unwrap()).unwrap();
    let pd = estimate_pd_mc(
        DetectorKind::John,
        zeta,
        &ComplexMatrix::identity(4),
        40,
        100_000,
        &RngStream::new(7, 1),
    )
    .unwrap();
    let pfa = estimate_pfa_mc(
        DetectorKind::John,
        zeta,
        4,
        40,
        100_000,
        &RngStream::new(7, 2),
    )
    .unwrap();
    let band = 3.0 * (pd.stderr.powi(2) + pfa.stderr.powi(2)).sqrt();
    assert!((pd.value - pfa.value).abs() <= band, "{pd:?} vs {pfa:?}");
    assert!((pd.value - 0.1).abs() <= 3.0 * pd.stderr + FIT_BIAS);
}

#[test]
fn low_snr_detection_beats_chance_at_median_threshold() {
    let fit = BetaFit::for_dimensions(4, LOW_SNR_SAMPLES).unwrap();
    let zeta = threshold_for_pfa(0.5, &fit).unwrap();
    let sigma = sigma_from_spectrum(&LOW_SNR_SPECTRUM, None).unwrap();
    let est = estimate_pd_mc(
        DetectorKind::John,
        zeta,
        &sigma,
        LOW_SNR_SAMPLES,
        20_000,
        &RngStream::new(8, 8),
    )
    .unwrap();
    assert!(est.value > 0.5);
}

#[test]
fn identity_spectrum_roc_sits_on_diagonal() {
    let scenario = Scenario {
        k: 4,
        n: 30,
        snrs_db: vec![],
        noise_power: 1.0,
        sigma_spectrum: Some(vec![1.0; 4]),
        channels: None,
        seed: 55,
        trials: 50_000,
    };
    let grid = [0.05, 0.1, 0.2, 0.5, 0.8];
    let curves = MonteCarlo::default()
        .roc_curves(
            &DetectorKind::ALL,
            &scenario,
            &grid,
            &RngStream::new(scenario.seed, 0),
        )
        .unwrap();
    for curve in curves {
        for p in &curve.points {
            let band = 3.0 * (p.pd.stderr.powi(2) + p.pfa.stderr.powi(2)).sqrt();
            assert!(
                (p.pd.value - p.pfa.value).abs() <= band,
                "{}: {p:?}",
                curve.detector
            );
        }
    }
}

#[test]
fn john_moments_match_simulation() {
    let pool = john_pool(2, 4, 1_000_000, &RngStream::new(31, 0));
    for m in 1..=2u32 {
        let exact = to_f64(&moment_tj(m, 2, 4).unwrap());
        let (mean, se) = mean_and_stderr(pool.iter().map(|t| t.powi(m as i32)));
        assert!((mean - exact).abs() <= 4.0 * se, "m={m}: {mean} vs {exact}");
    }
}

#[test]
fn unordered_eigenvalue_monomial_matches_simulation() {
    // E[l^2] of a randomly labelled eigenvalue is tr(R^2)/K averaged
    let exact = to_f64(&monomial_moment_lemma1(&Composition::new(vec![1, 0]), 2, 2).unwrap());
    let (mean, se) = mean_and_stderr((0..1_000_000u64).map(|t| {
        let x = sample_data_matrix(&ComplexMatrix::identity(2), 2, &RngStream::new(32, t)).unwrap();
        let r = sample_covariance(&x);
        r.as_slice().iter().map(|z| z.norm_sqr()).sum::<f64>() / 2.0
    }));
    assert!((mean - exact).abs() <= 4.0 * se, "{mean} vs {exact}");
}

#[test]
fn cdf_matches_simulated_exceedance_in_plotted_range() {
    let fit = BetaFit::for_dimensions(8, 100).unwrap();
    let pool = john_pool(8, 100, 1_000_000, &RngStream::new(33, 0));
    for zeta in [0.13, 0.135, 0.14, 0.15] {
        let p = pfa(zeta, &fit).unwrap();
        let hits = pool.iter().filter(|&&t| t > zeta).count() as f64 / pool.len() as f64;
        let se = (p * (1.0 - p) / pool.len() as f64).sqrt();
        assert!(
            (hits - p).abs() <= 3.0 * se + FIT_BIAS,
            "zeta {zeta}: {hits} vs {p}"
        );
    }
}

#[test]
fn error_study_is_continuous_in_grid() {
    let rng = RngStream::new(34, 0);
    let wide = approximation_error_study(8, 50, 0.2, 0.2 + 1e-9, 2, 20_000, &rng).unwrap();
    let mc = MonteCarlo::default();
    let rows = mc
        .pfa_curve(8, 50, 0.2, 0.2 + 1e-9, 2, Some(20_000), &rng)
        .unwrap();
    let errs: Vec<f64> = rows
        .iter()
        .map(|r| (r.pfa_analytic - r.empirical.unwrap().value).abs())
        .collect();
    assert!((errs[0] - errs[1]).abs() < 1e-6);
    assert!((wide - 0.5 * (errs[0] + errs[1])).abs() < 1e-15);
}

#[test]
fn roc_is_thread_count_independent() {
    let scenario = Scenario {
        k: 4,
        n: 50,
        snrs_db: vec![1.0, 2.0, 3.0],
        noise_power: 1.0,
        sigma_spectrum: None,
        channels: None,
        seed: 2024,
        trials: 5_000,
    };
    let grid = [0.01, 0.1, 0.3];
    let rng = RngStream::new(scenario.seed, 0);
    let seq = MonteCarlo::new(Execution::Sequential)
        .roc_curves(&DetectorKind::ALL, &scenario, &grid, &rng)
        .unwrap();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(3)
        .build()
        .unwrap();
    let par = pool.install(|| {
        MonteCarlo::new(Execution::Parallel)
            .roc_curves(&DetectorKind::ALL, &scenario, &grid, &rng)
            .unwrap()
    });
    assert_eq!(seq, par);
}
