//! Command-line front end for `specsense`.
//!
//! Every subcommand is a pure function of its arguments and seed; the
//! `--threads` flag only changes how fast the answer arrives.

pub mod format;
pub mod manifest;

use clap::{Args, Parser, Subcommand, ValueEnum};
use format::{csv_line, real};
use manifest::RunManifest;
use serde::{Deserialize, Serialize};
use serde_json::json;
use specsense::moments::{to_f64, Moments};
use specsense::simulator::{average_abs_error, Scenario};
use specsense::{threshold_for_pfa, BetaFit, DetectorKind, Execution, MonteCarlo, RngStream};
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const SEED_ENV: &str = "SPECSENSE_SEED";
pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_SIM_TRIALS: u64 = 1_000_000;

#[derive(Debug, Parser)]
#[command(
    name = "specsense",
    version,
    about = "Eigenvalue-based spectrum sensing: exact moments, thresholds, P_fa curves and ROCs"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalOpts {
    /// Master seed. Falls back to $SPECSENSE_SEED, then 0.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Monte Carlo trials (overrides the config file for `roc`).
    #[arg(long, global = true)]
    pub trials: Option<u64>,
    /// Worker threads for Monte Carlo work. Does not change results.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output file (directory for `roc`). Defaults to stdout (`.` for `roc`).
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact moments M_0..M_mmax of John's statistic under H0.
    Moments {
        #[arg(long = "K")]
        k: usize,
        #[arg(long = "N")]
        n: usize,
        #[arg(long = "m-max")]
        m_max: u32,
    },
    /// Analytic threshold for a target false-alarm probability.
    Threshold {
        #[arg(long = "K")]
        k: usize,
        #[arg(long = "N")]
        n: usize,
        #[arg(long = "target-pfa")]
        target_pfa: f64,
    },
    /// Analytic false-alarm curve, optionally against simulation.
    PfaCurve {
        #[arg(long = "K")]
        k: usize,
        #[arg(long = "N")]
        n: usize,
        #[arg(long = "zeta-lo")]
        zeta_lo: f64,
        #[arg(long = "zeta-hi")]
        zeta_hi: f64,
        #[arg(long, default_value_t = 100)]
        points: usize,
        /// Add empirical exceedances from `--trials` H0 draws (default 10^6).
        #[arg(long)]
        simulate: bool,
    },
    /// ROC curves for a scenario config.
    Roc {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated subset of john,st,sle,er,le.
        #[arg(long, value_delimiter = ',')]
        detectors: Option<Vec<DetectorKind>>,
        /// Comma-separated, strictly increasing false-alarm targets.
        #[arg(long = "pfa-grid", value_delimiter = ',')]
        pfa_grid: Option<Vec<f64>>,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config {path}: {message}")]
    Config { path: String, message: String },
    #[error(transparent)]
    Core(#[from] specsense::Error),
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config { .. } | CliError::Io { .. } => 2,
            CliError::Core(e) if e.is_usage() => 2,
            CliError::Core(_) => 3,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Body of a ROC config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RocConfig {
    pub scenario: Scenario,
    #[serde(default)]
    pub detectors: Option<Vec<DetectorKind>>,
    #[serde(default)]
    pub pfa_grid: Option<Vec<f64>>,
}

pub const DEFAULT_PFA_GRID: [f64; 9] = [0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 0.9];

pub fn parse_roc_config(text: &str, path: &str) -> CliResult<RocConfig> {
    let config: RocConfig = serde_json::from_str(text).map_err(|e| CliError::Config {
        path: path.to_string(),
        message: e.to_string(),
    })?;
    config.scenario.validate().map_err(|e| match e {
        specsense::Error::InvalidScenario { field, reason } => CliError::Config {
            path: path.to_string(),
            message: format!("field `scenario.{field}`: {reason}"),
        },
        other => other.into(),
    })?;
    Ok(config)
}

fn resolve_seed(flag: Option<u64>) -> CliResult<u64> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match std::env::var(SEED_ENV) {
        Ok(s) => s.trim().parse().map_err(|_| {
            CliError::Usage(format!("{SEED_ENV}={s:?} is not a 64-bit unsigned integer"))
        }),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

/// One rendered output file plus its provenance.
#[derive(Debug, Clone)]
pub struct Report {
    pub body: String,
    pub manifest: RunManifest,
    /// Human-readable lines for stderr.
    pub notes: Vec<String>,
}

/// Runs `f` on a pool of `threads` workers, or on the global pool.
fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    match threads {
        Some(0) => Err(CliError::Usage("--threads must be at least 1".into())),
        #[cfg(feature = "parallel")]
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Usage(format!("cannot start {n} threads: {e}")))?;
            Ok(pool.install(f))
        }
        _ => Ok(f()),
    }
}

pub fn cmd_moments(k: usize, n: usize, m_max: u32, seed: u64, fmt: Format) -> CliResult<Report> {
    let calc = Moments::default();
    if m_max > calc.max_order {
        return Err(CliError::Usage(format!(
            "--m-max {m_max} exceeds the cap {}",
            calc.max_order
        )));
    }
    let rows = (0..=m_max)
        .map(|m| calc.tj(m, k, n).map(|v| (m, v)))
        .collect::<specsense::Result<Vec<_>>>()?;
    let manifest = RunManifest::new("moments", seed)
        .with("K", k)
        .with("N", n)
        .with("m_max", m_max);
    let body = match fmt {
        Format::Csv => {
            let mut s = String::from("m,numerator,denominator,decimal\n");
            for (m, v) in &rows {
                s += &csv_line(&[
                    m.to_string(),
                    v.numer().to_string(),
                    v.denom().to_string(),
                    real(to_f64(v)),
                ]);
            }
            s
        }
        Format::Json => {
            let rows: Vec<_> = rows
                .iter()
                .map(|(m, v)| {
                    json!({
                        "m": m,
                        "numerator": v.numer().to_string(),
                        "denominator": v.denom().to_string(),
                        "decimal": to_f64(v),
                    })
                })
                .collect();
            to_json(&json!({ "manifest": manifest, "rows": rows }))
        }
    };
    Ok(Report {
        body,
        manifest,
        notes: vec![],
    })
}

pub fn cmd_threshold(
    k: usize,
    n: usize,
    target_pfa: f64,
    seed: u64,
    fmt: Format,
) -> CliResult<Report> {
    if !(target_pfa > 0.0 && target_pfa < 1.0) {
        return Err(CliError::Usage(format!(
            "--target-pfa must be in (0, 1), got {target_pfa}"
        )));
    }
    let fit = BetaFit::for_dimensions(k, n)?;
    let zeta = threshold_for_pfa(target_pfa, &fit)?;
    let achieved = specsense::pfa(zeta, &fit)?;
    let manifest = RunManifest::new("threshold", seed)
        .with("K", k)
        .with("N", n)
        .with("target_pfa", target_pfa);
    let body = match fmt {
        Format::Csv => {
            "K,N,target_pfa,zeta,pfa_achieved\n".to_string()
                + &csv_line(&[
                    k.to_string(),
                    n.to_string(),
                    real(target_pfa),
                    real(zeta),
                    real(achieved),
                ])
        }
        Format::Json => to_json(&json!({
            "manifest": manifest,
            "K": k,
            "N": n,
            "target_pfa": target_pfa,
            "zeta": zeta,
            "pfa_achieved": achieved,
            "alpha": fit.alpha,
            "beta": fit.beta,
            "M1": fit.m1,
            "M2": fit.m2,
        })),
    };
    Ok(Report {
        body,
        manifest,
        notes: vec![],
    })
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_pfa_curve(
    k: usize,
    n: usize,
    zeta_lo: f64,
    zeta_hi: f64,
    points: usize,
    trials: Option<u64>,
    seed: u64,
    threads: Option<usize>,
    fmt: Format,
) -> CliResult<Report> {
    let rng = RngStream::new(seed, 0);
    let rows = with_threads(threads, || {
        MonteCarlo::new(Execution::Parallel).pfa_curve(k, n, zeta_lo, zeta_hi, points, trials, &rng)
    })??;
    let mut manifest = RunManifest::new("pfa-curve", seed)
        .with("K", k)
        .with("N", n)
        .with("zeta_lo", zeta_lo)
        .with("zeta_hi", zeta_hi)
        .with("points", points)
        .with("trials", trials);
    let mut notes = vec![];
    let average = trials.map(|_| average_abs_error(&rows));
    if let Some(avg) = average {
        manifest.set("average_abs_error", avg);
        notes.push(format!(
            "average |analytic - empirical| P_fa: {}",
            real(avg)
        ));
    }
    let body = match fmt {
        Format::Csv => {
            let mut s = String::from(if trials.is_some() {
                "zeta,pfa_analytic,pfa_empirical,stderr\n"
            } else {
                "zeta,pfa_analytic\n"
            });
            for r in &rows {
                let mut fields = vec![real(r.zeta), real(r.pfa_analytic)];
                if let Some(e) = r.empirical {
                    fields.push(real(e.value));
                    fields.push(real(e.stderr));
                }
                s += &csv_line(&fields);
            }
            s
        }
        Format::Json => to_json(&json!({
            "manifest": manifest,
            "rows": rows,
            "average_abs_error": average,
        })),
    };
    Ok(Report {
        body,
        manifest,
        notes,
    })
}

/// ROC files keyed by file name, plus the shared manifest.
#[derive(Debug, Clone)]
pub struct RocReport {
    pub files: Vec<(String, String)>,
    pub manifest: RunManifest,
}

pub fn cmd_roc(
    config: RocConfig,
    detectors: Option<Vec<DetectorKind>>,
    pfa_grid: Option<Vec<f64>>,
    seed: Option<u64>,
    trials: Option<u64>,
    threads: Option<usize>,
    fmt: Format,
) -> CliResult<RocReport> {
    let mut scenario = config.scenario;
    if let Some(seed) = seed {
        scenario.seed = seed;
    }
    if let Some(trials) = trials {
        scenario.trials = trials;
    }
    scenario.validate()?;
    let kinds = detectors.or(config.detectors).unwrap_or_else(|| {
        vec![
            DetectorKind::John,
            DetectorKind::SphericalTest,
            DetectorKind::ScaledLargestEigenvalue,
        ]
    });
    if kinds.is_empty() {
        return Err(CliError::Usage("no detectors selected".into()));
    }
    if let Some(dup) = kinds
        .iter()
        .enumerate()
        .find(|(i, k)| kinds[..*i].contains(k))
    {
        return Err(CliError::Usage(format!(
            "detector `{}` listed twice",
            dup.1
        )));
    }
    let grid = pfa_grid
        .or(config.pfa_grid)
        .unwrap_or_else(|| DEFAULT_PFA_GRID.to_vec());
    let rng = RngStream::new(scenario.seed, 0);
    let curves = with_threads(threads, || {
        MonteCarlo::new(Execution::Parallel).roc_curves(&kinds, &scenario, &grid, &rng)
    })??;

    let mut manifest = RunManifest::new("roc", scenario.seed)
        .with("scenario", &scenario)
        .with("snrs_linear", scenario.snrs_linear())
        .with("detectors", &kinds)
        .with("pfa_grid", &grid);
    if scenario.sigma_spectrum.is_none() && scenario.p() > 0 {
        let channels: Vec<Vec<[f64; 2]>> = scenario
            .channel_realization()?
            .iter()
            .map(|h| h.iter().map(|z| [z.re, z.im]).collect())
            .collect();
        manifest.set("channels", channels);
    }

    let files = curves
        .iter()
        .map(|curve| {
            let name = curve.detector.name();
            match fmt {
                Format::Csv => {
                    let mut s =
                        String::from("pfa_target,threshold,pfa_empirical,pd_empirical,pd_stderr\n");
                    for p in &curve.points {
                        s += &csv_line(&[
                            real(p.pfa_target),
                            real(p.threshold),
                            real(p.pfa.value),
                            real(p.pd.value),
                            real(p.pd.stderr),
                        ]);
                    }
                    (format!("roc_{name}.csv"), s)
                }
                Format::Json => (format!("roc_{name}.json"), to_json(curve)),
            }
        })
        .collect();
    Ok(RocReport { files, manifest })
}

fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("output serializes");
    s.push('\n');
    s
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// `out.csv` -> `out.csv.manifest.json`
pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

fn emit(report: Report, output: Option<&Path>) -> CliResult<()> {
    for note in &report.notes {
        eprintln!("{note}");
    }
    match output {
        Some(path) => {
            write_file(path, &report.body)?;
            write_file(&manifest_path(path), &to_json(&report.manifest))
        }
        None => io::stdout()
            .write_all(report.body.as_bytes())
            .map_err(|source| CliError::Io {
                path: "<stdout>".into(),
                source,
            }),
    }
}

pub fn run(cli: Cli) -> CliResult<()> {
    let g = cli.global;
    match cli.command {
        Command::Moments { k, n, m_max } => emit(
            cmd_moments(k, n, m_max, resolve_seed(g.seed)?, g.format)?,
            g.output.as_deref(),
        ),
        Command::Threshold { k, n, target_pfa } => emit(
            cmd_threshold(k, n, target_pfa, resolve_seed(g.seed)?, g.format)?,
            g.output.as_deref(),
        ),
        Command::PfaCurve {
            k,
            n,
            zeta_lo,
            zeta_hi,
            points,
            simulate,
        } => {
            let trials = simulate.then(|| g.trials.unwrap_or(DEFAULT_SIM_TRIALS));
            let report = cmd_pfa_curve(
                k,
                n,
                zeta_lo,
                zeta_hi,
                points,
                trials,
                resolve_seed(g.seed)?,
                g.threads,
                g.format,
            )?;
            emit(report, g.output.as_deref())
        }
        Command::Roc {
            config,
            detectors,
            pfa_grid,
        } => {
            let shown = config.display().to_string();
            let text = fs::read_to_string(&config).map_err(|e| CliError::Config {
                path: shown.clone(),
                message: e.to_string(),
            })?;
            let parsed = parse_roc_config(&text, &shown)?;
            let report = cmd_roc(
                parsed, detectors, pfa_grid, g.seed, g.trials, g.threads, g.format,
            )?;
            let dir = g.output.unwrap_or_else(|| PathBuf::from("."));
            fs::create_dir_all(&dir).map_err(|source| CliError::Io {
                path: dir.display().to_string(),
                source,
            })?;
            for (name, contents) in &report.files {
                write_file(&dir.join(name), contents)?;
            }
            write_file(&dir.join("manifest.json"), &to_json(&report.manifest))
        }
    }
}
