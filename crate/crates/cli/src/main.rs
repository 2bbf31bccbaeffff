//! Experiment runner: simulate modified ergodic sums, tabulate variance
//! profiles and mixture laws, probe decorrelation, and run the verification
//! suite.
//!
//! Exit codes: 0 success, 1 configuration/validation error, 2 assertion or
//! acceptance threshold breached.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use ergosum::acceptance;
use ergosum::config::{Config, DecorrelationConfig};
use ergosum::decorrelation::{covariance_decay, transfer_l1_decay};
use ergosum::limitlaw::MixtureLaw;
use ergosum::modifiers::ParameterGrid;
use ergosum::montecarlo::{empirical_charfn, run_conditioned, run_modified_sums};
use ergosum::observables::TrigPolynomial;
use ergosum::report::{
    cdf_curves_csv, charfn_rows, decay_csv, law_csv, profile_csv, samples_binary, sha256_hex,
    CharfnRow, NondegeneracyRow, OutputDir,
};
use ergosum::variance::{
    nondegeneracy_scan, variance_profile, ProfileOptions, DEFAULT_ZERO_EPSILON,
};

#[derive(Parser)]
#[command(
    name = "ergosum",
    version,
    about = "Mixture-of-Gaussian limit laws for modified ergodic sums"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Experiment configuration (JSON).
    config: PathBuf,
    /// Output directory (default: ergosum-out).
    #[arg(long, default_value = "ergosum-out")]
    out: PathBuf,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the profile grid resolution (per axis).
    #[arg(long)]
    grid: Option<usize>,
    /// Worker thread cap (0 = all cores). Overrides config and
    /// ERGOSUM_THREADS.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the Monte Carlo experiment and compare against the predicted law.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        /// Exit with code 2 when the config thresholds are breached.
        #[arg(long = "assert")]
        assert_thresholds: bool,
    },
    /// Tabulate the variance profile of the configured experiment.
    Variance {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Tabulate the predicted mixture law (CDF and characteristic function).
    Limitlaw {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Covariance or transfer-operator decay report.
    Decorrelate {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run the full verification suite (exit 2 on any failed criterion).
    Accept {
        /// Output directory for the JSON report (default: ergosum-out).
        #[arg(long, default_value = "ergosum-out")]
        out: PathBuf,
        /// Worker thread cap (0 = all cores).
        #[arg(long)]
        threads: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn configure_threads(explicit: Option<usize>, from_config: usize) -> Result<()> {
    let from_env = std::env::var("ERGOSUM_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok());
    let threads = explicit.or(from_env).unwrap_or(from_config);
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("thread pool already initialized")?;
    }
    Ok(())
}

fn load(common: &CommonArgs) -> Result<(Config, PathBuf)> {
    let mut config = Config::from_path(&common.config)
        .with_context(|| format!("loading {}", common.config.display()))?;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(grid) = common.grid {
        config.grid = grid;
    }
    let dir = common
        .config
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    Ok((config, dir))
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Simulate {
            common,
            assert_thresholds,
        } => {
            let (config, dir) = load(&common)?;
            configure_threads(common.threads, config.threads)?;
            cmd_simulate(&config, &dir, &common.out, assert_thresholds)
        }
        Command::Variance { common } => {
            let (config, dir) = load(&common)?;
            configure_threads(common.threads, config.threads)?;
            cmd_variance(&config, &dir, &common.out)
        }
        Command::Limitlaw { common } => {
            let (config, dir) = load(&common)?;
            configure_threads(common.threads, config.threads)?;
            cmd_limitlaw(&config, &dir, &common.out)
        }
        Command::Decorrelate { common } => {
            let (config, dir) = load(&common)?;
            configure_threads(common.threads, config.threads)?;
            cmd_decorrelate(&config, &dir, &common.out)
        }
        Command::Accept { out, threads } => {
            configure_threads(threads, 0)?;
            cmd_accept(&out)
        }
    }
}

fn build_profile(
    config: &Config,
    config_dir: &Path,
) -> Result<(ergosum::VarianceProfile, MixtureLaw)> {
    let system = config.build_system()?;
    let modifier = config.build_modifier(config_dir)?;
    let observable = config.build_observable()?;
    let grid = ParameterGrid::new(config.dim(), config.grid);
    let profile = variance_profile(
        &system,
        &modifier,
        &observable,
        &grid,
        &ProfileOptions::default(),
    )?;
    let law = MixtureLaw::from_profile(&profile);
    Ok((profile, law))
}

#[derive(Serialize)]
struct ProfileBlock {
    grid: usize,
    atoms: usize,
    integral: f64,
    max_sigma2: f64,
    provenance: String,
    nondegeneracy: NondegeneracyRow,
}

fn profile_block(config: &Config, profile: &ergosum::VarianceProfile) -> ProfileBlock {
    ProfileBlock {
        grid: config.grid,
        atoms: profile.len(),
        integral: profile.integral(),
        max_sigma2: profile.max_sigma2(),
        provenance: profile.provenance().as_str().to_string(),
        nondegeneracy: (&nondegeneracy_scan(profile, DEFAULT_ZERO_EPSILON)).into(),
    }
}

#[derive(Serialize)]
struct NSummary {
    n: usize,
    samples: usize,
    ks_to_predicted: f64,
    second_moment: f64,
    second_moment_se: f64,
    predicted_second_moment: f64,
    symmetry_defect_max: f64,
    charfn: Vec<CharfnRow>,
}

#[derive(Serialize)]
struct SimulateSummary {
    config_sha256: String,
    seed: u64,
    k_start: usize,
    system: String,
    modifier: String,
    conditioned: bool,
    profile: ProfileBlock,
    results: Vec<NSummary>,
}

fn cmd_simulate(
    config: &Config,
    config_dir: &Path,
    out: &Path,
    assert_thresholds: bool,
) -> Result<ExitCode> {
    let start = Instant::now();
    let spec = config.build_spec(config_dir)?;
    let (profile, law) = build_profile(config, config_dir)?;
    let conditioning = config.build_conditioning()?;
    let runs = match &conditioning {
        Some(cond) => run_conditioned(&spec, cond)?,
        None => run_modified_sums(&spec)?,
    };

    let mut outdir = OutputDir::create(out.join("simulate"))?;
    let mut results = Vec::new();
    for emp in &runs {
        let ks = emp.ks_distance(|t| law.cdf(t));
        let (m2, m2_se) = emp.second_moment();
        let charfn = charfn_rows(&empirical_charfn(emp, &config.t_values), &law);
        let symmetry = config
            .t_values
            .iter()
            .map(|&t| emp.symmetry_defect(t))
            .fold(0.0, f64::max);
        outdir.write_bytes(
            &format!("curves_n{}.csv", emp.meta.n),
            &cdf_curves_csv(emp, &law, 512),
        )?;
        if config.output.raw_samples {
            outdir.write_bytes(&format!("samples_n{}.f64le", emp.meta.n), &samples_binary(emp))?;
        }
        results.push(NSummary {
            n: emp.meta.n,
            samples: emp.meta.samples,
            ks_to_predicted: ks,
            second_moment: m2,
            second_moment_se: m2_se,
            predicted_second_moment: law.second_moment(),
            symmetry_defect_max: symmetry,
            charfn,
        });
    }
    let summary = SimulateSummary {
        config_sha256: sha256_hex(&config.canonical_bytes()),
        seed: config.seed,
        k_start: config.k_start,
        system: spec.system.label(),
        modifier: spec.modifier.label(),
        conditioned: conditioning.is_some(),
        profile: profile_block(config, &profile),
        results,
    };
    outdir.write_json("summary.json", &summary)?;
    outdir.write_bytes("profile.csv", &profile_csv(&profile))?;
    let manifest = outdir.finish(
        summary.config_sha256.clone(),
        config.seed,
        start.elapsed().as_secs_f64(),
    )?;
    println!(
        "simulate: {} runs, {} outputs -> {}",
        summary.results.len(),
        manifest.outputs.len(),
        out.join("simulate").display()
    );
    for r in &summary.results {
        println!(
            "  n={:>6}  KS={:.4}  E[S^2]={:.4} (predicted {:.4})",
            r.n, r.ks_to_predicted, r.second_moment, r.predicted_second_moment
        );
    }

    if assert_thresholds {
        if let Some(thresholds) = &config.thresholds {
            let last = summary
                .results
                .last()
                .ok_or_else(|| anyhow!("no results to assert on"))?;
            let mut breached = Vec::new();
            if let Some(ks_max) = thresholds.ks_max {
                if last.ks_to_predicted >= ks_max {
                    breached.push(format!("KS {:.4} >= {ks_max}", last.ks_to_predicted));
                }
            }
            if let Some(tol) = thresholds.charfn_max_err {
                let worst = last
                    .charfn
                    .iter()
                    .map(|r| (r.empirical_re - r.predicted_re).abs())
                    .fold(0.0, f64::max);
                if worst >= tol {
                    breached.push(format!("charfn error {worst:.4} >= {tol}"));
                }
            }
            if let Some(rel) = thresholds.second_moment_rel_err {
                let target = last.predicted_second_moment;
                let err = (last.second_moment - target).abs()
                    / target.abs().max(f64::MIN_POSITIVE);
                if err >= rel {
                    breached.push(format!("second moment rel err {err:.4} >= {rel}"));
                }
            }
            if !breached.is_empty() {
                eprintln!("assertion breached: {}", breached.join("; "));
                return Ok(ExitCode::from(2));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct VarianceSummary {
    config_sha256: String,
    system: String,
    modifier: String,
    profile: ProfileBlock,
}

fn cmd_variance(config: &Config, config_dir: &Path, out: &Path) -> Result<ExitCode> {
    let start = Instant::now();
    let system = config.build_system()?;
    let modifier = config.build_modifier(config_dir)?;
    let (profile, _) = build_profile(config, config_dir)?;
    let mut outdir = OutputDir::create(out.join("variance"))?;
    outdir.write_bytes("profile.csv", &profile_csv(&profile))?;
    let summary = VarianceSummary {
        config_sha256: sha256_hex(&config.canonical_bytes()),
        system: system.label(),
        modifier: modifier.label(),
        profile: profile_block(config, &profile),
    };
    outdir.write_json("summary.json", &summary)?;
    outdir.finish(
        summary.config_sha256.clone(),
        config.seed,
        start.elapsed().as_secs_f64(),
    )?;
    println!(
        "variance: {} atoms, integral {:.6} -> {}",
        profile.len(),
        profile.integral(),
        out.join("variance").display()
    );
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct LimitlawSummary {
    config_sha256: String,
    components: usize,
    second_moment: f64,
    max_sigma: f64,
    cdf_at_zero: f64,
}

fn cmd_limitlaw(config: &Config, config_dir: &Path, out: &Path) -> Result<ExitCode> {
    let start = Instant::now();
    let (profile, law) = build_profile(config, config_dir)?;
    let mut outdir = OutputDir::create(out.join("limitlaw"))?;
    let t_max = (12.0 * law.max_sigma()).max(1.0);
    outdir.write_bytes("law.csv", &law_csv(&law, t_max, 1025))?;
    outdir.write_bytes("profile.csv", &profile_csv(&profile))?;
    let summary = LimitlawSummary {
        config_sha256: sha256_hex(&config.canonical_bytes()),
        components: law.components().len(),
        second_moment: law.second_moment(),
        max_sigma: law.max_sigma(),
        cdf_at_zero: law.cdf(0.0),
    };
    outdir.write_json("summary.json", &summary)?;
    outdir.finish(
        summary.config_sha256.clone(),
        config.seed,
        start.elapsed().as_secs_f64(),
    )?;
    println!(
        "limitlaw: {} components, second moment {:.6} -> {}",
        law.components().len(),
        law.second_moment(),
        out.join("limitlaw").display()
    );
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct DecaySummary {
    config_sha256: String,
    mode: String,
    lags: usize,
    noise_floor: f64,
    fitted_rate: Option<f64>,
    fit_residual: Option<f64>,
}

fn cmd_decorrelate(config: &Config, config_dir: &Path, out: &Path) -> Result<ExitCode> {
    let start = Instant::now();
    let system = config.build_system()?;
    let observable = config.build_observable()?;
    let decorr = config.decorrelation.clone().unwrap_or(DecorrelationConfig {
        lags: 16,
        samples: 20_000,
        density: None,
    });
    let (mode, report) = match &decorr.density {
        Some(entries) => {
            let density = Config::build_density(config.dim(), entries)?;
            ("transfer", transfer_l1_decay(&density, decorr.lags)?)
        }
        None => (
            "covariance",
            covariance_decay(
                &system,
                &observable,
                &observable,
                decorr.lags,
                decorr.samples,
                config.seed,
            )?,
        ),
    };
    let mut outdir = OutputDir::create(out.join("decorrelate"))?;
    outdir.write_bytes("decay.csv", &decay_csv(&report))?;
    let summary = DecaySummary {
        config_sha256: sha256_hex(&config.canonical_bytes()),
        mode: mode.to_string(),
        lags: report.lags.len(),
        noise_floor: report.noise_floor,
        fitted_rate: report.fit.map(|f| f.rate),
        fit_residual: report.fit.map(|f| f.residual),
    };
    outdir.write_json("summary.json", &summary)?;
    outdir.finish(
        summary.config_sha256.clone(),
        config.seed,
        start.elapsed().as_secs_f64(),
    )?;
    println!(
        "decorrelate ({mode}): {} lags -> {}",
        report.lags.len(),
        out.join("decorrelate").display()
    );
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct AcceptanceReport {
    passed: usize,
    failed: usize,
    criteria: Vec<AcceptanceRow>,
}

#[derive(Serialize)]
struct AcceptanceRow {
    id: usize,
    name: String,
    passed: bool,
    detail: String,
}

fn cmd_accept(out: &Path) -> Result<ExitCode> {
    let results = acceptance::run_all();
    for r in &results {
        println!("{r}");
    }
    let report = AcceptanceReport {
        passed: results.iter().filter(|r| r.passed).count(),
        failed: results.iter().filter(|r| !r.passed).count(),
        criteria: results
            .iter()
            .map(|r| AcceptanceRow {
                id: r.id,
                name: r.name.to_string(),
                passed: r.passed,
                detail: r.detail.clone(),
            })
            .collect(),
    };
    let mut outdir = OutputDir::create(out.join("accept"))?;
    outdir.write_json("acceptance.json", &report)?;
    outdir.finish(String::new(), 0, 0.0)?;
    println!("acceptance: {} passed, {} failed", report.passed, report.failed);
    if report.failed > 0 {
        Ok(ExitCode::from(2))
    } else {
        Ok(ExitCode::SUCCESS)
    }
}
