//! `svv`: run configured or preset experiments and write their artifacts.
//!
//! Exit status: 0 on success, 2 for invalid input, 3 if a run blew up,
//! 1 for anything else (I/O and the like). `SVV_OUTPUT_ROOT` replaces the
//! default output root `output/` and prefixes relative `output_dir`s.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use svv_core::config::{self, ConfigError};
use svv_core::experiments::{self, ExperimentError, Preset, PresetResult, RunOutcome};

const OUTPUT_ROOT_VAR: &str = "SVV_OUTPUT_ROOT";

#[derive(Parser)]
#[command(
    name = "svv",
    version,
    about = "Spectral vanishing viscosity solver for fractional Burgers equations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config file.
    Run {
        config: PathBuf,
        /// Override the config's output_dir.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a named preset: fig1, fig2, rate, contraction or cgmy.
    Preset {
        name: String,
        /// Index λ; fig1 and fig2 sweep 1.6, 1.1, 0.6, 0.1 when omitted.
        #[arg(long)]
        lambda: Option<f64>,
        /// Number of modes N (default 256).
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// CGMY parameters (cgmy preset only).
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long, default_value_t = 2.0)]
        g: f64,
        #[arg(long, default_value_t = 3.0)]
        m: f64,
        #[arg(long, default_value_t = 0.8)]
        y: f64,
    },
    /// Convergence study against an N = 1024 reference.
    Rate {
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Failure carrying the exit status it should produce.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        let code = match error.downcast_ref::<ExperimentError>() {
            Some(e) if e.is_validation() => 2,
            _ if error
                .downcast_ref::<ConfigError>()
                .is_some_and(|e| !matches!(e, ConfigError::Io { .. })) =>
            {
                2
            }
            _ => 1,
        };
        Self { code, error }
    }
}

fn output_root() -> PathBuf {
    std::env::var_os(OUTPUT_ROOT_VAR).map_or_else(|| PathBuf::from("output"), PathBuf::from)
}

fn resolve(dir: &Path) -> PathBuf {
    match std::env::var_os(OUTPUT_ROOT_VAR) {
        Some(root) if dir.is_relative() => PathBuf::from(root).join(dir),
        _ => dir.to_path_buf(),
    }
}

fn report(outcome: &RunOutcome) {
    let m = &outcome.manifest;
    println!(
        "{}: N={} dt={:.3e} steps={} eps_N={:.4} m_N={} tv(T)={:.4} oscillation={} blow_up={}",
        m.config.output_dir.display(),
        m.config.n_modes,
        m.derived.dt,
        m.derived.steps,
        m.derived.eps_n,
        m.derived.m_n,
        m.outcome.final_tv,
        m.outcome.oscillation_flag,
        m.outcome
            .blow_up
            .map_or("no".to_string(), |t| format!("t={t}")),
    );
}

fn finish(results: &[PresetResult]) -> Result<(), Failure> {
    let blown: Vec<_> = results
        .iter()
        .flat_map(|r| r.runs())
        .filter(|r| r.blew_up())
        .collect();
    if blown.is_empty() {
        return Ok(());
    }
    let dirs: Vec<String> = blown
        .iter()
        .map(|r| r.manifest.config.output_dir.display().to_string())
        .collect();
    Err(Failure {
        code: 3,
        error: anyhow::anyhow!("solver blew up in {}", dirs.join(", ")),
    })
}

fn run_preset(preset: Preset, n: Option<usize>, out: &Path) -> Result<PresetResult, Failure> {
    log::info!("preset {} -> {}", preset.name(), out.display());
    let result = experiments::run_preset(preset, n, out)
        .map_err(anyhow::Error::from)
        .with_context(|| format!("preset {}", preset.name()))?;
    for run in result.runs() {
        report(run);
    }
    match &result {
        PresetResult::Rate { report, .. } => {
            println!("n,eps_n,l1_error");
            for row in &report.rows {
                println!("{},{:.6e},{:.6e}", row.n, row.eps_n, row.l1_error);
            }
            println!(
                "slope vs eps_N = {:.4}, vs 1/N = {:.4}, strictly decreasing = {}",
                report.slope_eps, report.slope_inv_n, report.strictly_decreasing
            );
        }
        PresetResult::Contraction { study, .. } => println!(
            "L1 contraction at lambda={}: max violation {:.3e}, max step growth {:.3e}, holds = {}",
            study.lambda, study.report.max_violation, study.report.max_step_growth, study.report.holds
        ),
        PresetResult::Cgmy { study, .. } => println!(
            "remainder growth: fitted C_n={:.5} (xi<={}), max ratio beyond={:.5}, holds={}; a priori C_n={:.5}, holds={}",
            study.growth.c_n,
            study.growth.fit_max,
            study.growth.max_ratio_beyond,
            study.growth.holds,
            study.growth.analytic_c_n,
            study.growth.analytic_holds
        ),
        PresetResult::Runs(_) => {}
    }
    Ok(result)
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run { config, out } => {
            let mut cfg = config::parse_config_file(&config)
                .map_err(anyhow::Error::from)
                .with_context(|| format!("config {}", config.display()))?;
            cfg.output_dir = resolve(&out.unwrap_or(cfg.output_dir));
            let outcome = experiments::run_config(&cfg)
                .map_err(anyhow::Error::from)
                .with_context(|| format!("run {}", config.display()))?;
            report(&outcome);
            if outcome.blew_up() {
                return Err(Failure {
                    code: 3,
                    error: anyhow::anyhow!(
                        "solver blew up at t = {}",
                        outcome.manifest.outcome.blow_up.unwrap_or(f64::NAN)
                    ),
                });
            }
            Ok(())
        }
        Command::Preset {
            name,
            lambda,
            n,
            out,
            c,
            g,
            m,
            y,
        } => {
            let out = out.map_or_else(|| output_root().join(&name), |o| resolve(&o));
            let sweep = lambda.is_none() && matches!(name.as_str(), "fig1" | "fig2");
            let lambdas: Vec<Option<f64>> = if sweep {
                experiments::FIGURE_LAMBDAS
                    .iter()
                    .copied()
                    .map(Some)
                    .collect()
            } else {
                vec![lambda]
            };
            let mut results = Vec::new();
            for l in lambdas {
                let preset =
                    Preset::parse(&name, l, Some([c, g, m, y])).map_err(anyhow::Error::from)?;
                results.push(run_preset(preset, n, &out)?);
            }
            finish(&results)
        }
        Command::Rate { lambda, out } => {
            let result = run_preset(Preset::Rate { lambda }, None, &resolve(&out))?;
            finish(&[result])
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure { code, error }) => {
            eprintln!("error: {error:#}");
            ExitCode::from(code)
        }
    }
}
