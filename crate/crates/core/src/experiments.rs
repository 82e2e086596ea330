//! Running configured experiments and writing their artifacts: solution
//! CSVs, diagnostics JSON-lines and a manifest with every derived quantity.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::config::{ConfigError, ExperimentConfig, InitialCondition, MeasureConfig};
use crate::diagnostics::{self, ContractionReport, DiagnosticsError, GIBBS_FACTOR};
use crate::fourier::{self, FourierError, SpectralState};
use crate::integrator::{self, SolveError, SolverError, SolverSetup, StepControl, Trajectory};
use crate::levy::{self, GrowthReport, LevyError, LevySymbol};
use crate::svv::{self, SvvError, SvvParams, ViscosityMode};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Levy(#[from] LevyError),
    #[error(transparent)]
    Svv(#[from] SvvError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
    #[error(transparent)]
    Fourier(#[from] FourierError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("serialising manifest: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unknown preset `{0}` (expected fig1, fig2, rate, contraction or cgmy)")]
    UnknownPreset(String),
}

impl ExperimentError {
    /// Whether the error comes from bad input rather than the run itself.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Self::Config(e) if !matches!(e, ConfigError::Io { .. })
        ) || matches!(
            self,
            Self::Levy(_)
                | Self::Svv(_)
                | Self::UnknownPreset(_)
                | Self::Solver(SolverError::InvalidSetup(_))
        )
    }
}

pub type Result<T> = std::result::Result<T, ExperimentError>;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `x,u` rows on the `M`-point grid with 17 significant digits.
pub fn write_solution(state: &SpectralState, oversample: usize, out: impl Write) -> Result<()> {
    let values = fourier::evaluate_physical(state, oversample)?;
    let mut out = BufWriter::new(out);
    let io = |e| ExperimentError::Io {
        path: PathBuf::from("<solution>"),
        source: e,
    };
    out.write_all(b"x,u\n").map_err(io)?;
    for (x, u) in fourier::grid(oversample).iter().zip(&values) {
        writeln!(out, "{x:.16e},{u:.16e}").map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn export_solution(state: &SpectralState, oversample: usize, path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    write_solution(state, oversample, file).map_err(|e| match e {
        ExperimentError::Io { source, .. } => ExperimentError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => other,
    })
}

/// A config turned into solver inputs.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub initial: SpectralState,
    pub setup: SolverSetup,
}

pub fn prepare(config: &ExperimentConfig) -> Result<Prepared> {
    config.validate()?;
    let n = config.n_modes;
    let symbol = match config.measure_spec() {
        Some(spec) => levy::build_symbol_table(&spec, n)?,
        None => LevySymbol::none(n),
    };
    let svv = svv::svv_params(n, config.theta, config.c_eps, config.c_m, config.viscosity)?;
    let mut setup = SolverSetup::new(symbol, svv, config.t_end);
    setup.flux = config.flux;
    setup.step = config.step;
    setup.snapshot_times = config.snapshots.clone();
    setup.diagnostics_stride = config.diagnostics_stride;
    setup.oversample = config.oversample;
    setup.sobolev_order = config.sobolev_order();
    setup.validate()?;
    Ok(Prepared {
        initial: config.initial.state(n)?,
        setup,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelSummary {
    pub m_n: usize,
    pub len: usize,
    /// `Q̂_p` at `p = m_N`, `m_N + 1` and `N`.
    pub at_m_n: f64,
    pub at_m_n_plus_1: Option<f64>,
    pub at_n: f64,
    pub sum: f64,
}

impl KernelSummary {
    fn new(svv: &SvvParams) -> Self {
        let q = &svv.q_hat;
        Self {
            m_n: svv.m_n,
            len: q.len(),
            at_m_n: q[svv.m_n],
            at_m_n_plus_1: q.get(svv.m_n + 1).copied(),
            at_n: q[svv.n_modes],
            sum: q.iter().sum(),
        }
    }
}

/// Quantities derived from the config; enough to reconstruct the run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Derived {
    pub eps_n: f64,
    pub m_n: usize,
    pub effective_epsilon: f64,
    /// `ε_N m_N² ln N`.
    pub monitored_product: f64,
    /// `ε_N · N`, reported against the lower bound the theory asks for.
    pub eps_n_times_n: f64,
    pub q_hat: KernelSummary,
    pub dt: f64,
    pub dt_rule: String,
    pub steps: usize,
    pub symbol_checksum: String,
    pub symbol_max_abs: f64,
    pub symbol_symmetric: bool,
    /// Constant `c` in `π_λ = c|z|^{-1-λ}dz`, if a measure is present.
    pub measure_constant: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outcome {
    pub blow_up: Option<f64>,
    pub oscillation_flag: bool,
    pub gibbs_factor: f64,
    /// Total variation at `T` of this run and of the SVV baseline it is compared with.
    pub final_tv: f64,
    pub baseline_tv: f64,
    pub initial_tv: f64,
    pub mean_drift: f64,
    pub max_energy_increase: Option<f64>,
    pub initial_linf: f64,
    pub max_snapshot_linf: f64,
    pub snapshot_times: Vec<f64>,
    pub files: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub version: &'static str,
    pub config: ExperimentConfig,
    pub derived: Derived,
    pub outcome: Outcome,
}

/// A finished (or blown-up) run with its manifest.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub trajectory: Trajectory,
    pub symbol: LevySymbol,
    pub manifest: Manifest,
}

impl RunOutcome {
    pub fn blew_up(&self) -> bool {
        self.manifest.outcome.blow_up.is_some()
    }
}

fn integrate(prepared: &Prepared) -> Result<(Trajectory, Option<f64>)> {
    match integrator::solve(&prepared.initial, &prepared.setup) {
        Ok(t) => Ok((t, None)),
        Err(SolveError::BlowUp { time, partial }) => Ok((*partial, Some(time))),
        Err(SolveError::Solver(e)) => Err(e.into()),
    }
}

/// Runs a config without touching the file system. Runs without SVV are
/// compared against an SVV run of the same config for the Gibbs flag.
pub fn run(config: &ExperimentConfig) -> Result<RunOutcome> {
    let prepared = prepare(config)?;
    let (trajectory, blow_up) = integrate(&prepared)?;
    let baseline = if config.viscosity == ViscosityMode::Svv {
        None
    } else {
        let mut svv_run = prepared.clone();
        svv_run.setup.svv = svv::svv_params(
            config.n_modes,
            config.theta,
            config.c_eps,
            config.c_m,
            ViscosityMode::Svv,
        )?;
        Some(integrate(&svv_run)?.0)
    };
    let baseline_final = baseline
        .as_ref()
        .map_or(&trajectory.final_state, |t| &t.final_state)
        .clone();
    finish(config, prepared, trajectory, blow_up, &baseline_final)
}

fn finish(
    config: &ExperimentConfig,
    prepared: Prepared,
    trajectory: Trajectory,
    blow_up: Option<f64>,
    baseline_final: &SpectralState,
) -> Result<RunOutcome> {
    let m = config.oversample;
    let baseline_tv = diagnostics::bv_seminorm(baseline_final, m)?;
    let final_tv = diagnostics::bv_seminorm(&trajectory.final_state, m)?;
    let oscillation_flag = blow_up.is_some()
        || (baseline_tv > 0.0
            && diagnostics::gibbs_indicator(
                &trajectory.final_state,
                baseline_tv,
                m,
                GIBBS_FACTOR,
            )?);
    let mut trajectory = trajectory;
    trajectory.record.oscillation_flag = oscillation_flag;

    let svv = &prepared.setup.svv;
    let symbol = &prepared.setup.symbol;
    let dt_rule = match config.step {
        StepControl::Dt(_) => "fixed".to_string(),
        StepControl::Cfl(cfl) => format!("stable_dt at t = 0 with cfl = {cfl}"),
    };
    let linf = |s: &SpectralState| diagnostics::norms(s, m).map(|n| n.linf);
    let max_snapshot_linf = trajectory
        .snapshots
        .iter()
        .map(linf)
        .collect::<std::result::Result<Vec<_>, _>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION"),
        config: config.clone(),
        derived: Derived {
            eps_n: svv.eps_n,
            m_n: svv.m_n,
            effective_epsilon: svv.effective_epsilon(),
            monitored_product: svv.monitored_product(),
            eps_n_times_n: svv.eps_n * svv.n_modes as f64,
            q_hat: KernelSummary::new(svv),
            dt: trajectory.dt,
            dt_rule,
            steps: trajectory.steps,
            symbol_checksum: format!("{:016x}", symbol.checksum()),
            symbol_max_abs: symbol.max_abs(),
            symbol_symmetric: symbol.is_symmetric(),
            measure_constant: config
                .measure_spec()
                .map(|s| s.base_constant())
                .transpose()?,
        },
        outcome: Outcome {
            blow_up,
            oscillation_flag,
            gibbs_factor: GIBBS_FACTOR,
            final_tv,
            baseline_tv,
            initial_tv: diagnostics::bv_seminorm(&prepared.initial, m)?,
            mean_drift: trajectory.mean_drift(),
            max_energy_increase: (trajectory.steps > 0).then(|| trajectory.max_energy_increase()),
            initial_linf: linf(&prepared.initial)?,
            max_snapshot_linf,
            snapshot_times: trajectory.snapshots.iter().map(|s| s.time()).collect(),
            files: Vec::new(),
        },
    };
    Ok(RunOutcome {
        trajectory,
        symbol: prepared.setup.symbol,
        manifest,
    })
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

fn write_json(value: &impl Serialize, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

/// Writes `solution.csv` (final state), `snapshot_NN.csv`, `diagnostics.jsonl`,
/// `symbol.csv` and `manifest.json` into `dir`.
pub fn write_artifacts(outcome: &mut RunOutcome, dir: &Path) -> Result<()> {
    create_dir(dir)?;
    let m = outcome.manifest.config.oversample;
    let mut files = vec!["solution.csv".to_string()];
    export_solution(
        &outcome.trajectory.final_state,
        m,
        &dir.join("solution.csv"),
    )?;
    for (k, snap) in outcome.trajectory.snapshots.iter().enumerate() {
        let name = format!("snapshot_{k:02}.csv");
        export_solution(snap, m, &dir.join(&name))?;
        files.push(name);
    }
    let diag = dir.join("diagnostics.jsonl");
    let file = fs::File::create(&diag).map_err(io_err(&diag))?;
    let mut w = BufWriter::new(file);
    outcome.trajectory.record.write_jsonl(&mut w)?;
    w.flush().map_err(io_err(&diag))?;
    files.push("diagnostics.jsonl".into());
    let sym = dir.join("symbol.csv");
    let file = fs::File::create(&sym).map_err(io_err(&sym))?;
    let mut w = BufWriter::new(file);
    outcome
        .symbol
        .write_csv(&mut w)
        .and_then(|_| w.flush())
        .map_err(io_err(&sym))?;
    files.push("symbol.csv".into());
    files.push("manifest.json".into());
    outcome.manifest.outcome.files = files;
    write_json(&outcome.manifest, &dir.join("manifest.json"))
}

/// Runs a config and writes its artifacts into `config.output_dir`.
pub fn run_config(config: &ExperimentConfig) -> Result<RunOutcome> {
    let mut outcome = run(config)?;
    write_artifacts(&mut outcome, &config.output_dir)?;
    Ok(outcome)
}

/// Index values swept by the `fig1` and `fig2` presets.
pub const FIGURE_LAMBDAS: [f64; 4] = [1.6, 1.1, 0.6, 0.1];
/// Coarse resolutions of the convergence study and its reference.
pub const RATE_SIZES: [usize; 4] = [32, 64, 128, 256];
pub const RATE_REFERENCE: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Preset {
    /// SVV run, `N = 256`, `T = 0.5`, square wave.
    Fig1 {
        lambda: f64,
    },
    /// As `Fig1` without viscosity.
    Fig2 {
        lambda: f64,
    },
    Rate {
        lambda: f64,
    },
    /// `u₀` = square wave against `v₀ = 0.9 u₀`.
    Contraction {
        lambda: f64,
    },
    Cgmy {
        c: f64,
        g: f64,
        m: f64,
        y: f64,
    },
}

impl Preset {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Fig1 { .. } => "fig1",
            Self::Fig2 { .. } => "fig2",
            Self::Rate { .. } => "rate",
            Self::Contraction { .. } => "contraction",
            Self::Cgmy { .. } => "cgmy",
        }
    }

    /// Builds a preset from its name; `lambda` falls back to 0.6 for the
    /// figures and rate study and to 1.1 for the contraction study.
    pub fn parse(name: &str, lambda: Option<f64>, cgmy: Option<[f64; 4]>) -> Result<Self> {
        Ok(match name {
            "fig1" => Self::Fig1 {
                lambda: lambda.unwrap_or(0.6),
            },
            "fig2" => Self::Fig2 {
                lambda: lambda.unwrap_or(0.6),
            },
            "rate" => Self::Rate {
                lambda: lambda.unwrap_or(0.6),
            },
            "contraction" => Self::Contraction {
                lambda: lambda.unwrap_or(1.1),
            },
            "cgmy" => {
                let [c, g, m, y] = cgmy.unwrap_or([1.0, 2.0, 3.0, 0.8]);
                Self::Cgmy { c, g, m, y }
            }
            other => return Err(ExperimentError::UnknownPreset(other.to_string())),
        })
    }
}

/// The config behind a single-run preset at resolution `n`.
pub fn preset_config(preset: Preset, n_modes: usize, out: &Path) -> ExperimentConfig {
    let t_end = 0.5;
    let (measure, viscosity) = match preset {
        Preset::Fig1 { lambda } | Preset::Rate { lambda } | Preset::Contraction { lambda } => (
            MeasureConfig::FractionalLaplacian { lambda },
            ViscosityMode::Svv,
        ),
        Preset::Fig2 { lambda } => (
            MeasureConfig::FractionalLaplacian { lambda },
            ViscosityMode::None,
        ),
        Preset::Cgmy { c, g, m, y } => (MeasureConfig::Cgmy { c, g, m, y }, ViscosityMode::Svv),
    };
    let mut config = ExperimentConfig::new(n_modes, Some(measure), t_end);
    config.viscosity = viscosity;
    config.output_dir = out.to_path_buf();
    if let Preset::Contraction { .. } = preset {
        config.snapshots = (0..=10).map(|k| t_end * k as f64 / 10.0).collect();
    }
    config
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateRow {
    pub n: usize,
    pub eps_n: f64,
    pub l1_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport {
    pub lambda: f64,
    pub reference_n: usize,
    pub rows: Vec<RateRow>,
    /// Slope of `log error` against `log ε_N` and against `log(1/N)`.
    pub slope_eps: f64,
    pub slope_inv_n: f64,
    pub strictly_decreasing: bool,
}

/// L¹ error of each coarse final state against the reference truncated to
/// the coarse modes.
pub fn rate_report(
    lambda: f64,
    coarse: &[RunOutcome],
    reference: &SpectralState,
) -> Result<RateReport> {
    let rows = coarse
        .iter()
        .map(|o| {
            let state = &o.trajectory.final_state;
            let n = state.n_modes();
            let diff = state.difference(&reference.resized(n)?)?;
            Ok(RateRow {
                n,
                eps_n: o.manifest.derived.eps_n,
                l1_error: diagnostics::norms(&diff, o.manifest.config.oversample)?.l1,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let slope_eps = diagnostics::rate_fit(
        &rows
            .iter()
            .map(|r| (r.eps_n, r.l1_error))
            .collect::<Vec<_>>(),
    )?;
    let slope_inv_n = diagnostics::rate_fit(
        &rows
            .iter()
            .map(|r| (1.0 / r.n as f64, r.l1_error))
            .collect::<Vec<_>>(),
    )?;
    Ok(RateReport {
        lambda,
        reference_n: reference.n_modes(),
        strictly_decreasing: rows.windows(2).all(|w| w[1].l1_error < w[0].l1_error),
        rows,
        slope_eps,
        slope_inv_n,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ContractionStudy {
    pub lambda: f64,
    pub report: ContractionReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct CgmyStudy {
    pub growth: GrowthReport,
    pub blow_up: Option<f64>,
}

/// Everything a preset produced, for callers that want more than files.
#[derive(Debug, Clone)]
pub enum PresetResult {
    Runs(Vec<RunOutcome>),
    Rate {
        runs: Vec<RunOutcome>,
        report: RateReport,
    },
    Contraction {
        runs: Vec<RunOutcome>,
        study: ContractionStudy,
    },
    Cgmy {
        run: Box<RunOutcome>,
        study: CgmyStudy,
    },
}

impl PresetResult {
    pub fn runs(&self) -> Vec<&RunOutcome> {
        match self {
            Self::Runs(r) | Self::Rate { runs: r, .. } | Self::Contraction { runs: r, .. } => {
                r.iter().collect()
            }
            Self::Cgmy { run, .. } => vec![run],
        }
    }

    pub fn any_blow_up(&self) -> bool {
        self.runs().iter().any(|r| r.blew_up())
    }
}

fn lambda_dir(out: &Path, lambda: f64) -> PathBuf {
    out.join(format!("lambda_{lambda}"))
}

/// Runs a preset with `N` (default 256) and writes everything below `out`.
pub fn run_preset(preset: Preset, n_modes: Option<usize>, out: &Path) -> Result<PresetResult> {
    let n = n_modes.unwrap_or(256);
    create_dir(out)?;
    match preset {
        Preset::Fig1 { lambda } | Preset::Fig2 { lambda } => {
            let config = preset_config(preset, n, &lambda_dir(out, lambda));
            Ok(PresetResult::Runs(vec![run_config(&config)?]))
        }
        Preset::Rate { lambda } => {
            let mut sizes: Vec<usize> = RATE_SIZES.to_vec();
            sizes.push(RATE_REFERENCE);
            let mut runs = sizes
                .par_iter()
                .map(|&k| run_config(&preset_config(preset, k, &out.join(format!("n_{k}")))))
                .collect::<Result<Vec<_>>>()?;
            let reference = runs.pop().expect("reference run");
            let report = rate_report(lambda, &runs, &reference.trajectory.final_state)?;
            let table = out.join("rate.csv");
            let mut text = String::from("n,eps_n,l1_error\n");
            for r in &report.rows {
                text.push_str(&format!("{},{:.16e},{:.16e}\n", r.n, r.eps_n, r.l1_error));
            }
            fs::write(&table, text).map_err(io_err(&table))?;
            write_json(&report, &out.join("rate.json"))?;
            runs.push(reference);
            Ok(PresetResult::Rate { runs, report })
        }
        Preset::Contraction { lambda } => {
            let u = preset_config(preset, n, &out.join("u"));
            let mut v = preset_config(preset, n, &out.join("v"));
            v.initial = InitialCondition::Square { amplitude: 0.9 };
            let runs = [u, v]
                .par_iter()
                .map(run_config)
                .collect::<Result<Vec<_>>>()?;
            let report = diagnostics::contraction_check(
                &runs[0].trajectory.snapshots,
                &runs[1].trajectory.snapshots,
                runs[0].manifest.config.oversample,
                1e-3,
            )?;
            let study = ContractionStudy { lambda, report };
            write_json(&study, &out.join("contraction.json"))?;
            Ok(PresetResult::Contraction { runs, study })
        }
        Preset::Cgmy { .. } => {
            let config = preset_config(preset, n, out);
            let spec = config.measure_spec().expect("cgmy preset has a measure");
            let growth = levy::remainder_growth(&spec, 8, 256)?;
            let run = run_config(&config)?;
            let study = CgmyStudy {
                growth,
                blow_up: run.manifest.outcome.blow_up,
            };
            write_json(&study, &out.join("growth.json"))?;
            Ok(PresetResult::Cgmy {
                run: Box::new(run),
                study,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solution_csv_layout() {
        let mut s = SpectralState::zeros(2).unwrap();
        s.set_coeff(0, num_complex::Complex64::new(1.5, 0.0));
        let mut buf = Vec::new();
        write_solution(&s, 8, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "x,u");
        assert_eq!(lines.len(), 9);
        assert!(lines[1..]
            .iter()
            .all(|l| l.ends_with(",1.5000000000000000e0")));
        assert!(!text.contains('\r'));
    }

    #[test]
    fn preset_names() {
        assert_eq!(
            Preset::parse("fig1", Some(1.6), None).unwrap(),
            Preset::Fig1 { lambda: 1.6 }
        );
        assert_eq!(
            Preset::parse("contraction", None, None).unwrap(),
            Preset::Contraction { lambda: 1.1 }
        );
        assert!(matches!(
            Preset::parse("fig9", None, None),
            Err(ExperimentError::UnknownPreset(_))
        ));
        let c = preset_config(Preset::Fig1 { lambda: 0.1 }, 256, Path::new("x"));
        assert_eq!((c.n_modes, c.t_end), (256, 0.5));
        assert_eq!(c.initial, InitialCondition::Square { amplitude: 1.0 });
        assert_eq!(
            c.measure,
            Some(MeasureConfig::FractionalLaplacian { lambda: 0.1 })
        );
        let f2 = preset_config(Preset::Fig2 { lambda: 0.1 }, 256, Path::new("x"));
        assert_eq!(f2.viscosity, ViscosityMode::None);
    }

    #[test]
    fn small_run_manifest() {
        let mut c = ExperimentConfig::new(
            16,
            Some(MeasureConfig::FractionalLaplacian { lambda: 1.0 }),
            0.05,
        );
        c.viscosity = ViscosityMode::None;
        let o = run(&c).unwrap();
        let d = &o.manifest.derived;
        assert_eq!(d.symbol_checksum.len(), 16);
        assert_eq!(d.effective_epsilon, 0.0);
        assert!(d.dt > 0.0 && d.steps > 0);
        assert_eq!(o.manifest.outcome.snapshot_times, vec![0.0, 0.025, 0.05]);
        assert!(o.manifest.outcome.baseline_tv > 0.0);
    }
}
