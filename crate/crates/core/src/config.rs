//! Run configuration: a small TOML document, plus the `x,u` sample files
//! accepted as initial data.
//!
//! ```toml
//! N = 64
//! lambda = 0.6           # fractional Laplacian; or a [measure] table
//! T = 0.5
//! viscosity = "svv"      # "svv" | "full" (with epsilon) | "none"
//! initial = "square"     # or { kind = "square", amplitude = 0.9 }
//!                        # or { kind = "cosine", amplitude = 0.5 }
//!                        # or { kind = "file", path = "u0.csv" }
//! ```
//!
//! Every other key is optional; see [`ExperimentConfig`] for the defaults.

use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;
use toml::{Table, Value};

use crate::fourier::{self, FourierError, SpectralState};
use crate::integrator::{Flux, StepControl};
use crate::levy::{LevyMeasureSpec, Normalization};
use crate::svv::ViscosityMode;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("malformed config: {0}")]
    Syntax(#[from] toml::de::Error),
    #[error("unknown keys: {}", .0.join(", "))]
    UnknownKeys(Vec<String>),
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("`{field}`: expected {expected}")]
    Type {
        field: String,
        expected: &'static str,
    },
    #[error("`{field}`: {reason}")]
    Invalid { field: String, reason: String },
    #[error("sample file line {line}: {reason}")]
    Samples { line: usize, reason: String },
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Fourier(#[from] FourierError),
}

pub type Result<T> = std::result::Result<T, ConfigError>;

fn invalid(field: &str, reason: impl fmt::Display) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_string(),
        reason: reason.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeasureConfig {
    FractionalLaplacian { lambda: f64 },
    Cgmy { c: f64, g: f64, m: f64, y: f64 },
}

impl MeasureConfig {
    pub fn spec(&self, normalization: Normalization) -> LevyMeasureSpec {
        match *self {
            Self::FractionalLaplacian { lambda } => LevyMeasureSpec::fractional_laplacian(lambda),
            Self::Cgmy { c, g, m, y } => LevyMeasureSpec::cgmy(c, g, m, y),
        }
        .with_normalization(normalization)
    }

    /// Stable index (`λ` or `Y`).
    pub fn index(&self) -> f64 {
        match *self {
            Self::FractionalLaplacian { lambda } => lambda,
            Self::Cgmy { y, .. } => y,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialCondition {
    /// `amplitude · sgn(π - x)`, projected exactly.
    Square { amplitude: f64 },
    /// `amplitude · 2 cos x`, i.e. `û_{±1} = amplitude`.
    Cosine { amplitude: f64 },
    /// Samples from an `x,u` CSV file.
    File { path: PathBuf },
}

impl InitialCondition {
    pub fn state(&self, n_modes: usize) -> Result<SpectralState> {
        match self {
            Self::Square { amplitude } => {
                Ok(fourier::square_wave_coefficients(n_modes)?.scaled(*amplitude))
            }
            Self::Cosine { amplitude } => {
                let mut s = SpectralState::zeros(n_modes)?;
                s.set_coeff(1, num_complex::Complex64::new(*amplitude, 0.0));
                Ok(s)
            }
            Self::File { path } => {
                let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
                    path: path.clone(),
                    source,
                })?;
                Ok(fourier::project_sampled(&parse_samples(&text)?, n_modes)?)
            }
        }
    }
}

/// A validated run description. Defaults: `θ = 0.5`, `c_eps = c_m = 1`,
/// `cfl = 0.5`, `oversample = 4N`, snapshots `{0, T/2, T}`, SVV viscosity,
/// square-wave data, diagnostics every 50 steps, output to `output/`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub n_modes: usize,
    pub theta: f64,
    pub c_eps: f64,
    pub c_m: f64,
    pub viscosity: ViscosityMode,
    pub measure: Option<MeasureConfig>,
    pub normalization: Normalization,
    pub flux: Flux,
    pub t_end: f64,
    pub step: StepControl,
    pub initial: InitialCondition,
    pub snapshots: Vec<f64>,
    pub oversample: usize,
    pub output_dir: PathBuf,
    pub diagnostics_stride: usize,
}

impl ExperimentConfig {
    /// Defaults for everything but `N`, the measure and `T`.
    pub fn new(n_modes: usize, measure: Option<MeasureConfig>, t_end: f64) -> Self {
        Self {
            n_modes,
            theta: 0.5,
            c_eps: 1.0,
            c_m: 1.0,
            viscosity: ViscosityMode::Svv,
            measure,
            normalization: Normalization::default(),
            flux: Flux::Burgers,
            t_end,
            step: StepControl::Cfl(0.5),
            initial: InitialCondition::Square { amplitude: 1.0 },
            snapshots: vec![0.0, t_end / 2.0, t_end],
            oversample: 4 * n_modes,
            output_dir: PathBuf::from("output"),
            diagnostics_stride: 50,
        }
    }

    pub fn measure_spec(&self) -> Option<LevyMeasureSpec> {
        self.measure.map(|m| m.spec(self.normalization))
    }

    /// `H^s` order monitored by the diagnostics: `λ/2`, or `1/2` without a measure.
    pub fn sobolev_order(&self) -> f64 {
        self.measure.map_or(0.5, |m| m.index() / 2.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_modes < 2 {
            return Err(invalid("N", format!("{} must be at least 2", self.n_modes)));
        }
        let open_unit = |name: &str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(invalid(name, format!("{v} is outside (0, 1)")))
            }
        };
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(invalid(name, format!("{v} must be positive")))
            }
        };
        open_unit("theta", self.theta)?;
        positive("c_eps", self.c_eps)?;
        positive("c_m", self.c_m)?;
        if let ViscosityMode::Full { epsilon } = self.viscosity {
            if !(epsilon.is_finite() && epsilon >= 0.0) {
                return Err(invalid(
                    "epsilon",
                    format!("{epsilon} must be non-negative"),
                ));
            }
        }
        match self.measure {
            Some(MeasureConfig::FractionalLaplacian { lambda }) => {
                if !(lambda > 0.0 && lambda < 2.0) {
                    return Err(invalid("lambda", format!("{lambda} is outside (0, 2)")));
                }
            }
            Some(MeasureConfig::Cgmy { c, g, m, y }) => {
                positive("measure.c", c)?;
                positive("measure.g", g)?;
                positive("measure.m", m)?;
                if !(y > 0.0 && y < 2.0) {
                    return Err(invalid("measure.y", format!("{y} is outside (0, 2)")));
                }
            }
            None => {}
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(invalid(
                "T",
                format!("{} must be finite and non-negative", self.t_end),
            ));
        }
        match self.step {
            StepControl::Dt(dt) => positive("dt", dt)?,
            StepControl::Cfl(cfl) if !(cfl > 0.0 && cfl <= 1.0) => {
                return Err(invalid("cfl", format!("{cfl} is outside (0, 1]")));
            }
            StepControl::Cfl(_) => {}
        }
        if let InitialCondition::Cosine { amplitude } | InitialCondition::Square { amplitude } =
            self.initial
        {
            if !amplitude.is_finite() {
                return Err(invalid("initial.amplitude", "must be finite"));
            }
        }
        if self.snapshots.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(invalid("snapshots", "must be strictly increasing"));
        }
        if let Some(t) = self
            .snapshots
            .iter()
            .find(|t| !(**t >= 0.0 && **t <= self.t_end))
        {
            return Err(invalid("snapshots", format!("{t} is outside [0, T]")));
        }
        if self.oversample < 2 * self.n_modes + 1 {
            return Err(invalid(
                "oversample",
                format!(
                    "{} is below 2N+1 = {}",
                    self.oversample,
                    2 * self.n_modes + 1
                ),
            ));
        }
        if self.output_dir.as_os_str().is_empty() {
            return Err(invalid("output_dir", "must not be empty"));
        }
        Ok(())
    }
}

/// Pops keys off a table, remembering what was consumed so leftovers can
/// be reported as unknown.
struct Keys {
    table: Table,
    prefix: String,
}

impl Keys {
    fn new(table: Table, prefix: &str) -> Self {
        Self {
            table,
            prefix: prefix.to_string(),
        }
    }

    fn path(&self, key: &str) -> String {
        format!("{}{key}", self.prefix)
    }

    fn value(&mut self, key: &str) -> Option<Value> {
        self.table.remove(key)
    }

    fn f64(&mut self, key: &str) -> Result<Option<f64>> {
        match self.value(key) {
            None => Ok(None),
            Some(Value::Float(v)) => Ok(Some(v)),
            Some(Value::Integer(v)) => Ok(Some(v as f64)),
            Some(_) => Err(ConfigError::Type {
                field: self.path(key),
                expected: "a number",
            }),
        }
    }

    fn usize(&mut self, key: &str) -> Result<Option<usize>> {
        match self.value(key) {
            None => Ok(None),
            Some(Value::Integer(v)) => usize::try_from(v)
                .map(Some)
                .map_err(|_| invalid(&self.path(key), format!("{v} must be non-negative"))),
            Some(_) => Err(ConfigError::Type {
                field: self.path(key),
                expected: "an integer",
            }),
        }
    }

    fn string(&mut self, key: &str) -> Result<Option<String>> {
        match self.value(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s)),
            Some(_) => Err(ConfigError::Type {
                field: self.path(key),
                expected: "a string",
            }),
        }
    }

    fn require_f64(&mut self, key: &'static str) -> Result<f64> {
        self.f64(key)?.ok_or(ConfigError::Missing(key))
    }

    fn leftovers(self) -> Vec<String> {
        self.table
            .keys()
            .map(|k| format!("{}{k}", self.prefix))
            .collect()
    }
}

fn parse_measure(value: Value, unknown: &mut Vec<String>) -> Result<Option<MeasureConfig>> {
    let Value::Table(table) = value else {
        return Err(ConfigError::Type {
            field: "measure".into(),
            expected: "a table",
        });
    };
    let mut keys = Keys::new(table, "measure.");
    let kind = keys
        .string("kind")?
        .ok_or(ConfigError::Missing("measure.kind"))?;
    let measure = match kind.as_str() {
        "none" => None,
        "fractional_laplacian" => Some(MeasureConfig::FractionalLaplacian {
            lambda: keys.require_f64("lambda")?,
        }),
        "cgmy" => Some(MeasureConfig::Cgmy {
            c: keys.require_f64("c")?,
            g: keys.require_f64("g")?,
            m: keys.require_f64("m")?,
            y: keys.require_f64("y")?,
        }),
        other => {
            return Err(invalid(
                "measure.kind",
                format!("`{other}` is not one of none, fractional_laplacian, cgmy"),
            ))
        }
    };
    unknown.extend(keys.leftovers());
    Ok(measure)
}

fn parse_initial(
    value: Value,
    base: Option<&Path>,
    unknown: &mut Vec<String>,
) -> Result<InitialCondition> {
    let (kind, mut keys) = match value {
        Value::String(s) => (s, Keys::new(Table::new(), "initial.")),
        Value::Table(t) => {
            let mut keys = Keys::new(t, "initial.");
            let kind = keys
                .string("kind")?
                .ok_or(ConfigError::Missing("initial.kind"))?;
            (kind, keys)
        }
        _ => {
            return Err(ConfigError::Type {
                field: "initial".into(),
                expected: "a string or a table",
            })
        }
    };
    let initial = match kind.as_str() {
        "square" => InitialCondition::Square {
            amplitude: keys.f64("amplitude")?.unwrap_or(1.0),
        },
        "cosine" => InitialCondition::Cosine {
            amplitude: keys.f64("amplitude")?.unwrap_or(0.5),
        },
        "file" => {
            let path = PathBuf::from(
                keys.string("path")?
                    .ok_or(ConfigError::Missing("initial.path"))?,
            );
            let path = match base {
                Some(dir) if path.is_relative() => dir.join(path),
                _ => path,
            };
            InitialCondition::File { path }
        }
        other => {
            return Err(invalid(
                "initial",
                format!("`{other}` is not one of square, cosine, file"),
            ))
        }
    };
    unknown.extend(keys.leftovers());
    Ok(initial)
}

/// Parses and validates a config document. Relative sample-file paths stay
/// relative to the working directory; see [`parse_config_file`].
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    parse_with_base(text, None)
}

/// Reads a config file; relative paths inside it resolve against its directory.
pub fn parse_config_file(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_with_base(&text, path.parent())
}

fn parse_with_base(text: &str, base: Option<&Path>) -> Result<ExperimentConfig> {
    let table: Table = text.parse()?;
    let mut keys = Keys::new(table, "");
    let mut unknown = Vec::new();

    let n_modes = keys.usize("N")?.ok_or(ConfigError::Missing("N"))?;
    let t_end = keys.require_f64("T")?;
    let lambda = keys.f64("lambda")?;
    let measure = match (lambda, keys.value("measure")) {
        (Some(_), Some(_)) => {
            return Err(invalid(
                "measure",
                "give either `lambda` or a [measure] table, not both",
            ))
        }
        (Some(lambda), None) => Some(MeasureConfig::FractionalLaplacian { lambda }),
        (None, Some(table)) => parse_measure(table, &mut unknown)?,
        (None, None) => None,
    };
    let mut config = ExperimentConfig::new(n_modes, measure, t_end);

    if let Some(v) = keys.f64("theta")? {
        config.theta = v;
    }
    if let Some(v) = keys.f64("c_eps")? {
        config.c_eps = v;
    }
    if let Some(v) = keys.f64("c_m")? {
        config.c_m = v;
    }
    let epsilon = keys.f64("epsilon")?;
    config.viscosity = match keys.string("viscosity")?.as_deref() {
        None | Some("svv") => ViscosityMode::Svv,
        Some("none") => ViscosityMode::None,
        Some("full") => ViscosityMode::Full {
            epsilon: epsilon.ok_or(ConfigError::Missing("epsilon"))?,
        },
        Some(other) => {
            return Err(invalid(
                "viscosity",
                format!("`{other}` is not one of svv, full, none"),
            ))
        }
    };
    if epsilon.is_some() && !matches!(config.viscosity, ViscosityMode::Full { .. }) {
        return Err(invalid(
            "epsilon",
            "only meaningful with viscosity = \"full\"",
        ));
    }
    config.normalization = match keys.string("normalization")?.as_deref() {
        None | Some("c_lambda") => Normalization::CLambda,
        Some("unit_symbol") => Normalization::UnitSymbol,
        Some(other) => {
            return Err(invalid(
                "normalization",
                format!("`{other}` is not one of c_lambda, unit_symbol"),
            ))
        }
    };
    config.flux = match keys.string("flux")?.as_deref() {
        None | Some("burgers") => Flux::Burgers,
        Some("none") => Flux::None,
        Some(other) => {
            return Err(invalid(
                "flux",
                format!("`{other}` is not one of burgers, none"),
            ))
        }
    };
    config.step = match (keys.f64("dt")?, keys.f64("cfl")?) {
        (Some(_), Some(_)) => return Err(invalid("dt", "`dt` and `cfl` are mutually exclusive")),
        (Some(dt), None) => StepControl::Dt(dt),
        (None, Some(cfl)) => StepControl::Cfl(cfl),
        (None, None) => StepControl::Cfl(0.5),
    };
    if let Some(v) = keys.value("initial") {
        config.initial = parse_initial(v, base, &mut unknown)?;
    }
    if let Some(v) = keys.value("snapshots") {
        let Value::Array(items) = v else {
            return Err(ConfigError::Type {
                field: "snapshots".into(),
                expected: "an array of numbers",
            });
        };
        config.snapshots = items
            .into_iter()
            .map(|item| match item {
                Value::Float(f) => Ok(f),
                Value::Integer(i) => Ok(i as f64),
                _ => Err(ConfigError::Type {
                    field: "snapshots".into(),
                    expected: "an array of numbers",
                }),
            })
            .collect::<Result<_>>()?;
    }
    if let Some(v) = keys.usize("oversample")? {
        config.oversample = v;
    }
    if let Some(v) = keys.usize("diagnostics_stride")? {
        config.diagnostics_stride = v;
    }
    if let Some(v) = keys.string("output_dir")? {
        config.output_dir = PathBuf::from(v);
    }

    unknown.extend(keys.leftovers());
    if !unknown.is_empty() {
        unknown.sort();
        return Err(ConfigError::UnknownKeys(unknown));
    }
    config.validate()?;
    Ok(config)
}

/// Reads an `x,u` CSV of equispaced samples `x_j = 2πj/M` and returns the
/// `u` column. Blank lines are ignored; the header is required.
pub fn parse_samples(text: &str) -> Result<Vec<f64>> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, header)) if header.trim() == "x,u" => {}
        Some((k, _)) => {
            return Err(ConfigError::Samples {
                line: k + 1,
                reason: "expected header `x,u`".into(),
            })
        }
        None => {
            return Err(ConfigError::Samples {
                line: 0,
                reason: "empty file".into(),
            })
        }
    }
    let mut xs = Vec::new();
    let mut us = Vec::new();
    for (k, line) in lines {
        let bad = |reason: String| ConfigError::Samples {
            line: k + 1,
            reason,
        };
        let mut fields = line.trim().split(',');
        let (Some(x), Some(u), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(bad("expected two comma-separated fields".into()));
        };
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| bad(format!("`{}`: {e}", s.trim())))
        };
        let (x, u) = (parse(x)?, parse(u)?);
        if !(x.is_finite() && u.is_finite()) {
            return Err(bad("non-finite value".into()));
        }
        xs.push(x);
        us.push(u);
    }
    let m = us.len();
    if m == 0 {
        return Err(ConfigError::Samples {
            line: 1,
            reason: "no samples".into(),
        });
    }
    let h = 2.0 * PI / m as f64;
    if let Some(j) = xs
        .iter()
        .enumerate()
        .position(|(j, &x)| (x - h * j as f64).abs() > 1e-9)
    {
        return Err(ConfigError::Samples {
            line: j + 2,
            reason: format!("x = {} is not on the grid 2πj/{m}", xs[j]),
        });
    }
    Ok(us)
}
