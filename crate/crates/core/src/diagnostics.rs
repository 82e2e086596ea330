//! Measurable counterparts of the stability, contraction and convergence
//! statements: norms on an oversampled grid, seminorms, flux truncation
//! error, rate fits, a Gibbs-oscillation indicator and time regularity.

use std::f64::consts::PI;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fourier::{self, FourierError, SpectralState};

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error(transparent)]
    Fourier(#[from] FourierError),
    #[error("rate fit needs at least {need} points, got {got}")]
    TooFewPoints { need: usize, got: usize },
    #[error("non-positive or non-finite value {value} at index {index}")]
    NonPositive { index: usize, value: f64 },
    #[error("trajectories are not comparable: {0}")]
    Mismatch(String),
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, DiagnosticsError>;

/// One diagnostics sample; also the JSON-lines row layout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsRow {
    pub t: f64,
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
    pub bv: f64,
    pub energy: f64,
    pub sobolev_half: f64,
    pub trunc_err: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DiagnosticsRecord {
    pub rows: Vec<DiagnosticsRow>,
    pub oscillation_flag: bool,
    /// Time at which the run blew up, if it did.
    pub blow_up: Option<f64>,
}

impl DiagnosticsRecord {
    pub fn push(&mut self, row: DiagnosticsRow) {
        self.rows.push(row);
    }

    pub fn column(&self, f: impl Fn(&DiagnosticsRow) -> f64) -> Vec<f64> {
        self.rows.iter().map(f).collect()
    }

    pub fn times(&self) -> Vec<f64> {
        self.column(|r| r.t)
    }

    pub fn write_jsonl(&self, mut out: impl Write) -> Result<()> {
        for row in &self.rows {
            serde_json::to_writer(&mut out, row)
                .map_err(|e| DiagnosticsError::Json { line: 0, source: e })?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Parses JSON-lines written by [`Self::write_jsonl`]. Blank lines are skipped.
    pub fn read_jsonl(input: impl BufRead) -> Result<Self> {
        let mut record = Self::default();
        for (k, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let row: DiagnosticsRow =
                serde_json::from_str(&line).map_err(|e| DiagnosticsError::Json {
                    line: k + 1,
                    source: e,
                })?;
            record.push(row);
        }
        Ok(record)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
}

/// `L¹`, `L²` and `L∞` norms over one period. `L²` is exact by Parseval;
/// the others use the `M`-point grid.
pub fn norms(state: &SpectralState, oversample: usize) -> Result<Norms> {
    let values = fourier::evaluate_physical(state, oversample)?;
    let h = 2.0 * PI / oversample as f64;
    Ok(Norms {
        l1: h * values.iter().map(|v| v.abs()).sum::<f64>(),
        l2: (2.0 * PI * state.coeff_energy()).sqrt(),
        linf: values.iter().fold(0.0, |m, v| m.max(v.abs())),
    })
}

/// Total variation over the periodic `M`-point grid.
pub fn bv_seminorm(state: &SpectralState, oversample: usize) -> Result<f64> {
    Ok(total_variation(&fourier::evaluate_physical(
        state, oversample,
    )?))
}

/// Periodic total variation of grid values.
pub fn total_variation(values: &[f64]) -> f64 {
    let n = values.len();
    (0..n)
        .map(|j| (values[(j + 1) % n] - values[j]).abs())
        .sum()
}

/// `‖∂ₓ(I - P_N) f(u_N)‖_{L²}` for `f(u) = u²/2`: the modes
/// `N < |ξ| ≤ 2N` of the exact flux, differentiated.
pub fn truncation_error(state: &SpectralState) -> f64 {
    let n = state.n_modes();
    let full = fourier::square_modes(state, 2 * n);
    let sum: f64 = full
        .iter()
        .enumerate()
        .map(|(k, v)| (k as i64 - 2 * n as i64, v))
        .filter(|(xi, _)| xi.unsigned_abs() as usize > n)
        .map(|(xi, v)| (xi as f64).powi(2) * v.norm_sqr())
        .sum();
    0.5 * (2.0 * PI * sum).sqrt()
}

/// `(Σ |ξ|^{2s} |û_ξ|²)^{1/2}`; at `s = 0` this is `‖u‖_{L²}/√(2π)`.
pub fn sobolev_seminorm(state: &SpectralState, order: f64) -> f64 {
    state
        .modes()
        .map(|(xi, c)| (xi.unsigned_abs() as f64).powf(2.0 * order) * c.norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// All row quantities for one state.
pub fn sample(
    state: &SpectralState,
    oversample: usize,
    sobolev_order: f64,
) -> Result<DiagnosticsRow> {
    let values = fourier::evaluate_physical(state, oversample)?;
    let h = 2.0 * PI / oversample as f64;
    let l2 = (2.0 * PI * state.coeff_energy()).sqrt();
    Ok(DiagnosticsRow {
        t: state.time(),
        l1: h * values.iter().map(|v| v.abs()).sum::<f64>(),
        l2,
        linf: values.iter().fold(0.0, |m, v| m.max(v.abs())),
        bv: total_variation(&values),
        energy: 0.5 * l2 * l2,
        sobolev_half: sobolev_seminorm(state, sobolev_order),
        trunc_err: truncation_error(state),
    })
}

/// Least-squares slope of `log(error)` against `log(ε)`.
pub fn rate_fit(pairs: &[(f64, f64)]) -> Result<f64> {
    if pairs.len() < 3 {
        return Err(DiagnosticsError::TooFewPoints {
            need: 3,
            got: pairs.len(),
        });
    }
    for (index, &(eps, err)) in pairs.iter().enumerate() {
        for value in [eps, err] {
            if !(value.is_finite() && value > 0.0) {
                return Err(DiagnosticsError::NonPositive { index, value });
            }
        }
    }
    let pts: Vec<(f64, f64)> = pairs.iter().map(|(e, r)| (e.ln(), r.ln())).collect();
    Ok(least_squares_slope(&pts))
}

fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Default ratio of total variations that counts as spurious oscillation.
pub const GIBBS_FACTOR: f64 = 1.5;

/// True when the state's total variation exceeds `factor` times the
/// variation of a reference run.
pub fn gibbs_indicator(
    state: &SpectralState,
    baseline_tv: f64,
    oversample: usize,
    factor: f64,
) -> Result<bool> {
    if !(baseline_tv.is_finite() && baseline_tv > 0.0) {
        return Err(DiagnosticsError::NonPositive {
            index: 0,
            value: baseline_tv,
        });
    }
    Ok(bv_seminorm(state, oversample)? > factor * baseline_tv)
}

/// `L¹` distance between two runs at each shared snapshot.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContractionReport {
    pub times: Vec<f64>,
    pub distances: Vec<f64>,
    /// `max_t d(t)/d(0) - 1`, clamped below at 0.
    pub max_violation: f64,
    /// Largest relative growth between consecutive snapshots.
    pub max_step_growth: f64,
    pub tolerance: f64,
    pub holds: bool,
}

/// Checks `‖u(t) - v(t)‖_{L¹} ≤ ‖u(0) - v(0)‖_{L¹}(1 + tol)` and that the
/// distance does not grow between consecutive snapshots beyond `tol`.
pub fn contraction_check(
    run_u: &[SpectralState],
    run_v: &[SpectralState],
    oversample: usize,
    tolerance: f64,
) -> Result<ContractionReport> {
    if run_u.len() != run_v.len() || run_u.is_empty() {
        return Err(DiagnosticsError::Mismatch(format!(
            "{} vs {} snapshots",
            run_u.len(),
            run_v.len()
        )));
    }
    let mut times = Vec::new();
    let mut distances = Vec::new();
    for (u, v) in run_u.iter().zip(run_v) {
        if u.time() != v.time() {
            return Err(DiagnosticsError::Mismatch(format!(
                "snapshot times {} and {} differ",
                u.time(),
                v.time()
            )));
        }
        times.push(u.time());
        distances.push(norms(&u.difference(v)?, oversample)?.l1);
    }
    let d0 = distances[0];
    let rel = |a: f64, b: f64| {
        if b > 0.0 {
            a / b - 1.0
        } else if a > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    };
    let max_violation = distances.iter().map(|&d| rel(d, d0)).fold(0.0, f64::max);
    let max_step_growth = distances
        .windows(2)
        .map(|w| rel(w[1], w[0]))
        .fold(0.0, f64::max);
    Ok(ContractionReport {
        times,
        distances,
        max_violation,
        max_step_growth,
        tolerance,
        holds: max_violation <= tolerance && max_step_growth <= tolerance,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimeModulus {
    Exponent {
        value: f64,
        pairs: usize,
    },
    /// All snapshot distances vanish.
    Degenerate,
}

/// Fits `log ‖u(t₁) - u(t₂)‖_{L¹}` against `log |t₁ - t₂|` over all
/// snapshot pairs with a non-zero distance.
pub fn time_modulus(snapshots: &[SpectralState], oversample: usize) -> Result<TimeModulus> {
    if snapshots.len() < 8 {
        return Err(DiagnosticsError::TooFewPoints {
            need: 8,
            got: snapshots.len(),
        });
    }
    let mut pts = Vec::new();
    for (i, a) in snapshots.iter().enumerate() {
        for b in &snapshots[i + 1..] {
            let dt = (b.time() - a.time()).abs();
            let d = norms(&a.difference(b)?, oversample)?.l1;
            if dt > 0.0 && d > 0.0 {
                pts.push((dt.ln(), d.ln()));
            }
        }
    }
    if pts.len() < 2 {
        return Ok(TimeModulus::Degenerate);
    }
    Ok(TimeModulus::Exponent {
        value: least_squares_slope(&pts),
        pairs: pts.len(),
    })
}

/// Indices `n` where `Σ|û|²` grew by more than `tol` from step `n-1` to `n`.
pub fn energy_increases(trace: &[f64], tol: f64) -> Vec<usize> {
    trace
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[1] - w[0] > tol)
        .map(|(k, _)| k + 1)
        .collect()
}
