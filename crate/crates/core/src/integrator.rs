//! Semi-discrete SVV system and its RK4 time integration.
//!
//! For Burgers' flux `f(u) = u²/2` each coefficient evolves as
//!
//! ```text
//! dû_ξ/dt = -(iξ/2) Σ_{p+q=ξ} û_p û_q + G(ξ) û_ξ - ε_N 1_{m_N≤|ξ|} ξ² Q̂_|ξ| û_ξ.
//! ```

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::diagnostics::{self, DiagnosticsRecord, DiagnosticsRow};
use crate::fourier::{self, FourierError, SpectralState};
use crate::levy::LevySymbol;
use crate::svv::SvvParams;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("invalid setup: {0}")]
    InvalidSetup(String),
    #[error("state has N = {state} but the setup is for N = {setup}")]
    SizeMismatch { setup: usize, state: usize },
    #[error("solution blew up at t = {time}")]
    BlowUp { time: f64 },
    #[error(transparent)]
    Fourier(#[from] FourierError),
}

/// Failure of a whole run. A blow-up keeps everything computed before it.
#[derive(Debug, Error)]
pub enum SolveError {
    #[error("solution blew up at t = {time} after {} steps", partial.steps)]
    BlowUp { time: f64, partial: Box<Trajectory> },
    #[error(transparent)]
    Solver(#[from] SolverError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Flux {
    /// `f(u) = u²/2`.
    Burgers,
    /// No convection: the linear nonlocal/viscous problem.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StepControl {
    Dt(f64),
    /// Step from [`stable_dt`] evaluated once on the initial state.
    Cfl(f64),
}

#[derive(Debug, Clone)]
pub struct SolverSetup {
    pub symbol: LevySymbol,
    pub svv: SvvParams,
    pub flux: Flux,
    pub t_end: f64,
    pub step: StepControl,
    pub snapshot_times: Vec<f64>,
    /// Diagnostics row every `stride` steps (0: snapshots only).
    pub diagnostics_stride: usize,
    /// Grid size for physical-space diagnostics.
    pub oversample: usize,
    /// Order `s` of the monitored `H^s` seminorm (`λ/2`).
    pub sobolev_order: f64,
}

impl SolverSetup {
    /// A setup with defaults: `cfl = 0.5`, snapshots at `0, T/2, T`,
    /// oversampling `4N`, diagnostics every 50 steps.
    pub fn new(symbol: LevySymbol, svv: SvvParams, t_end: f64) -> Self {
        let n = svv.n_modes;
        Self {
            symbol,
            svv,
            flux: Flux::Burgers,
            t_end,
            step: StepControl::Cfl(0.5),
            snapshot_times: vec![0.0, t_end / 2.0, t_end],
            diagnostics_stride: 50,
            oversample: 4 * n,
            sobolev_order: 0.5,
        }
    }

    pub fn n_modes(&self) -> usize {
        self.svv.n_modes
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |m: String| Err(SolverError::InvalidSetup(m));
        if self.symbol.n_modes() != self.svv.n_modes {
            return bad(format!(
                "symbol has N = {} but viscosity has N = {}",
                self.symbol.n_modes(),
                self.svv.n_modes
            ));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return bad(format!(
                "t_end = {} must be finite and non-negative",
                self.t_end
            ));
        }
        match self.step {
            StepControl::Dt(dt) if !(dt.is_finite() && dt > 0.0) => {
                return bad(format!("dt = {dt} must be positive"));
            }
            StepControl::Cfl(cfl) if !(cfl > 0.0 && cfl <= 1.0) => {
                return bad(format!("cfl = {cfl} must lie in (0, 1]"));
            }
            _ => {}
        }
        if self.snapshot_times.windows(2).any(|w| w[1] < w[0]) {
            return bad("snapshot times must be sorted".into());
        }
        if let Some(t) = self
            .snapshot_times
            .iter()
            .find(|t| !(**t >= 0.0 && **t <= self.t_end))
        {
            return bad(format!("snapshot time {t} outside [0, {}]", self.t_end));
        }
        if self.oversample < 2 * self.n_modes() + 1 {
            return bad(format!("oversample {} < 2N+1", self.oversample));
        }
        if !(self.sobolev_order.is_finite() && self.sobolev_order >= 0.0) {
            return bad(format!("sobolev order {} must be ≥ 0", self.sobolev_order));
        }
        Ok(())
    }

    fn check_state(&self, state: &SpectralState) -> Result<(), SolverError> {
        if state.n_modes() != self.n_modes() {
            return Err(SolverError::SizeMismatch {
                setup: self.n_modes(),
                state: state.n_modes(),
            });
        }
        Ok(())
    }
}

/// Tendency `dû/dt` of the semi-discrete system.
pub fn rhs(state: &SpectralState, setup: &SolverSetup) -> Result<SpectralState, SolverError> {
    setup.check_state(state)?;
    let square = match setup.flux {
        Flux::Burgers => Some(fourier::galerkin_square(state)),
        Flux::None => None,
    };
    let tendency = state.map_modes(|xi, u| {
        let convection = square.as_ref().map_or(Complex64::new(0.0, 0.0), |sq| {
            Complex64::new(0.0, -0.5 * xi as f64) * sq.coeff(xi)
        });
        convection + setup.symbol.weight(xi) * u - setup.svv.damping(xi) * u
    });
    Ok(tendency)
}

/// `cfl · min(1/(N(‖u‖∞+1)), 1/(ε N²), 1/(max|G|+1))`; the viscous bound
/// is dropped when no viscosity is applied.
pub fn stable_dt(state: &SpectralState, setup: &SolverSetup, cfl: f64) -> Result<f64, SolverError> {
    if !(cfl > 0.0 && cfl <= 1.0) {
        return Err(SolverError::InvalidSetup(format!(
            "cfl = {cfl} must lie in (0, 1]"
        )));
    }
    setup.check_state(state)?;
    let n = state.n_modes() as f64;
    let sup = fourier::evaluate_physical(state, 4 * state.n_modes())?
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let mut bound = 1.0 / (n * (sup + 1.0));
    let eps = setup.svv.effective_epsilon();
    if eps > 0.0 {
        bound = bound.min(1.0 / (eps * n * n));
    }
    bound = bound.min(1.0 / (setup.symbol.max_abs() + 1.0));
    Ok(cfl * bound)
}

/// One classical fourth-order Runge–Kutta step.
pub fn rk4_step(
    state: &SpectralState,
    dt: f64,
    setup: &SolverSetup,
) -> Result<SpectralState, SolverError> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(SolverError::InvalidSetup(format!(
            "dt = {dt} must be positive"
        )));
    }
    let stage =
        |base: &SpectralState, k: &SpectralState, h: f64| -> Result<SpectralState, SolverError> {
            let mut s = base.clone();
            s.add_scaled(h, k)?;
            Ok(s)
        };
    let k1 = rhs(state, setup)?;
    let k2 = rhs(&stage(state, &k1, dt / 2.0)?, setup)?;
    let k3 = rhs(&stage(state, &k2, dt / 2.0)?, setup)?;
    let k4 = rhs(&stage(state, &k3, dt)?, setup)?;
    let mut next = state.clone();
    next.add_scaled(dt / 6.0, &k1)?;
    next.add_scaled(dt / 3.0, &k2)?;
    next.add_scaled(dt / 3.0, &k3)?;
    next.add_scaled(dt / 6.0, &k4)?;
    next.set_time(state.time() + dt);
    if !next.is_finite() {
        return Err(SolverError::BlowUp { time: next.time() });
    }
    Ok(next)
}

/// Output of [`solve`].
#[derive(Debug, Clone)]
pub struct Trajectory {
    /// States at the requested snapshot times, in order.
    pub snapshots: Vec<SpectralState>,
    pub record: DiagnosticsRecord,
    /// `Σ|û_ξ|²` before the first step and after every step.
    pub energy_trace: Vec<f64>,
    pub dt: f64,
    pub steps: usize,
    pub initial_mean: f64,
    pub final_state: SpectralState,
}

impl Trajectory {
    /// Largest single-step increase of `Σ|û_ξ|²` (negative if energy always fell).
    pub fn max_energy_increase(&self) -> f64 {
        self.energy_trace
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `|û_0(T) - û_0(0)|`.
    pub fn mean_drift(&self) -> f64 {
        (self.final_state.coeff(0).re - self.initial_mean).abs()
    }
}

/// Norm growth beyond which a run is declared blown up.
pub const BLOW_UP_FACTOR: f64 = 1e6;

fn diag_row(state: &SpectralState, setup: &SolverSetup) -> Result<DiagnosticsRow, SolverError> {
    diagnostics::sample(state, setup.oversample, setup.sobolev_order).map_err(|e| match e {
        diagnostics::DiagnosticsError::Fourier(f) => SolverError::Fourier(f),
        other => SolverError::InvalidSetup(other.to_string()),
    })
}

/// Integrates from `t = 0` to `T` with a fixed step, landing exactly on the
/// snapshot times by shortening the step that would overshoot them.
pub fn solve(initial: &SpectralState, setup: &SolverSetup) -> Result<Trajectory, SolveError> {
    setup.validate()?;
    setup.check_state(initial)?;
    let mut state = initial.clone().with_time(0.0);
    let dt = match setup.step {
        StepControl::Dt(dt) => dt,
        StepControl::Cfl(cfl) => stable_dt(&state, setup, cfl)?,
    };
    let initial_norm = state.coeff_norm();
    let mut traj = Trajectory {
        snapshots: Vec::new(),
        record: DiagnosticsRecord::default(),
        energy_trace: vec![state.coeff_energy()],
        dt,
        steps: 0,
        initial_mean: state.coeff(0).re,
        final_state: state.clone(),
    };
    traj.record.push(diag_row(&state, setup)?);

    let mut targets: Vec<f64> = setup.snapshot_times.clone();
    targets.push(setup.t_end);
    targets.dedup();
    let landing_slack = 1e-9 * dt;
    let mut t = 0.0;
    for &target in &targets {
        while target - t > landing_slack {
            let remaining = target - t;
            let (h, lands) = if remaining <= dt + landing_slack {
                (remaining, true)
            } else {
                (dt, false)
            };
            let next = rk4_step(&state, h, setup).and_then(|mut s| {
                if lands {
                    s.set_time(target);
                }
                let norm = s.coeff_norm();
                if initial_norm > 0.0 && norm > BLOW_UP_FACTOR * initial_norm {
                    return Err(SolverError::BlowUp { time: s.time() });
                }
                Ok(s)
            });
            state = match next {
                Ok(s) => s,
                Err(SolverError::BlowUp { time }) => {
                    traj.record.blow_up = Some(time);
                    traj.final_state = state;
                    return Err(SolveError::BlowUp {
                        time,
                        partial: Box::new(traj),
                    });
                }
                Err(e) => return Err(e.into()),
            };
            t = state.time();
            traj.steps += 1;
            traj.energy_trace.push(state.coeff_energy());
            if setup.diagnostics_stride > 0 && traj.steps % setup.diagnostics_stride == 0 && !lands
            {
                traj.record.push(diag_row(&state, setup)?);
            }
        }
        if setup.snapshot_times.contains(&target) {
            traj.snapshots.push(state.clone());
        }
        if traj.record.rows.last().map(|r| r.t) != Some(t) {
            traj.record.push(diag_row(&state, setup)?);
        }
    }
    traj.final_state = state;
    Ok(traj)
}
