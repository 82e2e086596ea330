//! Spectral vanishing viscosity parameters and the viscosity term.
//!
//! Viscosity of amplitude `ε_N = c_ε N^{-θ}` acts only on modes
//! `|ξ| ≥ m_N`, `m_N ≈ c_m N^{θ/2} (log N)^{-1/2}`, weighted by the kernel
//! `Q̂_p = 1 - (m_N/p)²` which rises continuously from zero at `p = m_N`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fourier::SpectralState;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SvvError {
    #[error("{name} = {value} is outside {range}")]
    Domain {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("kernel invariant violated at p = {p}: {what}")]
    Kernel { p: usize, what: &'static str },
    #[error("viscosity parameters are for N = {params} but the state has N = {state}")]
    SizeMismatch { params: usize, state: usize },
}

pub type Result<T> = std::result::Result<T, SvvError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ViscosityMode {
    /// Spectral vanishing viscosity on `|ξ| ≥ m_N`.
    Svv,
    /// Classical viscosity `ε ∂ₓ²` on every mode.
    Full { epsilon: f64 },
    /// No viscosity (`ε_N = 0`).
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SvvParams {
    pub n_modes: usize,
    pub theta: f64,
    pub c_eps: f64,
    pub c_m: f64,
    pub eps_n: f64,
    pub m_n: usize,
    /// `Q̂_p` for `p = 0..=N`.
    pub q_hat: Vec<f64>,
    pub mode: ViscosityMode,
}

fn positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(SvvError::Domain {
            name,
            value,
            range: "(0, ∞)",
        })
    }
}

/// `1 - (m/p)²` for `p ≥ m`, zero below.
pub fn kernel(n_modes: usize, m_n: usize) -> Vec<f64> {
    (0..=n_modes)
        .map(|p| {
            if p < m_n || p == 0 {
                0.0
            } else {
                let r = m_n as f64 / p as f64;
                1.0 - r * r
            }
        })
        .collect()
}

/// Builds the SVV parameters for `N` modes.
pub fn svv_params(
    n_modes: usize,
    theta: f64,
    c_eps: f64,
    c_m: f64,
    mode: ViscosityMode,
) -> Result<SvvParams> {
    if n_modes < 2 {
        return Err(SvvError::Domain {
            name: "N",
            value: n_modes as f64,
            range: "[2, ∞)",
        });
    }
    if !(theta > 0.0 && theta < 1.0) {
        return Err(SvvError::Domain {
            name: "theta",
            value: theta,
            range: "(0, 1)",
        });
    }
    positive("c_eps", c_eps)?;
    positive("c_m", c_m)?;
    if let ViscosityMode::Full { epsilon } = mode {
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(SvvError::Domain {
                name: "epsilon",
                value: epsilon,
                range: "[0, ∞)",
            });
        }
    }
    let n = n_modes as f64;
    let eps_n = c_eps * n.powf(-theta);
    let raw = (c_m * n.powf(theta / 2.0) / n.ln().sqrt()).round();
    let m_n = if raw < 1.0 {
        log::warn!("viscosity-free spectrum rounds to {raw} for N = {n_modes}; clamping to 1");
        1
    } else {
        (raw as usize).min(n_modes)
    };
    SvvParams::from_parts(
        n_modes,
        theta,
        c_eps,
        c_m,
        eps_n,
        m_n,
        kernel(n_modes, m_n),
        mode,
    )
}

impl SvvParams {
    /// Assembles parameters from explicit parts, checking the kernel
    /// conditions `Q̂_p = 0` below `m_N`, monotone, in `[0, 1]`, and
    /// `|Q̂_p - 1| ≤ (m_N/p)²` above.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        n_modes: usize,
        theta: f64,
        c_eps: f64,
        c_m: f64,
        eps_n: f64,
        m_n: usize,
        q_hat: Vec<f64>,
        mode: ViscosityMode,
    ) -> Result<Self> {
        if !(1..=n_modes).contains(&m_n) {
            return Err(SvvError::Domain {
                name: "m_N",
                value: m_n as f64,
                range: "[1, N]",
            });
        }
        if q_hat.len() != n_modes + 1 {
            return Err(SvvError::Kernel {
                p: q_hat.len(),
                what: "kernel needs N+1 entries",
            });
        }
        for (p, &q) in q_hat.iter().enumerate() {
            if p < m_n && q != 0.0 {
                return Err(SvvError::Kernel {
                    p,
                    what: "non-zero inside the viscosity-free spectrum",
                });
            }
            if !(0.0..=1.0).contains(&q) {
                return Err(SvvError::Kernel {
                    p,
                    what: "outside [0, 1]",
                });
            }
            if p > 0 && q < q_hat[p - 1] {
                return Err(SvvError::Kernel {
                    p,
                    what: "not monotone",
                });
            }
            if p >= m_n {
                let bound = (m_n as f64 / p as f64).powi(2);
                if (q - 1.0).abs() > bound + 1e-15 {
                    return Err(SvvError::Kernel {
                        p,
                        what: "|Q̂_p - 1| exceeds (m_N/p)²",
                    });
                }
            }
        }
        Ok(Self {
            n_modes,
            theta,
            c_eps,
            c_m,
            eps_n,
            m_n,
            q_hat,
            mode,
        })
    }

    /// `ε_N m_N² log N`, which the theory needs bounded.
    pub fn monitored_product(&self) -> f64 {
        self.eps_n * (self.m_n as f64).powi(2) * (self.n_modes as f64).ln()
    }

    /// Viscosity amplitude actually applied in the current mode.
    pub fn effective_epsilon(&self) -> f64 {
        match self.mode {
            ViscosityMode::Svv => self.eps_n,
            ViscosityMode::Full { epsilon } => epsilon,
            ViscosityMode::None => 0.0,
        }
    }

    /// Per-mode damping rate `ν_ξ ≥ 0`; the viscosity tendency is `-ν_ξ û_ξ`.
    pub fn damping(&self, xi: i64) -> f64 {
        let p = xi.unsigned_abs() as usize;
        let k2 = (xi as f64).powi(2);
        match self.mode {
            ViscosityMode::Svv => {
                if p < self.m_n {
                    0.0
                } else {
                    self.eps_n * self.q_hat[p] * k2
                }
            }
            ViscosityMode::Full { epsilon } => epsilon * k2,
            ViscosityMode::None => 0.0,
        }
    }
}

/// Viscosity contribution to `dû/dt`.
pub fn apply_viscosity(state: &SpectralState, params: &SvvParams) -> Result<SpectralState> {
    if state.n_modes() != params.n_modes {
        return Err(SvvError::SizeMismatch {
            params: params.n_modes,
            state: state.n_modes(),
        });
    }
    Ok(state.map_modes(|xi, c| -params.damping(xi) * c))
}

/// `Re Σ conj(û_ξ) v̂_ξ`, the rate of change of `Σ|û|²/2` due to a tendency `v̂`.
pub fn energy_rate(state: &SpectralState, tendency: &SpectralState) -> f64 {
    state
        .coeffs()
        .iter()
        .zip(tendency.coeffs())
        .map(|(u, v): (&Complex64, &Complex64)| (u.conj() * v).re)
        .sum()
}
