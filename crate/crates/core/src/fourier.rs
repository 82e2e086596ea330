//! Real-valued trigonometric polynomials on the periodic interval (0, 2π).
//!
//! A [`SpectralState`] stores the Fourier coefficients `û_ξ`, `ξ = -N..=N`,
//! of `u_N(x) = Σ û_ξ e^{iξx}` contiguously, lowest frequency first. Every
//! constructor and mutator keeps the coefficients Hermitian
//! (`û_{-ξ} = conj(û_ξ)`), so the represented function is always real.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FourierError {
    #[error("{samples} samples cannot resolve {n_modes} modes without aliasing (need at least {})", 2 * n_modes + 1)]
    Aliasing { samples: usize, n_modes: usize },
    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },
    #[error("expected {expected} coefficients, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("mode count mismatch: {left} vs {right}")]
    ModeMismatch { left: usize, right: usize },
    #[error("physical values carry imaginary residual {residual:e} (bound {bound:e})")]
    ImaginaryResidual { residual: f64, bound: f64 },
    #[error("a spectral state needs at least one mode")]
    NoModes,
}

pub type Result<T> = std::result::Result<T, FourierError>;

/// Fourier coefficients of a real `N`-trigonometric polynomial plus the
/// simulation time they belong to.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralState {
    n_modes: usize,
    coeffs: Vec<Complex64>,
    time: f64,
}

impl SpectralState {
    pub fn zeros(n_modes: usize) -> Result<Self> {
        if n_modes == 0 {
            return Err(FourierError::NoModes);
        }
        Ok(Self {
            n_modes,
            coeffs: vec![Complex64::new(0.0, 0.0); 2 * n_modes + 1],
            time: 0.0,
        })
    }

    /// Builds a state from `2N+1` coefficients ordered `ξ = -N..=N`.
    ///
    /// The input is symmetrised: each pair `(ξ, -ξ)` is replaced by its
    /// Hermitian average and `û_0` loses its imaginary part.
    pub fn from_coeffs(n_modes: usize, coeffs: Vec<Complex64>, time: f64) -> Result<Self> {
        if n_modes == 0 {
            return Err(FourierError::NoModes);
        }
        if coeffs.len() != 2 * n_modes + 1 {
            return Err(FourierError::LengthMismatch {
                expected: 2 * n_modes + 1,
                got: coeffs.len(),
            });
        }
        if let Some(index) = coeffs
            .iter()
            .position(|c| !(c.re.is_finite() && c.im.is_finite()))
        {
            return Err(FourierError::NonFinite { index });
        }
        let mut state = Self {
            n_modes,
            coeffs,
            time,
        };
        state.enforce_hermitian();
        Ok(state)
    }

    /// Builds a state from a function of the wavenumber evaluated for
    /// `ξ = 0..=N`; negative modes are filled by conjugation.
    pub fn from_fn(n_modes: usize, mut f: impl FnMut(i64) -> Complex64) -> Result<Self> {
        let mut state = Self::zeros(n_modes)?;
        for xi in 0..=n_modes as i64 {
            state.set_coeff(xi, f(xi));
        }
        Ok(state)
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn set_time(&mut self, time: f64) {
        self.time = time;
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    /// Iterates `(ξ, û_ξ)` for `ξ = -N..=N`.
    pub fn modes(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let n = self.n_modes as i64;
        self.coeffs
            .iter()
            .enumerate()
            .map(move |(k, c)| (k as i64 - n, *c))
    }

    /// Coefficient at wavenumber `xi`; zero outside `|ξ| ≤ N`.
    pub fn coeff(&self, xi: i64) -> Complex64 {
        let n = self.n_modes as i64;
        if xi.abs() > n {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeffs[(xi + n) as usize]
        }
    }

    /// Sets `û_ξ` and its mirror `û_{-ξ} = conj(value)`. At `ξ = 0` only the
    /// real part is kept.
    ///
    /// # Panics
    /// If `|xi| > N`.
    pub fn set_coeff(&mut self, xi: i64, value: Complex64) {
        let n = self.n_modes as i64;
        assert!(xi.abs() <= n, "wavenumber {xi} outside |ξ| ≤ {n}");
        if xi == 0 {
            self.coeffs[n as usize] = Complex64::new(value.re, 0.0);
        } else {
            self.coeffs[(xi + n) as usize] = value;
            self.coeffs[(n - xi) as usize] = value.conj();
        }
    }

    pub fn enforce_hermitian(&mut self) {
        let n = self.n_modes;
        for k in 1..=n {
            let avg = 0.5 * (self.coeffs[n + k] + self.coeffs[n - k].conj());
            self.coeffs[n + k] = avg;
            self.coeffs[n - k] = avg.conj();
        }
        self.coeffs[n].im = 0.0;
    }

    /// Applies a per-mode map `(ξ, û_ξ) -> v̂_ξ`; the result is re-symmetrised.
    pub fn map_modes(&self, mut f: impl FnMut(i64, Complex64) -> Complex64) -> Self {
        let n = self.n_modes as i64;
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| f(k as i64 - n, *c))
            .collect();
        let mut out = Self {
            n_modes: self.n_modes,
            coeffs,
            time: self.time,
        };
        out.enforce_hermitian();
        out
    }

    /// `self += alpha * other`.
    pub fn add_scaled(&mut self, alpha: f64, other: &SpectralState) -> Result<()> {
        self.check_same_modes(other)?;
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += alpha * b;
        }
        self.enforce_hermitian();
        Ok(())
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        self.map_modes(|_, c| alpha * c)
    }

    pub fn difference(&self, other: &SpectralState) -> Result<Self> {
        let mut out = self.clone();
        out.add_scaled(-1.0, other)?;
        Ok(out)
    }

    /// Spectral truncation (or zero-extension) onto `n_modes` modes.
    pub fn resized(&self, n_modes: usize) -> Result<Self> {
        let mut out = Self::zeros(n_modes)?.with_time(self.time);
        let keep = n_modes.min(self.n_modes) as i64;
        for xi in 0..=keep {
            out.set_coeff(xi, self.coeff(xi));
        }
        Ok(out)
    }

    /// `Σ |û_ξ|²`, which equals `(1/2π) ∫ u²` by Parseval.
    pub fn coeff_energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn coeff_norm(&self) -> f64 {
        self.coeff_energy().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs
            .iter()
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn check_same_modes(&self, other: &SpectralState) -> Result<()> {
        if self.n_modes != other.n_modes {
            return Err(FourierError::ModeMismatch {
                left: self.n_modes,
                right: other.n_modes,
            });
        }
        Ok(())
    }
}

thread_local! {
    static PLANS: RefCell<(FftPlanner<f64>, HashMap<(usize, bool), Arc<dyn Fft<f64>>>)> =
        RefCell::new((FftPlanner::new(), HashMap::new()));
}

fn plan(len: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
    PLANS.with(|cell| {
        let (planner, cache) = &mut *cell.borrow_mut();
        let key = (len, direction == FftDirection::Forward);
        cache
            .entry(key)
            .or_insert_with(|| planner.plan_fft(len, direction))
            .clone()
    })
}

/// Smallest length `≥ min_len` of the form `2^a 3^b`.
pub fn fft_friendly_len(min_len: usize) -> usize {
    let mut best = min_len.next_power_of_two();
    let mut p3 = 1usize;
    while p3 < best {
        let mut candidate = p3;
        while candidate < min_len {
            candidate *= 2;
        }
        best = best.min(candidate);
        p3 *= 3;
    }
    best
}

fn bin(xi: i64, len: usize) -> usize {
    xi.rem_euclid(len as i64) as usize
}

/// Grid values on `x_j = 2πj/M` from the coefficients, as complex numbers.
fn synthesize(state: &SpectralState, len: usize) -> Vec<Complex64> {
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    for (xi, c) in state.modes() {
        buf[bin(xi, len)] += c;
    }
    plan(len, FftDirection::Inverse).process(&mut buf);
    buf
}

/// Discrete Fourier coefficients `(1/M) Σ_j v_j e^{-iξx_j}` for `|ξ| ≤ keep`.
fn analyze(mut buf: Vec<Complex64>, keep: usize) -> Vec<Complex64> {
    let len = buf.len();
    plan(len, FftDirection::Forward).process(&mut buf);
    let scale = 1.0 / len as f64;
    let keep = keep as i64;
    (-keep..=keep).map(|xi| buf[bin(xi, len)] * scale).collect()
}

/// Projects equispaced samples `u(2πj/M)`, `j = 0..M`, onto `N` modes.
///
/// Requires `M ≥ 2N+1`; the result is the exact `P_N` projection for inputs
/// band-limited to `M - N - 1` modes.
pub fn project_sampled(samples: &[f64], n_modes: usize) -> Result<SpectralState> {
    if n_modes == 0 {
        return Err(FourierError::NoModes);
    }
    if samples.len() < 2 * n_modes + 1 {
        return Err(FourierError::Aliasing {
            samples: samples.len(),
            n_modes,
        });
    }
    if let Some(index) = samples.iter().position(|v| !v.is_finite()) {
        return Err(FourierError::NonFinite { index });
    }
    let buf = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    SpectralState::from_coeffs(n_modes, analyze(buf, n_modes), 0.0)
}

/// Exact coefficients of the square wave `sgn(π - x)`: `û_ξ = -2i/(πξ)` for
/// odd `ξ`, zero otherwise.
pub fn square_wave_coefficients(n_modes: usize) -> Result<SpectralState> {
    SpectralState::from_fn(n_modes, |xi| {
        if xi % 2 == 0 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, -2.0 / (PI * xi as f64))
        }
    })
}

/// Values of `u_N` on the grid `x_j = 2πj/M`.
pub fn evaluate_physical(state: &SpectralState, n_points: usize) -> Result<Vec<f64>> {
    let n = state.n_modes();
    if n_points < 2 * n + 1 {
        return Err(FourierError::Aliasing {
            samples: n_points,
            n_modes: n,
        });
    }
    let values = synthesize(state, n_points);
    let residual = values.iter().fold(0.0f64, |m, v| m.max(v.im.abs()));
    let bound = 1e-12 * state.coeff_norm().max(f64::MIN_POSITIVE);
    if residual > bound {
        return Err(FourierError::ImaginaryResidual { residual, bound });
    }
    Ok(values.into_iter().map(|v| v.re).collect())
}

/// Grid points `x_j = 2πj/M`.
pub fn grid(n_points: usize) -> Vec<f64> {
    (0..n_points)
        .map(|j| 2.0 * PI * j as f64 / n_points as f64)
        .collect()
}

/// `∂_x u_N`, i.e. `(iξ) û_ξ`.
pub fn spectral_derivative(state: &SpectralState) -> SpectralState {
    state.map_modes(|xi, c| Complex64::new(0.0, xi as f64) * c)
}

/// Coefficients of `P_N[u_N²]` by the direct truncated convolution
/// `Σ_{p+q=ξ, |p|,|q|≤N} û_p û_q`. `O(N²)`; reference path.
pub fn galerkin_square_direct(state: &SpectralState) -> SpectralState {
    let n = state.n_modes() as i64;
    let mut out = SpectralState::zeros(state.n_modes())
        .expect("n ≥ 1")
        .with_time(state.time());
    for xi in 0..=n {
        let lo = (-n).max(xi - n);
        let hi = n.min(xi + n);
        let sum: Complex64 = (lo..=hi)
            .map(|p| state.coeff(p) * state.coeff(xi - p))
            .sum();
        out.set_coeff(xi, sum);
    }
    out
}

/// Minimum zero-padded grid for an alias-free quadratic product whose modes
/// up to `keep` are retained: aliases of modes `|k| ≤ 2N` must land outside
/// `|ξ| ≤ keep`, so `M ≥ 2N + keep + 1`.
pub fn padded_len(n_modes: usize, keep: usize) -> usize {
    fft_friendly_len(2 * n_modes + keep + 1)
}

/// Coefficients `|ξ| ≤ keep` of the exact square `u_N²`, computed by a
/// zero-padded transform product.
pub fn square_modes(state: &SpectralState, keep: usize) -> Vec<Complex64> {
    let len = padded_len(state.n_modes(), keep);
    let mut buf = synthesize(state, len);
    for v in buf.iter_mut() {
        // the imaginary part is rounding noise on a real function
        *v = Complex64::new(v.re * v.re, 0.0);
    }
    analyze(buf, keep)
}

/// Coefficients of `P_N[u_N²]` through a zero-padded transform on at least
/// `3N+1` points. Agrees with [`galerkin_square_direct`] to rounding.
pub fn galerkin_square(state: &SpectralState) -> SpectralState {
    let n = state.n_modes();
    SpectralState::from_coeffs(n, square_modes(state, n), state.time())
        .expect("square of a finite state has 2N+1 finite modes")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn cosine(n: usize) -> SpectralState {
        let mut s = SpectralState::zeros(n).unwrap();
        s.set_coeff(1, c(0.5, 0.0));
        s
    }

    #[test]
    fn project_cosine_is_single_mode() {
        let samples: Vec<f64> = grid(64).iter().map(|x| x.cos()).collect();
        let s = project_sampled(&samples, 8).unwrap();
        for (xi, v) in s.modes() {
            let want = if xi.abs() == 1 { 0.5 } else { 0.0 };
            assert!((v - c(want, 0.0)).norm() <= 1e-13, "ξ={xi}: {v}");
        }
    }

    #[test]
    fn project_constant() {
        let s = project_sampled(&[1.0; 17], 8).unwrap();
        assert!((s.coeff(0) - c(1.0, 0.0)).norm() < 1e-15);
        assert!(s
            .modes()
            .filter(|(xi, _)| *xi != 0)
            .all(|(_, v)| v.norm() < 1e-15));
    }

    #[test]
    fn project_rejects_aliasing_and_nan() {
        assert_eq!(
            project_sampled(&[0.0; 16], 8),
            Err(FourierError::Aliasing {
                samples: 16,
                n_modes: 8
            })
        );
        let mut v = vec![0.0; 17];
        v[3] = f64::NAN;
        assert_eq!(
            project_sampled(&v, 8),
            Err(FourierError::NonFinite { index: 3 })
        );
    }

    #[test]
    fn project_sampled_square_wave() {
        // sgn(π - x) sampled with the jump points at their midpoint value 0.
        let m = 4096;
        let samples: Vec<f64> = (0..m)
            .map(|j| match (2 * j).cmp(&m) {
                std::cmp::Ordering::Less if j == 0 => 0.0,
                std::cmp::Ordering::Less => 1.0,
                std::cmp::Ordering::Equal => 0.0,
                std::cmp::Ordering::Greater => -1.0,
            })
            .collect();
        let s = project_sampled(&samples, 256).unwrap();
        for xi in 1..=256i64 {
            let want = if xi % 2 == 1 {
                c(0.0, -2.0 / (PI * xi as f64))
            } else {
                c(0.0, 0.0)
            };
            assert!((s.coeff(xi) - want).norm() < 1e-3, "ξ={xi}");
        }
    }

    #[test]
    fn square_wave_small_n() {
        let s = square_wave_coefficients(4).unwrap();
        assert_eq!(s.coeff(0), c(0.0, 0.0));
        assert!((s.coeff(1) - c(0.0, -2.0 / PI)).norm() < 1e-15);
        assert_eq!(s.coeff(2), c(0.0, 0.0));
        assert!((s.coeff(3) - c(0.0, -2.0 / (3.0 * PI))).norm() < 1e-15);
        assert_eq!(s.coeff(-3), s.coeff(3).conj());
    }

    #[test]
    fn square_wave_matches_fine_sampling() {
        let m = 1 << 16;
        let samples: Vec<f64> = (0..m)
            .map(|j| {
                if j == 0 || 2 * j == m {
                    0.0
                } else if 2 * j < m {
                    1.0
                } else {
                    -1.0
                }
            })
            .collect();
        let sampled = project_sampled(&samples, 16).unwrap();
        let exact = square_wave_coefficients(16).unwrap();
        for ((_, a), (_, b)) in sampled.modes().zip(exact.modes()) {
            assert!((a - b).norm() < 1e-4);
        }
    }

    #[test]
    fn evaluate_constant_and_cosine() {
        let mut s = SpectralState::zeros(3).unwrap();
        s.set_coeff(0, c(2.5, 0.0));
        assert!(evaluate_physical(&s, 16)
            .unwrap()
            .iter()
            .all(|v| (v - 2.5).abs() < 1e-15));
        let vals = evaluate_physical(&cosine(3), 16).unwrap();
        for (v, x) in vals.iter().zip(grid(16)) {
            assert!((v - x.cos()).abs() < 1e-14);
        }
        assert!(matches!(
            evaluate_physical(&s, 6),
            Err(FourierError::Aliasing { .. })
        ));
    }

    #[test]
    fn square_wave_gibbs_overshoot() {
        // Oracle: maximum of the partial sum (4/π) Σ_{odd k ≤ N} sin(kx)/k
        // sampled finely near the jump at x = 0⁺.
        let n = 256;
        let oracle_max = (1..2000)
            .map(|j| {
                let x = j as f64 * 1e-5;
                (1..=n)
                    .step_by(2)
                    .map(|k| (k as f64 * x).sin() / k as f64)
                    .sum::<f64>()
                    * 4.0
                    / PI
            })
            .fold(f64::MIN, f64::max);
        let delta = oracle_max - 1.0;
        assert!((delta - 0.179).abs() < 2e-3, "overshoot {delta}");
        let vals = evaluate_physical(&square_wave_coefficients(n).unwrap(), 1024).unwrap();
        let (lo, hi) = vals
            .iter()
            .fold((f64::MAX, f64::MIN), |(a, b), v| (a.min(*v), b.max(*v)));
        assert!(
            hi <= 1.0 + delta + 1e-6 && lo >= -1.0 - delta - 1e-6,
            "range [{lo}, {hi}]"
        );
        assert!(hi > 1.05, "partial sum should overshoot");
    }

    #[test]
    fn derivative_of_cosine() {
        let d = spectral_derivative(&cosine(4));
        assert!((d.coeff(1) - c(0.0, 0.5)).norm() < 1e-15);
        assert!((d.coeff(-1) - c(0.0, -0.5)).norm() < 1e-15);
        let dd = spectral_derivative(&d);
        assert!((dd.coeff(1) - c(-0.5, 0.0)).norm() < 1e-15);
        let mut k = SpectralState::zeros(4).unwrap();
        k.set_coeff(0, c(3.0, 0.0));
        assert_eq!(spectral_derivative(&k).coeff_energy(), 0.0);
    }

    #[test]
    fn galerkin_square_of_cosine() {
        let a = 0.7;
        let mut s = SpectralState::zeros(5).unwrap();
        s.set_coeff(1, c(a, 0.0));
        for v in [galerkin_square_direct(&s), galerkin_square(&s)] {
            assert!((v.coeff(0) - c(2.0 * a * a, 0.0)).norm() < 1e-14);
            assert!((v.coeff(2) - c(a * a, 0.0)).norm() < 1e-14);
            assert!((v.coeff(-2) - c(a * a, 0.0)).norm() < 1e-14);
            for xi in [1, 3, 4, 5] {
                assert!(v.coeff(xi).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn galerkin_square_trivial_cases() {
        let z = SpectralState::zeros(6).unwrap();
        assert_eq!(galerkin_square(&z).coeff_energy(), 0.0);
        let mut k = SpectralState::zeros(6).unwrap();
        k.set_coeff(0, c(-1.5, 0.0));
        let v = galerkin_square(&k);
        assert!((v.coeff(0) - c(2.25, 0.0)).norm() < 1e-14);
        assert!(v.coeff_energy() - 2.25f64.powi(2) < 1e-13);
    }

    #[test]
    fn galerkin_single_mode_truncates() {
        // u = 2 cos x with N = 1: the ξ = ±2 part of u² is dropped.
        let mut s = SpectralState::zeros(1).unwrap();
        s.set_coeff(1, c(1.0, 0.0));
        let v = galerkin_square(&s);
        assert!((v.coeff(0) - c(2.0, 0.0)).norm() < 1e-14);
        assert!(v.coeff(1).norm() < 1e-14);
    }

    #[test]
    fn from_coeffs_symmetrises() {
        let raw = vec![c(1.0, 1.0), c(2.0, 3.0), c(3.0, -1.0)];
        let s = SpectralState::from_coeffs(1, raw, 0.0).unwrap();
        assert_eq!(s.coeff(0), c(2.0, 0.0));
        assert_eq!(s.coeff(1), c(2.0, -1.0));
        assert_eq!(s.coeff(-1), c(2.0, 1.0));
        assert!(matches!(
            SpectralState::from_coeffs(2, vec![c(0.0, 0.0); 3], 0.0),
            Err(FourierError::LengthMismatch { .. })
        ));
        assert_eq!(SpectralState::zeros(0), Err(FourierError::NoModes));
    }

    #[test]
    fn friendly_lengths() {
        assert_eq!(fft_friendly_len(769), 864);
        assert_eq!(fft_friendly_len(1024), 1024);
        assert_eq!(fft_friendly_len(13), 16);
        assert!(padded_len(256, 256) >= 3 * 256 + 1);
    }
}
