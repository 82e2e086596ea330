//! Panel Gauss–Legendre quadrature for the singular, oscillatory integrals
//! behind the Lévy symbol: graded panels at the origin, uniform panels over
//! the oscillatory bulk and asymptotic integration-by-parts tails.

use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::GaussLegendre;

const HIGH_ORDER: usize = 16;
const LOW_ORDER: usize = 10;

fn rules() -> &'static (GaussLegendre, GaussLegendre) {
    static RULES: OnceLock<(GaussLegendre, GaussLegendre)> = OnceLock::new();
    RULES.get_or_init(|| {
        (
            GaussLegendre::new(NonZeroUsize::new(HIGH_ORDER).unwrap()),
            GaussLegendre::new(NonZeroUsize::new(LOW_ORDER).unwrap()),
        )
    })
}

/// Integral over one panel with the 16-point rule, plus the difference to
/// the 10-point rule as an error estimate.
pub fn panel(a: f64, b: f64, f: &mut impl FnMut(f64) -> f64) -> (f64, f64) {
    let (high, low) = rules();
    let fine = high.integrate(a, b, &mut *f);
    let coarse = low.integrate(a, b, &mut *f);
    (fine, (fine - coarse).abs())
}

/// Sums [`panel`] over consecutive breakpoints.
pub fn panels(breaks: &[f64], f: &mut impl FnMut(f64) -> f64) -> (f64, f64) {
    breaks
        .windows(2)
        .map(|w| panel(w[0], w[1], f))
        .fold((0.0, 0.0), |(v, e), (pv, pe)| (v + pv, e + pe))
}

/// Geometric panels `[h 2^{-k-1}, h 2^{-k}]`, `k = 0..levels`, in
/// increasing order; the first entry is the uncovered stub `h 2^{-levels}`.
pub fn dyadic_breaks(h: f64, levels: u32) -> Vec<f64> {
    (0..=levels)
        .rev()
        .map(|k| h * 0.5f64.powi(k as i32))
        .collect()
}

/// `∫_S^∞ cos(ξs) s^{-α} ds` and `∫_S^∞ sin(ξs) s^{-α} ds` by repeated
/// integration by parts. Accurate when `ξS` is large compared with `α`
/// plus the number of terms.
pub fn oscillatory_tail(xi: f64, start: f64, alpha: f64) -> (f64, f64) {
    fn go(xi: f64, s: f64, alpha: f64, depth: u32) -> (f64, f64) {
        if depth == 0 {
            return (0.0, 0.0);
        }
        let (c_next, s_next) = go(xi, s, alpha + 1.0, depth - 1);
        let (sin, cos) = (xi * s).sin_cos();
        let pw = s.powf(-alpha);
        let ic = -sin * pw / xi + alpha / xi * s_next;
        let is = cos * pw / xi - alpha / xi * c_next;
        (ic, is)
    }
    go(xi, start, alpha, 14)
}
