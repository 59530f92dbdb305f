use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::legendre::GaussLegendre;

use crate::scalar::Real;

use super::response::PiecewiseResponse;
use super::switching::SwitchCase;

/// Gauss-Legendre points per smooth segment.
pub const QUADRATURE_POINTS: usize = 64;

fn rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = NonZeroUsize::new(QUADRATURE_POINTS).expect("nonzero");
        GaussLegendre::new(n).as_node_weight_pairs().to_vec()
    })
}

/// `(a_k, b_k)` of `x_h` by per-segment Gauss-Legendre quadrature:
/// `a_k = (1/pi) int_0^{2 pi} x(theta) cos(k theta) d theta`, and `b_k` with `sin`.
pub fn fourier_quadrature<T: Real>(resp: &PiecewiseResponse<T>, k: usize) -> (T, T) {
    let kk = T::from_count(k);
    let (mut a, mut b) = (T::zero(), T::zero());
    for seg in &resp.segments {
        let half = (seg.theta_end - seg.theta_start) * T::lit(0.5);
        let mid = (seg.theta_end + seg.theta_start) * T::lit(0.5);
        for &(x, w) in rule() {
            let th = mid + half * T::lit(x);
            let v = resp.segment_value(seg, th) * T::lit(w) * half;
            a = a + v * (kk * th).cos();
            b = b + v * (kk * th).sin();
        }
    }
    (a * resp.amplitude / T::PI(), b * resp.amplitude / T::PI())
}

/// Closed-form first harmonic for the lead case, with `eps`, `gamma` in
/// seconds. Returns `None` for the other cases.
pub fn first_harmonic_closed_form<T: Real>(resp: &PiecewiseResponse<T>) -> Option<(T, T)> {
    if resp.case() != SwitchCase::Lead {
        return None;
    }
    let (w, wh, g, phi) = (resp.omega, resp.omega_h, resp.gain, resp.phase);
    let (k1, k2) = (resp.k1, resp.k2);
    let (e, gm) = (resp.instants.epsilon, resp.instants.gamma);
    let (we, wg) = (w * e, w * gm);
    let two = T::lit(2.0);
    let pi = T::PI();
    let (c, s) = (|x: T| x.cos(), |x: T| x.sin());
    let big_a = g * k1 * w
        * (two * c(wg - we - phi) - two * c(wg + we + phi) + two * we * s(phi) + c(two * we + phi) + two * phi * s(phi) - c(phi))
        + g * k2 * w * (two * (-wg - phi + pi) * s(phi) + c(two * wg + phi) - c(phi))
        - two * wh * (c(we) * (s(we) - two * s(wg)) + wg + s(wg) * c(wg) - we);
    let big_b = g * k1 * w * ((c(we) - two * c(wg)) * s(we + phi) + (we + phi) * c(phi))
        + g * k2 * w * ((-wg - phi + pi) * c(phi) + c(wg) * s(wg + phi))
        + wh * (c(wg) - c(we)).powi(2);
    let a1 = big_a / (two * pi * w);
    let b1 = big_b / (pi * w);
    Some((a1 * resp.amplitude, b1 * resp.amplitude))
}

/// `(a_k, b_k)`: zero for even `k`, the closed form for the lead first
/// harmonic, quadrature otherwise.
pub fn fourier_coefficients<T: Real>(resp: &PiecewiseResponse<T>, k: usize) -> (T, T) {
    if k.is_multiple_of(2) {
        return (T::zero(), T::zero());
    }
    if k == 1 {
        if let Some(ab) = first_harmonic_closed_form(resp) {
            return ab;
        }
    }
    fourier_quadrature(resp, k)
}
