//! Switching instants of the steady-state response to `A sin(w t)`.
//!
//! Everything here works with angles `theta = w t`; the public solvers
//! return times in seconds. With `G`, `phi` the filter gain and phase:
//!
//! * gain-to-integrator switch `a = w eps` solves
//!   `w_h sin a = k G w cos(a + phi)`;
//! * integrator-to-gain switch `g = w gamma` is the first upward crossing of
//!   `h(theta) = x0 + w_h (cos a - cos theta) / w - k_t G sin(theta + phi)`,
//!   where `x0` is the value the integrator starts from and `k_t` the gain of
//!   the line it runs into.

use log::debug;

use crate::scalar::Real;

use super::{DfError, Harmonic, SimplifiedFhigs};

/// Order of the modes over a half period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SwitchCase {
    /// Non-negative filter phase: k1-gain, integrator, k2-gain, k1-gain.
    Lead,
    /// Negative phase with the k1-gain mode reached: k2-gain, integrator,
    /// k1-gain, k2-gain.
    LagWithK1,
    /// Negative phase without a k1-gain interval: integrator from the zero
    /// crossing of `v2`, then k2-gain.
    LagNoK1,
}

impl SwitchCase {
    pub fn tag(self) -> &'static str {
        match self {
            SwitchCase::Lead => "lead",
            SwitchCase::LagWithK1 => "lag_k1",
            SwitchCase::LagNoK1 => "lag_nok1",
        }
    }
}

impl std::fmt::Display for SwitchCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

impl std::str::FromStr for SwitchCase {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lead" => Ok(Self::Lead),
            "lag_k1" => Ok(Self::LagWithK1),
            "lag_nok1" => Ok(Self::LagNoK1),
            other => Err(format!("unknown case '{other}'")),
        }
    }
}

/// Solved switching times (seconds) for one frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchingInstants<T> {
    pub epsilon: T,
    pub gamma: T,
    pub case: SwitchCase,
    pub omega: T,
}

impl<T: Real> SwitchingInstants<T> {
    /// `w eps`.
    pub fn a(&self) -> T {
        self.omega * self.epsilon
    }

    /// `w gamma`.
    pub fn g(&self) -> T {
        self.omega * self.gamma
    }
}

/// Roles of the gains in the integrator interval of a half period.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Roles<T> {
    /// Gain of the line the integrator runs into.
    pub k_target: T,
    /// Value of `x_h / A` when the integrator starts.
    pub start: T,
    /// Latest admissible `g`.
    pub end: T,
    /// `h(a) = 0`: the integrator starts on the line it runs into.
    pub start_on_target: bool,
}

impl<T: Real> Harmonic<T> {
    pub(crate) fn case(&self) -> SwitchCase {
        if self.phase >= T::zero() {
            return SwitchCase::Lead;
        }
        // the k2 -> integrator switch lies in [0, -phi] iff the defining
        // function has changed sign by -phi (it is negative at 0)
        if self.eps_fn(self.k2, -self.phase) >= T::zero() {
            SwitchCase::LagWithK1
        } else {
            SwitchCase::LagNoK1
        }
    }

    /// `w_h sin(theta) - k G w cos(theta + phi)`.
    #[inline]
    pub(crate) fn eps_fn(&self, k: T, theta: T) -> T {
        self.omega_h * theta.sin() - k * self.gain * self.omega * (theta + self.phase).cos()
    }

    fn eps_gain(&self, case: SwitchCase) -> Option<T> {
        match case {
            SwitchCase::Lead => Some(self.k1),
            SwitchCase::LagWithK1 => Some(self.k2),
            SwitchCase::LagNoK1 => None,
        }
    }

    pub(crate) fn roles(&self, case: SwitchCase, a: T) -> Roles<T> {
        let (ks, kt, end) = match case {
            SwitchCase::Lead => (self.k1, self.k2, T::PI() - self.phase),
            SwitchCase::LagWithK1 => (self.k2, self.k1, -self.phase),
            SwitchCase::LagNoK1 => (self.k2, self.k2, T::PI() - self.phase),
        };
        let start = ks * self.gain * (a + self.phase).sin();
        let h_a = start - kt * self.gain * (a + self.phase).sin();
        let size = start.abs() + kt.abs() * self.gain + self.omega_h / self.omega;
        Roles { k_target: kt, start, end, start_on_target: h_a.abs() <= T::tol(1e-12) * size }
    }

    /// `h(theta)` for the integrator interval starting at `a`.
    #[inline]
    pub(crate) fn gamma_fn(&self, r: &Roles<T>, a: T, theta: T) -> T {
        r.start + self.omega_h * (a.cos() - theta.cos()) / self.omega - r.k_target * self.gain * (theta + self.phase).sin()
    }

    /// `w h'(theta)`, non-negative at an outward crossing.
    #[inline]
    fn gamma_slope(&self, r: &Roles<T>, theta: T) -> T {
        self.eps_fn(r.k_target, theta)
    }

    /// Time resolution (seconds) with which any root finder can locate
    /// `g`: evaluation noise of `h` over its slope there.
    pub(crate) fn gamma_resolution(&self, case: SwitchCase, a: T, g: T) -> T {
        let r = self.roles(case, a);
        let size = r.start.abs() + r.k_target.abs() * self.gain + T::lit(2.0) * self.omega_h / self.omega;
        T::epsilon() * T::lit(64.0) * size / self.gamma_slope(&r, g).abs()
    }

    /// Scale of the rate-form equations, used for relative tolerances.
    pub(crate) fn rate_scale(&self) -> T {
        self.omega_h + self.k1.abs().max(self.k2.abs()) * self.gain * self.omega
    }

    pub(crate) fn a_closed(&self, case: SwitchCase) -> T {
        match self.eps_gain(case) {
            // tan a = k G w cos(phi) / (w_h + k G w sin(phi)); the same angle as
            // the arccos form, evaluated without its loss of accuracy near 0
            Some(k) => {
                let kgw = k * self.gain * self.omega;
                (kgw * self.phase.cos()).atan2(self.omega_h + kgw * self.phase.sin())
            }
            None => -self.phase,
        }
    }

    pub(crate) fn a_bisect(&self, case: SwitchCase) -> Option<T> {
        let k = self.eps_gain(case)?;
        let hi = match case {
            SwitchCase::Lead => T::FRAC_PI_2(),
            _ => -self.phase,
        };
        let f = |th: T| self.eps_fn(k, th);
        if f(T::zero()) > T::zero() || f(hi) < T::zero() {
            return None;
        }
        Some(bisect(f, T::zero(), hi))
    }

    /// Both roots of `Q cos + P sin = R` (the squared crossing condition),
    /// lifted above `a`; returns the first that is an outward crossing no
    /// later than the end of the interval.
    pub(crate) fn g_closed(&self, case: SwitchCase, a: T) -> Option<T> {
        let r = self.roles(case, a);
        if r.end - a <= T::tol(1e-12) {
            return Some(r.end);
        }
        let gw = self.gain * self.omega;
        let p = r.k_target * gw * self.phase.cos();
        let q = r.k_target * gw * self.phase.sin() + self.omega_h;
        if r.start_on_target {
            // a root is known, and the other follows from the sum-to-product
            // identity: tan(a/2 + theta/2) = P / Q
            let d = T::lit(2.0) * (p.atan2(q) - a);
            let two_pi = T::TAU();
            let d = d - two_pi * (d / two_pi).floor();
            let th = a + d;
            return (th <= r.end + T::tol(1e-9)).then(|| th.min(r.end));
        }
        let rr = self.omega * r.start + self.omega_h * a.cos();
        let den = p * p + q * q;
        let big_h = p * p * (den - rr * rr);
        let big_k = q * rr;
        let scale = self.rate_scale();
        if big_h < -T::tol(1e-12) * scale.powi(4) {
            debug!("gamma closed form: H = {big_h} < 0 at omega = {}", self.omega);
            return None;
        }
        let root = big_h.max(T::zero()).sqrt();
        let tol = T::tol(1e-9);
        let two_pi = T::TAU();
        let mut cands: Vec<T> = Vec::with_capacity(4);
        for sgn in [-T::one(), T::one()] {
            let c = ((big_k + sgn * root) / den).max(-T::one()).min(T::one());
            if p.abs() > T::tol(1e-12) * den.sqrt() {
                cands.push(((rr - q * c) / p).atan2(c));
            } else {
                let s = (T::one() - c * c).max(T::zero()).sqrt();
                cands.push(s.atan2(c));
                cands.push((-s).atan2(c));
            }
        }
        let mut best: Option<T> = None;
        for th in cands {
            let d = th - a;
            let mut d = d - two_pi * (d / two_pi).floor();
            if d <= tol || two_pi - d <= tol {
                d = two_pi;
            }
            let th = a + d;
            let admissible = th <= r.end + tol && self.gamma_slope(&r, th) >= -tol * scale;
            if admissible && best.is_none_or(|b| th < b) {
                best = Some(th);
            }
        }
        best.map(|th| th.min(r.end))
    }

    /// First upward sign change of `h` on `(a, end]`, by a uniform scan
    /// followed by bisection.
    pub(crate) fn g_bisect(&self, case: SwitchCase, a: T) -> Option<T> {
        let r = self.roles(case, a);
        if r.end - a <= T::tol(1e-12) {
            return Some(r.end);
        }
        let f = |th: T| self.gamma_fn(&r, a, th);
        let n = 4096;
        let step = (r.end - a) / T::from_count(n);
        if !(step > T::zero()) {
            return None;
        }
        let mut lo = a + step;
        let mut f_lo = f(lo);
        if r.start_on_target && f_lo >= T::zero() {
            // h leaves zero downwards at `a`; a root inside the first cell
            // needs a negative probe closer to `a`
            let mut d = step;
            for _ in 0..60 {
                d = d * T::lit(0.5);
                if f(a + d) < T::zero() {
                    return Some(bisect(f, a + d, lo));
                }
            }
            if self.gamma_slope(&r, a) >= T::zero() {
                return Some(a);
            }
        }
        for i in 2..=n {
            let hi = if i == n { r.end } else { a + step * T::from_count(i) };
            let f_hi = f(hi);
            if f_lo < T::zero() && f_hi >= T::zero() {
                return Some(bisect(f, lo, hi));
            }
            lo = hi;
            f_lo = f_hi;
        }
        None
    }
}

/// Bisection for an upward root of `f` on `[lo, hi]` with `f(lo) <= 0 <=
/// f(hi)`, to `1e-14 pi` in angle.
fn bisect<T: Real>(f: impl Fn(T) -> T, mut lo: T, mut hi: T) -> T {
    let tol = T::tol(1e-14) * T::PI();
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = (lo + hi) * T::lit(0.5);
        if f(mid) < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo + hi) * T::lit(0.5)
}

pub fn select_case<T: Real>(elem: &SimplifiedFhigs<T>, omega: T) -> Result<SwitchCase, DfError> {
    Ok(elem.harmonic(omega)?.case())
}

/// Closed-form `eps` (seconds).
pub fn epsilon_closed_form<T: Real>(elem: &SimplifiedFhigs<T>, omega: T, case: SwitchCase) -> Result<T, DfError> {
    Ok(elem.harmonic(omega)?.a_closed(case) / omega)
}

/// Bracketed bisection for `eps` (seconds); `None` for the case without a
/// defining equation or when the bracket holds no root.
pub fn epsilon_bisection<T: Real>(elem: &SimplifiedFhigs<T>, omega: T, case: SwitchCase) -> Result<Option<T>, DfError> {
    Ok(elem.harmonic(omega)?.a_bisect(case).map(|a| a / omega))
}

/// Residual of the `eps` equation in rate units, `w_h sin(w eps) - k G w cos(w eps + phi)`.
pub fn epsilon_residual<T: Real>(elem: &SimplifiedFhigs<T>, omega: T, case: SwitchCase, eps: T) -> Result<T, DfError> {
    let h = elem.harmonic(omega)?;
    Ok(match h.eps_gain(case) {
        Some(k) => h.eps_fn(k, omega * eps),
        None => omega * eps + h.phase,
    })
}

pub fn solve_epsilon<T: Real>(elem: &SimplifiedFhigs<T>, omega: T, case: SwitchCase) -> Result<T, DfError> {
    let h = elem.harmonic(omega)?;
    Ok(h.a_closed(case) / omega)
}

/// Closed-form `gamma` (seconds) if the quadratic has an admissible root.
pub fn gamma_closed_form<T: Real>(elem: &SimplifiedFhigs<T>, omega: T, eps: T, case: SwitchCase) -> Result<Option<T>, DfError> {
    Ok(elem.harmonic(omega)?.g_closed(case, omega * eps).map(|g| g / omega))
}

pub fn gamma_bisection<T: Real>(elem: &SimplifiedFhigs<T>, omega: T, eps: T, case: SwitchCase) -> Result<Option<T>, DfError> {
    Ok(elem.harmonic(omega)?.g_bisect(case, omega * eps).map(|g| g / omega))
}

/// Residual of the `gamma` equality in rate units (`w h(w gamma)`).
pub fn gamma_residual<T: Real>(elem: &SimplifiedFhigs<T>, omega: T, eps: T, gamma: T, case: SwitchCase) -> Result<T, DfError> {
    let h = elem.harmonic(omega)?;
    let a = omega * eps;
    let r = h.roles(case, a);
    Ok(omega * h.gamma_fn(&r, a, omega * gamma))
}

/// `gamma` from the closed form, falling back to the root finder when the
/// closed form has no admissible root.
pub fn solve_gamma<T: Real>(elem: &SimplifiedFhigs<T>, omega: T, eps: T, case: SwitchCase) -> Result<T, DfError> {
    let h = elem.harmonic(omega)?;
    let a = omega * eps;
    let g = match h.g_closed(case, a) {
        Some(g) => g,
        None => {
            debug!("gamma closed form unavailable at omega = {omega}, using the root finder");
            h.g_bisect(case, a).ok_or(DfError::NoRoot { what: "gamma", omega: omega.as_f64(), case: case.tag() })?
        }
    };
    Ok(g / omega)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::element::FhigsParams;
    use crate::lti::{tf_to_ss, TransferFunction};
    use std::f64::consts::PI;

    fn higs() -> SimplifiedFhigs<f64> {
        SimplifiedFhigs::higs(FhigsParams::integrator(0.0, 1.0, 100.0).unwrap()).unwrap()
    }

    fn lead_element() -> SimplifiedFhigs<f64> {
        let wf = 20.0 * PI;
        let f = TransferFunction::new(vec![9.0, 6.0 * wf], vec![4.0, 6.0 * wf]).unwrap();
        SimplifiedFhigs::new(FhigsParams::integrator(0.0, 1.0, 100.0).unwrap(), tf_to_ss(&f)).unwrap()
    }

    fn lowpass(w_lp: f64, k1: f64) -> SimplifiedFhigs<f64> {
        let f = TransferFunction::new(vec![w_lp], vec![1.0, w_lp]).unwrap();
        SimplifiedFhigs::new(FhigsParams::integrator(k1, 1.0, 100.0).unwrap(), tf_to_ss(&f)).unwrap()
    }

    #[test]
    fn case_selection() {
        assert_eq!(select_case(&higs(), 10.0).unwrap(), SwitchCase::Lead);
        assert_eq!(select_case(&lead_element(), 8.0 * PI).unwrap(), SwitchCase::Lead);
        assert_eq!(select_case(&lowpass(20.0 * PI, 0.2), 20.0 * PI).unwrap(), SwitchCase::LagWithK1);
        assert_eq!(select_case(&lowpass(80.0 * PI, 0.2), 20.0 * PI).unwrap(), SwitchCase::LagNoK1);
    }

    #[test]
    fn higs_epsilon_is_zero() {
        assert_eq!(solve_epsilon(&higs(), 50.0, SwitchCase::Lead).unwrap(), 0.0);
    }

    #[test]
    fn no_k1_epsilon_is_minus_phase() {
        let el = lowpass(80.0 * PI, 0.0);
        let w = 20.0 * PI;
        let phi = -(w / (80.0 * PI)).atan();
        let eps = solve_epsilon(&el, w, SwitchCase::LagNoK1).unwrap();
        assert!((eps - (-phi / w)).abs() < 1e-15);
    }

    #[test]
    fn higs_gamma_closed_matches_bisection() {
        let el = higs();
        for w in [1.0, 10.0, 100.0, 1000.0] {
            let g1 = gamma_closed_form(&el, w, 0.0, SwitchCase::Lead).unwrap().unwrap();
            let g2 = gamma_bisection(&el, w, 0.0, SwitchCase::Lead).unwrap().unwrap();
            assert!((g1 - g2).abs() * w < 1e-12, "w = {w}: {g1} vs {g2}");
            assert!(gamma_residual(&el, w, 0.0, g1, SwitchCase::Lead).unwrap().abs() < 1e-10 * 100.0);
        }
    }

    #[test]
    fn lead_closed_forms_match_bisection() {
        let el = lead_element();
        let w = 8.0 * PI;
        let case = select_case(&el, w).unwrap();
        let e1 = solve_epsilon(&el, w, case).unwrap();
        let e2 = epsilon_bisection(&el, w, case).unwrap().unwrap();
        assert!((e1 - e2).abs() < 1e-12);
        let g1 = gamma_closed_form(&el, w, e1, case).unwrap().unwrap();
        let g2 = gamma_bisection(&el, w, e1, case).unwrap().unwrap();
        assert!((g1 - g2).abs() < 1e-12);
    }

    #[test]
    fn lag_closed_forms_match_bisection() {
        for (el, case) in [(lowpass(20.0 * PI, 0.2), SwitchCase::LagWithK1), (lowpass(80.0 * PI, 0.2), SwitchCase::LagNoK1)] {
            let w = 20.0 * PI;
            assert_eq!(select_case(&el, w).unwrap(), case);
            let e = solve_epsilon(&el, w, case).unwrap();
            assert!(epsilon_residual(&el, w, case, e).unwrap().abs() < 1e-8);
            let g1 = gamma_closed_form(&el, w, e, case).unwrap().unwrap();
            let g2 = gamma_bisection(&el, w, e, case).unwrap().unwrap();
            assert!((g1 - g2).abs() < 1e-12, "{case}: {g1} vs {g2}");
            assert!(e <= g1);
        }
    }

    #[test]
    fn case_tags_round_trip() {
        for c in [SwitchCase::Lead, SwitchCase::LagWithK1, SwitchCase::LagNoK1] {
            assert_eq!(c.tag().parse::<SwitchCase>().unwrap(), c);
        }
    }
}
