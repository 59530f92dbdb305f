use crate::element::Mode;
use crate::scalar::Real;

use super::switching::{solve_epsilon, solve_gamma, SwitchCase, SwitchingInstants};
use super::{DfError, SimplifiedFhigs};

#[derive(Debug, Clone, Copy, PartialEq)]
enum Shape<T> {
    /// `k G sin(theta + phi)`.
    Gain { k: T },
    /// `sign (start + w_h (cos a - cos(theta - shift)) / w)`.
    Integrator { sign: T, start: T, a: T, shift: T },
}

/// One smooth piece of the periodic response, in angle `theta = w t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment<T> {
    pub theta_start: T,
    pub theta_end: T,
    pub kind: Mode,
    shape: Shape<T>,
}

/// Steady-state response `x_h(t)` to `A sin(w t)` over one period.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseResponse<T> {
    pub omega: T,
    pub amplitude: T,
    pub omega_h: T,
    pub k1: T,
    pub k2: T,
    /// Filter gain and phase at `omega`.
    pub gain: T,
    pub phase: T,
    pub instants: SwitchingInstants<T>,
    /// Ordered segments tiling `[0, 2 pi)` in angle.
    pub segments: Vec<Segment<T>>,
}

impl<T: Real> Segment<T> {
    pub fn t_start(&self, omega: T) -> T {
        self.theta_start / omega
    }

    pub fn t_end(&self, omega: T) -> T {
        self.theta_end / omega
    }
}

impl<T: Real> PiecewiseResponse<T> {
    pub fn case(&self) -> SwitchCase {
        self.instants.case
    }

    pub fn period(&self) -> T {
        T::TAU() / self.omega
    }

    /// `x_h / A` on the given segment.
    #[inline]
    pub fn segment_value(&self, seg: &Segment<T>, theta: T) -> T {
        match seg.shape {
            Shape::Gain { k } => k * self.gain * (theta + self.phase).sin(),
            Shape::Integrator { sign, start, a, shift } => {
                sign * (start + self.omega_h * (a.cos() - (theta - shift).cos()) / self.omega)
            }
        }
    }

    /// `x_h` at angle `theta` (any real; reduced modulo `2 pi`).
    pub fn eval_theta(&self, theta: T) -> T {
        let th = wrap(theta);
        let i = self.segments.partition_point(|s| s.theta_end <= th).min(self.segments.len() - 1);
        self.amplitude * self.segment_value(&self.segments[i], th)
    }

    pub fn eval(&self, t: T) -> T {
        self.eval_theta(self.omega * t)
    }

    pub fn mode_at(&self, t: T) -> Mode {
        let th = wrap(self.omega * t);
        let i = self.segments.partition_point(|s| s.theta_end <= th).min(self.segments.len() - 1);
        self.segments[i].kind
    }

    /// Largest relative jump of `x_h` between consecutive segments,
    /// including the wrap from `2 pi` back to 0.
    pub fn continuity_defect(&self) -> T {
        let scale = self.peak().max(T::min_positive_value());
        let n = self.segments.len();
        let mut worst = T::zero();
        for i in 0..n {
            let (s, next) = (&self.segments[i], &self.segments[(i + 1) % n]);
            let left = self.segment_value(s, s.theta_end);
            let right_theta = if i + 1 == n { next.theta_start + T::TAU() } else { next.theta_start };
            let right = self.segment_value(next, right_theta);
            worst = worst.max((left - right).abs() * self.amplitude / scale);
        }
        worst
    }

    /// Largest `|x(theta + pi) + x(theta)|` on a uniform grid of `n` points,
    /// relative to the amplitude.
    pub fn symmetry_defect(&self, n: usize) -> T {
        (0..n)
            .map(|i| {
                let th = T::TAU() * T::from_count(i) / T::from_count(n);
                (self.eval_theta(th + T::PI()) + self.eval_theta(th)).abs()
            })
            .fold(T::zero(), T::max)
            / self.amplitude
    }

    /// Whether the segments tile `[0, 2 pi)` without gaps.
    pub fn tiles_period(&self) -> bool {
        let tol = T::tol(1e-12) * T::TAU();
        let first_ok = self.segments.first().is_some_and(|s| s.theta_start.abs() <= tol);
        let last_ok = self.segments.last().is_some_and(|s| (s.theta_end - T::TAU()).abs() <= tol);
        first_ok && last_ok && self.segments.windows(2).all(|w| (w[0].theta_end - w[1].theta_start).abs() <= tol)
    }

    /// Largest `|x_h|` over the segments' end points and a fine grid.
    pub fn peak(&self) -> T {
        let n = 2048;
        (0..n)
            .map(|i| self.eval_theta(T::TAU() * T::from_count(i) / T::from_count(n)).abs())
            .fold(T::zero(), T::max)
    }
}

/// Builds the half period of each case and mirrors it with
/// `x(theta + pi) = -x(theta)`.
pub(crate) fn build_segments<T: Real>(case: SwitchCase, a: T, g: T, k1: T, k2: T, phi: T, start: T) -> Vec<Segment<T>> {
    let pi = T::PI();
    let gain = |k: T, kind: Mode, t0: T, t1: T| Segment { theta_start: t0, theta_end: t1, kind, shape: Shape::Gain { k } };
    let integ = |t0: T, t1: T| Segment {
        theta_start: t0,
        theta_end: t1,
        kind: Mode::Integrator,
        shape: Shape::Integrator { sign: T::one(), start, a, shift: T::zero() },
    };
    let half = match case {
        SwitchCase::Lead => vec![
            gain(k1, Mode::GainK1, T::zero(), a),
            integ(a, g),
            gain(k2, Mode::GainK2, g, pi - phi),
            gain(k1, Mode::GainK1, pi - phi, pi),
        ],
        SwitchCase::LagWithK1 => vec![
            gain(k2, Mode::GainK2, T::zero(), a),
            integ(a, g),
            gain(k1, Mode::GainK1, g, -phi),
            gain(k2, Mode::GainK2, -phi, pi),
        ],
        SwitchCase::LagNoK1 => vec![integ(a, g), gain(k2, Mode::GainK2, g, pi - phi)],
    };
    let mirrored = half.iter().map(|s| Segment {
        theta_start: s.theta_start + pi,
        theta_end: s.theta_end + pi,
        kind: s.kind,
        shape: match s.shape {
            Shape::Integrator { sign, start, a, shift } => Shape::Integrator { sign: -sign, start, a, shift: shift + pi },
            g => g,
        },
    });
    let two_pi = T::TAU();
    let mut out = Vec::new();
    for s in half.iter().copied().chain(mirrored) {
        if !(s.theta_end > s.theta_start) {
            continue;
        }
        if s.theta_end <= two_pi {
            out.push(s);
        } else if s.theta_start >= two_pi {
            out.push(Segment { theta_start: s.theta_start - two_pi, theta_end: s.theta_end - two_pi, ..s });
        } else {
            out.push(Segment { theta_end: two_pi, ..s });
            out.push(Segment { theta_start: T::zero(), theta_end: s.theta_end - two_pi, ..s });
        }
    }
    out.sort_by(|x, y| x.theta_start.partial_cmp(&y.theta_start).unwrap_or(std::cmp::Ordering::Equal));
    out
}

/// Analytic steady-state response to `A sin(w t)`.
/// Reduces an angle into `[0, 2 pi)`.
fn wrap<T: Real>(theta: T) -> T {
    let tau = T::TAU();
    let r = theta - tau * (theta / tau).floor();
    if r >= tau { T::zero() } else { r }
}

pub fn steady_state_analytic<T: Real>(elem: &SimplifiedFhigs<T>, omega: T, amplitude: T) -> Result<PiecewiseResponse<T>, DfError> {
    if !(amplitude > T::zero() && amplitude.is_finite()) {
        return Err(DfError::BadAmplitude(amplitude.as_f64()));
    }
    let h = elem.harmonic(omega)?;
    let case = h.case();
    let eps = solve_epsilon(elem, omega, case)?;
    let gamma = solve_gamma(elem, omega, eps, case)?;
    let (a, g) = (omega * eps, omega * gamma);
    let roles = h.roles(case, a);
    let segments = build_segments(case, a, g, h.k1, h.k2, h.phase, roles.start);
    Ok(PiecewiseResponse {
        omega,
        amplitude,
        omega_h: h.omega_h,
        k1: h.k1,
        k2: h.k2,
        gain: h.gain,
        phase: h.phase,
        instants: SwitchingInstants { epsilon: eps, gamma, case, omega },
        segments,
    })
}
