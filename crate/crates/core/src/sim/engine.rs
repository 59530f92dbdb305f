//! Shared fixed-step RK4 integrator with bisection event localization.
//!
//! Three vector fields are supported: the three-mode piecewise-linear
//! realization (mode held fixed between events), the projected field (the
//! projection operator evaluated at every stage, with the active line
//! frozen per step), and the plain unprojected linear dynamics.

use crate::element::{Fhigs, Line, Mode, PwlRealization};
use crate::linalg::dot;
use crate::lti::StateSpace;
use crate::scalar::Real;

use super::trajectory::{Event, Sample, SimStats, Trajectory};
use super::{InputSignal, SimConfig, SimError, MAX_EVENTS_PER_STEP, MIN_STEP_DIVISOR};

/// Relative slack before an integrator-mode state counts as outside.
const OUTSIDE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Field {
    Pwl,
    Projected,
    Linear,
}

/// Plant or output filter driven by `x_h`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Downstream<'a, T> {
    pub ss: &'a StateSpace<T>,
    /// Close the loop with `e = r - C_p x_p`.
    pub feedback: bool,
    /// Direct path from `e` added to `x_h` at the downstream input.
    pub proportional: T,
}

pub(crate) struct Engine<'a, T> {
    pub el: &'a Fhigs<T>,
    pub pwl: &'a PwlRealization<T>,
    pub down: Option<Downstream<'a, T>>,
    pub input: &'a InputSignal<T>,
    pub field: Field,
}

struct Scratch<T> {
    k: [Vec<T>; 4],
    stage: Vec<T>,
    snap: Vec<T>,
}

impl<T: Real> Scratch<T> {
    fn new(n: usize) -> Self {
        Self {
            k: [vec![T::zero(); n], vec![T::zero(); n], vec![T::zero(); n], vec![T::zero(); n]],
            stage: vec![T::zero(); n],
            snap: vec![T::zero(); n],
        }
    }
}

impl<'a, T: Real> Engine<'a, T> {
    #[inline]
    fn nc(&self) -> usize {
        self.el.dim()
    }

    fn dim(&self) -> usize {
        self.nc() + self.down.map_or(0, |d| d.ss.order())
    }

    /// `(e, e_dot)` at `(t, z)`.
    #[inline]
    fn error(&self, t: T, z: &[T]) -> (T, T) {
        let (r, r_dot) = (self.input.value(t), self.input.derivative(t));
        match self.down {
            Some(d) if d.feedback => {
                let xp = &z[self.nc()..];
                let y = dot(d.ss.c(), xp);
                let y_dot = d.ss.output_rate_free(xp, T::zero());
                (r - y, r_dot - y_dot)
            }
            _ => (r, r_dot),
        }
    }

    /// Input of the downstream system.
    #[inline]
    fn drive(&self, d: &Downstream<'a, T>, e: T, z: &[T]) -> T {
        z[0] + d.proportional * e
    }

    fn output(&self, e: T, z: &[T]) -> T {
        match self.down {
            Some(d) => d.ss.output(&z[self.nc()..], self.drive(&d, e, z)),
            None => z[0],
        }
    }

    fn field_into(&self, t: T, z: &[T], mode: Mode, frozen: Option<(Line, T)>, snap: &mut [T], out: &mut [T]) -> Result<(), SimError> {
        let nc = self.nc();
        let (e, e_dot) = self.error(t, z);
        let (xc, oc) = (&z[..nc], &mut out[..nc]);
        match self.field {
            Field::Pwl => self.pwl.derivative_into(mode, xc, e, e_dot, oc),
            Field::Linear => self.el.unprojected_into(xc, e, oc),
            Field::Projected => match frozen {
                // no constraint active over this step: the projection is the identity
                None => self.el.unprojected_into(xc, e, oc),
                Some((line, _)) => {
                    let sc = &mut snap[..nc];
                    sc.copy_from_slice(xc);
                    sc[0] = self.el.params.gain(line) * self.el.v2(xc, e);
                    self.el.unprojected_into(sc, e, oc);
                    self.el.project_frozen(sc, e, e_dot, oc, frozen)?;
                }
            },
        }
        if let Some(d) = self.down {
            d.ss.state_derivative_into(&z[nc..], self.drive(&d, e, z), &mut out[nc..]);
        }
        Ok(())
    }

    /// Active line and orientation held fixed over a sliding step.
    fn frozen(&self, t: T, z: &[T], mode: Mode) -> Option<(Line, T)> {
        let line = mode.line().filter(|_| self.field == Field::Projected)?;
        let (e, e_dot) = self.error(t, z);
        let s = self.el.signals(&z[..self.nc()], e, e_dot);
        Some((line, Fhigs::<T>::orientation(s.v2, s.v2_dot)))
    }

    fn rk4(&self, t: T, z: &[T], tau: T, mode: Mode, s: &mut Scratch<T>, out: &mut [T]) -> Result<(), SimError> {
        let half = tau * T::lit(0.5);
        let sigma = self.frozen(t, z, mode);
        let Scratch { k, stage, snap } = s;
        let [k1, k2, k3, k4] = k;
        self.field_into(t, z, mode, sigma, snap, k1)?;
        for i in 0..z.len() {
            stage[i] = z[i] + half * k1[i];
        }
        self.field_into(t + half, stage, mode, sigma, snap, k2)?;
        for i in 0..z.len() {
            stage[i] = z[i] + half * k2[i];
        }
        self.field_into(t + half, stage, mode, sigma, snap, k3)?;
        for i in 0..z.len() {
            stage[i] = z[i] + tau * k3[i];
        }
        self.field_into(t + tau, stage, mode, sigma, snap, k4)?;
        let sixth = tau / T::lit(6.0);
        for i in 0..z.len() {
            out[i] = z[i] + sixth * (k1[i] + (k2[i] + k3[i]) * T::lit(2.0) + k4[i]);
        }
        Ok(())
    }

    /// Whether the step ending in `z` at `t` has crossed an event surface
    /// for the regime `mode` it was integrated in.
    fn crossed(&self, t: T, z: &[T], mode: Mode, snap: &mut [T]) -> Result<bool, SimError> {
        if self.field == Field::Linear {
            return Ok(false);
        }
        let nc = self.nc();
        let (e, e_dot) = self.error(t, z);
        let xc = &z[..nc];
        match (self.field, mode.line()) {
            (_, None) => {
                let v2 = self.el.v2(xc, e);
                let d = (xc[0] - self.el.clamp_x_h(xc[0], v2)).abs();
                Ok(d > T::tol(OUTSIDE_TOL) * self.el.sector_scale(xc[0], v2))
            }
            (Field::Pwl, Some(line)) => {
                let s = self.el.signals(xc, e, e_dot);
                let k = self.el.params.gain(line);
                let sigma = if s.v2 != T::zero() { s.v2.signum() } else { s.v2_dot.signum() };
                let r = sigma * (k * s.v2_dot - s.flow);
                Ok(match line {
                    Line::K1 => !(r > T::zero()),
                    Line::K2 => !(r < T::zero()),
                })
            }
            (_, Some(line)) => {
                let sc = &mut snap[..nc];
                sc.copy_from_slice(xc);
                let v2 = self.el.v2(xc, e);
                sc[0] = self.el.params.gain(line) * v2;
                let mut vel = vec![T::zero(); nc];
                self.el.unprojected_into(sc, e, &mut vel);
                let (active, _) = self.el.project_in_place(sc, e, e_dot, &mut vel)?;
                Ok(active != Some(line))
            }
        }
    }

    /// Regime at an in-sector state: the classified mode, or the mode
    /// matching the projection's active line.
    fn regime(&self, e: T, e_dot: T, xc: &[T]) -> Result<Mode, SimError> {
        Ok(match self.field {
            Field::Linear => Mode::Integrator,
            Field::Pwl => self.el.classify_mode(xc, e, e_dot)?,
            Field::Projected => {
                let mut vel = vec![T::zero(); xc.len()];
                self.el.unprojected_into(xc, e, &mut vel);
                Mode::from_line(self.el.project_in_place(xc, e, e_dot, &mut vel)?.0)
            }
        })
    }

    /// Puts the controller part of `z` back into the sector, determines the
    /// regime to continue in and snaps onto its line. A line the free flow
    /// would reach within `reach` seconds is joined right away, so apex
    /// passages do not leave a sub-tolerance integrator interval behind.
    /// Returns the mode and the applied jump of `x_h`.
    fn settle(&self, t: T, z: &mut [T], reach: T) -> Result<(Mode, T), SimError> {
        if self.field == Field::Linear {
            return Ok((Mode::Integrator, T::zero()));
        }
        let nc = self.nc();
        let (e, e_dot) = self.error(t, z);
        let before = z[0];
        let xc = &mut z[..nc];
        let v2 = self.el.v2(xc, e);
        xc[0] = self.el.clamp_x_h(xc[0], v2);
        let mut mode = self.regime(e, e_dot, xc)?;
        if mode == Mode::Integrator && reach > T::zero() {
            let s = self.el.signals(xc, e, e_dot);
            for line in [Line::K1, Line::K2] {
                let k = self.el.params.gain(line);
                if (s.x_h - k * s.v2).abs() <= reach * (s.flow - k * s.v2_dot).abs() {
                    let keep = xc[0];
                    xc[0] = k * s.v2;
                    let m = self.regime(e, e_dot, xc)?;
                    if m.line() == Some(line) {
                        mode = m;
                        break;
                    }
                    xc[0] = keep;
                }
            }
        }
        if let Some(line) = mode.line() {
            xc[0] = self.el.params.gain(line) * v2;
        }
        Ok((mode, (z[0] - before).abs()))
    }

    fn sample(&self, t: T, z: &[T], mode: Mode) -> Sample<T> {
        let nc = self.nc();
        let (e, e_dot) = self.error(t, z);
        let xc = &z[..nc];
        Sample {
            t,
            e,
            e_dot,
            v1: self.el.f1.output(self.el.x_v1(xc), e),
            v2: self.el.v2(xc, e),
            x_h: z[0],
            mode,
            y: self.output(e, z),
        }
    }

    fn sector_violation(&self, s: &Sample<T>) -> T {
        match self.field {
            Field::Linear => T::zero(),
            _ => self.el.sector_violation(s.x_h, s.v2),
        }
    }

    pub fn run(&self, cfg: &SimConfig<T>, init: &[T]) -> Result<Trajectory<T>, SimError> {
        cfg.validate()?;
        let n = self.dim();
        if init.len() != n {
            return Err(SimError::Dimension(format!("initial state has length {}, expected {n}", init.len())));
        }
        let mut scratch = Scratch::new(n);
        let mut snap = vec![T::zero(); n];
        let mut z = init.to_vec();
        let (mut mode, _) = self.settle(T::zero(), &mut z, T::zero())?;
        let steps = cfg.steps();
        let mut tr = Trajectory {
            samples: Vec::with_capacity(steps / cfg.decimation + 2),
            ..Default::default()
        };
        let mut stats = SimStats::default();
        let record = |tr: &mut Trajectory<T>, stats: &mut SimStats<T>, t: T, z: &[T], mode: Mode| -> Result<(), SimError> {
            let s = self.sample(t, z, mode);
            let viol = self.sector_violation(&s);
            if viol > T::tol(crate::element::SECTOR_TOL) {
                return Err(SimError::SectorViolation { t: t.as_f64(), violation: viol.as_f64() });
            }
            stats.max_sector_violation = stats.max_sector_violation.max(viol);
            tr.samples.push(s);
            if cfg.record_states {
                tr.states.push(z.to_vec());
            }
            Ok(())
        };
        record(&mut tr, &mut stats, T::zero(), &z, mode)?;

        let mut next = vec![T::zero(); n];
        let mut probe = vec![T::zero(); n];
        for step in 0..steps {
            let t_end = cfg.h * T::from_count(step + 1);
            let mut t = cfg.h * T::from_count(step);
            let mut max_sub = cfg.h;
            let mut events_here = 0usize;
            while t < t_end {
                let tau = (t_end - t).min(max_sub);
                let tau = if t_end - (t + tau) < cfg.event_tol * T::lit(1e-3) { t_end - t } else { tau };
                self.rk4(t, &z, tau, mode, &mut scratch, &mut next)?;
                if !self.crossed(t + tau, &next, mode, &mut snap)? {
                    std::mem::swap(&mut z, &mut next);
                    t = if tau == t_end - t { t_end } else { t + tau };
                    if self.field != Field::Linear {
                        if let Some(line) = mode.line() {
                            let (e, _) = self.error(t, &z);
                            let target = self.el.params.gain(line) * self.el.v2(&z[..self.nc()], e);
                            stats.max_renormalization = stats.max_renormalization.max((z[0] - target).abs());
                            z[0] = target;
                        }
                    }
                    continue;
                }
                // bisect for the first crossing inside (0, tau]
                let (mut lo, mut hi) = (T::zero(), tau);
                while hi - lo > cfg.event_tol {
                    let mid = (lo + hi) * T::lit(0.5);
                    self.rk4(t, &z, mid, mode, &mut scratch, &mut probe)?;
                    if self.crossed(t + mid, &probe, mode, &mut snap)? {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                self.rk4(t, &z, hi, mode, &mut scratch, &mut next)?;
                std::mem::swap(&mut z, &mut next);
                t = t + hi;
                let (new_mode, jump) = self.settle(t, &mut z, cfg.event_tol * T::lit(2.0))?;
                stats.max_event_jump = stats.max_event_jump.max(jump);
                if new_mode != mode {
                    tr.events.push(Event { t, from: mode, to: new_mode });
                    mode = new_mode;
                }
                events_here += 1;
                if events_here > MAX_EVENTS_PER_STEP {
                    max_sub = max_sub * T::lit(0.5);
                    events_here = 0;
                    stats.halvings += 1;
                    if max_sub < cfg.h / T::from_count(MIN_STEP_DIVISOR) {
                        return Err(SimError::Chattering { t: t.as_f64(), events: MAX_EVENTS_PER_STEP });
                    }
                }
            }
            if z.iter().any(|v| !v.is_finite()) {
                return Err(SimError::NonFinite { t: t_end.as_f64() });
            }
            if (step + 1) % cfg.decimation == 0 || step + 1 == steps {
                record(&mut tr, &mut stats, t_end, &z, mode)?;
            }
        }
        stats.events = tr.events.len();
        tr.stats = stats;
        Ok(tr)
    }
}

fn initial_state<T: Real>(el: &Fhigs<T>, down: Option<&StateSpace<T>>, init: &[T]) -> Result<Vec<T>, SimError> {
    let nc = el.dim();
    let np = down.map_or(0, |d| d.order());
    if init.len() == nc + np {
        Ok(init.to_vec())
    } else if init.len() == nc {
        let mut z = init.to_vec();
        z.resize(nc + np, T::zero());
        Ok(z)
    } else {
        Err(SimError::Dimension(format!("initial state has length {}, expected {nc}", init.len())))
    }
}

/// Piecewise-linear simulation in open loop. `init` is the flat controller
/// state; it is clamped into the sector along `x_h` if necessary.
pub fn simulate_open_loop<T: Real>(
    el: &Fhigs<T>,
    input: &InputSignal<T>,
    cfg: &SimConfig<T>,
    init: &[T],
) -> Result<Trajectory<T>, SimError> {
    let pwl = el.build_pwl();
    simulate_open_loop_with(el, &pwl, input, cfg, init)
}

/// As [`simulate_open_loop`] with an explicitly supplied realization.
pub fn simulate_open_loop_with<T: Real>(
    el: &Fhigs<T>,
    pwl: &PwlRealization<T>,
    input: &InputSignal<T>,
    cfg: &SimConfig<T>,
    init: &[T],
) -> Result<Trajectory<T>, SimError> {
    let z = initial_state(el, None, init)?;
    Engine { el, pwl, down: None, input, field: Field::Pwl }.run(cfg, &z)
}

/// Simulation of the projected dynamics, evaluating the projection
/// operator at every stage.
pub fn simulate_epds<T: Real>(
    el: &Fhigs<T>,
    input: &InputSignal<T>,
    cfg: &SimConfig<T>,
    init: &[T],
) -> Result<Trajectory<T>, SimError> {
    let pwl = el.build_pwl();
    let z = initial_state(el, None, init)?;
    Engine { el, pwl: &pwl, down: None, input, field: Field::Projected }.run(cfg, &z)
}

/// The element without projection: a plain LTI simulation of the
/// integrator-mode dynamics.
pub fn simulate_linear<T: Real>(
    el: &Fhigs<T>,
    input: &InputSignal<T>,
    cfg: &SimConfig<T>,
    init: &[T],
) -> Result<Trajectory<T>, SimError> {
    let pwl = el.build_pwl();
    let z = initial_state(el, None, init)?;
    Engine { el, pwl: &pwl, down: None, input, field: Field::Linear }.run(cfg, &z)
}

/// Piecewise-linear simulation followed by an LTI output filter driven by
/// `x_h`; the sample column `y` holds the filter output. `init` may cover
/// the controller only (filter starts at rest) or both.
pub fn simulate_cascade<T: Real>(
    el: &Fhigs<T>,
    post: &StateSpace<T>,
    input: &InputSignal<T>,
    cfg: &SimConfig<T>,
    init: &[T],
) -> Result<Trajectory<T>, SimError> {
    let pwl = el.build_pwl();
    let z = initial_state(el, Some(post), init)?;
    Engine { el, pwl: &pwl, down: Some(Downstream { ss: post, feedback: false, proportional: T::zero() }), input, field: Field::Pwl }.run(cfg, &z)
}
