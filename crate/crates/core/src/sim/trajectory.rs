use std::io::{self, Write};

use crate::element::Mode;
use crate::scalar::Real;

use super::SimError;

/// One recorded grid sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample<T> {
    pub t: T,
    pub e: T,
    pub e_dot: T,
    pub v1: T,
    pub v2: T,
    pub x_h: T,
    pub mode: Mode,
    /// Plant output in closed loop, post-filter output in a cascade, and
    /// `x_h` otherwise.
    pub y: T,
}

/// Mode change located by the event search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event<T> {
    pub t: T,
    pub from: Mode,
    pub to: Mode,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SimStats<T> {
    pub events: usize,
    /// Largest `|x_h - k v2|` removed when re-projecting onto a sliding line.
    pub max_renormalization: T,
    /// Largest normalized sector product seen at a sample.
    pub max_sector_violation: T,
    /// Largest jump of `x_h` applied when settling an event state.
    pub max_event_jump: T,
    /// Number of local step halvings triggered by dense switching.
    pub halvings: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory<T> {
    pub samples: Vec<Sample<T>>,
    pub events: Vec<Event<T>>,
    /// Full state vectors (controller then plant) when recording was enabled.
    pub states: Vec<Vec<T>>,
    pub stats: SimStats<T>,
}

impl<T: Real> Trajectory<T> {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn column(&self, f: impl Fn(&Sample<T>) -> T) -> Vec<T> {
        self.samples.iter().map(f).collect()
    }

    pub fn times(&self) -> Vec<T> {
        self.column(|s| s.t)
    }

    pub fn x_h(&self) -> Vec<T> {
        self.column(|s| s.x_h)
    }

    pub fn y(&self) -> Vec<T> {
        self.column(|s| s.y)
    }

    pub fn duration(&self) -> T {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => b.t - a.t,
            _ => T::zero(),
        }
    }

    /// Largest pointwise difference of `x_h` and `y` against another
    /// trajectory sampled on the same grid.
    pub fn linf_distance(&self, other: &Self) -> Result<T, SimError> {
        if self.len() != other.len() {
            return Err(SimError::Dimension(format!("{} vs {} samples", self.len(), other.len())));
        }
        Ok(self.samples.iter().zip(&other.samples).fold(T::zero(), |m, (a, b)| {
            m.max((a.x_h - b.x_h).abs()).max((a.y - b.y).abs())
        }))
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,e,edot,v1,v2,x_h,mode,y")?;
        for s in &self.samples {
            writeln!(
                w,
                "{:e},{:e},{:e},{:e},{:e},{:e},{},{:e}",
                s.t.as_f64(),
                s.e.as_f64(),
                s.e_dot.as_f64(),
                s.v1.as_f64(),
                s.v2.as_f64(),
                s.x_h.as_f64(),
                s.mode.index(),
                s.y.as_f64()
            )?;
        }
        Ok(())
    }

    pub fn write_events_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t_event,from,to")?;
        for ev in &self.events {
            writeln!(w, "{:e},{},{}", ev.t.as_f64(), ev.from.index(), ev.to.index())?;
        }
        Ok(())
    }
}

/// Final period of a periodic steady state.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyState<T> {
    /// One period with time re-based to `[0, 2 pi / omega)`.
    pub period: Trajectory<T>,
    /// Absolute time of the first sample of the period.
    pub start: T,
    pub omega: T,
    /// L-infinity difference of `x_h` between the last two periods.
    pub gap: T,
}

impl<T: Real> SteadyState<T> {
    /// Fourier coefficients `(a_k, b_k)` of `x_h` over the period,
    /// `x_h ~ sum a_k cos(k w t) + b_k sin(k w t)` in absolute time.
    pub fn fourier(&self, k: usize) -> (T, T) {
        self.fourier_of(k, |s| s.x_h)
    }

    pub fn fourier_of(&self, k: usize, f: impl Fn(&Sample<T>) -> T) -> (T, T) {
        let n = self.period.len();
        let kk = T::from_count(k);
        let (mut a, mut b) = (T::zero(), T::zero());
        for s in &self.period.samples {
            let theta = kk * self.omega * (s.t + self.start);
            let x = f(s);
            a = a + x * theta.cos();
            b = b + x * theta.sin();
        }
        let scale = T::lit(2.0) / T::from_count(n);
        (a * scale, b * scale)
    }
}

/// Extracts the last full period of a trajectory sampled on a uniform grid
/// after at least `settle_periods` periods, and checks that it repeats the
/// preceding period to within `max_gap`.
pub fn steady_state_period<T: Real>(
    traj: &Trajectory<T>,
    omega: T,
    settle_periods: usize,
    max_gap: T,
) -> Result<SteadyState<T>, SimError> {
    let period = T::TAU() / omega;
    let needed = period * T::from_count(settle_periods + 1);
    if traj.len() < 2 || traj.duration() < needed - period * T::lit(1e-9) {
        return Err(SimError::TooShort { needed: needed.as_f64(), have: traj.duration().as_f64() });
    }
    let spacing = traj.samples[1].t - traj.samples[0].t;
    let per = (period / spacing).round();
    if (per * spacing - period).abs() > T::tol(1e-9) * period {
        return Err(SimError::NotCommensurate { spacing: spacing.as_f64(), period: period.as_f64() });
    }
    let n = per.to_usize().unwrap_or(0);
    // the last sample sits at the period end and duplicates the start
    let last = traj.len() - 1;
    if n == 0 || last < 2 * n {
        return Err(SimError::TooShort { needed: needed.as_f64(), have: traj.duration().as_f64() });
    }
    let cur = &traj.samples[last - n..last];
    let prev = &traj.samples[last - 2 * n..last - n];
    let gap = cur.iter().zip(prev).fold(T::zero(), |m, (a, b)| m.max((a.x_h - b.x_h).abs()));
    if !(gap <= max_gap) {
        return Err(SimError::NotSettled { gap: gap.as_f64(), limit: max_gap.as_f64() });
    }
    let start = cur[0].t;
    let samples = cur.iter().map(|s| Sample { t: s.t - start, ..*s }).collect();
    let events = traj
        .events
        .iter()
        .filter(|ev| ev.t >= start && ev.t < start + period)
        .map(|ev| Event { t: ev.t - start, ..*ev })
        .collect();
    Ok(SteadyState {
        period: Trajectory { samples, events, states: Vec::new(), stats: traj.stats },
        start,
        omega,
        gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sine_traj(omega: f64, n_per: usize, periods: usize) -> Trajectory<f64> {
        let h = 2.0 * PI / omega / n_per as f64;
        let samples = (0..=n_per * periods)
            .map(|i| {
                let t = i as f64 * h;
                let x = 0.5 * (omega * t + 0.3).sin() + 0.1 * (3.0 * omega * t).cos();
                Sample { t, e: 0.0, e_dot: 0.0, v1: 0.0, v2: 0.0, x_h: x, mode: Mode::Integrator, y: x }
            })
            .collect();
        Trajectory { samples, ..Default::default() }
    }

    #[test]
    fn extracts_last_period_and_fourier() {
        let tr = sine_traj(3.0, 400, 5);
        let ss = steady_state_period(&tr, 3.0, 3, 1e-9).unwrap();
        assert_eq!(ss.period.len(), 400);
        assert!(ss.gap < 1e-12);
        let (a1, b1) = ss.fourier(1);
        assert!((a1 - 0.5 * 0.3f64.sin()).abs() < 1e-12);
        assert!((b1 - 0.5 * 0.3f64.cos()).abs() < 1e-12);
        let (a3, b3) = ss.fourier(3);
        assert!((a3 - 0.1).abs() < 1e-12 && b3.abs() < 1e-12);
    }

    #[test]
    fn rejects_short_or_incommensurate() {
        let tr = sine_traj(3.0, 400, 2);
        assert!(matches!(steady_state_period(&tr, 3.0, 3, 1e-9), Err(SimError::TooShort { .. })));
        let tr = sine_traj(3.0, 400, 5);
        assert!(matches!(steady_state_period(&tr, 3.1, 2, 1e-9), Err(SimError::NotCommensurate { .. })));
    }

    #[test]
    fn csv_headers() {
        let tr = sine_traj(1.0, 4, 1);
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,e,edot,v1,v2,x_h,mode,y\n"));
        assert_eq!(text.lines().count(), 6);
        let mut buf = Vec::new();
        tr.write_events_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "t_event,from,to\n");
    }
}
