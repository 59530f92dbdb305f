//! Reference step on the unstable second-order plant, with a linear
//! PI-lead baseline and the two integrator-gain controllers.

use std::io::{self, Write};

use rayon::prelude::*;

use crate::element::{Fhigs, FhigsParams};
use crate::linalg::norm2;
use crate::lti::tf_to_ss;
use crate::sim::{simulate_closed_loop, simulate_closed_loop_linear, ClosedLoop, InputSignal, SimConfig, SimError, Trajectory};

use super::config::{ExperimentConfig, StepRowSection, StepSection};
use super::ExperimentError;

pub const ROWS: [&str; 3] = ["linear", "higs", "fhigs"];

#[derive(Debug, Clone, PartialEq)]
pub struct StepRow {
    pub name: &'static str,
    /// `max(y) - r` in percent of `r`, clipped at 0.
    pub overshoot_pct: f64,
    /// Last time the output is outside the band; infinite when the final
    /// sample is still outside.
    pub settling_time: f64,
    /// `r - y(t_end)`.
    pub steady_state_error: f64,
    pub events: usize,
    pub max_state_norm: f64,
    pub diverged: bool,
    pub max_sector_violation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub rows: Vec<StepRow>,
}

impl StepReport {
    pub fn row(&self, name: &str) -> Option<&StepRow> {
        self.rows.iter().find(|r| r.name == name)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "row,overshoot_pct,settling_time_s,steady_state_error,events,status")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{:.6},{:.6e},{:.6e},{},{}",
                r.name,
                r.overshoot_pct,
                r.settling_time,
                r.steady_state_error,
                r.events,
                if r.diverged { "diverged" } else { "ok" }
            )?;
        }
        Ok(())
    }
}

/// Overshoot, settling time and final error of `y` against the constant
/// reference `r`.
pub fn step_metrics(t: &[f64], y: &[f64], r: f64, band: f64) -> (f64, f64, f64) {
    let peak = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let overshoot = ((peak - r) / r * 100.0).max(0.0);
    let last_out = t.iter().zip(y).rev().find(|(_, y)| (*y - r).abs() > band * r.abs());
    let settling = match last_out {
        None => 0.0,
        Some((&ts, _)) if Some(&ts) == t.last() => f64::INFINITY,
        Some((&ts, _)) => ts,
    };
    (overshoot, settling, r - y.last().copied().unwrap_or(f64::NAN))
}

struct Run {
    traj: Option<Trajectory<f64>>,
    max_norm: f64,
    diverged: bool,
}

fn run_loop(s: &StepSection, cl: &ClosedLoop<f64>, linear: bool) -> Result<Run, SimError> {
    let sim = SimConfig::new(s.h, s.t_end).with_decimation(s.decimation).with_states();
    let ic = cl.element.zero_state();
    let ip = vec![0.0; cl.plant.order()];
    let res = if linear { simulate_closed_loop_linear(cl, &sim, &ic, &ip) } else { simulate_closed_loop(cl, &sim, &ic, &ip) };
    match res {
        Ok(mut tr) => {
            let max_norm = tr.states.iter().map(|x| norm2(x)).fold(0.0, f64::max);
            tr.states = Vec::new();
            Ok(Run { diverged: !(max_norm <= s.divergence), traj: Some(tr), max_norm })
        }
        Err(SimError::NonFinite { .. }) => Ok(Run { traj: None, max_norm: f64::INFINITY, diverged: true }),
        Err(e) => Err(e),
    }
}

fn nonlinear_loop(cfg: &ExperimentConfig, s: &StepSection, row: &StepRowSection, name: &str, reference: &InputSignal<f64>) -> Result<ClosedLoop<f64>, ExperimentError> {
    let field = |f: &str| format!("step.{name}.{f}");
    let p = row.gains.params(&field("gains"))?;
    let el = Fhigs::new(p, cfg.filter_ss(&row.f1, &field("f1"))?, cfg.filter_ss(&row.f2, &field("f2"))?);
    let plant = cfg.filter_tf(&s.plant, "step.plant")?.series(&cfg.filter_tf(&row.loop_filter, &field("loop_filter"))?);
    let cl = ClosedLoop::new(el, tf_to_ss(&plant), reference.clone()).map_err(|e| ExperimentError::field(&format!("step.{name}"), e))?;
    Ok(cl.with_proportional(row.proportional))
}

fn linear_loop(cfg: &ExperimentConfig, s: &StepSection, reference: &InputSignal<f64>) -> Result<ClosedLoop<f64>, ExperimentError> {
    let l = &s.linear;
    // the integrator mode alone is the integral term
    let p = FhigsParams::integrator(0.0, 1.0, l.omega_i).map_err(|e| ExperimentError::field("step.linear.omega_i", e))?;
    let plant = cfg.filter_tf(&s.plant, "step.plant")?.series(&cfg.filter_tf(&l.loop_filter, "step.linear.loop_filter")?);
    let cl = ClosedLoop::new(Fhigs::higs(p), tf_to_ss(&plant), reference.clone()).map_err(|e| ExperimentError::field("step.linear", e))?;
    Ok(cl.with_proportional(l.proportional))
}

/// Closed loops of the three rows, in [`ROWS`] order.
pub fn step_loops(cfg: &ExperimentConfig) -> Result<Vec<ClosedLoop<f64>>, ExperimentError> {
    let s = cfg.section("step", &cfg.step)?;
    let reference = InputSignal::step(s.amplitude, 0.0, s.rise).map_err(|e| ExperimentError::field("step", e))?;
    Ok(vec![
        linear_loop(cfg, s, &reference)?,
        nonlinear_loop(cfg, s, &s.higs, "higs", &reference)?,
        nonlinear_loop(cfg, s, &s.fhigs, "fhigs", &reference)?,
    ])
}

pub type StepTrajectories = Vec<Option<Trajectory<f64>>>;

/// Runs the three rows; trajectories are returned alongside the report
/// (`None` for a row that blew up).
pub fn run_step(cfg: &ExperimentConfig) -> Result<(StepReport, StepTrajectories), ExperimentError> {
    let s = cfg.section("step", &cfg.step)?;
    if !(s.amplitude != 0.0 && s.settle_band > 0.0 && s.divergence > 0.0) {
        return Err(ExperimentError::field("step", "need a nonzero amplitude and positive band and divergence limit"));
    }
    let loops = step_loops(cfg)?;
    let runs: Vec<Result<Run, SimError>> = loops.par_iter().enumerate().map(|(i, cl)| run_loop(s, cl, i == 0)).collect();
    let mut rows = Vec::new();
    let mut trajs = Vec::new();
    for (name, run) in ROWS.iter().zip(runs) {
        let run = run.map_err(|e| ExperimentError::Run(format!("step {name}: {e}")))?;
        let row = match &run.traj {
            Some(tr) if !run.diverged => {
                let (os, st, ess) = step_metrics(&tr.times(), &tr.y(), s.amplitude, s.settle_band);
                StepRow {
                    name,
                    overshoot_pct: os,
                    settling_time: st,
                    steady_state_error: ess,
                    events: tr.events.len(),
                    max_state_norm: run.max_norm,
                    diverged: false,
                    max_sector_violation: tr.stats.max_sector_violation,
                }
            }
            _ => StepRow {
                name,
                overshoot_pct: f64::INFINITY,
                settling_time: f64::INFINITY,
                steady_state_error: f64::NAN,
                events: run.traj.as_ref().map_or(0, |t| t.events.len()),
                max_state_norm: run.max_norm,
                diverged: true,
                max_sector_violation: run.traj.as_ref().map_or(0.0, |t| t.stats.max_sector_violation),
            },
        };
        rows.push(row);
        trajs.push(run.traj);
    }
    Ok((StepReport { rows }, trajs))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metrics_of_a_clean_overshoot() {
        let t = [0.0, 1.0, 2.0, 3.0, 4.0];
        let y = [0.0, 0.5, 1.2, 1.01, 1.0];
        let (os, st, ess) = step_metrics(&t, &y, 1.0, 0.02);
        assert!((os - 20.0).abs() < 1e-12);
        assert_eq!(st, 2.0);
        assert_eq!(ess, 0.0);
    }

    #[test]
    fn undershoot_clips_to_zero_and_unsettled_is_infinite() {
        let (os, st, _) = step_metrics(&[0.0, 1.0], &[0.0, 0.5], 1.0, 0.02);
        assert_eq!(os, 0.0);
        assert!(st.is_infinite());
    }
}
