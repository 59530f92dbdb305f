//! Output collapse of the integrator under a two-tone input, and the
//! lifting and filtered-sector remedies.

use std::io::{self, Write};

use rayon::prelude::*;

use crate::element::Fhigs;
use crate::lti::{tf_to_ss, StateSpace};
use crate::sim::{simulate_cascade, simulate_open_loop, InputSignal, SimConfig, Sine, Trajectory};

use super::config::{ExperimentConfig, GainLossSection};
use super::ExperimentError;

#[derive(Debug, Clone, PartialEq)]
pub struct GainLossRow {
    pub name: &'static str,
    /// RMS of this row's output over the last low-frequency period.
    pub rms: f64,
    /// RMS of the reference (plain element, pure input) output.
    pub rms_reference: f64,
    /// Pearson correlation with the reference output.
    pub correlation: f64,
    pub events_per_period: usize,
    pub max_sector_violation: f64,
}

impl GainLossRow {
    pub fn rms_ratio(&self) -> f64 {
        self.rms / self.rms_reference
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GainLossReport {
    pub rows: Vec<GainLossRow>,
    pub rms_ratio_max: f64,
    pub correlation_min: f64,
}

impl GainLossReport {
    pub fn row(&self, name: &str) -> Option<&GainLossRow> {
        self.rows.iter().find(|r| r.name == name)
    }

    /// Mixed-input ratio of the plain element is below its threshold.
    pub fn collapse_reproduced(&self) -> bool {
        self.row("higs_mixed").is_some_and(|r| r.rms_ratio() < self.rms_ratio_max)
    }

    pub fn fhigs_recovers(&self) -> bool {
        self.row("fhigs_mixed").is_some_and(|r| r.correlation > self.correlation_min)
    }

    pub fn lifting_distorts(&self) -> bool {
        match (self.row("higs_lifted"), self.row("fhigs_mixed")) {
            (Some(l), Some(f)) => l.correlation < f.correlation,
            _ => false,
        }
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "row,rms,rms_reference,rms_ratio,correlation,events_per_period")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{:.9e},{:.9e},{:.9e},{:.9},{}",
                r.name,
                r.rms,
                r.rms_reference,
                r.rms_ratio(),
                r.correlation,
                r.events_per_period
            )?;
        }
        Ok(())
    }
}

/// Report rows in output order; the first is the reference.
pub const ROWS: [&str; 4] = ["higs_pure", "higs_mixed", "higs_lifted", "fhigs_mixed"];

pub fn rms(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt()
}

/// Pearson correlation; zero when either signal is constant.
pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    if n == 0 {
        return 0.0;
    }
    let (a, b) = (&a[..n], &b[..n]);
    let ma = a.iter().sum::<f64>() / n as f64;
    let mb = b.iter().sum::<f64>() / n as f64;
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    if va == 0.0 || vb == 0.0 {
        0.0
    } else {
        (cov / (va * vb).sqrt()).clamp(-1.0, 1.0)
    }
}

struct Window {
    y: Vec<f64>,
    events: usize,
    max_sector_violation: f64,
}

fn last_period(tr: &Trajectory<f64>, t0: f64) -> Window {
    // the sample at t0 closes the previous period
    let y = tr.samples.iter().filter(|s| s.t > t0 + 1e-12).map(|s| s.y).collect();
    let events = tr.events.iter().filter(|e| e.t > t0).count();
    Window { y, events, max_sector_violation: tr.stats.max_sector_violation }
}

pub fn run_gainloss(cfg: &ExperimentConfig) -> Result<GainLossReport, ExperimentError> {
    let g: &GainLossSection = cfg.section("gainloss", &cfg.gainloss)?;
    let p = g.gains.params("gainloss.gains")?;
    if !(g.omega_1 > 0.0 && g.omega_2 > 0.0 && g.periods >= 2) {
        return Err(ExperimentError::field("gainloss", "need positive frequencies and at least two periods"));
    }
    let period = std::f64::consts::TAU / g.omega_1;
    let t_end = period * g.periods as f64;
    let sim = SimConfig::new(g.h, t_end);
    let t0 = t_end - period;
    let pure = InputSignal::sine(1.0, g.omega_1, 0.0).map_err(|e| ExperimentError::field("gainloss", e))?;
    let mixed = InputSignal::sum_of_sines(vec![Sine::new(1.0, g.omega_1, 0.0), Sine::new(1.0, g.omega_2, 0.0)])
        .map_err(|e| ExperimentError::field("gainloss", e))?;

    let lift = cfg.filter_tf(&g.lifting, "gainloss.lifting")?;
    let delift = tf_to_ss(&lift.inverse().map_err(|e| ExperimentError::field("gainloss.lifting", e))?);
    let lift = tf_to_ss(&lift);
    let higs = Fhigs::higs(p);
    // a pre-filter in front of a plain element filters both paths
    let lifted = Fhigs::new(p, lift.clone(), lift);
    let fhigs = Fhigs::new(p, cfg.filter_ss(&g.fhigs_f1, "gainloss.fhigs_f1")?, cfg.filter_ss(&g.fhigs_f2, "gainloss.fhigs_f2")?);

    let open = |el: &Fhigs<f64>, input: &InputSignal<f64>| -> Result<Window, ExperimentError> {
        Ok(last_period(&simulate_open_loop(el, input, &sim, &el.zero_state())?, t0))
    };
    let cascade = |el: &Fhigs<f64>, post: &StateSpace<f64>, input: &InputSignal<f64>| -> Result<Window, ExperimentError> {
        Ok(last_period(&simulate_cascade(el, post, input, &sim, &el.zero_state())?, t0))
    };
    let runs: Vec<(&'static str, Result<Window, ExperimentError>)> = ROWS
        .par_iter()
        .map(|&name| {
            let w = match name {
                "higs_pure" => open(&higs, &pure),
                "higs_mixed" => open(&higs, &mixed),
                "higs_lifted" => cascade(&lifted, &delift, &mixed),
                _ => open(&fhigs, &mixed),
            };
            (name, w)
        })
        .collect();
    let mut windows = Vec::with_capacity(runs.len());
    for (name, w) in runs {
        windows.push((name, w.map_err(|e| ExperimentError::Run(format!("gainloss {name}: {e}")))?));
    }
    let reference = windows[0].1.y.clone();
    let rms_reference = rms(&reference);
    let rows = windows
        .into_iter()
        .map(|(name, w)| GainLossRow {
            name,
            rms: rms(&w.y),
            rms_reference,
            correlation: correlation(&w.y, &reference),
            events_per_period: w.events,
            max_sector_violation: w.max_sector_violation,
        })
        .collect();
    Ok(GainLossReport { rows, rms_ratio_max: g.rms_ratio_max, correlation_min: g.correlation_min })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn correlation_bounds() {
        let a = [1.0, 2.0, 3.0];
        assert!((correlation(&a, &a) - 1.0).abs() < 1e-15);
        assert!((correlation(&a, &[3.0, 2.0, 1.0]) + 1.0).abs() < 1e-15);
        assert_eq!(correlation(&a, &[1.0, 1.0, 1.0]), 0.0);
    }

    #[test]
    fn rms_of_square_wave() {
        assert_eq!(rms(&[1.0, -1.0, 1.0, -1.0]), 1.0);
        assert_eq!(rms(&[]), 0.0);
    }
}
