//! Oracle and invariant checks. Each check reports its measured value
//! against a tolerance.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Mutex;

use num_complex::Complex;
use rand::Rng;
use rayon::prelude::*;

use crate::df::{
    df_point_with, df_sweep, epsilon_bisection, epsilon_residual, first_harmonic_closed_form, fourier_quadrature, gamma_bisection, gamma_closed_form, gamma_residual, log_grid, select_case, solve_epsilon,
    steady_state_analytic, DfOptions, SimplifiedFhigs, SwitchCase,
};
use crate::element::{Fhigs, FhigsParams};
use crate::lti::{tf_to_ss, StateSpace, TransferFunction};
use crate::sim::{
    incremental_gap, simulate_epds, simulate_open_loop, simulate_open_loop_with, steady_state_period, InputSignal,
    SimConfig, SimError, Trajectory,
};

use super::config::VerifySection;
use super::random::{self, log_uniform, Rng64};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    AtMost,
    Below,
    Above,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub relation: Relation,
    pub tolerance: f64,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn at_most(name: &str, measured: f64, tolerance: f64) -> Self {
        Self::new(name, measured, Relation::AtMost, tolerance, measured <= tolerance)
    }

    pub fn below(name: &str, measured: f64, tolerance: f64) -> Self {
        Self::new(name, measured, Relation::Below, tolerance, measured < tolerance)
    }

    pub fn above(name: &str, measured: f64, tolerance: f64) -> Self {
        Self::new(name, measured, Relation::Above, tolerance, measured > tolerance)
    }

    /// Failed before a value could be measured.
    pub fn error(name: &str, tolerance: f64, err: impl fmt::Display) -> Self {
        let mut c = Self::new(name, f64::NAN, Relation::AtMost, tolerance, false);
        c.detail = err.to_string();
        c
    }

    fn new(name: &str, measured: f64, relation: Relation, tolerance: f64, pass: bool) -> Self {
        Self { name: name.to_owned(), measured, relation, tolerance, pass, detail: String::new() }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rel = match self.relation {
            Relation::AtMost => "<=",
            Relation::Below => "<",
            Relation::Above => ">",
        };
        write!(
            f,
            "{} {} measured={:.6e} tol{}{:e}",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.measured,
            rel,
            self.tolerance
        )?;
        if !self.detail.is_empty() {
            write!(f, " ({})", self.detail)?;
        }
        Ok(())
    }
}

/// Largest normalized sector product seen over a set of simulations.
#[derive(Debug, Default)]
pub struct SectorMonitor {
    inner: Mutex<(f64, usize, usize)>,
}

impl SectorMonitor {
    pub fn record(&self, tr: &Trajectory<f64>) {
        self.record_value(tr.stats.max_sector_violation, 1);
    }

    /// Adds `runs` simulations whose worst violation was `v`.
    pub fn record_value(&self, v: f64, runs: usize) {
        let mut g = self.inner.lock().expect("monitor poisoned");
        g.0 = g.0.max(v);
        g.1 += runs;
    }

    /// Notes a failed run; an aborted sector check counts as a violation.
    pub fn record_error(&self, e: &SimError) {
        let mut g = self.inner.lock().expect("monitor poisoned");
        if let SimError::SectorViolation { violation, .. } = e {
            g.0 = g.0.max(*violation);
            g.2 += 1;
        }
    }

    pub fn observe(&self, r: Result<Trajectory<f64>, SimError>) -> Result<Trajectory<f64>, SimError> {
        match &r {
            Ok(tr) => self.record(tr),
            Err(e) => self.record_error(e),
        }
        r
    }

    /// `(max violation, simulations, aborted by the sector check)`.
    pub fn summary(&self) -> (f64, usize, usize) {
        *self.inner.lock().expect("monitor poisoned")
    }

    pub fn check(&self, tolerance: f64) -> Check {
        let (worst, runs, aborted) = self.summary();
        let c = Check::at_most("sector_invariance", worst, tolerance);
        let mut c = c.with_detail(format!("{runs} simulations, {aborted} aborted"));
        c.pass &= aborted == 0;
        c
    }
}

/// Phase-lead shaping filter `3(3s + 2 w_f) / (2(2s + 3 w_f))`, `w_f = 20 pi`.
pub fn lead_filter() -> TransferFunction<f64> {
    let wf = 20.0 * PI;
    TransferFunction::new(vec![9.0, 6.0 * wf], vec![4.0, 6.0 * wf]).expect("valid coefficients")
}

fn lowpass(w: f64) -> TransferFunction<f64> {
    TransferFunction::new(vec![w], vec![1.0, w]).expect("valid coefficients")
}

fn base_params() -> FhigsParams<f64> {
    FhigsParams::integrator(0.0, 1.0, 100.0).expect("valid gains")
}

fn simplified(p: FhigsParams<f64>, f: &TransferFunction<f64>) -> SimplifiedFhigs<f64> {
    SimplifiedFhigs::new(p, tf_to_ss(f)).expect("alpha_h = 0")
}

/// Element/frequency pairs with a known case, for the time-domain
/// comparison.
pub fn spot_frequencies() -> Vec<(TransferFunction<f64>, f64)> {
    let lead = lead_filter();
    vec![
        (lead.clone(), 8.0 * PI),
        (lead.clone(), 30.0),
        (lead, 300.0),
        (TransferFunction::gain(1.0), 10.0),
        (lowpass(20.0 * PI), 20.0 * PI),
        (lowpass(20.0 * PI), 15.0),
        (lowpass(20.0 * PI), 40.0),
        (lowpass(80.0 * PI), 20.0 * PI),
        (lowpass(80.0 * PI), 200.0),
        (lowpass(80.0 * PI), 8.0),
    ]
}

pub struct Suite<'a> {
    pub v: &'a VerifySection,
    pub opts: DfOptions,
    pub monitor: SectorMonitor,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct IncrementalSummary {
    pub pairs: usize,
    pub worst_contraction: f64,
    /// Literal envelope: clock from t = 0, unsigned region, every pair.
    pub literal_excess: f64,
    /// Signed region, clock restarted per stretch, static `F1` pairs.
    pub stretch_excess: f64,
}

impl<'a> Suite<'a> {
    pub fn new(v: &'a VerifySection, opts: DfOptions) -> Self {
        Self { v, opts, monitor: SectorMonitor::default() }
    }

    fn rng(&self, stream: u64) -> Rng64 {
        random::rng(self.v.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(stream))
    }

    /// Largest PWL-vs-projected distance over random configurations.
    pub fn equivalence(&self) -> Check {
        let v = self.v;
        let mut rng = self.rng(1);
        let draws: Vec<(Fhigs<f64>, InputSignal<f64>)> =
            (0..v.equivalence_configs).map(|_| (random::element(&mut rng), random::sum_of_sines(&mut rng))).collect();
        let cfg = SimConfig::new(v.equivalence_h, v.equivalence_t_end);
        let dists: Vec<Result<f64, SimError>> = draws
            .par_iter()
            .map(|(el, input)| {
                let mut pwl = el.build_pwl();
                if v.a2_perturbation != 0.0 {
                    let a2 = &mut pwl.a[2];
                    for r in 0..a2.nrows() {
                        for x in a2.row_mut(r) {
                            *x *= 1.0 + v.a2_perturbation;
                        }
                    }
                }
                let init = el.zero_state();
                let a = self.monitor.observe(simulate_open_loop_with(el, &pwl, input, &cfg, &init))?;
                let b = self.monitor.observe(simulate_epds(el, input, &cfg, &init))?;
                a.linf_distance(&b)
            })
            .collect();
        let name = "pwl_vs_projected_linf";
        match dists.into_iter().collect::<Result<Vec<_>, _>>() {
            Ok(d) => Check::at_most(name, d.iter().copied().fold(0.0, f64::max), v.equivalence_tol)
                .with_detail(format!("{} configurations", d.len())),
            Err(e) => Check::error(name, v.equivalence_tol, e),
        }
    }

    /// Phase of the plain element at `100 omega_h`, in degrees.
    pub fn higs_phase(&self) -> Result<f64, crate::df::DfError> {
        let el = SimplifiedFhigs::higs(base_params())?;
        Ok(df_point_with(&el, 100.0 * 100.0, 1, self.opts)?.phase_deg)
    }

    pub fn higs_phase_check(&self) -> Check {
        let name = "higs_phase_at_100_omega_h_deg";
        match self.higs_phase() {
            Ok(ph) => Check::at_most(name, (ph + 38.1).abs(), 0.5).with_detail(format!("phase {ph:.4} deg, target -38.1")),
            Err(e) => Check::error(name, 0.5, e),
        }
    }

    /// `(max phase on [1, 1e4], |D1| ratio to the plain element at 1e4)`.
    pub fn lead_sweep(&self) -> Result<(f64, f64), crate::df::DfError> {
        let p = base_params();
        let grid = log_grid(1.0, 1e4, 200);
        let f = SimplifiedFhigs::new(p, tf_to_ss(&lead_filter()))?;
        let h = SimplifiedFhigs::higs(p)?;
        let sf = df_sweep(&f, &grid, &[1], self.opts)?;
        let sh = df_sweep(&h, &grid, &[1], self.opts)?;
        let mut max_phase = f64::NEG_INFINITY;
        for e in &sf {
            max_phase = max_phase.max(e.result.clone()?.phase_deg);
        }
        let (a, b) = (sf.last().expect("grid").result.clone()?, sh.last().expect("grid").result.clone()?);
        Ok((max_phase, a.magnitude() / b.magnitude()))
    }

    pub fn lead_sweep_checks(&self) -> Vec<Check> {
        match self.lead_sweep() {
            Ok((ph, ratio)) => vec![
                Check::above("fhigs_max_phase_deg", ph, 0.0),
                Check::at_most("fhigs_hf_magnitude_ratio_dev", (ratio - 1.0).abs(), 0.05).with_detail(format!("ratio {ratio:.6}")),
            ],
            Err(e) => vec![Check::error("fhigs_max_phase_deg", 0.0, &e), Check::error("fhigs_hf_magnitude_ratio_dev", 0.05, e)],
        }
    }

    /// Random `(element, omega)` draws, cycling through the three cases.
    pub fn switching_draws(&self) -> Vec<(SimplifiedFhigs<f64>, f64, SwitchCase)> {
        let mut rng = self.rng(4);
        let targets = [SwitchCase::Lead, SwitchCase::LagWithK1, SwitchCase::LagNoK1];
        let mut out = Vec::with_capacity(self.v.switching_draws);
        let mut i = 0;
        while out.len() < self.v.switching_draws {
            let target = targets[out.len() % 3];
            i += 1;
            let (el, w) = draw_simplified(&mut rng, target);
            match select_case(&el, w) {
                Ok(c) if c == target => out.push((el, w, c)),
                _ => assert!(i < 1_000_000, "case {target} never drawn"),
            }
        }
        out
    }

    /// `(max residual / omega_h, max closed-minus-bisection gap in s)`.
    pub fn switching_agreement(&self) -> Result<(f64, f64), crate::df::DfError> {
        let mut worst = (0.0f64, 0.0f64);
        for (el, w, case) in self.switching_draws() {
            let wh = el.params.omega_h;
            let eps = solve_epsilon(&el, w, case)?;
            worst.0 = worst.0.max(epsilon_residual(&el, w, case, eps)?.abs() / wh);
            if let Some(e2) = epsilon_bisection(&el, w, case)? {
                worst.1 = worst.1.max((eps - e2).abs());
            } else if case != SwitchCase::LagNoK1 {
                worst.1 = f64::INFINITY;
            }
            let g1 = gamma_closed_form(&el, w, eps, case)?;
            let g2 = gamma_bisection(&el, w, eps, case)?;
            match (g1, g2) {
                (Some(g1), Some(g2)) => {
                    worst.0 = worst.0.max(gamma_residual(&el, w, eps, g1, case)?.abs() / wh);
                    worst.1 = worst.1.max((g1 - g2).abs());
                }
                _ => worst.1 = f64::INFINITY,
            }
        }
        Ok(worst)
    }

    pub fn switching_checks(&self) -> Vec<Check> {
        let n = format!("{} draws", self.v.switching_draws);
        match self.switching_agreement() {
            Ok((res, gap)) => vec![
                Check::at_most("switching_residual_rel", res, self.v.residual_tol).with_detail(n.clone()),
                Check::at_most("switching_closed_vs_bisection_s", gap, self.v.gap_tol).with_detail(n),
            ],
            Err(e) => vec![
                Check::error("switching_residual_rel", self.v.residual_tol, &e),
                Check::error("switching_closed_vs_bisection_s", self.v.gap_tol, e),
            ],
        }
    }

    /// Largest relative gap between the closed-form and quadrature first
    /// harmonic over random lead-case frequencies.
    pub fn first_harmonic_agreement(&self) -> Result<f64, crate::df::DfError> {
        let mut rng = self.rng(5);
        let mut worst = 0.0f64;
        let mut n = 0;
        while n < self.v.quadrature_draws {
            let (el, w) = draw_simplified(&mut rng, SwitchCase::Lead);
            if select_case(&el, w)? != SwitchCase::Lead {
                continue;
            }
            n += 1;
            let resp = steady_state_analytic(&el, w, 1.0)?;
            let (qa, qb) = fourier_quadrature(&resp, 1);
            let (ca, cb) = first_harmonic_closed_form(&resp).ok_or(crate::df::DfError::NoRoot {
                what: "first harmonic closed form",
                omega: w,
                case: "lead",
            })?;
            worst = worst.max(Complex::new(ca - qa, cb - qb).norm() / qa.hypot(qb));
        }
        Ok(worst)
    }

    pub fn first_harmonic_check(&self) -> Check {
        let name = "first_harmonic_closed_vs_quadrature_rel";
        match self.first_harmonic_agreement() {
            Ok(x) => Check::at_most(name, x, self.v.quadrature_tol).with_detail(format!("{} frequencies", self.v.quadrature_draws)),
            Err(e) => Check::error(name, self.v.quadrature_tol, e),
        }
    }

    /// Every analytic response the other checks evaluate.
    fn analytic_points(&self) -> Vec<(SimplifiedFhigs<f64>, f64)> {
        let p = base_params();
        let mut pts = Vec::new();
        let higs = SimplifiedFhigs::higs(p).expect("static filter");
        pts.push((higs.clone(), 1e4));
        for w in log_grid(1.0, 1e4, 200) {
            pts.push((higs.clone(), w));
            pts.push((simplified(p, &lead_filter()), w));
        }
        pts.extend(spot_frequencies().into_iter().map(|(f, w)| (simplified(p, &f), w)));
        pts.extend(self.switching_draws().into_iter().map(|(el, w, _)| (el, w)));
        let mut rng = self.rng(5);
        while pts.len() < 600 + self.v.switching_draws + self.v.quadrature_draws {
            let (el, w) = draw_simplified(&mut rng, SwitchCase::Lead);
            if matches!(select_case(&el, w), Ok(SwitchCase::Lead)) {
                pts.push((el, w));
            }
        }
        pts
    }

    /// `(max |D_k| for even k, max half-wave defect / A)`.
    pub fn symmetry(&self) -> Result<(f64, f64, usize), crate::df::DfError> {
        let pts = self.analytic_points();
        let res: Vec<Result<(f64, f64), crate::df::DfError>> = pts
            .par_iter()
            .map(|(el, w)| {
                let resp = steady_state_analytic(el, *w, 1.0)?;
                let even = [2, 4, 6]
                    .iter()
                    .map(|&k| {
                        // the reported coefficients are zero by construction
                        let (a, b) = fourier_quadrature(&resp, k);
                        a.hypot(b)
                    })
                    .fold(0.0, f64::max);
                Ok((even, resp.symmetry_defect(512)))
            })
            .collect();
        let mut worst = (0.0f64, 0.0f64, pts.len());
        for r in res {
            let (e, s) = r?;
            worst.0 = worst.0.max(e);
            worst.1 = worst.1.max(s);
        }
        Ok(worst)
    }

    pub fn symmetry_checks(&self) -> Vec<Check> {
        match self.symmetry() {
            Ok((even, sym, n)) => vec![
                Check::at_most("even_harmonics_abs", even, self.v.even_tol).with_detail(format!("{n} responses, k = 2, 4, 6")),
                Check::at_most("half_wave_defect_rel", sym, self.v.symmetry_tol).with_detail(format!("{n} responses")),
            ],
            Err(e) => vec![
                Check::error("even_harmonics_abs", self.v.even_tol, &e),
                Check::error("half_wave_defect_rel", self.v.symmetry_tol, e),
            ],
        }
    }

    /// Relative gap between the analytic first harmonic and the Fourier
    /// coefficient of the simulated steady state, per spot frequency.
    pub fn df_vs_simulation(&self) -> Vec<Result<(SwitchCase, f64), String>> {
        let p = base_params();
        let settle = self.v.sim_settle_periods;
        spot_frequencies()
            .par_iter()
            .map(|(f, w)| {
                let el = simplified(p, f);
                let d = df_point_with(&el, *w, 1, self.opts).map_err(|e| e.to_string())?;
                let full = Fhigs::new(p, StateSpace::identity(), tf_to_ss(f));
                let input = InputSignal::sine(1.0, *w, 0.0).map_err(|e| e.to_string())?;
                let cfg = SimConfig::for_periods(*w, 4000, settle + 1);
                let tr = self.monitor.observe(simulate_open_loop(&full, &input, &cfg, &full.zero_state())).map_err(|e| e.to_string())?;
                let ss = steady_state_period(&tr, *w, settle, 1e-6).map_err(|e| e.to_string())?;
                let (a, b) = ss.fourier(1);
                Ok((d.case, Complex::new(b - d.b_k, a - d.a_k).norm() / d.magnitude()))
            })
            .collect()
    }

    pub fn df_vs_simulation_check(&self) -> Check {
        let name = "df_vs_simulation_rel";
        let mut worst = 0.0f64;
        let mut cases = std::collections::BTreeSet::new();
        for r in self.df_vs_simulation() {
            match r {
                Ok((c, x)) => {
                    worst = worst.max(x);
                    cases.insert(c.tag());
                }
                Err(e) => return Check::error(name, self.v.sim_tol, e),
            }
        }
        let cases: Vec<_> = cases.into_iter().collect();
        let mut c = Check::at_most(name, worst, self.v.sim_tol).with_detail(format!("cases {}", cases.join(", ")));
        c.pass &= cases.len() == 3;
        c
    }

    pub fn incremental(&self) -> Result<IncrementalSummary, SimError> {
        let v = self.v;
        let mut rng = self.rng(8);
        let draws: Vec<_> = (0..v.incremental_pairs)
            .map(|i| {
                let el = random::incremental_element(&mut rng, v.incremental_alpha, i % 2 == 0);
                let w = rng.gen_range(1.0..20.0);
                let a: Vec<f64> = (0..el.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let b: Vec<f64> = (0..el.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                (el, w, a, b, i % 2 == 0)
            })
            .collect();
        let cfg = SimConfig::new(1e-3, v.incremental_horizon).with_decimation(10);
        let reps: Vec<Result<_, SimError>> = draws
            .par_iter()
            .map(|(el, w, a, b, static_f1)| {
                let input = InputSignal::sine(1.0, *w, 0.0)?;
                let rep = incremental_gap(el, &input, &cfg, a, b).inspect_err(|e| self.monitor.record_error(e))?;
                self.monitor.record_value(rep.max_sector_violation, 2);
                let stretch = static_f1.then(|| rep.stretch_bound_excess(v.incremental_alpha));
                Ok((rep.contraction(), rep.leak_bound_excess(v.incremental_alpha), stretch))
            })
            .collect();
        let mut s = IncrementalSummary { pairs: reps.len(), literal_excess: f64::NEG_INFINITY, stretch_excess: f64::NEG_INFINITY, ..Default::default() };
        for r in reps {
            let (c, l, st) = r?;
            s.worst_contraction = s.worst_contraction.max(c);
            s.literal_excess = s.literal_excess.max(l);
            if let Some(st) = st {
                s.stretch_excess = s.stretch_excess.max(st);
            }
        }
        Ok(s)
    }

    pub fn incremental_checks(&self) -> Vec<Check> {
        let v = self.v;
        match self.incremental() {
            Ok(s) => vec![
                Check::at_most("incremental_contraction", s.worst_contraction, v.incremental_tol)
                    .with_detail(format!("{} pairs, T = {} s", s.pairs, v.incremental_horizon)),
                Check::at_most("incremental_envelope_signed_stretch", s.stretch_excess, v.envelope_tol)
                    .with_detail(format!("alpha_h = {}, static F1 pairs", v.incremental_alpha)),
            ],
            Err(e) => vec![
                Check::error("incremental_contraction", v.incremental_tol, &e),
                Check::error("incremental_envelope_signed_stretch", v.envelope_tol, e),
            ],
        }
    }

    /// Runs the incremental harness on one given element.
    pub fn incremental_element_check(&self, el: &Fhigs<f64>) -> Check {
        let name = "incremental_config_element";
        let input = InputSignal::sine(1.0, 5.0, 0.0).expect("finite sine");
        let cfg = SimConfig::new(1e-3, self.v.incremental_horizon).with_decimation(10);
        let a = el.zero_state();
        let b: Vec<f64> = (0..el.dim()).map(|i| if i == 0 { 0.0 } else { 1.0 }).collect();
        match incremental_gap(el, &input, &cfg, &a, &b) {
            Ok(rep) => {
                self.monitor.record_value(rep.max_sector_violation, 2);
                Check::at_most(name, rep.contraction(), self.v.incremental_tol)
            }
            Err(e) => {
                self.monitor.record_error(&e);
                Check::error(name, self.v.incremental_tol, e)
            }
        }
    }

    /// Every check of the suite, sector invariance last. `extra` also goes
    /// through the incremental harness.
    pub fn run_all(&self, extra: Option<&Fhigs<f64>>) -> Vec<Check> {
        let mut out = vec![self.equivalence(), self.higs_phase_check()];
        out.extend(self.lead_sweep_checks());
        out.extend(self.switching_checks());
        out.push(self.first_harmonic_check());
        out.extend(self.symmetry_checks());
        out.push(self.df_vs_simulation_check());
        out.extend(self.incremental_checks());
        if let Some(el) = extra {
            out.push(self.incremental_element_check(el));
        }
        out.push(self.monitor.check(self.v.sector_tol));
        out
    }
}

/// Element with a first-order filter (lead, lag or low-pass) and
/// `0 <= k1 < k2`, and a frequency, biased toward `target`.
fn draw_simplified(rng: &mut Rng64, target: SwitchCase) -> (SimplifiedFhigs<f64>, f64) {
    let k1 = if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(0.0..0.5) };
    let k2 = k1 + rng.gen_range(0.2..2.0);
    let omega_h = log_uniform(rng, 10.0, 500.0);
    let p = FhigsParams::integrator(k1, k2, omega_h).expect("k2 > k1");
    let w = log_uniform(rng, 0.5, 5e3);
    let f = match target {
        SwitchCase::Lead => {
            if rng.gen_bool(0.2) {
                TransferFunction::gain(rng.gen_range(0.5..2.0))
            } else {
                let tp = 1.0 / log_uniform(rng, 1.0, 1e4);
                TransferFunction::new(vec![tp * rng.gen_range(1.2..8.0), 1.0], vec![tp, 1.0]).expect("valid")
            }
        }
        // low-pass corner below omega_h / k2 keeps the k1 line, above skips it
        SwitchCase::LagWithK1 => lowpass(omega_h / k2 * rng.gen_range(0.1..0.9)),
        SwitchCase::LagNoK1 => lowpass(omega_h / k2 * rng.gen_range(1.2..10.0)),
    };
    (simplified(p, &f), w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monitor_flags_violations_and_aborts() {
        let m = SectorMonitor::default();
        m.record_value(1e-12, 3);
        assert!(m.check(1e-9).pass);
        m.record_value(1e-6, 1);
        let c = m.check(1e-9);
        assert!(!c.pass && c.measured == 1e-6);
        assert_eq!(m.summary(), (1e-6, 4, 0));

        let m = SectorMonitor::default();
        let r: Result<Trajectory<f64>, _> = Err(SimError::SectorViolation { t: 0.5, violation: 0.0 });
        assert!(m.observe(r).is_err());
        // an aborted run fails the check even at zero measured violation
        assert!(!m.check(1e-9).pass);
        assert_eq!(m.summary().2, 1);
    }

    #[test]
    fn check_lines() {
        let c = Check::at_most("x", 2.0, 1.0);
        assert!(!c.pass);
        assert!(c.to_string().starts_with("FAIL x measured="));
        assert!(Check::above("y", 2.0, 1.0).pass);
        assert!(!Check::below("z", 1.0, 1.0).pass);
    }

    #[test]
    fn lead_filter_is_unit_dc_gain_lead() {
        let f = lead_filter();
        assert!((f.eval(Complex::new(0.0, 0.0)).re - 1.0).abs() < 1e-12);
        assert!(f.eval(Complex::new(0.0, 20.0 * PI)).arg() > 0.0);
    }
}
