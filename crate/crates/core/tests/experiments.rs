use std::fs;
use std::path::Path;

use fhigs::df::{steady_state_analytic, DfOptions, SimplifiedFhigs};
use fhigs::element::{Fhigs, FhigsParams, Mode};
use fhigs::experiments::config::VerifySection;
use fhigs::experiments::verify::lead_filter;
use fhigs::experiments::{cmd_df, cmd_gainloss, cmd_simulate, cmd_step, cmd_verify, defaults, ExperimentConfig, Suite};
use fhigs::lti::tf_to_ss;
use fhigs::sim::Event;

fn cfg(text: &str) -> ExperimentConfig {
    let c = ExperimentConfig::from_toml(text).unwrap();
    c.validate().unwrap();
    c
}

fn rows(path: &Path) -> Vec<String> {
    fs::read_to_string(path).unwrap().lines().map(str::to_owned).collect()
}

/// Small suite for tests that only need the plumbing.
fn quick_verify() -> VerifySection {
    VerifySection {
        equivalence_configs: 3,
        equivalence_t_end: 0.3,
        switching_draws: 6,
        quadrature_draws: 3,
        incremental_pairs: 2,
        incremental_horizon: 20.0,
        ..VerifySection::default()
    }
}

#[test]
fn shipped_configs_validate() {
    for (name, text) in defaults::ALL {
        ExperimentConfig::from_toml(text).unwrap_or_else(|e| panic!("{name}: {e}")).validate().unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn df_writes_both_sweeps_on_one_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = cmd_df(&cfg(defaults::LEAD_DF), dir.path(), DfOptions { validate: true }).unwrap();
    assert_eq!(out.failures(), 0);
    let (f, h) = (rows(&out.files[0]), rows(&out.files[1]));
    assert_eq!(f.len(), 1 + 200 * 3);
    assert_eq!(f[0], "omega_rad_s,k,a_k,b_k,mag_db,phase_deg,case");
    let grid = |r: &[String]| r[1..].iter().map(|l| l.split(',').next().unwrap().to_owned()).collect::<Vec<_>>();
    assert_eq!(grid(&f), grid(&h));
    let max_phase = f[1..]
        .iter()
        .filter(|l| l.split(',').nth(1) == Some("1"))
        .map(|l| l.split(',').nth(5).unwrap().parse::<f64>().unwrap())
        .fold(f64::NEG_INFINITY, f64::max);
    assert!(max_phase > 0.0);
}

#[test]
fn unit_filter_reproduces_the_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let text = defaults::LEAD_DF.replace("f2 = \"lead\"", "f2 = { kind = \"gain\", k = 1.0 }");
    let out = cmd_df(&cfg(&text), dir.path(), DfOptions::default()).unwrap();
    assert_eq!(fs::read(&out.files[0]).unwrap(), fs::read(&out.files[1]).unwrap());
}

#[test]
fn single_frequency_grid() {
    let dir = tempfile::tempdir().unwrap();
    let text = defaults::LEAD_DF.replace("harmonics = [1, 3, 5]", "harmonics = [1]") + "omegas = [25.0]\n";
    let out = cmd_df(&cfg(&text), dir.path(), DfOptions::default()).unwrap();
    assert_eq!(rows(&out.files[0]).len(), 2);
    assert_eq!(rows(&out.files[1]).len(), 2);
}

#[test]
fn lead_trajectory_settles_onto_the_analytic_response() {
    let dir = tempfile::tempdir().unwrap();
    let (tr, files) = cmd_simulate(&cfg(defaults::LEAD_SIM), dir.path()).unwrap();
    assert_eq!(rows(&files[0])[0], "t,e,edot,v1,v2,x_h,mode,y");
    assert_eq!(rows(&files[1])[0], "t_event,from,to");
    let w = 8.0 * std::f64::consts::PI;
    let el = SimplifiedFhigs::new(FhigsParams::integrator(0.0, 1.0, 100.0).unwrap(), tf_to_ss(&lead_filter())).unwrap();
    let resp = steady_state_analytic(&el, w, 1.0).unwrap();
    let t0 = tr.duration() - std::f64::consts::TAU / w;
    let worst = tr.samples.iter().filter(|s| s.t >= t0).map(|s| (s.x_h - resp.eval(s.t)).abs()).fold(0.0, f64::max);
    assert!(worst < 1e-6, "worst {worst:e}");
}

fn last_period_transitions(events: &[Event<f64>], t0: f64) -> Vec<(Mode, Mode)> {
    let mut v: Vec<_> = events.iter().filter(|e| e.t >= t0).map(|e| (e.from, e.to)).collect();
    v.sort_by_key(|(a, b)| (a.index(), b.index()));
    v
}

#[test]
fn lowpass_mode_sequences() {
    use Mode::*;
    let dir = tempfile::tempdir().unwrap();
    let period = 0.1;
    let (tr, _) = cmd_simulate(&cfg(defaults::LAG_SIM), dir.path()).unwrap();
    let got = last_period_transitions(&tr.events, tr.duration() - period);
    let want = vec![(Integrator, GainK1), (Integrator, GainK1), (GainK1, GainK2), (GainK1, GainK2), (GainK2, Integrator), (GainK2, Integrator)];
    assert_eq!(got, want);

    let text = defaults::LAG_SIM.replace("f2 = { kind = \"lowpass\", omega = 62.83185307179586 }", "f2 = { kind = \"lowpass\", omega = 251.32741228718345 }");
    let (tr, _) = cmd_simulate(&cfg(&text), dir.path()).unwrap();
    let got = last_period_transitions(&tr.events, tr.duration() - period);
    assert_eq!(got, vec![(Integrator, GainK2), (Integrator, GainK2), (GainK2, Integrator), (GainK2, Integrator)]);
}

#[test]
fn zero_input_gives_zero_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let text = defaults::LEAD_SIM.replace("kind = \"sine\"\namplitude = 1.0\nomega = 25.132741228718345   # 8 pi rad/s", "kind = \"zero\"");
    assert!(text.contains("kind = \"zero\""));
    let (tr, _) = cmd_simulate(&cfg(&text), dir.path()).unwrap();
    assert!(tr.events.is_empty());
    assert!(tr.samples.iter().all(|s| s.x_h == 0.0 && s.e == 0.0 && s.v2 == 0.0 && s.y == 0.0));
}

fn same_files(a: &[std::path::PathBuf], b: &[std::path::PathBuf]) {
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(b) {
        assert_eq!(x.file_name(), y.file_name());
        assert!(fs::read(x).unwrap() == fs::read(y).unwrap(), "{} differs", x.display());
    }
}

#[test]
fn identical_configs_give_identical_files() {
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let run = |dir: &Path| {
        let mut files = cmd_df(&cfg(defaults::LEAD_DF), dir, DfOptions::default()).unwrap().files;
        files.extend(cmd_simulate(&cfg(defaults::LAG_SIM), dir).unwrap().1);
        files.push(cmd_gainloss(&cfg(defaults::GAINLOSS), dir).unwrap().1);
        files.extend(cmd_step(&cfg(defaults::STEP), dir).unwrap().1);
        files
    };
    same_files(&run(d1.path()), &run(d2.path()));
}

#[test]
fn gainloss_report_has_four_rows() {
    let dir = tempfile::tempdir().unwrap();
    let (rep, path) = cmd_gainloss(&cfg(defaults::GAINLOSS), dir.path()).unwrap();
    let names: Vec<_> = rep.rows.iter().map(|r| r.name).collect();
    assert_eq!(names, ["higs_pure", "higs_mixed", "higs_lifted", "fhigs_mixed"]);
    assert_eq!(rows(&path).len(), 5);
    for r in &rep.rows {
        assert!(r.rms >= 0.0 && (-1.0..=1.0).contains(&r.correlation));
    }
    assert_eq!(rep.rows[0].correlation, 1.0);
}

#[test]
fn step_rows_and_divergence() {
    let dir = tempfile::tempdir().unwrap();
    let (rep, files) = cmd_step(&cfg(defaults::STEP), dir.path()).unwrap();
    assert_eq!(files.len(), 4);
    assert!(rep.rows.iter().all(|r| !r.diverged && r.overshoot_pct >= 0.0));
    // the FHIGS row settles no later than the HIGS row with the shipped tuning
    assert!(rep.row("fhigs").unwrap().settling_time <= rep.row("higs").unwrap().settling_time);

    // without the lead the linear loop cannot hold the unstable pole
    let text = defaults::STEP.replace("loop_filter = { kind = \"lead_lag\", tau_z = 0.05, tau_p = 1.0e-4 }", "loop_filter = { kind = \"gain\", k = 1.0 }")
        .replace("divergence = 1.0e6", "divergence = 1.0e4");
    let (rep, files) = cmd_step(&cfg(&text), dir.path()).unwrap();
    let lin = rep.row("linear").unwrap();
    assert!(lin.diverged && lin.max_state_norm > 1e4, "{lin:?}");
    assert_eq!(files.len(), 4);
    assert!(rows(&files[0])[1].ends_with(",diverged"));
}

#[test]
fn corrupted_k2_matrix_breaks_equivalence() {
    let v = quick_verify();
    assert!(Suite::new(&v, DfOptions::default()).equivalence().pass);
    let bad = VerifySection { a2_perturbation: 0.1, ..v };
    let c = Suite::new(&bad, DfOptions::default()).equivalence();
    assert!(!c.pass, "{c}");
}

#[test]
fn incremental_harness_rejects_positive_k1() {
    let v = quick_verify();
    let suite = Suite::new(&v, DfOptions::default());
    let el = Fhigs::higs(FhigsParams::integrator(0.1, 1.0, 50.0).unwrap());
    let c = suite.incremental_element_check(&el);
    assert!(!c.pass && c.detail.contains("k1 <= 0"), "{c}");
    let el = Fhigs::higs(FhigsParams::integrator(-0.1, 1.0, 50.0).unwrap());
    assert!(suite.incremental_element_check(&el).pass);
}

#[test]
fn verify_report_lines() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = cfg(defaults::VERIFY);
    c.verify = Some(quick_verify());
    let (checks, path) = cmd_verify(&c, dir.path(), Some(3), DfOptions::default()).unwrap();
    let lines = rows(&path);
    assert_eq!(lines.len(), checks.len());
    assert!(checks.iter().all(|c| c.pass), "{checks:?}");
    assert!(lines.iter().all(|l| l.starts_with("PASS ") && l.contains("measured=") && l.contains(" tol")));
    assert!(lines.last().unwrap().contains("sector_invariance"));

    // an element in the config is run through the incremental harness
    let text = format!("{}\n[element]\nk1 = 0.2\nk2 = 1.0\nomega_h = 10.0\n", defaults::VERIFY);
    let mut c = cfg(&text);
    c.verify = Some(quick_verify());
    let (checks, _) = cmd_verify(&c, dir.path(), None, DfOptions::default()).unwrap();
    let bad: Vec<_> = checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
    assert_eq!(bad, ["incremental_config_element"]);
}
