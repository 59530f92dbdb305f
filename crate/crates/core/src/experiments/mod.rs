//! Config-driven experiments behind the command-line tool. Every command
//! is deterministic in its config: fixed steps, fixed quadrature and
//! seeded draws.

pub mod config;
pub mod gainloss;
pub mod random;
pub mod step;
pub mod verify;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::df::{df_sweep, write_sweep_csv, DfOptions, SimplifiedFhigs, SweepEntry};
use crate::lti::{tf_to_ss, TransferFunction};
use crate::sim::{simulate_open_loop, Trajectory};

pub use config::ExperimentConfig;
pub use gainloss::{run_gainloss, GainLossReport, GainLossRow};
pub use step::{run_step, StepReport, StepRow};
pub use verify::{Check, Suite};

/// Configs shipped with the crate.
pub mod defaults {
    pub const LEAD_DF: &str = include_str!("../../configs/lead_df.toml");
    pub const LEAD_SIM: &str = include_str!("../../configs/lead_sim.toml");
    pub const LAG_SIM: &str = include_str!("../../configs/lag_sim.toml");
    pub const GAINLOSS: &str = include_str!("../../configs/gainloss.toml");
    pub const STEP: &str = include_str!("../../configs/step.toml");
    pub const VERIFY: &str = include_str!("../../configs/verify.toml");

    pub const ALL: [(&str, &str); 6] = [
        ("lead_df.toml", LEAD_DF),
        ("lead_sim.toml", LEAD_SIM),
        ("lag_sim.toml", LAG_SIM),
        ("gainloss.toml", GAINLOSS),
        ("step.toml", STEP),
        ("verify.toml", VERIFY),
    ];
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("missing config section [{0}]")]
    MissingSection(String),
    #[error("config error in {section}: {message}")]
    Field { section: String, message: String },
    #[error("{0}")]
    Run(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl ExperimentError {
    pub fn field(section: &str, message: impl std::fmt::Display) -> Self {
        ExperimentError::Field { section: section.to_owned(), message: message.to_string() }
    }
}

impl From<crate::sim::SimError> for ExperimentError {
    fn from(e: crate::sim::SimError) -> Self {
        ExperimentError::Run(e.to_string())
    }
}

impl From<crate::df::DfError> for ExperimentError {
    fn from(e: crate::df::DfError) -> Self {
        ExperimentError::Run(e.to_string())
    }
}

/// Check level of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    /// Cross-validate every closed form; verbose logging.
    Debug,
    /// Cross-validate every closed form at full speed.
    ReleaseChecks,
}

pub fn df_options(profile: Option<Profile>) -> DfOptions {
    match profile {
        Some(_) => DfOptions { validate: true },
        None => DfOptions::default(),
    }
}

/// `F1^{-1} F2` for a biproper `F1`.
pub fn reduced_filter(f1: &TransferFunction<f64>, f2: &TransferFunction<f64>) -> Result<TransferFunction<f64>, ExperimentError> {
    if !f1.is_biproper() {
        return Err(ExperimentError::field("element.f1", "must be biproper to form F1^-1 F2"));
    }
    Ok(f1.inverse().map_err(|e| ExperimentError::field("element.f1", e))?.series(f2))
}

fn create(dir: &Path, name: &str) -> Result<(PathBuf, BufWriter<File>), ExperimentError> {
    std::fs::create_dir_all(dir).map_err(|e| ExperimentError::Io(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    let f = File::create(&path).map_err(|e| ExperimentError::Io(format!("{}: {e}", path.display())))?;
    Ok((path, BufWriter::new(f)))
}

fn write_with(dir: &Path, name: &str, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<PathBuf, ExperimentError> {
    let (path, mut w) = create(dir, name)?;
    f(&mut w).and_then(|_| w.flush()).map_err(|e| ExperimentError::Io(format!("{}: {e}", path.display())))?;
    Ok(path)
}

#[derive(Debug)]
pub struct DfOutput {
    pub fhigs: Vec<SweepEntry<f64>>,
    pub higs: Vec<SweepEntry<f64>>,
    pub files: Vec<PathBuf>,
}

impl DfOutput {
    pub fn failures(&self) -> usize {
        self.fhigs.iter().chain(&self.higs).filter(|e| e.result.is_err()).count()
    }
}

/// Describing-function sweeps of the configured element and of the plain
/// element (`F = 1`) on the same grid.
pub fn cmd_df(cfg: &ExperimentConfig, out: &Path, opts: DfOptions) -> Result<DfOutput, ExperimentError> {
    let el = cfg.section("element", &cfg.element)?;
    let d = cfg.section("df", &cfg.df)?;
    let p = config::GainsSection { k1: el.k1, k2: el.k2, omega_h: el.omega_h, alpha_h: el.alpha_h }.params("element")?;
    if p.alpha_h != 0.0 {
        return Err(ExperimentError::field("element.alpha_h", "the describing function needs alpha_h = 0"));
    }
    let f = reduced_filter(&cfg.filter_tf(&el.f1, "element.f1")?, &cfg.filter_tf(&el.f2, "element.f2")?)?;
    let grid = d.grid()?;
    let fh = SimplifiedFhigs::new(p, tf_to_ss(&f)).map_err(|e| ExperimentError::field("element", e))?;
    let hg = SimplifiedFhigs::higs(p).map_err(|e| ExperimentError::field("element", e))?;
    let fhigs = df_sweep(&fh, &grid, &d.harmonics, opts).map_err(|e| ExperimentError::field("df", e))?;
    let higs = df_sweep(&hg, &grid, &d.harmonics, opts).map_err(|e| ExperimentError::field("df", e))?;
    for e in fhigs.iter().chain(&higs) {
        if let Err(err) = &e.result {
            log::warn!("df point omega = {}, k = {} failed: {err}", e.omega, e.k);
        }
    }
    let files = vec![
        write_with(out, "df_fhigs.csv", |w| write_sweep_csv(&fhigs, w))?,
        write_with(out, "df_higs.csv", |w| write_sweep_csv(&higs, w))?,
    ];
    Ok(DfOutput { fhigs, higs, files })
}

/// Open-loop response of `[element]` to `[input]`.
pub fn cmd_simulate(cfg: &ExperimentConfig, out: &Path) -> Result<(Trajectory<f64>, Vec<PathBuf>), ExperimentError> {
    let el = cfg.element()?;
    let sim = cfg.section("sim", &cfg.sim)?.to_config();
    let input = cfg.section("input", &cfg.input)?.build()?;
    let tr = simulate_open_loop(&el, &input, &sim, &el.zero_state())?;
    let files = vec![
        write_with(out, "trajectory.csv", |w| tr.write_csv(w))?,
        write_with(out, "events.csv", |w| tr.write_events_csv(w))?,
    ];
    Ok((tr, files))
}

pub fn cmd_gainloss(cfg: &ExperimentConfig, out: &Path) -> Result<(GainLossReport, PathBuf), ExperimentError> {
    let rep = run_gainloss(cfg)?;
    let path = write_with(out, "gainloss.csv", |w| rep.write_csv(w))?;
    Ok((rep, path))
}

/// Step report plus one trajectory file per row that did not blow up.
pub fn cmd_step(cfg: &ExperimentConfig, out: &Path) -> Result<(StepReport, Vec<PathBuf>), ExperimentError> {
    let (rep, trajs) = run_step(cfg)?;
    let mut files = vec![write_with(out, "step.csv", |w| rep.write_csv(w))?];
    for (name, tr) in step::ROWS.iter().zip(&trajs) {
        if let Some(tr) = tr {
            files.push(write_with(out, &format!("step_{name}.csv"), |w| tr.write_csv(w))?);
        }
    }
    Ok((rep, files))
}

/// Runs the verification suite; `seed` overrides `[verify] seed`. When the
/// config has an `[element]`, the incremental harness also runs on it.
pub fn cmd_verify(cfg: &ExperimentConfig, out: &Path, seed: Option<u64>, opts: DfOptions) -> Result<(Vec<Check>, PathBuf), ExperimentError> {
    let mut v = cfg.verify.clone().unwrap_or_default();
    if let Some(s) = seed {
        v.seed = s;
    }
    let el = cfg.element.as_ref().map(|_| cfg.element()).transpose()?;
    let checks = Suite::new(&v, opts).run_all(el.as_ref());
    let path = write_with(out, "verify.txt", |w| checks.iter().try_for_each(|c| writeln!(w, "{c}")))?;
    Ok((checks, path))
}
