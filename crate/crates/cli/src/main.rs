use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use fhigs::experiments::{
    self, cmd_df, cmd_gainloss, cmd_simulate, cmd_step, cmd_verify, defaults, ExperimentConfig, Profile,
};

#[derive(Parser)]
#[command(name = "fhigs", version, about = "Filtered integrator-gain element experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// TOML config; each command falls back to its shipped default.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for CSV and report files.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Seed of the randomized verification draws.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Cross-validate every closed form against its numeric oracle.
    #[arg(long, global = true, value_enum)]
    profile: Option<ProfileArg>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Describing-function sweeps of the element and of the plain element.
    Df {
        /// Print F = F1^-1 F2 and exit.
        #[arg(long)]
        show_filter: bool,
    },
    /// Open-loop time response with event log.
    Simulate,
    /// Gain-loss comparison under a two-tone input.
    Gainloss,
    /// Closed-loop step responses of the three controllers.
    Step,
    /// Oracle and invariant checks.
    Verify,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileArg {
    Debug,
    ReleaseChecks,
}

fn load(cli: &Cli, fallback: &str) -> Result<ExperimentConfig> {
    let cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::from_toml(fallback)?,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<bool> {
    let profile = cli.profile.map(|p| match p {
        ProfileArg::Debug => Profile::Debug,
        ProfileArg::ReleaseChecks => Profile::ReleaseChecks,
    });
    let opts = experiments::df_options(profile);
    let out = &cli.out;
    match &cli.cmd {
        Cmd::Df { show_filter } => {
            let cfg = load(cli, defaults::LEAD_DF)?;
            if *show_filter {
                let el = cfg.section("element", &cfg.element)?;
                let f = experiments::reduced_filter(&cfg.filter_tf(&el.f1, "element.f1")?, &cfg.filter_tf(&el.f2, "element.f2")?)?;
                println!("num = {:?}\nden = {:?}", f.num(), f.den());
                return Ok(true);
            }
            let res = cmd_df(&cfg, out, opts)?;
            for f in &res.files {
                println!("wrote {}", f.display());
            }
            let failed = res.failures();
            if failed > 0 {
                eprintln!("{failed} describing-function points failed");
            }
            Ok(failed == 0)
        }
        Cmd::Simulate => {
            let cfg = load(cli, defaults::LEAD_SIM)?;
            let (tr, files) = cmd_simulate(&cfg, out)?;
            for f in &files {
                println!("wrote {}", f.display());
            }
            println!("{} samples, {} events", tr.len(), tr.events.len());
            Ok(true)
        }
        Cmd::Gainloss => {
            let cfg = load(cli, defaults::GAINLOSS)?;
            let (rep, path) = cmd_gainloss(&cfg, out)?;
            println!("wrote {}", path.display());
            for r in &rep.rows {
                println!(
                    "{:<12} rms ratio {:.4}  correlation {:.4}  events/period {}",
                    r.name,
                    r.rms_ratio(),
                    r.correlation,
                    r.events_per_period
                );
            }
            let flag = |ok: bool| if ok { "met" } else { "not met" };
            println!("collapse (ratio < {}): {}", rep.rms_ratio_max, flag(rep.collapse_reproduced()));
            println!("recovery (correlation > {}): {}", rep.correlation_min, flag(rep.fhigs_recovers()));
            println!("lifting correlation below filtered: {}", flag(rep.lifting_distorts()));
            Ok(true)
        }
        Cmd::Step => {
            let cfg = load(cli, defaults::STEP)?;
            let (rep, files) = cmd_step(&cfg, out)?;
            for f in &files {
                println!("wrote {}", f.display());
            }
            for r in &rep.rows {
                if r.diverged {
                    println!("{:<7} diverged (max state norm {:.3e})", r.name, r.max_state_norm);
                } else {
                    println!(
                        "{:<7} overshoot {:.4} %  settling {:.4} s  error {:.3e}",
                        r.name, r.overshoot_pct, r.settling_time, r.steady_state_error
                    );
                }
            }
            Ok(rep.rows.iter().all(|r| !r.diverged))
        }
        Cmd::Verify => {
            let cfg = load(cli, defaults::VERIFY)?;
            let (checks, path) = cmd_verify(&cfg, out, cli.seed, opts)?;
            for c in &checks {
                println!("{c}");
            }
            println!("wrote {}", path.display());
            Ok(checks.iter().all(|c| c.pass))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.profile {
        Some(ProfileArg::Debug) => "debug",
        _ => "warn",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli).context("fhigs") {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
