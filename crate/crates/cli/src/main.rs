use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use nschb_core::config::SimConfig;
use nschb_core::driver::{invariant_violations, Simulation};
use nschb_core::experiments::{
    convergence_study_with, perturbation_experiment, run_level, Reference, StudyKind,
};
use nschb_core::io;
use nschb_core::Error;

#[derive(Parser)]
#[command(
    name = "nschb",
    version,
    about = "Two-phase thermocapillary flow solver"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Spatial,
    Temporal,
}

#[derive(Clone, Copy, ValueEnum)]
enum Against {
    Exact,
    #[value(name = "self")]
    SelfConvergence,
}

#[derive(Subcommand)]
enum Command {
    /// Run one trajectory and write snapshots and reports.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Continue from the final snapshot of an earlier run directory.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Convergence study over grid sizes (spatial) or step counts (temporal).
    Convergence {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        levels: Vec<usize>,
        #[arg(long, value_enum, default_value = "spatial")]
        kind: Kind,
        #[arg(long, value_enum, default_value = "exact")]
        reference: Against,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Twin runs measuring the continuous-dependence functional.
    Perturb {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        eps: f64,
        #[arg(long = "t-end")]
        t_end: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarize the reports of a finished run directory.
    Report {
        #[arg(long)]
        out: PathBuf,
    },
}

/// Exit status: 0 success, 2 invariant violation, 1 anything else.
enum Outcome {
    Ok,
    Violation(Vec<String>),
}

fn exit_code(e: &Error) -> u8 {
    if e.is_invariant_violation() {
        2
    } else {
        1
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> Result<String, Error> {
    serde_json::to_string_pretty(v).map_err(|e| Error::Parse(e.to_string()))
}

fn run(config: &Path, out: Option<PathBuf>, resume: Option<PathBuf>) -> Result<Outcome, Error> {
    let cfg = SimConfig::load(config)?;
    let out = out.unwrap_or_else(|| cfg.output.dir.clone());
    let mut sim = match resume {
        Some(dir) => {
            let s = io::read_state(&dir.join("final"), "final")?;
            Simulation::resume(cfg.clone(), s)?
        }
        None => Simulation::new(cfg.clone())?,
    };
    let summary = sim.run_with_output(&out)?;
    println!("{}", to_json(&summary)?);
    let v = invariant_violations(&cfg, &summary.invariants);
    Ok(if v.is_empty() {
        Outcome::Ok
    } else {
        Outcome::Violation(v)
    })
}

fn convergence(
    config: &Path,
    levels: &[usize],
    kind: Kind,
    reference: Against,
    out: Option<PathBuf>,
) -> Result<Outcome, Error> {
    let cfg = SimConfig::load(config)?;
    let kind = match kind {
        Kind::Spatial => StudyKind::Spatial,
        Kind::Temporal => StudyKind::Temporal,
    };
    let reference = match reference {
        Against::Exact => Reference::Exact,
        Against::SelfConvergence => Reference::SelfConvergence,
    };
    let table = convergence_study_with(&cfg, kind, reference, levels, |cs| {
        cs.into_par_iter().map(run_level).collect()
    })?;
    println!("level,nx,ny,dt,steps,err_theta,err_phi,err_u");
    for l in &table.levels {
        match l.errors {
            Some(e) => println!(
                "{},{},{},{:e},{},{:e},{:e},{:e}",
                l.level, l.nx, l.ny, l.dt, l.steps, e.theta, e.phi, e.u
            ),
            None => println!("{},{},{},{:e},{},,,", l.level, l.nx, l.ny, l.dt, l.steps),
        }
    }
    let fmt = |o: Option<f64>| o.map_or("-".to_string(), |v| format!("{v:.3}"));
    for (k, o) in table.orders.iter().enumerate() {
        println!(
            "order[{k}] theta={} phi={} u={}",
            fmt(o.theta),
            fmt(o.phi),
            fmt(o.u)
        );
    }
    if let Some(dir) = out {
        std::fs::create_dir_all(&dir)?;
        std::fs::write(dir.join("convergence.json"), to_json(&table)?)?;
    }
    Ok(Outcome::Ok)
}

fn perturb(
    config: &Path,
    eps: f64,
    t_end: f64,
    seed: u64,
    out: Option<PathBuf>,
) -> Result<Outcome, Error> {
    let cfg = SimConfig::load(config)?;
    let r = perturbation_experiment(&cfg, eps, t_end, seed)?;
    if let Some(dir) = &out {
        std::fs::create_dir_all(dir)?;
        io::write_csv(&dir.join("lambda.csv"), &r.series)?;
    }
    let l0 = r.series.first().map_or(0.0, |s| s.total);
    let lt = r.series.last().map_or(0.0, |s| s.total);
    println!("eps = {eps:e}");
    println!("Lambda(0) = {l0:.6e}");
    println!("Lambda(T) = {lt:.6e}");
    match r.amplification {
        Some(a) => println!("amplification = {a:.6}"),
        None => println!("amplification = undefined (Lambda(0) = 0)"),
    }
    Ok(Outcome::Ok)
}

fn report(out: &Path) -> Result<Outcome, Error> {
    let (eh, erows) = io::read_numeric_csv(&out.join("energy.csv"))?;
    let (ih, irows) = io::read_numeric_csv(&out.join("invariants.csv"))?;
    let col = |h: &[String], name: &str| h.iter().position(|c| c == name);
    let last_inv = irows
        .last()
        .ok_or_else(|| Error::Parse("invariants.csv has no rows".into()))?;
    for (name, v) in ih.iter().zip(last_inv) {
        println!("{name} = {v:e}");
    }
    if let Some(k) = col(&eh, "e1") {
        let e1: Vec<f64> = erows.iter().map(|r| r[k]).collect();
        let max = e1.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = e1.iter().copied().fold(f64::INFINITY, f64::min);
        println!(
            "e1: first = {:e}, last = {:e}, min = {min:e}, max = {max:e}",
            e1[0],
            e1[e1.len() - 1]
        );
    }
    let get = |name: &str| col(&ih, name).map(|k| last_inv[k]);
    let bad = get("energy_violations").is_some_and(|v| v > 0.0)
        || get("mass_drift").is_some_and(|v| v > nschb_core::driver::MASS_TOL);
    Ok(if bad {
        Outcome::Violation(vec!["recorded invariants were violated".into()])
    } else {
        Outcome::Ok
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    if let Some(n) = std::env::var("NSCHB_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
        {
            log::warn!("could not cap worker threads: {e}");
        }
    }
    let result = match cli.command {
        Command::Run {
            config,
            out,
            resume,
        } => run(&config, out, resume),
        Command::Convergence {
            config,
            levels,
            kind,
            reference,
            out,
        } => convergence(&config, &levels, kind, reference, out),
        Command::Perturb {
            config,
            eps,
            t_end,
            seed,
            out,
        } => perturb(&config, eps, t_end, seed, out),
        Command::Report { out } => report(&out),
    };
    match result {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Violation(v)) => {
            for m in v {
                eprintln!("invariant violated: {m}");
            }
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
