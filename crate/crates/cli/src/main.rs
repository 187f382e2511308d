//! `trt`: run a built-in radiative transfer scenario.

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Parser;
use trt_core::config::{AssertMode, RunConfig, SolverKind};
use trt_core::run::run;
use trt_core::scenario::BUILTIN;

#[derive(Debug, Parser)]
#[command(name = "trt", version, about = "Thermal radiative transfer: dense, low-rank and Rosseland solvers")]
struct Cli {
    /// TOML run configuration; flags given on the command line override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in scenario name.
    #[arg(long)]
    scenario: Option<String>,
    /// full | dlra | rosseland
    #[arg(long)]
    solver: Option<SolverKind>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    nx: Option<usize>,
    #[arg(long)]
    ny: Option<usize>,
    #[arg(long)]
    quad_order: Option<usize>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    cfl_safety: Option<f64>,
    /// ϑ relative to the largest singular value of the augmented core.
    #[arg(long)]
    theta_factor: Option<f64>,
    #[arg(long)]
    rank_initial: Option<usize>,
    #[arg(long)]
    rank_max: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Field dump interval in steps (0: initial and final only).
    #[arg(long)]
    dump_every: Option<usize>,
    /// strict | monitor
    #[arg(long)]
    assert: Option<AssertMode>,
    #[arg(long)]
    seed: Option<u64>,
    /// Also write VTK files for the centre lattice.
    #[arg(long)]
    vtk: bool,
    /// List built-in scenarios and exit.
    #[arg(long)]
    list: bool,
}

fn build_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            RunConfig::from_toml(&text)?
        }
        None => {
            let scenario = cli.scenario.as_deref().context("--scenario or --config is required")?;
            RunConfig::new(scenario, cli.solver.unwrap_or(SolverKind::Full))
        }
    };
    if let Some(s) = &cli.scenario {
        cfg.run.scenario = s.clone();
    }
    if let Some(s) = cli.solver {
        cfg.run.solver = s;
    }
    let d = &mut cfg.discretization;
    d.epsilon = cli.epsilon.or(d.epsilon);
    d.nx = cli.nx.or(d.nx);
    d.ny = cli.ny.or(d.ny);
    d.quad_order = cli.quad_order.or(d.quad_order);
    cfg.run.t_end = cli.t_end.or(cfg.run.t_end);
    if let Some(v) = cli.cfl_safety {
        cfg.run.cfl_safety = v;
    }
    if let Some(v) = cli.theta_factor {
        cfg.lowrank.theta_factor = v;
    }
    if let Some(v) = cli.rank_initial {
        cfg.lowrank.rank_initial = v;
    }
    if let Some(v) = cli.rank_max {
        cfg.lowrank.rank_max = v;
    }
    if let Some(v) = cli.dump_every {
        cfg.output.dump_every = v;
    }
    if let Some(v) = cli.assert {
        cfg.run.assert = v;
    }
    if let Some(v) = cli.seed {
        cfg.run.seed = v;
    }
    cfg.output.vtk |= cli.vtk;
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if cli.list {
        for name in BUILTIN {
            println!("{name}");
        }
        return Ok(());
    }
    let cfg = build_config(&cli)?;
    log::info!("running {} with {:?} solver into {}", cfg.run.scenario, cfg.run.solver, cli.out.display());
    let summary = run(&cfg, &cli.out)?;
    let m = &summary.manifest;
    println!(
        "{}: {} steps to t = {:e} in {:.2} s, energy {:e} -> {:e}, max rank {}",
        m.scenario, m.steps, m.final_time, m.wall_time_s, m.energy_initial, m.energy_final, m.max_rank
    );
    Ok(())
}
