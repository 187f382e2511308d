//! Run orchestration and output files.
//!
//! A run directory holds:
//!
//! * `timeseries.csv`: `t,energy,mass,rank,dt`, one row for the initial state
//!   and one per step. `rank` is 0 for the dense and Rosseland solvers.
//! * `fields_NNNNNN.csv`: `x,y,T,T_rad,phi`, one row per K^C node in grid
//!   storage order (centres row-major, then corners row-major).
//! * `fields_NNNNNN.vtk` (optional): legacy VTK structured points on the
//!   centre lattice with the same three fields.
//! * `manifest.json`: see [`Manifest`].

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{AssertMode, RunConfig, SolverKind};
use crate::diagnostics::{self, StepRecord};
use crate::error::{Error, Result};
use crate::full_solver::{step_full, FullState};
use crate::lowrank::{dlra_step, LowRankState, TruncationPolicy};
use crate::problem::Problem;
use crate::rosseland::{rosseland_step, RosselandState};
use crate::scenario::Scenario;

/// Relative slack of the strict energy check, in units of e⁰.
pub const ENERGY_SLACK: f64 = 1e-12;

#[derive(Debug, Clone)]
pub enum SolverState {
    Full(FullState),
    LowRank(LowRankState),
    Rosseland(RosselandState),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RunFlags {
    /// Galerkin systems carried a diagonal floor because of vacuum.
    pub vacuum_floor: bool,
    /// Strict energy checking was requested but disabled (vacuum or a
    /// heated wall, where energy may legitimately grow).
    pub forced_monitor: bool,
    /// A transmitting wall is hotter than every initial node.
    pub heated_wall: bool,
    /// σ_t0 = 0, so dt came from the hyperbolic bound εΔ/(3c).
    pub cfl_fallback: bool,
    /// Steps whose truncation hit the rank cap.
    pub capped_steps: usize,
    /// Steps whose energy rose by more than the slack (monitor mode only).
    pub energy_increases: usize,
}

/// In-memory simulation: problem, state and stepping policy.
pub struct Simulation {
    pub scenario: Scenario,
    pub problem: Problem,
    pub state: SolverState,
    pub solver: SolverKind,
    pub policy: TruncationPolicy,
    pub dt: f64,
    pub assert: AssertMode,
    pub flags: RunFlags,
    pub steps: usize,
    rng: ChaCha8Rng,
}

impl Simulation {
    pub fn new(cfg: &RunConfig) -> Result<Self> {
        let scenario = cfg.scenario()?;
        let problem = scenario.problem()?;
        Self::with_problem(cfg, scenario, problem)
    }

    pub fn with_problem(cfg: &RunConfig, scenario: Scenario, problem: Problem) -> Result<Self> {
        cfg.validate()?;
        let mut flags = RunFlags::default();
        let safety = cfg.run.cfl_safety;
        let dt = match diagnostics::cfl_bound(&problem) {
            Ok(b) => safety * b,
            Err(_) => {
                if problem.eps == 0.0 {
                    return Err(Error::Config("vacuum with ε = 0 has no stable time step".into()));
                }
                flags.cfl_fallback = true;
                let g = &problem.grid;
                let q = &problem.quad;
                safety * diagnostics::cfl_formula(problem.eps, 0.0, problem.c, [g.dx, g.dy], [&q.omega_x, &q.omega_y])
            }
        };
        if cfg.run.solver == SolverKind::Rosseland && problem.has_vacuum {
            return Err(Error::Unsupported("Rosseland reference in vacuum (σ_t = 0)".into()));
        }
        let t0 = scenario.initial_temperature(&problem);
        let t_max = (0..t0.len())
            .filter(|&k| problem.dirichlet[k].is_none())
            .map(|k| t0[k])
            .fold(f64::NEG_INFINITY, f64::max);
        flags.heated_wall = problem
            .walls
            .map(|ws| ws.iter().any(|w| w.rho < 1.0 && w.temperature > t_max))
            .unwrap_or(false);
        let mut assert = cfg.run.assert;
        if (problem.has_vacuum || flags.heated_wall) && assert == AssertMode::Strict {
            log::warn!("vacuum or heated wall: energy need not decay, switching to monitor mode");
            assert = AssertMode::Monitor;
            flags.forced_monitor = true;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.run.seed);
        let state = match cfg.run.solver {
            SolverKind::Full => SolverState::Full(FullState::equilibrium(&problem, t0)),
            SolverKind::Dlra => {
                flags.vacuum_floor = problem.has_vacuum;
                SolverState::LowRank(LowRankState::zero(&problem, t0, cfg.lowrank.rank_initial, &mut rng))
            }
            SolverKind::Rosseland => SolverState::Rosseland(RosselandState { temp: t0, time: 0.0 }),
        };
        let policy = TruncationPolicy::relative(cfg.lowrank.theta_factor, cfg.lowrank.rank_max);
        policy.validate()?;
        Ok(Simulation {
            scenario,
            problem,
            state,
            solver: cfg.run.solver,
            policy,
            dt,
            assert,
            flags,
            steps: 0,
            rng,
        })
    }

    pub fn time(&self) -> f64 {
        match &self.state {
            SolverState::Full(s) => s.time,
            SolverState::LowRank(s) => s.time,
            SolverState::Rosseland(s) => s.time,
        }
    }

    pub fn temperature(&self) -> &[f64] {
        match &self.state {
            SolverState::Full(s) => &s.temp,
            SolverState::LowRank(s) => &s.temp,
            SolverState::Rosseland(s) => &s.temp,
        }
    }

    /// h on K^C (zero for the Rosseland reference).
    pub fn h(&self) -> Vec<f64> {
        match &self.state {
            SolverState::Full(s) => s.h.clone(),
            SolverState::LowRank(s) => s.h.clone(),
            SolverState::Rosseland(_) => vec![0.0; self.problem.grid.n_c()],
        }
    }

    pub fn rank(&self) -> usize {
        match &self.state {
            SolverState::LowRank(s) => s.rank(),
            _ => 0,
        }
    }

    pub fn energy(&self) -> Result<f64> {
        let p = &self.problem;
        match &self.state {
            SolverState::Full(s) => diagnostics::energy_full(p, &s.g, &s.temp, &s.h),
            SolverState::LowRank(s) => diagnostics::energy_lowrank(p, &s.x, &s.s, &s.v, &s.temp, &s.h),
            SolverState::Rosseland(s) => diagnostics::energy_macro(p, &s.temp, &vec![0.0; s.temp.len()]),
        }
    }

    pub fn mass(&self) -> f64 {
        diagnostics::mass(&self.problem, self.temperature(), &self.h())
    }

    pub fn record(&self, dt: f64, newton_max_iters: usize) -> Result<StepRecord> {
        Ok(StepRecord {
            t: self.time(),
            energy: self.energy()?,
            mass: self.mass(),
            rank: self.rank(),
            dt,
            newton_max_iters,
            cfl: self.dt,
        })
    }

    /// Advances by `dt`, leaving the state untouched on failure.
    pub fn step(&mut self, dt: f64) -> Result<StepRecord> {
        let p = &self.problem;
        let iters = match &self.state {
            SolverState::Full(s) => {
                let (next, stats) = step_full(p, s, dt)?;
                self.state = SolverState::Full(next);
                stats.max_iters
            }
            SolverState::LowRank(s) => {
                let (next, info) = dlra_step(p, s, dt, &self.policy, &mut self.rng)?;
                if info.truncation.capped {
                    self.flags.capped_steps += 1;
                }
                self.state = SolverState::LowRank(next);
                info.macro_stats.max_iters
            }
            SolverState::Rosseland(s) => {
                let (next, iters) = rosseland_step(p, s, dt)?;
                self.state = SolverState::Rosseland(next);
                iters
            }
        };
        self.steps += 1;
        self.record(dt, iters)
    }

    /// Rows `x,y,T,T_rad,phi` per K^C node.
    pub fn fields(&self) -> Vec<[f64; 5]> {
        let p = &self.problem;
        let temp = self.temperature();
        let h = self.h();
        let phi = p.scalar_flux(temp, &h);
        let trad = diagnostics::radiation_temperature(p, temp, &h);
        (0..p.grid.n_c())
            .map(|k| {
                let (x, y) = p.grid.coord_c(k);
                [x, y, temp[k], trad[k], phi[k]]
            })
            .collect()
    }
}

/// Run record written to `manifest.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub scenario: String,
    pub solver: SolverKind,
    pub units: String,
    pub epsilon: f64,
    pub nx: usize,
    pub ny: usize,
    pub quad_order: usize,
    pub seed: u64,
    /// SHA-256 of the serialized configuration.
    pub config_sha256: String,
    pub config: RunConfig,
    /// "completed" or "aborted".
    pub status: String,
    pub error: Option<String>,
    pub steps: usize,
    pub final_time: f64,
    pub t_end: f64,
    pub dt_nominal: f64,
    pub wall_time_s: f64,
    pub energy_initial: f64,
    pub energy_final: f64,
    pub mass_initial: f64,
    pub mass_final: f64,
    pub max_rank: usize,
    pub flags: RunFlags,
    pub dumps: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub manifest: Manifest,
    pub records: Vec<StepRecord>,
    pub out_dir: PathBuf,
}

pub fn config_hash(cfg: &RunConfig) -> Result<String> {
    let text = cfg.to_toml()?;
    let digest = Sha256::digest(text.as_bytes());
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

fn write_fields(sim: &Simulation, dir: &Path, step: usize, vtk: bool) -> Result<Vec<String>> {
    let name = format!("fields_{step:06}.csv");
    let mut w = csv::Writer::from_path(dir.join(&name)).map_err(csv_err)?;
    w.write_record(["x", "y", "T", "T_rad", "phi"]).map_err(csv_err)?;
    for row in sim.fields() {
        w.write_record(row.iter().map(|v| format!("{v:.17e}"))).map_err(csv_err)?;
    }
    w.flush()?;
    let mut out = vec![name];
    if vtk {
        let name = format!("fields_{step:06}.vtk");
        write_vtk(sim, &dir.join(&name))?;
        out.push(name);
    }
    Ok(out)
}

fn write_vtk(sim: &Simulation, path: &Path) -> Result<()> {
    let g = &sim.problem.grid;
    let (nx, ny) = (g.np.div_ceil(2), g.nq.div_ceil(2));
    let rows = sim.fields();
    let mut f = BufWriter::new(File::create(path)?);
    writeln!(f, "# vtk DataFile Version 3.0")?;
    writeln!(f, "{} t={:.17e}", sim.scenario.name, sim.time())?;
    writeln!(f, "ASCII")?;
    writeln!(f, "DATASET STRUCTURED_POINTS")?;
    writeln!(f, "DIMENSIONS {nx} {ny} 1")?;
    writeln!(f, "ORIGIN {:.17e} {:.17e} 0", g.domain.x0, g.domain.y0)?;
    writeln!(f, "SPACING {:.17e} {:.17e} 1", g.dx, g.dy)?;
    writeln!(f, "POINT_DATA {}", g.n_centers)?;
    for (col, label) in [(2, "T"), (3, "T_rad"), (4, "phi")] {
        writeln!(f, "SCALARS {label} double 1")?;
        writeln!(f, "LOOKUP_TABLE default")?;
        for r in &rows[..g.n_centers] {
            writeln!(f, "{:.17e}", r[col])?;
        }
    }
    f.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn write_record(w: &mut csv::Writer<File>, r: &StepRecord) -> Result<()> {
    w.write_record([
        format!("{:.17e}", r.t),
        format!("{:.17e}", r.energy),
        format!("{:.17e}", r.mass),
        r.rank.to_string(),
        format!("{:.17e}", r.dt),
    ])
    .map_err(csv_err)?;
    Ok(())
}

/// Runs the configured scenario to t_end, writing outputs into `out_dir`.
///
/// On a failed step the last good state is dumped and the manifest records
/// the abort before the error is returned.
pub fn run(cfg: &RunConfig, out_dir: &Path) -> Result<RunSummary> {
    let start = Instant::now();
    std::fs::create_dir_all(out_dir)?;
    let mut sim = Simulation::new(cfg)?;
    let t_end = sim.scenario.t_end;
    let vtk = cfg.output.vtk;
    let mut ts = csv::Writer::from_path(out_dir.join("timeseries.csv")).map_err(csv_err)?;
    ts.write_record(["t", "energy", "mass", "rank", "dt"]).map_err(csv_err)?;
    let first = sim.record(0.0, 0)?;
    write_record(&mut ts, &first)?;
    let mut records = vec![first];
    let mut dumps = write_fields(&sim, out_dir, 0, vtk)?;
    let e0 = first.energy;
    let mut max_rank = sim.rank();
    let mut failure: Option<Error> = None;
    let mut last_dumped = 0;

    while sim.time() < t_end * (1.0 - 1e-12) {
        if sim.steps >= cfg.run.max_steps {
            failure = Some(Error::Config(format!("step budget of {} exhausted before t_end", cfg.run.max_steps)));
            break;
        }
        let dt = sim.dt.min(t_end - sim.time());
        let prev = *records.last().unwrap();
        let saved = sim.state.clone();
        let rec = match sim.step(dt) {
            Ok(r) => r,
            Err(e) => {
                failure = Some(e);
                break;
            }
        };
        if rec.energy > prev.energy + ENERGY_SLACK * e0 {
            match sim.assert {
                AssertMode::Strict => {
                    sim.state = saved;
                    sim.steps -= 1;
                    failure = Some(Error::EnergyIncrease { step: sim.steps + 1, before: prev.energy, after: rec.energy });
                    break;
                }
                AssertMode::Monitor => {
                    sim.flags.energy_increases += 1;
                    log::warn!("step {}: energy rose {:e} -> {:e}", sim.steps, prev.energy, rec.energy);
                }
            }
        }
        write_record(&mut ts, &rec)?;
        records.push(rec);
        max_rank = max_rank.max(rec.rank);
        if cfg.output.dump_every > 0 && sim.steps % cfg.output.dump_every == 0 {
            dumps.extend(write_fields(&sim, out_dir, sim.steps, vtk)?);
            last_dumped = sim.steps;
        }
        log::debug!("step {} t={:e} e={:e} rank={}", sim.steps, rec.t, rec.energy, rec.rank);
    }
    ts.flush()?;
    if sim.steps > last_dumped {
        dumps.extend(write_fields(&sim, out_dir, sim.steps, vtk)?);
    }
    let last = *records.last().unwrap();
    let manifest = Manifest {
        scenario: sim.scenario.name.clone(),
        solver: sim.solver,
        units: sim.scenario.units.clone(),
        epsilon: sim.problem.eps,
        nx: sim.scenario.nx,
        ny: sim.scenario.ny,
        quad_order: sim.scenario.quad_order,
        seed: cfg.run.seed,
        config_sha256: config_hash(cfg)?,
        config: cfg.clone(),
        status: if failure.is_some() { "aborted" } else { "completed" }.into(),
        error: failure.as_ref().map(|e| e.to_string()),
        steps: sim.steps,
        final_time: sim.time(),
        t_end,
        dt_nominal: sim.dt,
        wall_time_s: start.elapsed().as_secs_f64(),
        energy_initial: e0,
        energy_final: last.energy,
        mass_initial: first.mass,
        mass_final: last.mass,
        max_rank,
        flags: sim.flags,
        dumps,
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Internal(e.to_string()))?;
    std::fs::write(out_dir.join("manifest.json"), json)?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(RunSummary { manifest, records, out_dir: out_dir.to_path_buf() })
}
