//! Built-in test problems.
//!
//! The Gaussian and Marshak problems carry temperatures in kelvin with CGS
//! lengths and times; the hohlraum uses keV, cm and ns. The solver core is
//! unit-agnostic, the unit tag is only recorded in the outputs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Rect, Topology};
use crate::problem::{Material, Problem, ProblemSpec, WallSpec};

/// Kelvin per electron-volt.
pub const KELVIN_PER_EV: f64 = 11604.518;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MaterialMap {
    Uniform(Material),
    /// Absorber walls and blocks in vacuum.
    Hohlraum { absorber: Material, vacuum: Material },
}

impl MaterialMap {
    pub fn at(&self, x: f64, y: f64) -> Material {
        match self {
            MaterialMap::Uniform(m) => *m,
            MaterialMap::Hohlraum { absorber, vacuum } => {
                if hohlraum_absorber(x, y) {
                    *absorber
                } else {
                    *vacuum
                }
            }
        }
    }
}

/// Hohlraum geometry on [0, 1]²: walls of thickness 0.05 at the top, bottom
/// and right, a block on the left wall and a central block.
pub fn hohlraum_absorber(x: f64, y: f64) -> bool {
    let wall = y <= 0.05 || y >= 0.95 || x >= 0.95;
    let left_block = x <= 0.05 && (0.25..=0.75).contains(&y);
    let centre = (0.25..=0.75).contains(&x) && (0.25..=0.75).contains(&y);
    wall || left_block || centre
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum InitialTemp {
    Uniform(f64),
    /// exp(−|x − x0|²/(2s²)) scaled to `peak`, cut off below at `floor`.
    Gaussian { center: [f64; 2], sigma: f64, peak: f64, floor: f64 },
    /// base + amp·sin(2πkx/Lx)·sin(2πky/Ly) on the scenario domain.
    Sine { base: f64, amp: f64, domain: Rect },
}

impl InitialTemp {
    pub fn at(&self, x: f64, y: f64) -> f64 {
        match *self {
            InitialTemp::Uniform(t) => t,
            InitialTemp::Gaussian { center, sigma, peak, floor } => {
                let r2 = (x - center[0]).powi(2) + (y - center[1]).powi(2);
                (peak * (-r2 / (2.0 * sigma * sigma)).exp()).max(floor)
            }
            InitialTemp::Sine { base, amp, domain } => {
                let tau = 2.0 * std::f64::consts::PI;
                let sx = (tau * (x - domain.x0) / (domain.x1 - domain.x0)).sin();
                let sy = (tau * (y - domain.y0) / (domain.y1 - domain.y0)).sin();
                base + amp * sx * sy
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub units: String,
    pub domain: Rect,
    pub topology: Topology,
    pub nx: usize,
    pub ny: usize,
    pub quad_order: usize,
    pub a: f64,
    pub c: f64,
    pub eps: f64,
    pub material: MaterialMap,
    pub initial: InitialTemp,
    /// f_I = B(T_I); other initial densities are not supported.
    pub equilibrium: bool,
    pub walls: Option<[WallSpec; 4]>,
    pub t_end: f64,
}

pub const BUILTIN: [&str; 8] = [
    "gaussian",
    "marshak",
    "hohlraum",
    "gaussian-desk",
    "marshak-desk",
    "hohlraum-desk",
    "periodic-box",
    "reflective-box",
];

const GAUSS_A: f64 = 7.565766e-15;
const GAUSS_C: f64 = 2.99792458e10;
const GAUSS_SIGMA_A: f64 = 10799.13607;
/// ρ·c_ν = 0.01 · 0.831e5.
const GAUSS_HEAT_CAP: f64 = 831.0;

fn heated_wall_base(name: &str, initial: InitialTemp, left_wall: f64) -> Scenario {
    let cold = 0.02 * KELVIN_PER_EV;
    let wall = |t| WallSpec { rho: 0.0, temperature: t };
    Scenario {
        name: name.into(),
        units: "cgs-kelvin".into(),
        domain: Rect::new(0.0, 0.002, 0.0, 0.002),
        topology: Topology::Bounded,
        nx: 52,
        ny: 52,
        quad_order: 30,
        a: GAUSS_A,
        c: GAUSS_C,
        eps: 1.0,
        material: MaterialMap::Uniform(Material { sigma_a: GAUSS_SIGMA_A, sigma_s: 0.0, heat_capacity: GAUSS_HEAT_CAP }),
        initial,
        equilibrium: true,
        walls: Some([wall(left_wall), wall(cold), wall(cold), wall(cold)]),
        t_end: 5e-12,
    }
}

fn desk(mut s: Scenario, t_end: f64) -> Scenario {
    s.name.push_str("-desk");
    s.nx = 20;
    s.ny = 20;
    s.quad_order = 8;
    s.t_end = t_end;
    s
}

fn test_box(name: &str, topology: Topology) -> Scenario {
    let domain = Rect::unit();
    Scenario {
        name: name.into(),
        units: "dimensionless".into(),
        domain,
        topology,
        nx: 20,
        ny: 20,
        quad_order: 8,
        a: 1.0,
        c: 1.0,
        eps: 1.0,
        material: MaterialMap::Uniform(Material { sigma_a: 0.0, sigma_s: 1.0, heat_capacity: 1.0 }),
        initial: InitialTemp::Sine { base: 1.0, amp: 0.5, domain },
        equilibrium: true,
        walls: match topology {
            Topology::Periodic => None,
            Topology::Bounded => Some([WallSpec { rho: 1.0, temperature: 0.0 }; 4]),
        },
        t_end: 0.05,
    }
}

pub fn builtin_scenario(name: &str) -> Result<Scenario> {
    let cold = 0.02 * KELVIN_PER_EV;
    let hot = 80.0 * KELVIN_PER_EV;
    let gaussian = || {
        heated_wall_base(
            "gaussian",
            InitialTemp::Gaussian { center: [0.001, 0.001], sigma: 1e-4, peak: hot, floor: cold },
            cold,
        )
    };
    let marshak = || heated_wall_base("marshak", InitialTemp::Uniform(cold), hot);
    let hohlraum = || Scenario {
        name: "hohlraum".into(),
        units: "cm-ns-keV".into(),
        domain: Rect::unit(),
        topology: Topology::Bounded,
        nx: 102,
        ny: 102,
        quad_order: 30,
        a: 0.01372,
        c: 29.98,
        eps: 1.0,
        material: MaterialMap::Hohlraum {
            absorber: Material { sigma_a: 100.0, sigma_s: 0.0, heat_capacity: 5.0e5 },
            vacuum: Material { sigma_a: 0.0, sigma_s: 0.0, heat_capacity: 1.0e99 },
        },
        initial: InitialTemp::Uniform(1e-3),
        equilibrium: true,
        walls: Some([
            WallSpec { rho: 0.0, temperature: 1.0 },
            WallSpec { rho: 0.0, temperature: 1e-3 },
            WallSpec { rho: 1.0, temperature: 1e-3 },
            WallSpec { rho: 1.0, temperature: 1e-3 },
        ]),
        t_end: 1.0,
    };
    Ok(match name {
        "gaussian" => gaussian(),
        "marshak" => marshak(),
        "hohlraum" => hohlraum(),
        "gaussian-desk" => desk(gaussian(), 0.5e-12),
        "marshak-desk" => desk(marshak(), 0.5e-12),
        "hohlraum-desk" => desk(hohlraum(), 0.05),
        "periodic-box" => test_box(name, Topology::Periodic),
        "reflective-box" => test_box(name, Topology::Bounded),
        other => {
            return Err(Error::Config(format!(
                "unknown scenario '{other}' (known: {})",
                BUILTIN.join(", ")
            )))
        }
    })
}

impl Scenario {
    pub fn problem(&self) -> Result<Problem> {
        if !self.equilibrium {
            return Err(Error::Unsupported("non-equilibrium initial particle density".into()));
        }
        let mat = |x: f64, y: f64| self.material.at(x, y);
        Problem::new(ProblemSpec {
            nx: self.nx,
            ny: self.ny,
            domain: self.domain,
            topology: self.topology,
            quad_order: self.quad_order,
            a: self.a,
            c: self.c,
            eps: self.eps,
            material: &mat,
            walls: self.walls,
        })
    }

    /// T_I sampled on K^C (wall values on transmitting walls).
    pub fn initial_temperature(&self, p: &Problem) -> Vec<f64> {
        p.sample_temperature(&|x, y| self.initial.at(x, y))
    }
}
