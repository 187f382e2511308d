//! Discretized problem: grid, quadrature, operators, material fields and
//! wall data shared by all solvers.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Closure, DiffOps, Rect, StaggeredGrid, Topology, Wall, WallKind};
use crate::quadrature::{AngularOps, Quadrature};

/// Emission B(T) = (a·c/2π)·T⁴.
pub fn planck(a: f64, c: f64, temp: f64) -> f64 {
    a * c / (2.0 * PI) * temp.powi(4)
}

/// Checked variant of [`planck`] rejecting negative temperatures.
pub fn planck_checked(a: f64, c: f64, temp: f64) -> Result<f64> {
    if temp < 0.0 || temp.is_nan() {
        return Err(Error::Domain(format!("negative temperature {temp}")));
    }
    Ok(planck(a, c, temp))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Material {
    pub sigma_a: f64,
    pub sigma_s: f64,
    /// Heat capacity per unit volume.
    pub heat_capacity: f64,
}

/// Reflection-transmission data for one wall, at equilibrium (f_B = B(T_B)).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WallSpec {
    pub rho: f64,
    pub temperature: f64,
}

impl WallSpec {
    pub fn kind(&self) -> WallKind {
        if self.rho >= 1.0 {
            WallKind::Reflective
        } else {
            WallKind::Dirichlet
        }
    }
}

#[derive(Debug, Clone)]
pub struct Problem {
    pub grid: StaggeredGrid,
    pub quad: Quadrature,
    pub ang: AngularOps,
    pub ops: DiffOps,
    pub a: f64,
    pub c: f64,
    pub eps: f64,
    pub sigma_a_c: Vec<f64>,
    pub sigma_t_i: Vec<f64>,
    pub heat_cap_c: Vec<f64>,
    /// Wall data in `Wall::index` order; `None` on periodic grids.
    pub walls: Option<[WallSpec; 4]>,
    /// Fixed temperature per K^C node (Dirichlet wall nodes).
    pub dirichlet: Vec<Option<f64>>,
    pub has_vacuum: bool,
}

/// Inputs for [`Problem::new`].
pub struct ProblemSpec<'a> {
    pub nx: usize,
    pub ny: usize,
    pub domain: Rect,
    pub topology: Topology,
    pub quad_order: usize,
    pub a: f64,
    pub c: f64,
    pub eps: f64,
    pub material: &'a dyn Fn(f64, f64) -> Material,
    pub walls: Option<[WallSpec; 4]>,
}

impl Problem {
    pub fn new(spec: ProblemSpec<'_>) -> Result<Self> {
        if !(spec.a > 0.0 && spec.c > 0.0) {
            return Err(Error::Config("constants a and c must be positive".into()));
        }
        if !(spec.eps >= 0.0) {
            return Err(Error::Config("epsilon must be non-negative".into()));
        }
        let grid = StaggeredGrid::new(spec.nx, spec.ny, spec.domain, spec.topology)?;
        let closure = match (spec.topology, &spec.walls) {
            (Topology::Periodic, None) => Closure::Periodic,
            (Topology::Bounded, Some(w)) => {
                for ws in w {
                    if !(0.0..=1.0).contains(&ws.rho) || ws.temperature < 0.0 {
                        return Err(Error::Config(format!("invalid wall data {ws:?}")));
                    }
                }
                Closure::Walls([w[0].kind(), w[1].kind(), w[2].kind(), w[3].kind()])
            }
            _ => return Err(Error::Config("wall data required exactly for bounded grids".into())),
        };
        let ops = DiffOps::new(&grid, closure)?;
        let quad = Quadrature::new(spec.quad_order)?;
        let ang = AngularOps::new(&quad);
        let mat_c: Vec<Material> = (0..grid.n_c())
            .map(|k| {
                let (x, y) = grid.coord_c(k);
                (spec.material)(x, y)
            })
            .collect();
        let sigma_t_i: Vec<f64> = (0..grid.n_i())
            .map(|k| {
                let (x, y) = grid.coord_i(k);
                let m = (spec.material)(x, y);
                m.sigma_a + m.sigma_s
            })
            .collect();
        for m in &mat_c {
            if m.sigma_a < 0.0 || m.sigma_s < 0.0 || !(m.heat_capacity > 0.0) {
                return Err(Error::Config(format!("invalid material {m:?}")));
            }
        }
        let has_vacuum = sigma_t_i.iter().any(|&s| s == 0.0);
        let mut dirichlet = vec![None; grid.n_c()];
        if let Some(w) = &spec.walls {
            for (k, d) in dirichlet.iter_mut().enumerate() {
                // Left/right walls take precedence at domain corners.
                for wall in grid.walls_of_c(k) {
                    let ws = w[wall.index()];
                    if ws.rho < 1.0 {
                        *d = Some(ws.temperature);
                        break;
                    }
                }
            }
        }
        Ok(Problem {
            grid,
            quad,
            ang,
            ops,
            a: spec.a,
            c: spec.c,
            eps: spec.eps,
            sigma_a_c: mat_c.iter().map(|m| m.sigma_a).collect(),
            sigma_t_i,
            heat_cap_c: mat_c.iter().map(|m| m.heat_capacity).collect(),
            walls: spec.walls,
            dirichlet,
            has_vacuum,
        })
    }

    pub fn planck(&self, temp: f64) -> f64 {
        planck(self.a, self.c, temp)
    }

    pub fn planck_field(&self, temp: &[f64]) -> Vec<f64> {
        temp.iter().map(|&t| self.planck(t)).collect()
    }

    /// Scalar flux φ = B(T) + ε²h on K^C.
    pub fn scalar_flux(&self, temp: &[f64], h: &[f64]) -> Vec<f64> {
        let e2 = self.eps * self.eps;
        temp.iter().zip(h).map(|(&t, &h)| self.planck(t) + e2 * h).collect()
    }

    pub fn wall(&self, w: Wall) -> Option<WallSpec> {
        self.walls.map(|ws| ws[w.index()])
    }

    /// Smallest total cross-section over K^I.
    pub fn sigma_t0(&self) -> f64 {
        self.sigma_t_i.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Entrywise 1/σ_t on K^I with 0 in vacuum.
    pub fn sigma_t_inv(&self) -> Vec<f64> {
        self.sigma_t_i.iter().map(|&s| if s > 0.0 { 1.0 / s } else { 0.0 }).collect()
    }

    /// Initial temperature sampled on K^C, wall nodes set to wall values.
    pub fn sample_temperature(&self, f: &dyn Fn(f64, f64) -> f64) -> Vec<f64> {
        (0..self.grid.n_c())
            .map(|k| {
                self.dirichlet[k].unwrap_or_else(|| {
                    let (x, y) = self.grid.coord_c(k);
                    f(x, y)
                })
            })
            .collect()
    }
}
