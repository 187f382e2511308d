//! Energy, mass, time-step bound and radiation temperature.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::Problem;

/// Per-step record written to `timeseries.csv`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: f64,
    pub energy: f64,
    pub mass: f64,
    pub rank: usize,
    pub dt: f64,
    pub newton_max_iters: usize,
    pub cfl: f64,
}

/// Σ_C ω·Δζ·(φ/c)² + (2/5)·Σ_C ω·Δζ·a·c_ν·T⁵/(4π²): the scalar part of the
/// energy, shared by both solvers.
pub fn energy_macro(p: &Problem, temp: &[f64], h: &[f64]) -> Result<f64> {
    let g = &p.grid;
    let phi = p.scalar_flux(temp, h);
    let mut e = 0.0;
    for k in 0..g.n_c() {
        if temp[k] < 0.0 {
            return Err(Error::Domain(format!("negative temperature {} at node {k}", temp[k])));
        }
        let wt = g.c_weight[k] * g.dzeta;
        let b = phi[k] / p.c;
        e += wt * b * b;
        e += wt * 0.4 * p.a * p.heat_cap_c[k] / (4.0 * PI * PI) * temp[k].powi(5);
    }
    Ok(e)
}

/// Energy of a dense state.
pub fn energy_full(p: &Problem, g: &DMatrix<f64>, temp: &[f64], h: &[f64]) -> Result<f64> {
    let mut e = energy_macro(p, temp, h)?;
    let w = &p.ang.w;
    let mut gn = 0.0;
    for l in 0..g.ncols() {
        let col = g.column(l);
        let mut s = 0.0;
        for (i, x) in col.iter().enumerate() {
            s += p.grid.i_weight[i] * x * x;
        }
        gn += w[l] * s;
    }
    let f = p.eps / p.c;
    e += f * f * gn * p.grid.dzeta / (2.0 * PI);
    Ok(e)
}

/// Energy of a factored state `g = X S Vᵀ`, contracted without forming g.
pub fn energy_lowrank(
    p: &Problem,
    x: &DMatrix<f64>,
    s: &DMatrix<f64>,
    v: &DMatrix<f64>,
    temp: &[f64],
    h: &[f64],
) -> Result<f64> {
    let mut e = energy_macro(p, temp, h)?;
    let mut xw = x.clone();
    crate::linalg::scale_rows(&mut xw, &p.grid.i_weight);
    let gx = x.transpose() * xw;
    let mut vw = v.clone();
    crate::linalg::scale_rows(&mut vw, &p.ang.w);
    let gv = v.transpose() * vw;
    let gn = (s.transpose() * gx * s * gv).trace();
    let f = p.eps / p.c;
    e += f * f * gn * p.grid.dzeta / (2.0 * PI);
    Ok(e)
}

/// m = Σ_C ω·Δζ·((2π/c)·φ + c_ν·T).
pub fn mass(p: &Problem, temp: &[f64], h: &[f64]) -> f64 {
    let g = &p.grid;
    let phi = p.scalar_flux(temp, h);
    (0..g.n_c())
        .map(|k| g.c_weight[k] * g.dzeta * (2.0 * PI / p.c * phi[k] + p.heat_cap_c[k] * temp[k]))
        .sum()
}

/// Largest stable step: (1/3c)·min over axes and directions with Ω_v ≠ 0 of
/// (εΔ_v + σ_t0·Δ_v²/(4|Ω_v|)).
pub fn cfl_bound(p: &Problem) -> Result<f64> {
    let s0 = p.sigma_t0();
    if !(s0 > 0.0) {
        return Err(Error::Domain(
            "σ_t0 ≤ 0 (vacuum present): the stability bound is undefined; use the vacuum monitoring policy".into(),
        ));
    }
    Ok(cfl_formula(p.eps, s0, p.c, [p.grid.dx, p.grid.dy], [&p.quad.omega_x, &p.quad.omega_y]))
}

/// The bare formula, for callers that bring their own σ_t0.
pub fn cfl_formula(eps: f64, sigma_t0: f64, c: f64, spacing: [f64; 2], omega: [&[f64]; 2]) -> f64 {
    let mut m = f64::INFINITY;
    for v in 0..2 {
        let d = spacing[v];
        for &o in omega[v] {
            if o != 0.0 {
                m = m.min(eps * d + sigma_t0 * d * d / (4.0 * o.abs()));
            }
        }
    }
    m / (3.0 * c)
}

/// T_rad = (2π·φ/(a·c))^{1/4}; negative φ is clamped to zero.
pub fn radiation_temperature(p: &Problem, temp: &[f64], h: &[f64]) -> Vec<f64> {
    let phi = p.scalar_flux(temp, h);
    let mut clamped = 0;
    let out = phi
        .iter()
        .map(|&f| {
            if f < 0.0 {
                clamped += 1;
                0.0
            } else {
                (2.0 * PI * f / (p.a * p.c)).powf(0.25)
            }
        })
        .collect();
    if clamped > 0 {
        log::warn!("radiation temperature: clamped {clamped} negative scalar-flux values");
    }
    out
}

/// ‖a − b‖₂/‖b‖₂.
pub fn relative_error(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Domain("relative_error: length mismatch".into()));
    }
    let den: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if den == 0.0 {
        return Err(Error::Domain("relative_error: zero reference field".into()));
    }
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    Ok(num / den)
}
