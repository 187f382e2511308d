//! Explicit five-point scheme for the Rosseland diffusion limit.
//!
//! Per node: c_ν(T′ − T)/Δt + (2π/(cΔt))(B(T′) − B(T))
//!     = (2π/3)·Σ_v D⁰_v(σ_t⁻¹ δ⁰_v B(T)).

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::newton::solve_quartic;
use crate::problem::Problem;

#[derive(Debug, Clone)]
pub struct RosselandState {
    pub temp: Vec<f64>,
    pub time: f64,
}

/// Σ_v D⁰_v(σ_t⁻¹ δ⁰_v B) on K^C.
pub fn diffusion_term(p: &Problem, temp: &[f64]) -> Vec<f64> {
    let b = p.planck_field(temp);
    let sinv = p.sigma_t_inv();
    let mut out = vec![0.0; p.grid.n_c()];
    for v in 0..2 {
        let mut gr = p.ops.grad0[v].apply_vec(&b);
        gr.iter_mut().zip(&sinv).for_each(|(g, s)| *g *= s);
        let d = p.ops.div0[v].apply_vec(&gr);
        out.iter_mut().zip(d).for_each(|(o, x)| *o += x);
    }
    out
}

pub fn rosseland_step(p: &Problem, st: &RosselandState, dt: f64) -> Result<(RosselandState, usize)> {
    if !(dt > 0.0) {
        return Err(Error::Domain(format!("non-positive time step {dt}")));
    }
    let lap = diffusion_term(p, &st.temp);
    let kq = p.a * p.c / (2.0 * PI);
    let res: Vec<Result<(f64, usize)>> = (0..p.grid.n_c())
        .into_par_iter()
        .map(|k| {
            if let Some(tb) = p.dirichlet[k] {
                return Ok((tb, 0));
            }
            let t = st.temp[k];
            let beta = p.c * p.heat_cap_c[k] / (2.0 * PI);
            let d = beta * t + p.planck(t) + p.c * dt / 3.0 * lap[k];
            solve_quartic(beta, kq, d, t)
                .map(|s| (s.temp, s.iters))
                .map_err(|e| Error::Newton { cell: k, reason: format!("{e:?} (d = {d:e})") })
        })
        .collect();
    let mut temp = Vec::with_capacity(res.len());
    let mut iters = 0;
    for r in res {
        let (t, it) = r?;
        temp.push(t);
        iters = iters.max(it);
    }
    Ok((RosselandState { temp, time: st.time + dt }, iters))
}

/// Count of interior nodes outside [lo − tol, hi + tol]; logged, never fatal.
pub fn max_principle_violations(p: &Problem, temp: &[f64], lo: f64, hi: f64, tol: f64) -> usize {
    let n = temp
        .iter()
        .enumerate()
        .filter(|(k, &t)| p.dirichlet[*k].is_none() && (t < lo - tol || t > hi + tol))
        .count();
    if n > 0 {
        log::warn!("rosseland: {n} nodes outside the initial/boundary range");
    }
    n
}
