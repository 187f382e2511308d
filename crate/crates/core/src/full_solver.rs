//! Dense macro–micro IMEX step.
//!
//! The micro field g lives on K^I × directions; h and T live on K^C. One step
//! is: explicit transport + implicit relaxation for g, wall conditions on g,
//! then the implicit per-node energy exchange for (h, T) driven by the new
//! flux divergence.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::boundary;
use crate::error::{Error, Result};
use crate::newton::{solve_quartic, SolveFailure};
use crate::problem::Problem;

#[derive(Debug, Clone)]
pub struct FullState {
    pub g: DMatrix<f64>,
    pub h: Vec<f64>,
    pub temp: Vec<f64>,
    pub time: f64,
    /// ε·h on wall centres of transmitting walls (zero elsewhere).
    pub eh_wall: Vec<f64>,
}

impl FullState {
    /// Equilibrium start: g = 0, h = 0.
    pub fn equilibrium(p: &Problem, temp: Vec<f64>) -> Self {
        FullState {
            g: DMatrix::zeros(p.grid.n_i(), p.quad.n_dirs),
            h: vec![0.0; p.grid.n_c()],
            temp,
            time: 0.0,
            eh_wall: vec![0.0; p.grid.n_c()],
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MacroStats {
    pub max_iters: usize,
    pub bisected: usize,
}

/// δ⁰_v φ on K^I for both axes.
pub fn phi_gradient(p: &Problem, temp: &[f64], h: &[f64]) -> [Vec<f64>; 2] {
    let phi = p.scalar_flux(temp, h);
    [p.ops.grad0[0].apply_vec(&phi), p.ops.grad0[1].apply_vec(&phi)]
}

/// Σ_v (D⁺_v g Q⁻_v + D⁻_v g Q⁺_v).
pub fn advection(p: &Problem, g: &DMatrix<f64>) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(g.nrows(), g.ncols());
    for v in 0..2 {
        let up = p.ops.dp[v].apply_mat(g);
        let dn = p.ops.dm[v].apply_mat(g);
        for l in 0..g.ncols() {
            let (qm, qp) = (p.ang.q_minus[v][l], p.ang.q_plus[v][l]);
            let mut col = a.column_mut(l);
            if qm != 0.0 {
                col.axpy(qm, &up.column(l), 1.0);
            }
            if qp != 0.0 {
                col.axpy(qp, &dn.column(l), 1.0);
            }
        }
    }
    a
}

/// Row-wise projection y ↦ y − (1/2π)(y·w)𝟙.
pub fn project_mean_free(p: &Problem, a: &mut DMatrix<f64>) {
    let mean = &*a * nalgebra::DVector::from_column_slice(&p.ang.w) / (2.0 * PI);
    for l in 0..a.ncols() {
        a.column_mut(l).axpy(-1.0, &mean, 1.0);
    }
}

/// Micro update without wall conditions.
pub fn step_micro(p: &Problem, g: &DMatrix<f64>, temp: &[f64], h: &[f64], dt: f64) -> Result<DMatrix<f64>> {
    if !(dt > 0.0) {
        return Err(Error::Domain(format!("non-positive time step {dt}")));
    }
    let eps = p.eps;
    let alpha = eps * eps / (p.c * dt);
    let grad = phi_gradient(p, temp, h);
    let mut out = g * alpha;
    if eps != 0.0 {
        let mut a = advection(p, g);
        project_mean_free(p, &mut a);
        out -= a * eps;
    }
    for v in 0..2 {
        for l in 0..out.ncols() {
            let q = p.ang.q[v][l];
            out.column_mut(l).iter_mut().zip(&grad[v]).for_each(|(o, gr)| *o -= gr * q);
        }
    }
    let denom: Vec<f64> = p.sigma_t_i.iter().map(|s| alpha + s).collect();
    if let Some(i) = denom.iter().position(|&d| !(d > 0.0)) {
        return Err(Error::Internal(format!("micro denominator vanishes at interface {i} (ε = 0 in vacuum)")));
    }
    let inv: Vec<f64> = denom.iter().map(|d| 1.0 / d).collect();
    crate::linalg::scale_rows(&mut out, &inv);
    Ok(out)
}

/// F_v = g·(Q_v w) for both axes.
pub fn flux_dense(p: &Problem, g: &DMatrix<f64>) -> [Vec<f64>; 2] {
    let f = |v: usize| {
        let qw = nalgebra::DVector::from_vec(p.ang.flux_weights(v));
        (g * qw).as_slice().to_vec()
    };
    [f(0), f(1)]
}

/// Implicit energy exchange on K^C given the new flux.
///
/// Each non-wall node solves β·T′ + k·T′⁴ = β·T + B(T) + ε²h − cΔt·div/(2π)
/// with k = ac/2π and β = (ε² + σ_a·cΔt)·c_ν/(2πσ_aΔt), then
/// h′ = c_ν(T′ − T)/(2πσ_aΔt). Vacuum nodes keep T and update h explicitly.
/// Wall nodes of transmitting walls take T_B and h = εh_wall/ε.
pub fn step_macro(
    p: &Problem,
    temp: &[f64],
    h: &[f64],
    eh_wall: &[f64],
    flux: &[Vec<f64>; 2],
    dt: f64,
) -> Result<(Vec<f64>, Vec<f64>, MacroStats)> {
    let div0 = p.ops.div0[0].apply_vec(&flux[0]);
    let div1 = p.ops.div0[1].apply_vec(&flux[1]);
    let eps2 = p.eps * p.eps;
    let kq = p.a * p.c / (2.0 * PI);
    let cdt = p.c * dt;
    let res: Vec<Result<(f64, f64, usize, bool)>> = (0..p.grid.n_c())
        .into_par_iter()
        .map(|k| {
            if let Some(tb) = p.dirichlet[k] {
                let hw = if p.eps > 0.0 { eh_wall[k] / p.eps } else { 0.0 };
                return Ok((hw, tb, 0, false));
            }
            let div = div0[k] + div1[k];
            let sa = p.sigma_a_c[k];
            if sa == 0.0 {
                if eps2 == 0.0 {
                    return Err(Error::Domain(format!("ε = 0 in vacuum at node {k}: h is undetermined")));
                }
                return Ok((h[k] - cdt * div / (2.0 * PI * eps2), temp[k], 0, false));
            }
            let cv = p.heat_cap_c[k];
            let beta = (eps2 + sa * cdt) * cv / (2.0 * PI * sa * dt);
            let d = beta * temp[k] + p.planck(temp[k]) + eps2 * h[k] - cdt * div / (2.0 * PI);
            match solve_quartic(beta, kq, d, temp[k]) {
                Ok(s) => Ok((cv * (s.temp - temp[k]) / (2.0 * PI * sa * dt), s.temp, s.iters, s.bisected)),
                Err(SolveFailure::NegativeRoot) => Err(Error::Newton {
                    cell: k,
                    reason: format!("negative right side d = {d:e} (T = {:e})", temp[k]),
                }),
                Err(SolveFailure::NotConverged) => Err(Error::Newton {
                    cell: k,
                    reason: format!("no convergence (β = {beta:e}, d = {d:e})"),
                }),
            }
        })
        .collect();
    let mut h_new = Vec::with_capacity(res.len());
    let mut t_new = Vec::with_capacity(res.len());
    let mut stats = MacroStats::default();
    for r in res {
        let (hh, tt, it, bis) = r?;
        h_new.push(hh);
        t_new.push(tt);
        stats.max_iters = stats.max_iters.max(it);
        stats.bisected += usize::from(bis);
    }
    Ok((h_new, t_new, stats))
}

/// One full step: micro, walls, macro.
pub fn step_full(p: &Problem, st: &FullState, dt: f64) -> Result<(FullState, MacroStats)> {
    let mut g = step_micro(p, &st.g, &st.temp, &st.h, dt)?;
    let mut eh_wall = st.eh_wall.clone();
    if !p.grid.boundary_rows.is_empty() {
        boundary::apply_full_bc(p, &mut g, &st.eh_wall);
        eh_wall = boundary::wall_eh_from_rows(p, &boundary::boundary_rows_dense(p, &g))?;
    }
    let flux = flux_dense(p, &g);
    let (h, temp, stats) = step_macro(p, &st.temp, &st.h, &eh_wall, &flux, dt)?;
    Ok((FullState { g, h, temp, time: st.time + dt, eh_wall }, stats))
}
