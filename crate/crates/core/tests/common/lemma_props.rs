//! Discrete identities and inequalities behind the energy estimate, as
//! property functions over random periodic instances.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use rand::Rng;
use trt_core::grid::Lattice;

use super::*;

pub const ID_TOL: f64 = 1e-12;
pub const INEQ_TOL: f64 = 1e-10;

pub type Case = (usize, usize, usize, f64, f64, u64);

fn close(a: f64, b: f64, scale: f64) -> bool {
    (a - b).abs() <= ID_TOL * scale.max(1.0)
}

pub fn case() -> impl Strategy<Value = Case> {
    (3usize..7, 3usize..7, prop::sample::select(vec![2usize, 4]), 0.3f64..2.0, 0.3f64..2.0, any::<u64>())
}

fn abs_pair(a: &DMatrix<f64>, d: &[f64], b: &DMatrix<f64>) -> f64 {
    let mut s = 0.0;
    for i in 0..a.nrows() {
        for l in 0..a.ncols() {
            s += (a[(i, l)] * d[l] * b[(i, l)]).abs();
        }
    }
    s
}

pub fn sparse_operators_match_stencils((nx, ny, order, lx, ly, seed): Case) -> Result<(), TestCaseError> {
    let s = periodic(nx, ny, order, lx, ly);
    let mut r = rng(seed);
    let phi = rand_mat(&mut r, s.grid.n_i(), 3);
    let u = rand_vec(&mut r, s.grid.n_c());
    let f = rand_vec(&mut r, s.grid.n_i());
    for v in 0..2 {
        prop_assert!((s.ops.dp[v].apply_mat(&phi) - dp(&s.grid, &phi, v)).amax() < 1e-12 * 10.0 / s.grid.spacing(v));
        prop_assert!((s.ops.dm[v].apply_mat(&phi) - dm(&s.grid, &phi, v)).amax() < 1e-12 * 10.0 / s.grid.spacing(v));
        prop_assert!((s.ops.dc[v].apply_mat(&phi) - dc(&s.grid, &phi, v)).amax() < 1e-12 * 10.0 / s.grid.spacing(v));
        let a = s.ops.grad0[v].apply_vec(&u);
        for (x, y) in a.iter().zip(grad0(&s.grid, &u, v)) {
            prop_assert!((x - y).abs() < 1e-11 / s.grid.spacing(v));
        }
        let a = s.ops.div0[v].apply_vec(&f);
        for (x, y) in a.iter().zip(div0(&s.grid, &f, v)) {
            prop_assert!((x - y).abs() < 1e-11 / s.grid.spacing(v));
        }
    }
    Ok(())
}

pub fn sum_of_squares((seed, n): (u64, usize)) -> Result<(), TestCaseError> {
    let mut r = rng(seed);
    let c = rand_vec(&mut r, n);
    let d = rand_vec(&mut r, n);
    let lhs: f64 = c.iter().zip(&d).map(|(a, b)| a * b).sum();
    let rhs = 0.5 * c.iter().map(|a| a * a).sum::<f64>() + 0.5 * d.iter().map(|a| a * a).sum::<f64>()
        - 0.5 * c.iter().zip(&d).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    prop_assert!(close(lhs, rhs, n as f64));
    Ok(())
}

/// Σ (φ_κ·w) δ⁰_v u_κ = −Σ D⁰_v(φ·w)_C u_C for each face/node lattice pairing.
pub fn summation_by_parts((nx, ny, order, lx, ly, seed): Case) -> Result<(), TestCaseError> {
    let s = periodic(nx, ny, order, lx, ly);
    let g = &s.grid;
    let mut r = rng(seed);
    let pairings = [
        (0, Lattice::XFace, Lattice::Center),
        (0, Lattice::YFace, Lattice::Corner),
        (1, Lattice::YFace, Lattice::Center),
        (1, Lattice::XFace, Lattice::Corner),
    ];
    for (v, face, node) in pairings {
        let mut phi = rand_mat(&mut r, g.n_i(), s.quad.n_dirs);
        for k in 0..g.n_i() {
            if g.kind_i(k) != face {
                phi.row_mut(k).fill(0.0);
            }
        }
        let u: Vec<f64> = (0..g.n_c())
            .map(|k| if g.kind_c(k) == node { r.random_range(-1.0..1.0) } else { 0.0 })
            .collect();
        let pw: Vec<f64> = (0..g.n_i()).map(|k| (0..s.quad.n_dirs).map(|l| phi[(k, l)] * s.ang.w[l]).sum()).collect();
        let du = s.ops.grad0[v].apply_vec(&u);
        let lhs: f64 = (0..g.n_i()).filter(|&k| g.kind_i(k) == face).map(|k| pw[k] * du[k]).sum();
        let dphi = s.ops.div0[v].apply_vec(&pw);
        let rhs: f64 = -(0..g.n_c()).filter(|&k| g.kind_c(k) == node).map(|k| dphi[k] * u[k]).sum::<f64>();
        let scale = pw.iter().map(|x| x.abs()).sum::<f64>() * 2.0 / g.spacing(v);
        prop_assert!(close(lhs, rhs, scale), "v={v} {face:?}/{node:?}: {lhs} vs {rhs}");
    }
    Ok(())
}

/// Σ (D^±_v φ)ᵀ S ψ Δζ = −Σ φᵀ S D^∓_v ψ Δζ for symmetric S.
pub fn upwind_operators_are_adjoint((nx, ny, order, lx, ly, seed): Case) -> Result<(), TestCaseError> {
    let s = periodic(nx, ny, order, lx, ly);
    let g = &s.grid;
    let nq = s.quad.n_dirs;
    let mut r = rng(seed);
    let a = rand_mat(&mut r, nq, nq);
    let sym = &a + a.transpose();
    let phi = rand_mat(&mut r, g.n_i(), nq);
    let psi = rand_mat(&mut r, g.n_i(), nq);
    for v in 0..2 {
        for (first, second) in [(&s.ops.dp[v], &s.ops.dm[v]), (&s.ops.dm[v], &s.ops.dp[v])] {
            let lhs = (first.apply_mat(&phi) * &sym).component_mul(&psi).sum() * g.dzeta;
            let rhs = -(&phi * &sym).component_mul(&second.apply_mat(&psi)).sum() * g.dzeta;
            let scale = (first.apply_mat(&phi) * &sym).abs().sum() * g.dzeta * 2.0;
            prop_assert!(close(lhs, rhs, scale));
        }
    }
    Ok(())
}

/// L_v φ = Q_v D^c_v φ − (Δ_v/2)|Q_v| D⁻_v D⁺_v φ.
pub fn advection_splits_into_central_and_diffusive((nx, ny, order, lx, ly, seed): Case) -> Result<(), TestCaseError> {
    let s = periodic(nx, ny, order, lx, ly);
    let g = &s.grid;
    let mut r = rng(seed);
    let phi = rand_mat(&mut r, g.n_i(), s.quad.n_dirs);
    for v in 0..2 {
        let dx = g.spacing(v);
        let lhs = cols(&s.ops.dp[v].apply_mat(&phi), &s.ang.q_minus[v]) + cols(&s.ops.dm[v].apply_mat(&phi), &s.ang.q_plus[v]);
        let rhs = cols(&s.ops.dc[v].apply_mat(&phi), &s.ang.q[v])
            - cols(&s.ops.dm[v].apply_mat(&s.ops.dp[v].apply_mat(&phi)), &s.ang.abs_q[v]) * (dx / 2.0);
        prop_assert!((lhs - rhs).amax() <= ID_TOL * 8.0 / dx);
    }
    Ok(())
}

/// Young's bound for the upwind pairing, any α > 0.
pub fn upwind_young_bound(((nx, ny, order, lx, ly, seed), alpha): (Case, f64)) -> Result<(), TestCaseError> {
    let s = periodic(nx, ny, order, lx, ly);
    let g = &s.grid;
    let mut r = rng(seed);
    let phi = rand_mat(&mut r, g.n_i(), s.quad.n_dirs);
    let psi = rand_mat(&mut r, g.n_i(), s.quad.n_dirs);
    for v in 0..2 {
        let up = cols(&s.ops.dp[v].apply_mat(&phi), &s.ang.q_plus[v]) + cols(&s.ops.dm[v].apply_mat(&phi), &s.ang.q_minus[v]);
        let lhs = pair(&up, &s.ang.w, &psi).abs() * g.dzeta;
        let aqd = cols(&s.ops.dp[v].apply_mat(&phi), &s.ang.abs_q[v]);
        let rhs = alpha * pair(&psi, &s.ang.w, &psi) * g.dzeta + pair(&aqd, &s.ang.w, &aqd) * g.dzeta / (4.0 * alpha);
        prop_assert!(lhs <= rhs * (1.0 + INEQ_TOL) + INEQ_TOL);
    }
    Ok(())
}

/// Σ ψ¹ᵀM²L_vψ⁰ Δζ = A_v + B_v, and the lower bound on B_v.
pub fn transport_pairing_identity_and_bound(((nx, ny, order, lx, ly, seed), eps, c, dt): (Case, f64, f64, f64)) -> Result<(), TestCaseError> {
    let s = periodic(nx, ny, order, lx, ly);
    let g = &s.grid;
    let w = &s.ang.w;
    let mut r = rng(seed);
    let psi0 = rand_mat(&mut r, g.n_i(), s.quad.n_dirs);
    let psi1 = rand_mat(&mut r, g.n_i(), s.quad.n_dirs);
    for v in 0..2 {
        let dx = g.spacing(v);
        let l0 = cols(&s.ops.dp[v].apply_mat(&psi0), &s.ang.q_minus[v]) + cols(&s.ops.dm[v].apply_mat(&psi0), &s.ang.q_plus[v]);
        let lhs = pair(&psi1, w, &l0) * g.dzeta;
        let d1 = s.ops.dp[v].apply_mat(&psi1);
        let a = dx / 2.0 * pair(&d1, &mul(w, &s.ang.abs_q[v]), &d1) * g.dzeta;
        let up = cols(&d1, &s.ang.q_plus[v]) + cols(&s.ops.dm[v].apply_mat(&psi1), &s.ang.q_minus[v]);
        let diff = &psi0 - &psi1;
        let b = -pair(&up, w, &diff) * g.dzeta;
        let scale = abs_pair(&psi1, w, &l0) * g.dzeta + a.abs() + abs_pair(&up, w, &diff) * g.dzeta;
        prop_assert!(close(lhs, a + b, scale), "{lhs} vs {}", a + b);
        let aqd = cols(&d1, &s.ang.abs_q[v]);
        let bound = -eps / (4.0 * c * dt) * pair(&diff, w, &diff) * g.dzeta - c * dt / eps * pair(&aqd, w, &aqd) * g.dzeta;
        prop_assert!(b >= bound - INEQ_TOL * bound.abs().max(1.0));
    }
    Ok(())
}

/// Young's bound on the coupling between the flux divergence and the
/// change of φ/c.
pub fn flux_coupling_young_bound(((nx, ny, order, lx, ly, seed), dt): (Case, f64)) -> Result<(), TestCaseError> {
    let s = periodic(nx, ny, order, lx, ly);
    let g = &s.grid;
    let mut r = rng(seed);
    let gm = rand_mat(&mut r, g.n_i(), s.quad.n_dirs);
    let b = rand_vec(&mut r, g.n_c());
    for v in 0..2 {
        let fw = s.ang.flux_weights(v);
        let flux: Vec<f64> = (0..g.n_i()).map(|k| (0..fw.len()).map(|l| gm[(k, l)] * fw[l]).sum()).collect();
        let a: Vec<f64> = s.ops.div0[v].apply_vec(&flux).iter().map(|x| x / (2.0 * PI)).collect();
        let e: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>() * g.dzeta;
        let rhs = dt * a.iter().map(|x| x * x).sum::<f64>() * g.dzeta + b.iter().map(|x| x * x).sum::<f64>() * g.dzeta / (4.0 * dt);
        prop_assert!(e <= rhs * (1.0 + INEQ_TOL) + INEQ_TOL);
    }
    Ok(())
}

/// φᵀQ_v w wᵀQ_v φ ≤ π φᵀ|Q_v|M²φ.
pub fn angular_flux_bound((order, seed): (usize, u64)) -> Result<(), TestCaseError> {
    let s = periodic(3, 3, order, 1.0, 1.0);
    let mut r = rng(seed);
    for _ in 0..2 {
        let phi = rand_vec(&mut r, s.quad.n_dirs);
        for v in 0..2 {
            let qw: f64 = (0..phi.len()).map(|l| phi[l] * s.ang.q[v][l] * s.ang.w[l]).sum();
            let rhs: f64 = PI * (0..phi.len()).map(|l| phi[l] * phi[l] * s.ang.abs_q[v][l] * s.ang.w[l]).sum::<f64>();
            prop_assert!(qw * qw <= rhs * (1.0 + INEQ_TOL) + INEQ_TOL);
        }
    }
    Ok(())
}

/// Σ (D⁺_v φ)ᵀM²|Q_v|D⁺_v φ ≤ (4/Δ_v²) Σ φᵀM²|Q_v|φ.
pub fn inverse_estimate((nx, ny, order, lx, ly, seed): Case) -> Result<(), TestCaseError> {
    let s = periodic(nx, ny, order, lx, ly);
    let g = &s.grid;
    let mut r = rng(seed);
    let phi = rand_mat(&mut r, g.n_i(), s.quad.n_dirs);
    for v in 0..2 {
        let d = mul(&s.ang.w, &s.ang.abs_q[v]);
        let dphi = s.ops.dp[v].apply_mat(&phi);
        let lhs = pair(&dphi, &d, &dphi);
        let rhs = 4.0 / g.spacing(v).powi(2) * pair(&phi, &d, &phi);
        prop_assert!(lhs <= rhs * (1.0 + INEQ_TOL));
    }
    Ok(())
}

pub fn quartic_convexity_inequality((a, b): (f64, f64)) -> Result<(), TestCaseError> {
    prop_assert!(a.powi(4) * (a - b) - (a.powi(5) - b.powi(5)) / 5.0 >= -1e-14);
    Ok(())
}

/// Runs every property on `cases` random instances; one entry per property.
pub fn run_all(cases: u32) -> Vec<(&'static str, Result<(), String>)> {
    fn go<S: Strategy>(cases: u32, s: S, f: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String> {
        let mut runner = TestRunner::new(Config { cases, failure_persistence: None, ..Config::default() });
        runner.run(&s, f).map_err(|e| e.to_string())
    }
    vec![
        ("sparse_operators_match_stencils", go(cases, case(), sparse_operators_match_stencils)),
        ("sum_of_squares", go(cases, (any::<u64>(), 1usize..200), sum_of_squares)),
        ("summation_by_parts", go(cases, case(), summation_by_parts)),
        ("upwind_operators_are_adjoint", go(cases, case(), upwind_operators_are_adjoint)),
        ("advection_splits_into_central_and_diffusive", go(cases, case(), advection_splits_into_central_and_diffusive)),
        ("upwind_young_bound", go(cases, (case(), 1e-3f64..1e3), upwind_young_bound)),
        ("transport_pairing_identity_and_bound", go(cases, (case(), 1e-3f64..10.0, 0.1f64..10.0, 1e-4f64..1.0), transport_pairing_identity_and_bound)),
        ("flux_coupling_young_bound", go(cases, (case(), 1e-4f64..1.0), flux_coupling_young_bound)),
        ("angular_flux_bound", go(cases, (prop::sample::select(vec![2usize, 4, 6, 8, 12]), any::<u64>()), angular_flux_bound)),
        ("inverse_estimate", go(cases, case(), inverse_estimate)),
        ("quartic_convexity_inequality", go(cases, (1e-6f64..1.0, 1e-6f64..1.0), quartic_convexity_inequality)),
    ]
}
