//! Shared fixtures and brute-force stencil oracles for the integration tests.
//!
//! The oracles walk the doubled-index lattice directly instead of going
//! through the sparse operators, so they can check them.

#![allow(dead_code)]

pub mod lemma_props;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trt_core::grid::{Closure, DiffOps, Rect, StaggeredGrid, Topology};
use trt_core::problem::{Material, Problem, ProblemSpec, WallSpec};
use trt_core::quadrature::{AngularOps, Quadrature};

pub struct Periodic {
    pub grid: StaggeredGrid,
    pub ops: DiffOps,
    pub quad: Quadrature,
    pub ang: AngularOps,
}

pub fn periodic(nx: usize, ny: usize, order: usize, lx: f64, ly: f64) -> Periodic {
    let grid = StaggeredGrid::new(nx, ny, Rect::new(0.0, lx, 0.0, ly), Topology::Periodic).unwrap();
    let ops = DiffOps::new(&grid, Closure::Periodic).unwrap();
    let quad = Quadrature::new(order).unwrap();
    let ang = AngularOps::new(&quad);
    Periodic { grid, ops, quad, ang }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rand_vec(r: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| r.random_range(-1.0..1.0)).collect()
}

pub fn rand_mat(r: &mut ChaCha8Rng, n: usize, m: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, m, |_, _| r.random_range(-1.0..1.0))
}

/// Index of the periodic neighbour `s` half-steps along axis `v`.
fn wrap(g: &StaggeredGrid, (p, q): (usize, usize), v: usize, s: i64) -> (usize, usize) {
    if v == 0 {
        ((p as i64 + s).rem_euclid(g.np as i64) as usize, q)
    } else {
        (p, (q as i64 + s).rem_euclid(g.nq as i64) as usize)
    }
}

fn i_nb(g: &StaggeredGrid, k: usize, v: usize, s: i64) -> usize {
    let (p, q) = wrap(g, g.i_points[k], v, s);
    g.idx_i(p, q).expect("neighbour on K^I")
}

fn c_nb_of_i(g: &StaggeredGrid, k: usize, v: usize, s: i64) -> usize {
    let (p, q) = wrap(g, g.i_points[k], v, s);
    g.idx_c(p, q).expect("neighbour on K^C")
}

fn i_nb_of_c(g: &StaggeredGrid, k: usize, v: usize, s: i64) -> usize {
    let (p, q) = wrap(g, g.c_points[k], v, s);
    g.idx_i(p, q).expect("neighbour on K^I")
}

/// (φ_{+1} − φ)/Δ on K^I, periodic.
pub fn dp(g: &StaggeredGrid, phi: &DMatrix<f64>, v: usize) -> DMatrix<f64> {
    let d = g.spacing(v);
    DMatrix::from_fn(phi.nrows(), phi.ncols(), |k, l| (phi[(i_nb(g, k, v, 2), l)] - phi[(k, l)]) / d)
}

/// (φ − φ_{−1})/Δ on K^I, periodic.
pub fn dm(g: &StaggeredGrid, phi: &DMatrix<f64>, v: usize) -> DMatrix<f64> {
    let d = g.spacing(v);
    DMatrix::from_fn(phi.nrows(), phi.ncols(), |k, l| (phi[(k, l)] - phi[(i_nb(g, k, v, -2), l)]) / d)
}

/// (φ_{+1} − φ_{−1})/(2Δ) on K^I, periodic.
pub fn dc(g: &StaggeredGrid, phi: &DMatrix<f64>, v: usize) -> DMatrix<f64> {
    let d = g.spacing(v);
    DMatrix::from_fn(phi.nrows(), phi.ncols(), |k, l| {
        (phi[(i_nb(g, k, v, 2), l)] - phi[(i_nb(g, k, v, -2), l)]) / (2.0 * d)
    })
}

/// δ⁰_v: K^C scalars to K^I.
pub fn grad0(g: &StaggeredGrid, u: &[f64], v: usize) -> Vec<f64> {
    let d = g.spacing(v);
    (0..g.n_i()).map(|k| (u[c_nb_of_i(g, k, v, 1)] - u[c_nb_of_i(g, k, v, -1)]) / d).collect()
}

/// D⁰_v: K^I scalars to K^C.
pub fn div0(g: &StaggeredGrid, f: &[f64], v: usize) -> Vec<f64> {
    let d = g.spacing(v);
    (0..g.n_c()).map(|k| (f[i_nb_of_c(g, k, v, 1)] - f[i_nb_of_c(g, k, v, -1)]) / d).collect()
}

/// Right-multiplication by a diagonal.
pub fn cols(m: &DMatrix<f64>, d: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * d[j])
}

/// Σ_κ Σ_ℓ a_κℓ·d_ℓ·b_κℓ, the weighted Frobenius pairing.
pub fn pair(a: &DMatrix<f64>, d: &[f64], b: &DMatrix<f64>) -> f64 {
    let mut s = 0.0;
    for i in 0..a.nrows() {
        for l in 0..a.ncols() {
            s += a[(i, l)] * d[l] * b[(i, l)];
        }
    }
    s
}

pub fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x * y).collect()
}

/// Unit-box problem with uniform material.
pub fn uniform_problem(
    nx: usize,
    order: usize,
    topology: Topology,
    walls: Option<[WallSpec; 4]>,
    eps: f64,
    mat: Material,
) -> Problem {
    let m = move |_: f64, _: f64| mat;
    Problem::new(ProblemSpec {
        nx,
        ny: nx,
        domain: Rect::unit(),
        topology,
        quad_order: order,
        a: 1.0,
        c: 1.0,
        eps,
        material: &m,
        walls,
    })
    .unwrap()
}

/// Unit-box problem with a smoothly varying material.
pub fn varying_problem(
    nx: usize,
    order: usize,
    topology: Topology,
    walls: Option<[WallSpec; 4]>,
    eps: f64,
) -> Problem {
    let m = |x: f64, y: f64| Material {
        sigma_a: 1.0 + 0.5 * (3.0 * x).sin() * (2.0 * y).cos(),
        sigma_s: 0.5 + 0.25 * x * y,
        heat_capacity: 2.0 + x,
    };
    Problem::new(ProblemSpec {
        nx,
        ny: nx,
        domain: Rect::unit(),
        topology,
        quad_order: order,
        a: 1.0,
        c: 1.0,
        eps,
        material: &m,
        walls,
    })
    .unwrap()
}

/// Smooth positive temperature on K^C.
pub fn smooth_temperature(p: &Problem) -> Vec<f64> {
    p.sample_temperature(&|x, y| 1.0 + 0.3 * (2.0 * std::f64::consts::PI * x).sin() * (1.0 + 0.5 * y))
}

/// Rows of `g` with their w-weighted mean removed.
pub fn mean_free(p: &Problem, mut g: DMatrix<f64>) -> DMatrix<f64> {
    let w = &p.ang.w;
    for i in 0..g.nrows() {
        let m: f64 = (0..g.ncols()).map(|l| g[(i, l)] * w[l]).sum::<f64>() / (2.0 * std::f64::consts::PI);
        for l in 0..g.ncols() {
            g[(i, l)] -= m;
        }
    }
    g
}

/// Orthonormal basis of the column span (dense QR), optionally made
/// orthogonal to `w` first.
pub fn qr_basis(a: &DMatrix<f64>, w: Option<&[f64]>) -> DMatrix<f64> {
    let mut a = a.clone();
    if let Some(w) = w {
        let ww: f64 = w.iter().map(|x| x * x).sum();
        for j in 0..a.ncols() {
            let d: f64 = (0..a.nrows()).map(|i| a[(i, j)] * w[i]).sum::<f64>() / ww;
            for i in 0..a.nrows() {
                a[(i, j)] -= d * w[i];
            }
        }
    }
    a.qr().q()
}

/// Random factored state of rank r with V ⊥ w.
pub fn random_lowrank(
    p: &Problem,
    r: usize,
    temp: Vec<f64>,
    seed: u64,
    scale: f64,
) -> trt_core::lowrank::LowRankState {
    let mut g = rng(seed);
    let x = qr_basis(&rand_mat(&mut g, p.grid.n_i(), r), None);
    let v = qr_basis(&rand_mat(&mut g, p.quad.n_dirs, r), Some(&p.ang.w));
    let s = rand_mat(&mut g, r, r) * scale;
    let n_c = p.grid.n_c();
    trt_core::lowrank::LowRankState { x, s, v, h: vec![0.0; n_c], temp, time: 0.0, eh_wall: vec![0.0; n_c] }
}

/// ‖(I − QQᵀ)a‖ / ‖a‖ for orthonormal Q.
pub fn span_residual(q: &DMatrix<f64>, a: &[f64]) -> f64 {
    let a = nalgebra::DVector::from_column_slice(a);
    let n = a.norm();
    if n == 0.0 {
        return 0.0;
    }
    (&a - q * (q.transpose() * &a)).norm() / n
}

/// Largest root of β·T + k·T⁴ = d by plain bisection.
pub fn bisect_quartic(beta: f64, k: f64, d: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, (d / beta).min((d / k).powf(0.25)).max(0.0) * 1.000001 + 1e-300);
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if beta * mid + k * mid.powi(4) > d {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}
