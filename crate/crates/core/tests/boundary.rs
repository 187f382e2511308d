mod common;

use common::*;
use nalgebra::DMatrix;
use trt_core::boundary::{
    apply_full_bc, consistency_eh, eh_at_row, hat_g, impose_lowrank_bc, wall_eh_from_rows, boundary_rows_dense,
};
use trt_core::grid::Topology;
use trt_core::problem::{Problem, WallSpec};

fn walled(rhos: [f64; 4]) -> Problem {
    let walls = rhos.map(|rho| WallSpec { rho, temperature: 0.7 });
    varying_problem(6, 4, Topology::Bounded, Some(walls), 0.4)
}

fn random_eh(p: &Problem, seed: u64) -> Vec<f64> {
    let r = rand_vec(&mut rng(seed), p.grid.n_c());
    (0..p.grid.n_c()).map(|k| if p.dirichlet[k].is_some() { r[k] } else { 0.0 }).collect()
}

fn incoming(p: &Problem, normal: [f64; 2], l: usize) -> bool {
    normal[0] * p.quad.omega_x[l] + normal[1] * p.quad.omega_y[l] < 0.0
}

#[test]
fn only_incoming_wall_entries_change() {
    let p = walled([0.0, 0.3, 1.0, 0.6]);
    let g0 = rand_mat(&mut rng(1), p.grid.n_i(), p.quad.n_dirs);
    let eh = random_eh(&p, 2);
    let mut g = g0.clone();
    apply_full_bc(&p, &mut g, &eh);
    let mut touched = vec![false; p.grid.n_i()];
    for br in &p.grid.boundary_rows {
        touched[br.row] = true;
        let rho = p.walls.unwrap()[br.wall.index()].rho;
        let refl = p.quad.reflection(br.wall.axis());
        let eh_b = eh_at_row(&p, br, &eh);
        for l in 0..p.quad.n_dirs {
            let want = if incoming(&p, br.normal, l) {
                rho * g0[(br.row, refl[l])] - (1.0 - rho) * eh_b
            } else {
                g0[(br.row, l)]
            };
            assert!((g[(br.row, l)] - want).abs() < 1e-15);
        }
    }
    for i in 0..p.grid.n_i() {
        if !touched[i] {
            assert_eq!(g.row(i), g0.row(i));
        }
    }
    let mut again = g.clone();
    apply_full_bc(&p, &mut again, &eh);
    assert_eq!(again, g);
}

#[test]
fn periodic_problem_has_no_wall_rows() {
    let p = varying_problem(5, 4, Topology::Periodic, None, 1.0);
    assert!(p.grid.boundary_rows.is_empty());
}

#[test]
fn transmitting_rows_lose_their_mean() {
    let p = walled([0.0; 4]);
    let mut g = rand_mat(&mut rng(3), p.grid.n_i(), p.quad.n_dirs);
    for br in &p.grid.boundary_rows {
        let row: Vec<f64> = g.row(br.row).iter().copied().collect();
        let eh = consistency_eh(&p.quad, &row, br.normal, 0.0).unwrap();
        for l in 0..p.quad.n_dirs {
            if incoming(&p, br.normal, l) {
                g[(br.row, l)] = -eh;
            }
        }
        let mean: f64 = (0..p.quad.n_dirs).map(|l| p.ang.w[l] * g[(br.row, l)]).sum();
        assert!(mean.abs() < 1e-13 * row.iter().map(|x| x.abs()).sum::<f64>());
    }
}

#[test]
fn wall_eh_lives_on_transmitting_wall_centres() {
    let p = walled([0.0, 0.5, 1.0, 1.0]);
    let g = rand_mat(&mut rng(4), p.grid.n_i(), p.quad.n_dirs);
    let eh = wall_eh_from_rows(&p, &boundary_rows_dense(&p, &g)).unwrap();
    for k in 0..p.grid.n_c() {
        if p.dirichlet[k].is_none() {
            assert_eq!(eh[k], 0.0);
        }
    }
    assert!(eh.iter().any(|&x| x != 0.0));
}

#[test]
fn lowrank_imposition_projects_wall_rows() {
    let p = walled([0.0, 0.3, 1.0, 0.6]);
    let st = random_lowrank(&p, 4, smooth_temperature(&p), 5, 1.0);
    let eh = random_eh(&p, 6);
    let (x, s) = impose_lowrank_bc(&p, &st.x, &st.s, &st.v, &eh, &mut rng(7)).unwrap();
    let r = x.ncols();
    assert!((x.transpose() * &x - DMatrix::identity(r, r)).amax() < 1e-12);
    let k_new = &x * &s;
    let k_old = &st.x * &st.s;
    let ghat_v = hat_g(&p, &st.x, &st.s, &st.v, &eh) * &st.v;
    let mut wall = vec![None; p.grid.n_i()];
    for (b, br) in p.grid.boundary_rows.iter().enumerate() {
        wall[br.row] = Some(b);
    }
    for i in 0..p.grid.n_i() {
        let want = match wall[i] {
            Some(b) => ghat_v.row(b).into_owned(),
            None => k_old.row(i).into_owned(),
        };
        assert!((k_new.row(i) - want).amax() < 1e-12, "row {i}");
    }
}
