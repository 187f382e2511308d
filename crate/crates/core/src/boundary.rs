//! Reflection–transmission walls for the micro field.
//!
//! Incoming entries of a wall row (n·Ω < 0) become `ρ·g(Ω′) − (1−ρ)·εh`,
//! with Ω′ the mirror direction. The wall value εh is fixed by the
//! consistency relation and carried from step to step on the wall centres
//! as `eh_wall`, so ε = 0 needs no special casing.

use nalgebra::DMatrix;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{BoundaryRow, Wall};
use crate::linalg::qr_mgs;
use crate::problem::Problem;
use crate::quadrature::Quadrature;

fn n_dot(q: &Quadrature, normal: [f64; 2], l: usize) -> f64 {
    normal[0] * q.omega_x[l] + normal[1] * q.omega_y[l]
}

/// Reflection permutation across a wall.
pub fn reflection_for(q: &Quadrature, wall: Wall) -> &[usize] {
    q.reflection(wall.axis())
}

/// εh at a wall point from ε·Σ_in (1−ρ)·w·h = Σ_out (1 + ρ(−n·Ω))·w·g.
pub fn consistency_eh(q: &Quadrature, row: &[f64], normal: [f64; 2], rho: f64) -> Result<f64> {
    if rho >= 1.0 {
        return Err(Error::Unsupported("consistency relation not applicable on a purely reflective wall".into()));
    }
    let mut out = 0.0;
    let mut inc = 0.0;
    for l in 0..q.n_dirs {
        let nd = n_dot(q, normal, l);
        if nd > 0.0 {
            out += (1.0 + rho * (-nd)) * q.weights[l] * row[l];
        } else if nd < 0.0 {
            inc += (1.0 - rho) * q.weights[l];
        }
    }
    Ok(out / inc)
}

/// h itself; fails when ε = 0 and the balance has a nonzero right side.
pub fn boundary_h(q: &Quadrature, row: &[f64], normal: [f64; 2], rho: f64, eps: f64) -> Result<f64> {
    let eh = consistency_eh(q, row, normal, rho)?;
    if eps == 0.0 {
        if eh != 0.0 {
            return Err(Error::Domain("ε = 0 with nonzero outgoing flux: boundary data incompatible".into()));
        }
        return Ok(0.0);
    }
    Ok(eh / eps)
}

/// Replaces the incoming entries of one wall row in place.
pub fn impose_row(q: &Quadrature, row: &mut [f64], br: &BoundaryRow, rho: f64, eh_b: f64) {
    let refl = reflection_for(q, br.wall);
    for l in 0..q.n_dirs {
        if n_dot(q, br.normal, l) < 0.0 {
            // Ω′ is outgoing, so its entry is never overwritten.
            row[l] = rho * row[refl[l]] - (1.0 - rho) * eh_b;
        }
    }
}

/// εh interpolated at a wall row from the two flanking wall centres.
pub fn eh_at_row(p: &Problem, br: &BoundaryRow, eh_wall: &[f64]) -> f64 {
    let [a, b] = p.grid.row_wall_centers(br.row, br.wall);
    0.5 * (eh_wall[a] + eh_wall[b])
}

fn wall_rho(p: &Problem, wall: Wall) -> f64 {
    p.wall(wall).map_or(1.0, |w| w.rho)
}

/// Wall condition on a dense micro field.
pub fn apply_full_bc(p: &Problem, g: &mut DMatrix<f64>, eh_wall: &[f64]) {
    let nq = g.ncols();
    let mut row = vec![0.0; nq];
    for br in &p.grid.boundary_rows {
        let rho = wall_rho(p, br.wall);
        let eh_b = eh_at_row(p, br, eh_wall);
        for l in 0..nq {
            row[l] = g[(br.row, l)];
        }
        impose_row(&p.quad, &mut row, br, rho, eh_b);
        for l in 0..nq {
            g[(br.row, l)] = row[l];
        }
    }
}

/// New εh on the wall centres (zero elsewhere) from the wall rows of g,
/// given as one row per entry of `boundary_rows`.
pub fn wall_eh_from_rows(p: &Problem, rows: &DMatrix<f64>) -> Result<Vec<f64>> {
    let grid = &p.grid;
    let mut row_eh = vec![None; grid.n_i()];
    let mut buf = vec![0.0; rows.ncols()];
    for (b, br) in grid.boundary_rows.iter().enumerate() {
        let rho = wall_rho(p, br.wall);
        if rho < 1.0 {
            for l in 0..rows.ncols() {
                buf[l] = rows[(b, l)];
            }
            row_eh[br.row] = Some(consistency_eh(&p.quad, &buf, br.normal, rho)?);
        }
    }
    let mut eh = vec![0.0; grid.n_c()];
    for k in 0..grid.n_c() {
        if p.dirichlet[k].is_none() {
            continue;
        }
        let vals: Vec<f64> = grid.adjacent_boundary_rows(k).iter().filter_map(|&r| row_eh[r]).collect();
        if !vals.is_empty() {
            eh[k] = vals.iter().sum::<f64>() / vals.len() as f64;
        }
    }
    Ok(eh)
}

/// Wall rows of a dense field, in `boundary_rows` order.
pub fn boundary_rows_dense(p: &Problem, g: &DMatrix<f64>) -> DMatrix<f64> {
    let br = &p.grid.boundary_rows;
    DMatrix::from_fn(br.len(), g.ncols(), |b, l| g[(br[b].row, l)])
}

/// Rows of X on the wall, in `boundary_rows` order.
pub fn restrict_rows(p: &Problem, x: &DMatrix<f64>) -> DMatrix<f64> {
    let br = &p.grid.boundary_rows;
    DMatrix::from_fn(br.len(), x.ncols(), |b, j| x[(br[b].row, j)])
}

/// ĝ: wall rows of X·S·Vᵀ with incoming entries replaced.
pub fn hat_g(p: &Problem, x: &DMatrix<f64>, s: &DMatrix<f64>, v: &DMatrix<f64>, eh_wall: &[f64]) -> DMatrix<f64> {
    let mut gt = restrict_rows(p, x) * s * v.transpose();
    let nq = gt.ncols();
    let mut row = vec![0.0; nq];
    for (b, br) in p.grid.boundary_rows.iter().enumerate() {
        let rho = wall_rho(p, br.wall);
        let eh_b = eh_at_row(p, br, eh_wall);
        for l in 0..nq {
            row[l] = gt[(b, l)];
        }
        impose_row(&p.quad, &mut row, br, rho, eh_b);
        for l in 0..nq {
            gt[(b, l)] = row[l];
        }
    }
    gt
}

/// Projected wall condition on factors: the wall rows of K = X·S are
/// replaced by ĝ·V and (X, S) refactored by QR. V is unchanged.
pub fn impose_lowrank_bc(
    p: &Problem,
    x: &DMatrix<f64>,
    s: &DMatrix<f64>,
    v: &DMatrix<f64>,
    eh_wall: &[f64],
    rng: &mut ChaCha8Rng,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if x.nrows() != p.grid.n_i() || v.nrows() != p.quad.n_dirs {
        return Err(Error::Internal("boundary imposition: factor shapes do not match the grid".into()));
    }
    let mut kbar = x * s;
    if !p.grid.boundary_rows.is_empty() {
        let khat = hat_g(p, x, s, v, eh_wall) * v;
        for (b, br) in p.grid.boundary_rows.iter().enumerate() {
            for j in 0..kbar.ncols() {
                kbar[(br.row, j)] = khat[(b, j)];
            }
        }
    }
    Ok(qr_mgs(&kbar, rng))
}
