//! Orthonormalization helpers: modified Gram–Schmidt with one
//! re-orthogonalization pass, optional projection out of a fixed unit
//! vector, and deterministic random padding for rank-deficient input.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Relative drop tolerance for candidate columns.
pub const REL_DROP: f64 = 1e-12;

pub struct Orth<'a> {
    /// Columns the result must be orthogonal to (already orthonormal).
    pub base: Option<&'a DMatrix<f64>>,
    /// Unit vector to project out first (e.g. w/‖w‖).
    pub constraint: Option<&'a DVector<f64>>,
    /// Absolute drop tolerance on top of the relative one.
    pub abs_tol: f64,
}

impl<'a> Orth<'a> {
    pub fn plain() -> Self {
        Orth { base: None, constraint: None, abs_tol: 0.0 }
    }

    fn project(&self, v: &mut DVector<f64>, accepted: &[DVector<f64>]) {
        for _ in 0..2 {
            if let Some(c) = self.constraint {
                let a = c.dot(v);
                v.axpy(-a, c, 1.0);
            }
            if let Some(b) = self.base {
                for j in 0..b.ncols() {
                    let col = b.column(j);
                    let a = col.dot(v);
                    v.axpy(-a, &col, 1.0);
                }
            }
            for q in accepted {
                let a = q.dot(v);
                v.axpy(-a, q, 1.0);
            }
        }
    }

    fn ambient_dim(&self, n: usize) -> usize {
        let used = self.base.map_or(0, |b| b.ncols()) + usize::from(self.constraint.is_some());
        n.saturating_sub(used)
    }

    /// Orthonormal columns spanning the candidates (minus base/constraint),
    /// padded with random complement vectors up to `pad_to` columns when
    /// the ambient space allows.
    pub fn run(&self, cand: &DMatrix<f64>, pad_to: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        let n = cand.nrows();
        let mut accepted: Vec<DVector<f64>> = Vec::new();
        let room = self.ambient_dim(n);
        for j in 0..cand.ncols() {
            if accepted.len() >= room {
                break;
            }
            let orig: DVector<f64> = cand.column(j).into_owned();
            let norm0 = orig.norm();
            if norm0 == 0.0 || !norm0.is_finite() {
                continue;
            }
            let mut v = orig;
            self.project(&mut v, &accepted);
            let nv = v.norm();
            if nv > REL_DROP * norm0 && nv > self.abs_tol {
                accepted.push(v / nv);
            }
        }
        let target = pad_to.min(room);
        let mut attempts = 0;
        while accepted.len() < target && attempts < 4 * target + 8 {
            attempts += 1;
            let mut v = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
            let norm0 = v.norm();
            self.project(&mut v, &accepted);
            let nv = v.norm();
            if nv > 1e-8 * norm0 {
                accepted.push(v / nv);
            }
        }
        let mut out = DMatrix::zeros(n, accepted.len());
        for (j, q) in accepted.iter().enumerate() {
            out.set_column(j, q);
        }
        out
    }
}

/// Thin QR by modified Gram–Schmidt. Dependent columns get a zero row in R
/// and a random complement vector in Q so that Q stays orthonormal.
pub fn qr_mgs(a: &DMatrix<f64>, rng: &mut ChaCha8Rng) -> (DMatrix<f64>, DMatrix<f64>) {
    let (n, m) = a.shape();
    let mut q = DMatrix::zeros(n, m);
    let mut r = DMatrix::zeros(m, m);
    let scale = a.norm().max(f64::MIN_POSITIVE);
    let mut dependent = Vec::new();
    for j in 0..m {
        let mut v: DVector<f64> = a.column(j).into_owned();
        for _ in 0..2 {
            for i in 0..j {
                if dependent.contains(&i) {
                    continue;
                }
                let qi = q.column(i);
                let c = qi.dot(&v);
                r[(i, j)] += c;
                v.axpy(-c, &qi, 1.0);
            }
        }
        let nv = v.norm();
        if nv > 1e-14 * scale {
            r[(j, j)] = nv;
            q.set_column(j, &(v / nv));
        } else {
            dependent.push(j);
        }
    }
    if !dependent.is_empty() {
        for &j in &dependent {
            let mut filled = false;
            for _ in 0..16 {
                let mut v = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
                for _ in 0..2 {
                    for i in 0..m {
                        if i == j || (dependent.contains(&i) && i > j) {
                            continue;
                        }
                        let qi = q.column(i);
                        let c = qi.dot(&v);
                        v.axpy(-c, &qi, 1.0);
                    }
                }
                let nv = v.norm();
                if nv > 1e-8 {
                    q.set_column(j, &(v / nv));
                    filled = true;
                    break;
                }
            }
            if !filled {
                q.set_column(j, &DVector::zeros(n));
            }
        }
    }
    (q, r)
}

/// Largest singular value.
pub fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0.0;
    }
    a.clone().singular_values().iter().cloned().fold(0.0, f64::max)
}

/// Thin SVD with singular values sorted in decreasing order.
pub fn sorted_svd(a: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>, DMatrix<f64>) {
    let svd = a.clone().svd(true, true);
    let u = svd.u.unwrap();
    let vt = svd.v_t.unwrap();
    let s = svd.singular_values;
    let mut idx: Vec<usize> = (0..s.len()).collect();
    idx.sort_by(|&i, &j| s[j].partial_cmp(&s[i]).unwrap());
    let mut us = DMatrix::zeros(u.nrows(), idx.len());
    let mut ws = DMatrix::zeros(vt.ncols(), idx.len());
    let mut ss = Vec::with_capacity(idx.len());
    for (k, &i) in idx.iter().enumerate() {
        us.set_column(k, &u.column(i));
        ws.set_column(k, &vt.row(i).transpose());
        ss.push(s[i]);
    }
    (us, ss, ws)
}

/// ‖AᵀA − I‖_max.
pub fn orthonormality_defect(a: &DMatrix<f64>) -> f64 {
    let g = a.transpose() * a;
    let mut d: f64 = 0.0;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let e = if i == j { 1.0 } else { 0.0 };
            d = d.max((g[(i, j)] - e).abs());
        }
    }
    d
}

/// Scale row i of `m` by `f[i]`.
pub fn scale_rows(m: &mut DMatrix<f64>, f: &[f64]) {
    for j in 0..m.ncols() {
        let mut c = m.column_mut(j);
        for (i, fi) in f.iter().enumerate() {
            c[i] *= fi;
        }
    }
}

/// `M · diag(d)`.
pub fn scale_cols(m: &DMatrix<f64>, d: &[f64]) -> DMatrix<f64> {
    let mut out = m.clone();
    for (j, dj) in d.iter().enumerate() {
        out.column_mut(j).scale_mut(*dj);
    }
    out
}

/// `diag(d) · M`.
pub fn diag_mul(d: &[f64], m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    scale_rows(&mut out, d);
    out
}

/// Outer product `a bᵀ`.
pub fn outer(a: &[f64], b: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(a.len(), b.len(), |i, j| a[i] * b[j])
}
