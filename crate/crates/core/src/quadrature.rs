//! Tensorized Gauss–Legendre × midpoint product quadrature on the projected
//! unit sphere, plus the diagonal angular operators built from it.
//!
//! Directions are ordered `ℓ = m·n_theta + k` with `m` the polar (μ) index
//! and `k` the azimuthal index.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Product quadrature with `order` Gauss–Legendre nodes in μ ∈ [0, 1] and
/// `2·order` midpoint nodes in θ ∈ [0, 2π).
#[derive(Debug, Clone)]
pub struct Quadrature {
    pub order: usize,
    pub n_dirs: usize,
    pub n_theta: usize,
    /// Ω_x per direction.
    pub omega_x: Vec<f64>,
    /// Ω_y per direction.
    pub omega_y: Vec<f64>,
    pub weights: Vec<f64>,
    /// Permutation realizing Ω_x → −Ω_x.
    pub reflect_x: Vec<usize>,
    /// Permutation realizing Ω_y → −Ω_y.
    pub reflect_y: Vec<usize>,
}

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        // Tricomi-style initial guess, then Newton on P_n.
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d.is_finite() {
            dp = d;
        }
        x[i] = -z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

impl Quadrature {
    /// Builds the product rule. `order` must be even and at least 2.
    pub fn new(order: usize) -> Result<Self> {
        if order < 2 || order % 2 != 0 {
            return Err(Error::Config(format!(
                "quadrature order must be even and >= 2, got {order}"
            )));
        }
        let n_theta = 2 * order;
        let (x, wx) = gauss_legendre(order);
        let dtheta = 2.0 * PI / n_theta as f64;
        let n_dirs = order * n_theta;
        // sin/cos tabulated on the first quadrant and mirrored, so the
        // reflections map nodes onto nodes bit-for-bit.
        let quarter = n_theta / 4;
        let mut sin_t = vec![0.0; n_theta];
        let mut cos_t = vec![0.0; n_theta];
        for k in 0..quarter {
            let theta = (k as f64 + 0.5) * dtheta;
            let (s, c) = theta.sin_cos();
            let half = n_theta / 2;
            sin_t[k] = s;
            cos_t[k] = c;
            sin_t[half - 1 - k] = s;
            cos_t[half - 1 - k] = -c;
            sin_t[half + k] = -s;
            cos_t[half + k] = -c;
            sin_t[n_theta - 1 - k] = -s;
            cos_t[n_theta - 1 - k] = c;
        }
        let mut omega_x = Vec::with_capacity(n_dirs);
        let mut omega_y = Vec::with_capacity(n_dirs);
        let mut weights = Vec::with_capacity(n_dirs);
        for m in 0..order {
            let mu = 0.5 * (x[m] + 1.0);
            let wm = 0.5 * wx[m];
            let s = (1.0 - mu * mu).sqrt();
            for k in 0..n_theta {
                omega_x.push(s * sin_t[k]);
                omega_y.push(s * cos_t[k]);
                weights.push(wm * dtheta);
            }
        }
        let mut reflect_x = vec![0; n_dirs];
        let mut reflect_y = vec![0; n_dirs];
        let half = n_theta / 2;
        for m in 0..order {
            for k in 0..n_theta {
                let l = m * n_theta + k;
                reflect_x[l] = m * n_theta + (n_theta - 1 - k);
                reflect_y[l] = m * n_theta + (half + n_theta - 1 - k) % n_theta;
            }
        }
        let q = Quadrature {
            order,
            n_dirs,
            n_theta,
            omega_x,
            omega_y,
            weights,
            reflect_x,
            reflect_y,
        };
        q.check_reflections()?;
        Ok(q)
    }

    fn check_reflections(&self) -> Result<()> {
        for l in 0..self.n_dirs {
            let lx = self.reflect_x[l];
            let ly = self.reflect_y[l];
            let ok = self.reflect_x[lx] == l
                && self.reflect_y[ly] == l
                && self.weights[lx] == self.weights[l]
                && self.weights[ly] == self.weights[l]
                && self.omega_x[lx] == -self.omega_x[l]
                && self.omega_y[lx] == self.omega_y[l]
                && self.omega_y[ly] == -self.omega_y[l]
                && self.omega_x[ly] == self.omega_x[l];
            if !ok {
                return Err(Error::Internal(format!(
                    "reflection matching failed at direction {l}"
                )));
            }
        }
        Ok(())
    }

    /// Ω component along axis `v` (0 = x, 1 = y).
    pub fn omega(&self, v: usize) -> &[f64] {
        if v == 0 {
            &self.omega_x
        } else {
            &self.omega_y
        }
    }

    /// Reflection permutation for a wall with outward normal along axis `v`.
    pub fn reflection(&self, v: usize) -> &[usize] {
        if v == 0 {
            &self.reflect_x
        } else {
            &self.reflect_y
        }
    }

    /// Largest |Ω_v| over all directions and both axes.
    pub fn max_abs_omega(&self) -> f64 {
        self.omega_x
            .iter()
            .chain(self.omega_y.iter())
            .fold(0.0, |m, o| m.max(o.abs()))
    }
}

/// Diagonal angular operators, stored as their diagonals.
#[derive(Debug, Clone)]
pub struct AngularOps {
    pub q: [Vec<f64>; 2],
    pub abs_q: [Vec<f64>; 2],
    pub q_plus: [Vec<f64>; 2],
    pub q_minus: [Vec<f64>; 2],
    /// Diagonal of M, i.e. √w.
    pub m: Vec<f64>,
    pub w: Vec<f64>,
    pub ones: Vec<f64>,
}

impl AngularOps {
    pub fn new(quad: &Quadrature) -> Self {
        let split = |o: &[f64]| {
            let abs: Vec<f64> = o.iter().map(|v| v.abs()).collect();
            let plus: Vec<f64> = o.iter().map(|v| 0.5 * (v + v.abs())).collect();
            let minus: Vec<f64> = o.iter().map(|v| 0.5 * (v - v.abs())).collect();
            (abs, plus, minus)
        };
        let (ax, px, mx) = split(&quad.omega_x);
        let (ay, py, my) = split(&quad.omega_y);
        AngularOps {
            q: [quad.omega_x.clone(), quad.omega_y.clone()],
            abs_q: [ax, ay],
            q_plus: [px, py],
            q_minus: [mx, my],
            m: quad.weights.iter().map(|w| w.sqrt()).collect(),
            w: quad.weights.clone(),
            ones: vec![1.0; quad.n_dirs],
        }
    }

    pub fn n_dirs(&self) -> usize {
        self.w.len()
    }

    /// Q_v w, the vector that turns a row of g into its flux along v.
    pub fn flux_weights(&self, v: usize) -> Vec<f64> {
        self.q[v].iter().zip(&self.w).map(|(o, w)| o * w).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(5);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(8)).sum();
        assert!((s - 2.0 / 9.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_odd_and_small_orders() {
        assert!(Quadrature::new(3).is_err());
        assert!(Quadrature::new(0).is_err());
        assert!(Quadrature::new(2).is_ok());
    }

    #[test]
    fn order_thirty_has_1800_directions() {
        let q = Quadrature::new(30).unwrap();
        assert_eq!(q.n_dirs, 1800);
        let s: f64 = q.weights.iter().sum();
        assert!((s - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn order_two_odd_moment_vanishes() {
        let q = Quadrature::new(2).unwrap();
        let s: f64 = q.weights.iter().zip(&q.omega_x).map(|(w, o)| w * o).sum();
        assert!(s.abs() < 1e-15);
    }

    #[test]
    fn no_direction_lies_on_an_axis() {
        for order in [2, 4, 8, 30] {
            let q = Quadrature::new(order).unwrap();
            assert!(q.omega_x.iter().all(|o| o.abs() > 1e-8));
            assert!(q.omega_y.iter().all(|o| o.abs() > 1e-8));
        }
    }

    #[test]
    fn sign_split_examples() {
        let q = Quadrature::new(4).unwrap();
        let a = AngularOps::new(&q);
        for l in 0..q.n_dirs {
            let o = q.omega_x[l];
            if o > 0.0 {
                assert_eq!(a.q_plus[0][l], o);
                assert_eq!(a.q_minus[0][l], 0.0);
            } else {
                assert_eq!(a.q_minus[0][l], o);
                assert_eq!(a.q_plus[0][l], 0.0);
            }
            assert!((a.m[l] * a.m[l] - q.weights[l]).abs() <= 1e-15 * q.weights[l]);
        }
    }
}
