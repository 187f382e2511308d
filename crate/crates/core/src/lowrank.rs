//! Rank-adaptive parallel basis-update-and-Galerkin step for the micro field
//! g ≈ X·S·Vᵀ.
//!
//! S may be rectangular (rx × rv) when one of the ambient spaces is too small
//! to hold as many basis vectors as the other; everything below is written
//! for that general shape.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::boundary;
use crate::error::{Error, Result};
use crate::full_solver::{phi_gradient, step_macro, MacroStats};
use crate::linalg::{diag_mul, outer, qr_mgs, sorted_svd, spectral_norm, Orth};
use crate::problem::Problem;

/// Diagonal floor for the Galerkin systems when the problem has vacuum.
pub const VACUUM_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct LowRankState {
    pub x: DMatrix<f64>,
    pub s: DMatrix<f64>,
    pub v: DMatrix<f64>,
    pub h: Vec<f64>,
    pub temp: Vec<f64>,
    pub time: f64,
    pub eh_wall: Vec<f64>,
}

impl LowRankState {
    /// g = 0 at rank r0 with seeded orthonormal X and w-orthogonal V.
    pub fn zero(p: &Problem, temp: Vec<f64>, r0: usize, rng: &mut ChaCha8Rng) -> Self {
        let r0 = r0.clamp(1, p.grid.n_i().min(p.quad.n_dirs - 1));
        let x = Orth::plain().run(&DMatrix::zeros(p.grid.n_i(), 0), r0, rng);
        let what = unit_w(p);
        let v = Orth { base: None, constraint: Some(&what), abs_tol: 0.0 }.run(
            &DMatrix::zeros(p.quad.n_dirs, 0),
            r0,
            rng,
        );
        LowRankState {
            s: DMatrix::zeros(x.ncols(), v.ncols()),
            x,
            v,
            h: vec![0.0; p.grid.n_c()],
            temp,
            time: 0.0,
            eh_wall: vec![0.0; p.grid.n_c()],
        }
    }

    /// Rank of the approximation. X may carry more columns than V (or the
    /// reverse) when one ambient space is nearly exhausted.
    pub fn rank(&self) -> usize {
        self.s.nrows().min(self.s.ncols())
    }

    pub fn dense(&self) -> DMatrix<f64> {
        &self.x * &self.s * self.v.transpose()
    }
}

/// `r_max` clamped to min(N_I, N_q). The approximation rank is further
/// limited by N_q − 1, since V lives in the complement of w.
pub fn rank_cap(p: &Problem, r_max: usize) -> usize {
    r_max.min(p.grid.n_i()).min(p.quad.n_dirs)
}

fn unit_w(p: &Problem) -> DVector<f64> {
    let w = DVector::from_column_slice(&p.ang.w);
    let n = w.norm();
    w / n
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TruncationMode {
    /// ϑ = tol·σ_max(Ŝ).
    RelativeSpectral,
    /// ϑ = tol.
    Absolute,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationPolicy {
    pub mode: TruncationMode,
    pub tol: f64,
    pub r_max: usize,
    pub conserved: usize,
}

impl TruncationPolicy {
    pub fn relative(factor: f64, r_max: usize) -> Self {
        TruncationPolicy { mode: TruncationMode::RelativeSpectral, tol: factor, r_max, conserved: 2 }
    }

    pub fn absolute(theta: f64, r_max: usize) -> Self {
        TruncationPolicy { mode: TruncationMode::Absolute, tol: theta, r_max, conserved: 2 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol >= 0.0) || !self.tol.is_finite() {
            return Err(Error::Config(format!("truncation tolerance must be non-negative, got {}", self.tol)));
        }
        if self.r_max == 0 {
            return Err(Error::Config("r_max must be positive".into()));
        }
        Ok(())
    }
}

/// Factors after pre-augmentation.
#[derive(Debug, Clone)]
pub struct Augmented {
    pub x: DMatrix<f64>,
    pub s: DMatrix<f64>,
    pub v: DMatrix<f64>,
}

/// The two spatial vectors σ_t⁻¹ δ⁰_v B(T) as columns.
pub fn planck_gradient_vectors(p: &Problem, temp: &[f64]) -> DMatrix<f64> {
    let b = p.planck_field(temp);
    let sinv = p.sigma_t_inv();
    let mut m = DMatrix::zeros(p.grid.n_i(), 2);
    for v in 0..2 {
        let g = p.ops.grad0[v].apply_vec(&b);
        for i in 0..g.len() {
            m[(i, v)] = sinv[i] * g[i];
        }
    }
    m
}

/// The two angular vectors Q_v𝟙 as columns.
pub fn moment_vectors(p: &Problem) -> DMatrix<f64> {
    let n = p.quad.n_dirs;
    DMatrix::from_fn(n, 2, |l, v| p.ang.q[v][l])
}

fn hcat(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    m.columns_mut(0, a.ncols()).copy_from(a);
    m.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    m
}

/// X ← orth[σ_t⁻¹δ⁰_xB, σ_t⁻¹δ⁰_yB, X], V ← orth_w⊥[Q_x𝟙, Q_y𝟙, V],
/// S ← X_augᵀ X S Vᵀ V_aug.
pub fn pre_augment(p: &Problem, st: &LowRankState, rng: &mut ChaCha8Rng) -> Augmented {
    let xc = hcat(&planck_gradient_vectors(p, &st.temp), &st.x);
    let x = Orth::plain().run(&xc, st.x.ncols() + 2, rng);
    let what = unit_w(p);
    let vc = hcat(&moment_vectors(p), &st.v);
    let v = Orth { base: None, constraint: Some(&what), abs_tol: 0.0 }.run(&vc, st.v.ncols() + 2, rng);
    let s = (x.transpose() * &st.x) * &st.s * (st.v.transpose() * &v);
    Augmented { x, s, v }
}

/// Step-n data shared by the K, L and S steps.
pub struct Sources {
    pub alpha: f64,
    pub eps: f64,
    /// δ⁰_v(B + ε²h).
    pub grad_phi: [Vec<f64>; 2],
    pub floor: f64,
}

impl Sources {
    pub fn new(p: &Problem, temp: &[f64], h: &[f64], dt: f64) -> Self {
        Sources {
            alpha: p.eps * p.eps / (p.c * dt),
            eps: p.eps,
            grad_phi: phi_gradient(p, temp, h),
            floor: if p.has_vacuum { VACUUM_FLOOR } else { 0.0 },
        }
    }
}

/// C∓_v = Vᵀ Q∓_v V − (1/2π)(Vᵀ Q∓_v w)(𝟙ᵀ V), indexed `[v][0 = minus, 1 = plus]`.
fn angular_galerkin(p: &Problem, v: &DMatrix<f64>) -> [[DMatrix<f64>; 2]; 2] {
    let ones_v = v.row_sum();
    let mk = |d: &[f64]| {
        let dv = diag_mul(d, v);
        let dw: Vec<f64> = d.iter().zip(&p.ang.w).map(|(a, b)| a * b).collect();
        let vdw = v.transpose() * DVector::from_vec(dw);
        v.transpose() * dv - (&vdw * &ones_v) / (2.0 * PI)
    };
    [
        [mk(&p.ang.q_minus[0]), mk(&p.ang.q_plus[0])],
        [mk(&p.ang.q_minus[1]), mk(&p.ang.q_plus[1])],
    ]
}

/// G±_v = Xᵀ D±_v X, indexed `[v][0 = plus, 1 = minus]`.
fn spatial_galerkin(p: &Problem, x: &DMatrix<f64>) -> [[DMatrix<f64>; 2]; 2] {
    let g = |v: usize| [x.transpose() * p.ops.dp[v].apply_mat(x), x.transpose() * p.ops.dm[v].apply_mat(x)];
    [g(0), g(1)]
}

/// αI + Xᵀ diag(σ_t) X (+ vacuum floor).
fn galerkin_system(p: &Problem, x: &DMatrix<f64>, src: &Sources) -> DMatrix<f64> {
    let mut sx = x.clone();
    crate::linalg::scale_rows(&mut sx, &p.sigma_t_i);
    let mut a = x.transpose() * sx;
    for i in 0..a.nrows() {
        a[(i, i)] += src.alpha + src.floor;
    }
    a
}

fn solve_left(a: &DMatrix<f64>, rhs: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    a.clone()
        .lu()
        .solve(rhs)
        .ok_or_else(|| Error::Domain(format!("{what}: singular Galerkin system")))
}

/// K-step: returns (K′, X̃, S̃_K = X̃ᵀK′).
pub fn k_step(
    p: &Problem,
    aug: &Augmented,
    src: &Sources,
    rng: &mut ChaCha8Rng,
) -> Result<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)> {
    let (x, s, v) = (&aug.x, &aug.s, &aug.v);
    let k = x * s;
    let mut kn = &k * src.alpha;
    if src.eps != 0.0 {
        let c = angular_galerkin(p, v);
        for d in 0..2 {
            kn -= p.ops.dp[d].apply_mat(&k) * (&c[d][0] * src.eps);
            kn -= p.ops.dm[d].apply_mat(&k) * (&c[d][1] * src.eps);
        }
    }
    for d in 0..2 {
        let vq = v.transpose() * DVector::from_column_slice(&p.ang.q[d]);
        kn -= outer(&src.grad_phi[d], vq.as_slice());
    }
    let mut inv = Vec::with_capacity(kn.nrows());
    for (i, st) in p.sigma_t_i.iter().enumerate() {
        let den = src.alpha + st;
        if !(den > 0.0) {
            return Err(Error::Domain(format!("K-step denominator vanishes at interface {i} (ε = 0 in vacuum)")));
        }
        inv.push(1.0 / den);
    }
    crate::linalg::scale_rows(&mut kn, &inv);
    let xt = Orth { base: Some(x), constraint: None, abs_tol: 0.0 }.run(&kn, x.ncols(), rng);
    let sk = xt.transpose() * &kn;
    Ok((kn, xt, sk))
}

/// L-step: returns (L′, Ṽ, S̃_L = L′ᵀṼ).
pub fn l_step(
    p: &Problem,
    aug: &Augmented,
    src: &Sources,
    rng: &mut ChaCha8Rng,
) -> Result<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)> {
    let (x, s, v) = (&aug.x, &aug.s, &aug.v);
    let l = v * s.transpose();
    let mut rhs = &l * src.alpha;
    if src.eps != 0.0 {
        let g = spatial_galerkin(p, x);
        let mut y = DMatrix::zeros(l.nrows(), l.ncols());
        for d in 0..2 {
            y += diag_mul(&p.ang.q_minus[d], &(&l * g[d][0].transpose()));
            y += diag_mul(&p.ang.q_plus[d], &(&l * g[d][1].transpose()));
        }
        let wy = DVector::from_column_slice(&p.ang.w).transpose() * &y;
        let ones = DVector::from_element(y.nrows(), 1.0);
        y -= (ones * wy) / (2.0 * PI);
        rhs -= y * src.eps;
    }
    for d in 0..2 {
        let xg = x.transpose() * DVector::from_column_slice(&src.grad_phi[d]);
        rhs -= outer(&p.ang.q[d], xg.as_slice());
    }
    let a = galerkin_system(p, x, src);
    let ln = solve_left(&a, &rhs.transpose(), "L-step")?.transpose();
    let what = unit_w(p);
    let vt = Orth { base: Some(v), constraint: Some(&what), abs_tol: 0.0 }.run(&ln, v.ncols(), rng);
    let sl = ln.transpose() * &vt;
    Ok((ln, vt, sl))
}

/// S-step: Galerkin update of the coefficients in the frozen bases.
pub fn s_step(p: &Problem, aug: &Augmented, src: &Sources) -> Result<DMatrix<f64>> {
    let (x, s, v) = (&aug.x, &aug.s, &aug.v);
    let mut rhs = s * src.alpha;
    if src.eps != 0.0 {
        let g = spatial_galerkin(p, x);
        let c = angular_galerkin(p, v);
        for d in 0..2 {
            rhs -= (&g[d][0] * s * &c[d][0]) * src.eps;
            rhs -= (&g[d][1] * s * &c[d][1]) * src.eps;
        }
    }
    for d in 0..2 {
        let xg = x.transpose() * DVector::from_column_slice(&src.grad_phi[d]);
        let vq = v.transpose() * DVector::from_column_slice(&p.ang.q[d]);
        rhs -= outer(xg.as_slice(), vq.as_slice());
    }
    let a = galerkin_system(p, x, src);
    solve_left(&a, &rhs, "S-step")
}

/// Ŝ = [[S̄, S̃_L], [S̃_K, 0]].
pub fn assemble_augmented(s_bar: &DMatrix<f64>, s_l: &DMatrix<f64>, s_k: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (rx, rv) = s_bar.shape();
    if s_l.nrows() != rx || s_k.ncols() != rv {
        return Err(Error::Internal(format!(
            "augmented blocks do not conform: S̄ {:?}, S̃_L {:?}, S̃_K {:?}",
            s_bar.shape(),
            s_l.shape(),
            s_k.shape()
        )));
    }
    let mut m = DMatrix::zeros(rx + s_k.nrows(), rv + s_l.ncols());
    m.view_mut((0, 0), (rx, rv)).copy_from(s_bar);
    m.view_mut((0, rv), s_l.shape()).copy_from(s_l);
    m.view_mut((rx, 0), s_k.shape()).copy_from(s_k);
    Ok(m)
}

/// Augmented factors (X̂, Ŝ, V̂) before truncation.
#[derive(Debug, Clone)]
pub struct AugmentedStep {
    pub pre: Augmented,
    pub x_hat: DMatrix<f64>,
    pub s_hat: DMatrix<f64>,
    pub v_hat: DMatrix<f64>,
}

/// Pre-augmentation and the three concurrent substeps.
pub fn augmented_update(p: &Problem, st: &LowRankState, dt: f64, rng: &mut ChaCha8Rng) -> Result<AugmentedStep> {
    if !(dt > 0.0) {
        return Err(Error::Domain(format!("non-positive time step {dt}")));
    }
    let pre = pre_augment(p, st, rng);
    let src = Sources::new(p, &st.temp, &st.h, dt);
    let mut rk = ChaCha8Rng::seed_from_u64(rng.random());
    let mut rl = ChaCha8Rng::seed_from_u64(rng.random());
    let (kr, (lr, sr)) = rayon::join(
        || k_step(p, &pre, &src, &mut rk),
        || rayon::join(|| l_step(p, &pre, &src, &mut rl), || s_step(p, &pre, &src)),
    );
    let (_, xt, sk) = kr?;
    let (_, vt, sl) = lr?;
    let s_bar = sr?;
    let s_hat = assemble_augmented(&s_bar, &sl, &sk)?;
    Ok(AugmentedStep { x_hat: hcat(&pre.x, &xt), v_hat: hcat(&pre.v, &vt), s_hat, pre })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TruncationInfo {
    pub theta: f64,
    /// Retained directions of the non-conserved block.
    pub r1: usize,
    /// Discarded tail (Σ_{j>r1} σ_j²)^{1/2}.
    pub tail: f64,
    pub rank_x: usize,
    pub rank_v: usize,
    /// The rank cap forced extra truncation.
    pub capped: bool,
}

fn pad_columns(w: DMatrix<f64>, target: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    if w.ncols() >= target {
        return w;
    }
    let extra = Orth { base: Some(&w), constraint: None, abs_tol: 0.0 }.run(
        &DMatrix::zeros(w.nrows(), 0),
        target - w.ncols(),
        rng,
    );
    hcat(&w, &extra)
}

/// Keeps the first `policy.conserved` columns of X̂ and V̂ exactly and
/// truncates the coefficient block on their complement by the tail rule.
/// `r_tilde` is the pre-augmented rank: the approximation rank
/// min(r_x, r_v) is held below 2r̃, and the larger factor below r_max.
pub fn conservative_truncate(
    x_hat: &DMatrix<f64>,
    s_hat: &DMatrix<f64>,
    v_hat: &DMatrix<f64>,
    policy: &TruncationPolicy,
    r_tilde: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>, TruncationInfo)> {
    policy.validate()?;
    let (nx, nv) = s_hat.shape();
    if x_hat.ncols() != nx || v_hat.ncols() != nv {
        return Err(Error::Internal("truncation: factor shapes do not conform".into()));
    }
    let c = policy.conserved.min(nx).min(nv);
    let norm = spectral_norm(s_hat);
    let theta = match policy.mode {
        TruncationMode::RelativeSpectral => policy.tol * norm,
        TruncationMode::Absolute => policy.tol,
    };
    let s_cc = s_hat.view((0, 0), (c, c)).into_owned();
    let s_cp = s_hat.view((0, c), (c, nv - c)).into_owned();
    let s_pc = s_hat.view((c, 0), (nx - c, c)).into_owned();
    let s_pp = s_hat.view((c, c), (nx - c, nv - c)).into_owned();
    let (u, sig, w) = if s_pp.nrows() > 0 && s_pp.ncols() > 0 {
        sorted_svd(&s_pp)
    } else {
        (DMatrix::zeros(nx - c, 0), Vec::new(), DMatrix::zeros(nv - c, 0))
    };
    // Tail rule: smallest r1 with (Σ_{j≥r1} σ_j²)^{1/2} ≤ ϑ.
    let mut tails = vec![0.0; sig.len() + 1];
    for j in (0..sig.len()).rev() {
        tails[j] = tails[j + 1] + sig[j] * sig[j];
    }
    let mut r1 = (0..=sig.len()).find(|&j| tails[j].sqrt() <= theta).unwrap_or(sig.len());
    let growth_cap = (2 * r_tilde).saturating_sub(1).min(policy.r_max).max(2 * c).max(1);
    let storage_cap = policy.r_max.max(2 * c).max(1);
    let abs_tol = 1e-13 * norm;
    let mut capped = false;
    loop {
        let us = DMatrix::from_fn(u.nrows(), r1, |i, j| u[(i, j)] * sig[j]);
        let ws = DMatrix::from_fn(w.nrows(), r1, |i, j| w[(i, j)] * sig[j]);
        let orth = Orth { base: None, constraint: None, abs_tol };
        let wx = orth.run(&hcat(&s_pc, &us), 0, rng);
        let wv = orth.run(&hcat(&s_cp.transpose(), &ws), 0, rng);
        // The smaller side is padded to a square core where its space allows.
        let target = wx.ncols().max(wv.ncols());
        let (kx, kv) = (target.min(nx - c), target.min(nv - c));
        let over = c + kx.min(kv) > growth_cap || c + kx.max(kv) > storage_cap;
        if over && r1 > 0 {
            r1 -= 1;
            capped = true;
            continue;
        }
        capped |= over;
        let wx = pad_columns(wx, kx, rng);
        let wv = pad_columns(wv, kv, rng);
        let trunc = &u.columns(0, r1) * DMatrix::from_diagonal(&DVector::from_column_slice(&sig[..r1]))
            * w.columns(0, r1).transpose();
        let (kx, kv) = (wx.ncols(), wv.ncols());
        let mut s_new = DMatrix::zeros(c + kx, c + kv);
        s_new.view_mut((0, 0), (c, c)).copy_from(&s_cc);
        s_new.view_mut((0, c), (c, kv)).copy_from(&(&s_cp * &wv));
        s_new.view_mut((c, 0), (kx, c)).copy_from(&(wx.transpose() * &s_pc));
        s_new.view_mut((c, c), (kx, kv)).copy_from(&(wx.transpose() * trunc * &wv));
        let x_new = hcat(&x_hat.columns(0, c).into_owned(), &(x_hat.columns(c, nx - c) * &wx));
        let v_new = hcat(&v_hat.columns(0, c).into_owned(), &(v_hat.columns(c, nv - c) * &wv));
        let info = TruncationInfo {
            theta,
            r1,
            tail: tails[r1].sqrt(),
            rank_x: x_new.ncols(),
            rank_v: v_new.ncols(),
            capped,
        };
        return Ok((x_new, s_new, v_new, info));
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepInfo {
    pub truncation: TruncationInfo,
    pub macro_stats: MacroStats,
    pub rank: usize,
}

/// One low-rank step: augment, K/L/S, truncate, walls, macro update.
pub fn dlra_step(
    p: &Problem,
    st: &LowRankState,
    dt: f64,
    policy: &TruncationPolicy,
    rng: &mut ChaCha8Rng,
) -> Result<(LowRankState, StepInfo)> {
    let mut policy = *policy;
    policy.r_max = rank_cap(p, policy.r_max);
    let aug = augmented_update(p, st, dt, rng)?;
    let r_tilde = st.rank() + 2;
    let (mut x, mut s, v, tinfo) = conservative_truncate(&aug.x_hat, &aug.s_hat, &aug.v_hat, &policy, r_tilde, rng)?;
    let mut eh_wall = st.eh_wall.clone();
    if !p.grid.boundary_rows.is_empty() {
        let (xb, sb) = boundary::impose_lowrank_bc(p, &x, &s, &v, &st.eh_wall, rng)?;
        x = xb;
        s = sb;
        let rows = boundary::restrict_rows(p, &x) * &s * v.transpose();
        eh_wall = boundary::wall_eh_from_rows(p, &rows)?;
    }
    let flux = flux_lowrank(p, &x, &s, &v);
    let (h, temp, macro_stats) = step_macro(p, &st.temp, &st.h, &eh_wall, &flux, dt)?;
    let next = LowRankState { x, s, v, h, temp, time: st.time + dt, eh_wall };
    let rank = next.rank();
    Ok((next, StepInfo { truncation: tinfo, macro_stats, rank }))
}

/// F_v = X·(S·(Vᵀ Q_v w)).
pub fn flux_lowrank(p: &Problem, x: &DMatrix<f64>, s: &DMatrix<f64>, v: &DMatrix<f64>) -> [Vec<f64>; 2] {
    let f = |d: usize| {
        let qw = DVector::from_vec(p.ang.flux_weights(d));
        (x * (s * (v.transpose() * qw))).as_slice().to_vec()
    };
    [f(0), f(1)]
}

/// Thin QR of K = X S used after external edits of X·S.
pub fn refactor(k: &DMatrix<f64>, rng: &mut ChaCha8Rng) -> (DMatrix<f64>, DMatrix<f64>) {
    qr_mgs(k, rng)
}
