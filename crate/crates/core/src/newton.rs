//! Per-cell nonlinear temperature solve.
//!
//! Every implicit temperature update in this crate reduces to
//! `β·T + k·T⁴ = d` with `β ≥ 0`, `k > 0`, whose left side is strictly
//! increasing on T ≥ 0.

pub const MAX_ITERS: usize = 50;
pub const REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellSolve {
    pub temp: f64,
    pub iters: usize,
    pub bisected: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolveFailure {
    /// `d < 0`: the root would be a negative temperature.
    NegativeRoot,
    NotConverged,
}

/// Safeguarded Newton for `β·T + k·T⁴ = d`, starting from `guess`.
pub fn solve_quartic(beta: f64, k: f64, d: f64, guess: f64) -> Result<CellSolve, SolveFailure> {
    if d < 0.0 {
        return Err(SolveFailure::NegativeRoot);
    }
    if d == 0.0 {
        return Ok(CellSolve { temp: 0.0, iters: 0, bisected: false });
    }
    let f = |t: f64| beta * t + k * t.powi(4) - d;
    let scale = d;
    // Both terms are non-negative, so the root is below each one-term root.
    let mut hi = (d / k).powf(0.25);
    if beta > 0.0 {
        hi = hi.min(d / beta);
    }
    let mut lo = 0.0;
    let mut hi_val = f(hi);
    while hi_val < 0.0 {
        // Guard against rounding in the bracket estimate.
        hi *= 1.0 + 1e-12;
        hi_val = f(hi);
    }
    let mut t = if guess > lo && guess < hi { guess } else { 0.5 * (lo + hi) };
    let mut bisected = false;
    for it in 1..=MAX_ITERS {
        let ft = f(t);
        if ft.abs() <= REL_TOL * scale {
            // One more Newton step takes the residual to round-off.
            let df = beta + 4.0 * k * t.powi(3);
            let polished = t - ft / df;
            let temp = if polished >= lo && polished <= hi { polished } else { t };
            return Ok(CellSolve { temp, iters: it, bisected });
        }
        if ft > 0.0 {
            hi = t;
        } else {
            lo = t;
        }
        let df = beta + 4.0 * k * t.powi(3);
        let mut next = t - ft / df;
        if !(next > lo && next < hi) || df <= 0.0 {
            next = 0.5 * (lo + hi);
            bisected = true;
        }
        if next == t || hi - lo <= 4.0 * f64::EPSILON * hi {
            return Ok(CellSolve { temp: next, iters: it, bisected });
        }
        t = next;
    }
    let ft = f(t);
    if ft.abs() <= 1e3 * REL_TOL * scale {
        return Ok(CellSolve { temp: t, iters: MAX_ITERS, bisected });
    }
    Err(SolveFailure::NotConverged)
}
