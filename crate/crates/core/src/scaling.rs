//! The concentration scale `δ_β` and the constants of the reduced energy.

use crate::error::{Error, Result};
use crate::math::{self, E, PI};

/// Root of `√δ |log δ| = -1/β` in `(0, e⁻²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaBetaSolve {
    pub beta: f64,
    pub delta: f64,
    /// `|√δ |log δ| + 1/β|`
    pub residual: f64,
}

/// Solves for `δ_β` by bisection in `s`, `δ = e^{-2s}`, on `(1, 500]`, where
/// `h(s) = 2s e^{-s}` is strictly decreasing.
pub fn solve_delta_beta(beta: f64) -> Result<DeltaBetaSolve> {
    if !beta.is_finite() || beta >= -E / 2.0 {
        return Err(Error::NoRoot { beta });
    }
    let target = -1.0 / beta;
    let h = |s: f64| 2.0 * s * math::exp(-s);
    let (mut lo, mut hi) = (1.0f64, 500.0f64);
    if h(hi) > target {
        return Err(Error::NoRoot { beta });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if h(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // keep whichever endpoint has the smaller residual
    let s = if math::abs(h(lo) - target) <= math::abs(h(hi) - target) {
        lo
    } else {
        hi
    };
    let delta = math::exp(-2.0 * s);
    Ok(DeltaBetaSolve {
        beta,
        delta,
        residual: math::abs(math::sqrt(delta) * math::abs(math::ln(delta)) + 1.0 / beta),
    })
}

/// The `β` whose concentration scale is `delta`, i.e. `-1/(√δ |log δ|)`.
pub fn beta_for_delta(delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < math::exp(-2.0)) {
        return Err(Error::InvalidParameter("delta must lie in (0, e^-2)"));
    }
    Ok(-1.0 / (math::sqrt(delta) * math::abs(math::ln(delta))))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedEnergyConstants {
    pub k: usize,
    pub c1: f64,
    pub c2: f64,
    pub c1_tilde: f64,
    pub c2_tilde: f64,
    pub t_star: f64,
    pub t_star_tilde: f64,
}

impl ReducedEnergyConstants {
    /// `g(t) = -c₁t + c₂t^{3/2}`.
    pub fn g(&self, t: f64) -> f64 {
        -self.c1 * t + self.c2 * t * math::sqrt(t)
    }

    /// `-c̃₁t + c̃₂t^{3/2}`.
    pub fn g_tilde(&self, t: f64) -> f64 {
        -self.c1_tilde * t + self.c2_tilde * t * math::sqrt(t)
    }
}

pub fn constants(k: usize) -> Result<ReducedEnergyConstants> {
    if k < 2 {
        return Err(Error::InvalidParameter("k must be at least 2"));
    }
    let c2 = math::sqrt(6.0) * PI * k as f64;
    let sum: f64 = (2..=k)
        .map(|j| {
            let a = 2.0 * PI * (j - 1) as f64 / k as f64;
            1.0 / math::sqrt(1.0 - math::cos(a))
        })
        .sum();
    let c1 = c2 * sum;
    let c1_tilde = c1;
    let c2_tilde = 1.5 * c2;
    let r = 2.0 * c1 / (3.0 * c2);
    let rt = c1_tilde / c2_tilde;
    Ok(ReducedEnergyConstants {
        k,
        c1,
        c2,
        c1_tilde,
        c2_tilde,
        t_star: r * r,
        t_star_tilde: rt * rt,
    })
}

pub fn g(k: usize, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter("t must be nonnegative"));
    }
    Ok(constants(k)?.g(t))
}

/// `-c̃₁tδ - c̃₂β(tδ)^{3/2}|log δ|` with `δ = δ_β`.
pub fn c_tilde_leading(k: usize, beta: f64, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter("t must be positive"));
    }
    let c = constants(k)?;
    let d = solve_delta_beta(beta)?.delta;
    let td = t * d;
    Ok(-c.c1_tilde * td - c.c2_tilde * beta * td * math::sqrt(td) * math::abs(math::ln(d)))
}
