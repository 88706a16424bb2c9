//! Points of ℝ³, the rotations and reflections generating the class `X_k`,
//! the Kelvin inversion, polygon geometry and the fundamental wedge `Ω₁`.

use alloc::vec::Vec;
use core::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::fields::{ScalarField, SymmetryTag};
use crate::math::{self, PI, TAU};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);

    pub const fn new(x1: f64, x2: f64, x3: f64) -> Self {
        Vec3 { x1, x2, x3 }
    }

    #[inline]
    pub fn dot(self, o: Vec3) -> f64 {
        self.x1 * o.x1 + self.x2 * o.x2 + self.x3 * o.x3
    }

    #[inline]
    pub fn norm2(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        math::sqrt(self.norm2())
    }

    pub fn is_finite(self) -> bool {
        self.x1.is_finite() && self.x2.is_finite() && self.x3.is_finite()
    }

    /// Component `l ∈ {1, 2, 3}`.
    pub fn component(self, l: usize) -> f64 {
        match l {
            1 => self.x1,
            2 => self.x2,
            _ => self.x3,
        }
    }

    pub fn from_spherical(r: f64, theta: f64, phi: f64) -> Vec3 {
        let st = math::sin(theta);
        Vec3::new(
            r * st * math::cos(phi),
            r * st * math::sin(phi),
            r * math::cos(theta),
        )
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x1 + o.x1, self.x2 + o.x2, self.x3 + o.x3)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x1 - o.x1, self.x2 - o.x2, self.x3 - o.x3)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x1 * s, self.x2 * s, self.x3 * s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x1, -self.x2, -self.x3)
    }
}

/// Polygon order `k` and number of rotated copies `q = m - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SymmetrySpec {
    pub k: usize,
    pub q: usize,
}

impl SymmetrySpec {
    pub fn new(k: usize, q: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidParameter("k must be at least 2"));
        }
        if q < 1 {
            return Err(Error::InvalidParameter("q must be at least 1"));
        }
        Ok(SymmetrySpec { k, q })
    }
}

/// Geometry of one ring of `k` bubbles of width `t·δ`.
///
/// `r` selects the phase `(r-1)·2π/(qk)` of the ring. `k = 1` and `t·δ = 1`
/// are accepted so that the single bubble at the origin is a special case.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolygonConfig {
    pub k: usize,
    pub t: f64,
    pub delta: f64,
    pub q: usize,
    pub r: usize,
}

impl PolygonConfig {
    pub fn new(k: usize, t: f64, delta: f64, q: usize, r: usize) -> Result<Self> {
        if k < 1 {
            return Err(Error::InvalidParameter("k must be at least 1"));
        }
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidParameter("t must be positive"));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidParameter("delta must be positive"));
        }
        if t * delta > 1.0 {
            return Err(Error::InvalidParameter("t*delta must not exceed 1"));
        }
        if q < 1 || r < 1 || r > q {
            return Err(Error::InvalidParameter("phase index r must lie in 1..=q"));
        }
        Ok(PolygonConfig { k, t, delta, q, r })
    }

    /// Single ring, `q = r = 1`.
    pub fn ring(k: usize, t: f64, delta: f64) -> Result<Self> {
        Self::new(k, t, delta, 1, 1)
    }

    pub fn with_phase(self, q: usize, r: usize) -> Result<Self> {
        Self::new(self.k, self.t, self.delta, q, r)
    }

    /// Bubble width `t·δ`.
    #[inline]
    pub fn scale(&self) -> f64 {
        self.t * self.delta
    }

    /// Ring radius `√(1 - t²δ²)`.
    pub fn radius(&self) -> f64 {
        let s = self.scale();
        math::sqrt((1.0 - s) * (1.0 + s))
    }

    /// Angle of the first center.
    pub fn phase(&self) -> f64 {
        (self.r - 1) as f64 * TAU / (self.q * self.k) as f64
    }

    pub fn spec(&self) -> SymmetrySpec {
        SymmetrySpec {
            k: self.k,
            q: self.q,
        }
    }
}

/// Rotation by `theta` in the `(x₁, x₂)`-plane.
pub fn rotate(theta: f64, x: Vec3) -> Vec3 {
    let th = math::reduce_angle(theta);
    let (s, c) = (math::sin(th), math::cos(th));
    Vec3::new(c * x.x1 - s * x.x2, s * x.x1 + c * x.x2, x.x3)
}

/// Angle of `ℛ_{r,k}`, i.e. `((r-1)/q)(2π/k)`.
pub fn reduction_rotation(r: usize, spec: SymmetrySpec) -> Result<f64> {
    if r < 1 || r > spec.q {
        return Err(Error::InvalidParameter("r must lie in 1..=q"));
    }
    Ok((r - 1) as f64 / spec.q as f64 * TAU / spec.k as f64)
}

pub fn kelvin_point(x: Vec3) -> Result<Vec3> {
    let n2 = x.norm2();
    if n2 == 0.0 {
        return Err(Error::Domain("Kelvin inversion at the origin"));
    }
    Ok(x * (1.0 / n2))
}

/// `x ↦ |x|⁻¹ f(x/|x|²)`. Evaluating at the origin gives NaN, which
/// [`ScalarField::checked_eval`] reports as a domain error.
pub fn kelvin_pullback(f: &ScalarField) -> ScalarField {
    let g = f.clone();
    ScalarField::new(move |x: Vec3| {
        let n2 = x.norm2();
        if n2 == 0.0 {
            return f64::NAN;
        }
        g.eval(x * (1.0 / n2)) / math::sqrt(n2)
    })
    .with_tag(f.tag())
}

/// The `k` centers `√(1-t²δ²)(cos a_j, sin a_j, 0)`, `a_j = 2π(j-1)/k + phase`.
pub fn polygon_centers(cfg: &PolygonConfig) -> Vec<Vec3> {
    let rho = cfg.radius();
    (0..cfg.k)
        .map(|j| {
            let a = math::reduce_angle(TAU * j as f64 / cfg.k as f64 + cfg.phase());
            Vec3::new(rho * math::cos(a), rho * math::sin(a), 0.0)
        })
        .collect()
}

/// Reduce an angle to `(-π, π]`.
pub(crate) fn centered_angle(a: f64) -> f64 {
    let r = math::reduce_angle(a);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Wedge test for `Ω₁`: the azimuth of `x`, measured from the first center,
/// lies in `(-π/k, π/k]`. Points on the `x₃`-axis count as inside.
pub fn in_fundamental_domain(x: Vec3, cfg: &PolygonConfig) -> bool {
    if cfg.k == 1 {
        return true;
    }
    let a = centered_angle(math::atan2(x.x2, x.x1) - cfg.phase());
    let half = PI / cfg.k as f64;
    a > -half && a <= half
}

/// Largest `|f(gx) - f(x)|` over the samples and the generators in `gens`.
///
/// The Kelvin generator compares `f` with its pullback; `REDUCTION` uses the
/// rotations `ℛ_{r,k}`, `r = 2..=q`.
pub fn symmetry_violation(
    f: &ScalarField,
    spec: SymmetrySpec,
    samples: &[Vec3],
    gens: SymmetryTag,
) -> f64 {
    let rot = TAU / spec.k as f64;
    let mut worst: f64 = 0.0;
    let mut note = |a: f64, b: f64| {
        let d = math::abs(a - b);
        if d > worst || d.is_nan() {
            worst = if d.is_nan() { f64::INFINITY } else { d };
        }
    };
    for &x in samples {
        let fx = f.eval(x);
        if gens.contains(SymmetryTag::EVEN_X2) {
            note(f.eval(Vec3::new(x.x1, -x.x2, x.x3)), fx);
        }
        if gens.contains(SymmetryTag::EVEN_X3) {
            note(f.eval(Vec3::new(x.x1, x.x2, -x.x3)), fx);
        }
        if gens.contains(SymmetryTag::ROTATION) {
            note(f.eval(rotate(rot, x)), fx);
        }
        if gens.contains(SymmetryTag::KELVIN) {
            let n2 = x.norm2();
            note(f.eval(x * (1.0 / n2)) / math::sqrt(n2), fx);
        }
        if gens.contains(SymmetryTag::REDUCTION) {
            for r in 2..=spec.q {
                let th = (r - 1) as f64 / spec.q as f64 * rot;
                note(f.eval(rotate(th, x)), fx);
            }
        }
    }
    worst
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut acc = 0.0;
    while i > 0 {
        acc += (i % base) as f64 * f;
        i /= base;
        f *= inv;
    }
    acc
}

/// Quasi-random points (Halton, bases 2/3/5) with `|x|` log-uniform in
/// `[r_min, r_max]` and uniform directions. The seed offsets the sequence.
/// Points closer than `1e-8` to the origin are skipped.
pub fn sample_points(n: usize, seed: u64, r_min: f64, r_max: f64) -> Vec<Vec3> {
    let (lo, hi) = (math::ln(r_min), math::ln(r_max));
    let mut out = Vec::with_capacity(n);
    let mut i = seed.wrapping_mul(7919).wrapping_add(1);
    while out.len() < n {
        let u = radical_inverse(i, 2);
        let v = radical_inverse(i, 3);
        let w = radical_inverse(i, 5);
        i += 1;
        let r = math::exp(lo + (hi - lo) * u);
        let cos_t = 2.0 * v - 1.0;
        let sin_t = math::sqrt((1.0 - cos_t * cos_t).max(0.0));
        let phi = TAU * w;
        let x = Vec3::new(
            r * sin_t * math::cos(phi),
            r * sin_t * math::sin(phi),
            r * cos_t,
        );
        if x.norm() >= 1e-8 {
            out.push(x);
        }
    }
    out
}
