//! Scalar fields on ℝ³: the standard bubble and its rescalings, the polygonal
//! ansatz, the kernel functions of the linearized equation, and the error and
//! coupling densities built from them.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use bitflags::bitflags;

use crate::error::{Error, Result};
use crate::math::{self, CUBE_ROOT_FOURTH as C3, PI};
use crate::symmetry::{polygon_centers, rotate, PolygonConfig, Vec3};

pub type EvalFn = Arc<dyn Fn(Vec3) -> f64 + Send + Sync>;
pub type GradFn = Arc<dyn Fn(Vec3) -> Vec3 + Send + Sync>;

bitflags! {
    /// Invariances that hold by construction.
    #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
    pub struct SymmetryTag: u8 {
        /// `f(x₁,-x₂,x₃) = f(x)`
        const EVEN_X2 = 1;
        /// `f(x₁,x₂,-x₃) = f(x)`
        const EVEN_X3 = 1 << 1;
        /// invariance under rotation by `2π/k`
        const ROTATION = 1 << 2;
        /// `f(x) = |x|⁻¹ f(x/|x|²)`
        const KELVIN = 1 << 3;
        /// invariance under `ℛ_{r,k}`, `r = 2..=q`
        const REDUCTION = 1 << 4;
    }
}

impl SymmetryTag {
    /// The generators of the class `X_k`.
    pub const XK: SymmetryTag = SymmetryTag::EVEN_X2
        .union(SymmetryTag::EVEN_X3)
        .union(SymmetryTag::ROTATION)
        .union(SymmetryTag::KELVIN);
}

/// A point where a field concentrates at length `scale`. The integrator
/// refines around these in rescaled coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HotSpot {
    pub center: Vec3,
    pub scale: f64,
}

#[derive(Clone)]
pub struct ScalarField {
    eval: EvalFn,
    grad: Option<GradFn>,
    lap: Option<EvalFn>,
    tag: SymmetryTag,
    hot_spots: Vec<HotSpot>,
}

impl core::fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("ScalarField")
            .field("gradient", &self.grad.is_some())
            .field("laplacian", &self.lap.is_some())
            .field("tag", &self.tag)
            .field("hot_spots", &self.hot_spots)
            .finish()
    }
}

impl ScalarField {
    pub fn new(f: impl Fn(Vec3) -> f64 + Send + Sync + 'static) -> Self {
        ScalarField {
            eval: Arc::new(f),
            grad: None,
            lap: None,
            tag: SymmetryTag::empty(),
            hot_spots: Vec::new(),
        }
    }

    pub fn with_gradient(mut self, g: impl Fn(Vec3) -> Vec3 + Send + Sync + 'static) -> Self {
        self.grad = Some(Arc::new(g));
        self
    }

    pub fn with_laplacian(mut self, l: impl Fn(Vec3) -> f64 + Send + Sync + 'static) -> Self {
        self.lap = Some(Arc::new(l));
        self
    }

    pub fn with_tag(mut self, tag: SymmetryTag) -> Self {
        self.tag = tag;
        self
    }

    pub fn with_hot_spots(mut self, spots: Vec<HotSpot>) -> Self {
        self.hot_spots = merge_hot_spots(spots);
        self
    }

    #[inline]
    pub fn eval(&self, x: Vec3) -> f64 {
        (self.eval)(x)
    }

    /// Like [`eval`](Self::eval) but non-finite values become a domain error.
    pub fn checked_eval(&self, x: Vec3) -> Result<f64> {
        let v = self.eval(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Domain("field is not finite at this point"))
        }
    }

    pub fn gradient(&self, x: Vec3) -> Option<Vec3> {
        self.grad.as_ref().map(|g| g(x))
    }

    pub fn laplacian(&self, x: Vec3) -> Option<f64> {
        self.lap.as_ref().map(|l| l(x))
    }

    pub fn has_gradient(&self) -> bool {
        self.grad.is_some()
    }

    pub fn has_laplacian(&self) -> bool {
        self.lap.is_some()
    }

    pub fn tag(&self) -> SymmetryTag {
        self.tag
    }

    pub fn hot_spots(&self) -> &[HotSpot] {
        &self.hot_spots
    }

    pub(crate) fn eval_fn(&self) -> EvalFn {
        self.eval.clone()
    }
}

fn merge_hot_spots(spots: Vec<HotSpot>) -> Vec<HotSpot> {
    let mut out: Vec<HotSpot> = Vec::with_capacity(spots.len());
    for s in spots {
        match out
            .iter_mut()
            .find(|o| (o.center - s.center).norm() <= 1e-12 * (1.0 + s.center.norm()))
        {
            Some(o) => o.scale = o.scale.min(s.scale),
            None => out.push(s),
        }
    }
    out
}

fn joined_spots(a: &ScalarField, b: &ScalarField) -> Vec<HotSpot> {
    let mut v = a.hot_spots.clone();
    v.extend_from_slice(&b.hot_spots);
    v
}

/// Tags kept by products and powers: everything except Kelvin invariance,
/// which is a weighted invariance and does not survive nonlinear operations.
fn nonlinear_tag(t: SymmetryTag) -> SymmetryTag {
    t - SymmetryTag::KELVIN
}

pub fn zero() -> ScalarField {
    ScalarField::new(|_| 0.0)
        .with_gradient(|_| Vec3::ZERO)
        .with_laplacian(|_| 0.0)
        .with_tag(SymmetryTag::all())
}

pub fn constant(c: f64) -> ScalarField {
    if c == 0.0 {
        return zero();
    }
    ScalarField::new(move |_| c)
        .with_gradient(|_| Vec3::ZERO)
        .with_laplacian(|_| 0.0)
        .with_tag(SymmetryTag::all() - SymmetryTag::KELVIN)
}

pub fn scale(a: &ScalarField, c: f64) -> ScalarField {
    let f = a.eval.clone();
    let mut out = ScalarField::new(move |x| c * f(x))
        .with_tag(a.tag)
        .with_hot_spots(a.hot_spots.clone());
    if let Some(g) = a.grad.clone() {
        out = out.with_gradient(move |x| g(x) * c);
    }
    if let Some(l) = a.lap.clone() {
        out = out.with_laplacian(move |x| c * l(x));
    }
    out
}

pub fn add(a: &ScalarField, b: &ScalarField) -> ScalarField {
    let (fa, fb) = (a.eval.clone(), b.eval.clone());
    let mut out = ScalarField::new(move |x| fa(x) + fb(x))
        .with_tag(a.tag & b.tag)
        .with_hot_spots(joined_spots(a, b));
    if let (Some(ga), Some(gb)) = (a.grad.clone(), b.grad.clone()) {
        out = out.with_gradient(move |x| ga(x) + gb(x));
    }
    if let (Some(la), Some(lb)) = (a.lap.clone(), b.lap.clone()) {
        out = out.with_laplacian(move |x| la(x) + lb(x));
    }
    out
}

pub fn product(a: &ScalarField, b: &ScalarField) -> ScalarField {
    let (fa, fb) = (a.eval.clone(), b.eval.clone());
    let mut out = ScalarField::new(move |x| fa(x) * fb(x))
        .with_tag(nonlinear_tag(a.tag & b.tag))
        .with_hot_spots(joined_spots(a, b));
    if let (Some(ga), Some(gb)) = (a.grad.clone(), b.grad.clone()) {
        let (fa, fb) = (a.eval.clone(), b.eval.clone());
        out = out.with_gradient(move |x| ga(x) * fb(x) + gb(x) * fa(x));
    }
    out
}

/// `f^p`; negative values give NaN for non-integer `p`.
pub fn powf(a: &ScalarField, p: f64) -> ScalarField {
    let f = a.eval.clone();
    let int = p == (p as i32) as f64 && math::abs(p) < 64.0;
    let pi = p as i32;
    let mut out = ScalarField::new(move |x| {
        if int {
            math::powi(f(x), pi)
        } else {
            math::powf(f(x), p)
        }
    })
    .with_tag(nonlinear_tag(a.tag))
    .with_hot_spots(a.hot_spots.clone());
    if let Some(g) = a.grad.clone() {
        let f = a.eval.clone();
        out = out.with_gradient(move |x| g(x) * (p * math::powf(f(x), p - 1.0)));
    }
    out
}

/// `|f|^p`.
pub fn abs_pow(a: &ScalarField, p: f64) -> ScalarField {
    let f = a.eval.clone();
    ScalarField::new(move |x| math::powf(math::abs(f(x)), p))
        .with_tag(nonlinear_tag(a.tag))
        .with_hot_spots(a.hot_spots.clone())
}

/// Concentration scale `δ` and center `ξ` of a rescaled bubble.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BubbleParams {
    pub delta: f64,
    pub xi: Vec3,
}

impl BubbleParams {
    pub fn new(delta: f64, xi: Vec3) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) || !xi.is_finite() {
            return Err(Error::InvalidParameter(
                "bubble needs delta > 0 and a finite center",
            ));
        }
        Ok(BubbleParams { delta, xi })
    }

    pub const UNIT: BubbleParams = BubbleParams {
        delta: 1.0,
        xi: Vec3::ZERO,
    };
}

/// Coupling constants: `β` between `u` and every ring, `α` between distinct
/// rings, and `q` rings (so `m = q + 1` components).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingRegime {
    pub beta: f64,
    pub alpha: f64,
    pub q: usize,
}

impl CouplingRegime {
    pub fn new(beta: f64, alpha: f64, q: usize) -> Result<Self> {
        if !beta.is_finite() || !alpha.is_finite() {
            return Err(Error::InvalidParameter("couplings must be finite"));
        }
        if q < 1 {
            return Err(Error::InvalidParameter("q must be at least 1"));
        }
        Ok(CouplingRegime { beta, alpha, q })
    }

    pub fn m(&self) -> usize {
        self.q + 1
    }
}

// Radial profiles. For h(x) = φ(s), s = |x-ξ|²: ∇h = 2φ'(s)(x-ξ) and
// Δh = 6φ'(s) + 4sφ''(s). For h = z_l g(s): Δh = z_l (10g' + 4sg'').

#[inline]
fn bubble_profile(amp: f64, a: f64, s: f64) -> f64 {
    amp / math::sqrt(a + s)
}

/// Bubble value, gradient factor `2φ'` and Laplacian for `amp (a+s)^{-1/2}`.
#[inline]
fn bubble_derivs(amp: f64, a: f64, s: f64) -> (f64, f64, f64) {
    let w = a + s;
    let r = 1.0 / math::sqrt(w);
    let r3 = r / w;
    let r5 = r3 / w;
    let d1 = -0.5 * amp * r3;
    let d2 = 0.75 * amp * r5;
    (amp * r, 2.0 * d1, 6.0 * d1 + 4.0 * s * d2)
}

/// Same for `K (s-a)(a+s)^{-3/2}`.
#[inline]
fn z0_derivs(kk: f64, a: f64, s: f64) -> (f64, f64, f64) {
    let w = a + s;
    let r = 1.0 / math::sqrt(w);
    let r3 = r / w;
    let r5 = r3 / w;
    let r7 = r5 / w;
    let v = kk * (s - a) * r3;
    let d1 = kk * (r3 - 1.5 * (s - a) * r5);
    let d2 = kk * (-3.0 * r5 + 3.75 * (s - a) * r7);
    (v, 2.0 * d1, 6.0 * d1 + 4.0 * s * d2)
}

/// `g = m (a+s)^{-3/2}` with its first two derivatives.
#[inline]
fn zl_profile(m: f64, a: f64, s: f64) -> (f64, f64, f64) {
    let w = a + s;
    let r3 = 1.0 / (w * math::sqrt(w));
    let r5 = r3 / w;
    let r7 = r5 / w;
    (m * r3, -1.5 * m * r5, 3.75 * m * r7)
}

/// `U(x) = 3^{1/4}(1+|x|²)^{-1/2}`.
pub fn eval_u(x: Vec3) -> f64 {
    bubble_profile(C3, 1.0, x.norm2())
}

/// `U_{δ,ξ}(x) = 3^{1/4}√δ (δ²+|x-ξ|²)^{-1/2}`.
pub fn eval_bubble(p: &BubbleParams, x: Vec3) -> f64 {
    bubble_profile(
        C3 * math::sqrt(p.delta),
        p.delta * p.delta,
        (x - p.xi).norm2(),
    )
}

pub fn eval_v(cfg: &PolygonConfig, x: Vec3) -> f64 {
    Ring::new(cfg).sum(x)
}

/// `Z⁽⁰⁾_{δ,ξ}(x) = 3^{1/4}√δ (|x-ξ|²-δ²) / (2(δ²+|x-ξ|²)^{3/2})`.
pub fn eval_z0_scaled(p: &BubbleParams, x: Vec3) -> f64 {
    let a = p.delta * p.delta;
    z0_derivs(0.5 * C3 * math::sqrt(p.delta), a, (x - p.xi).norm2()).0
}

/// Kernel function `Z⁽ˡ⁾`, `l ∈ {0,1,2,3}`, rescaled to `(δ, ξ)`.
pub fn eval_kernel(l: usize, p: &BubbleParams, x: Vec3) -> Result<f64> {
    Ok(kernel_derivs(l, p, x)?.0)
}

pub fn eval_z(l: usize, x: Vec3) -> Result<f64> {
    eval_kernel(l, &BubbleParams::UNIT, x)
}

pub fn eval_zkt(cfg: &PolygonConfig, x: Vec3) -> f64 {
    Ring::new(cfg).z_sum(x)
}

/// Value, gradient and Laplacian of a rescaled kernel function.
fn kernel_derivs(l: usize, p: &BubbleParams, x: Vec3) -> Result<(f64, Vec3, f64)> {
    let z = x - p.xi;
    let s = z.norm2();
    let a = p.delta * p.delta;
    match l {
        0 => {
            let (v, g, lap) = z0_derivs(0.5 * C3 * math::sqrt(p.delta), a, s);
            Ok((v, z * g, lap))
        }
        1..=3 => {
            let m = C3 * p.delta * math::sqrt(p.delta);
            let (g, g1, g2) = zl_profile(m, a, s);
            let zl = z.component(l);
            let mut grad = z * (2.0 * g1 * zl);
            match l {
                1 => grad.x1 += g,
                2 => grad.x2 += g,
                _ => grad.x3 += g,
            }
            Ok((zl * g, grad, zl * (10.0 * g1 + 4.0 * s * g2)))
        }
        _ => Err(Error::InvalidParameter("kernel index must be 0, 1, 2 or 3")),
    }
}

/// `-ΔU - U⁵` from the analytic Laplacian.
pub fn yamabe_residual(x: Vec3) -> f64 {
    yamabe_residual_scaled(&BubbleParams::UNIT, x)
}

pub fn yamabe_residual_scaled(p: &BubbleParams, x: Vec3) -> f64 {
    let (v, _, lap) = bubble_derivs(
        C3 * math::sqrt(p.delta),
        p.delta * p.delta,
        (x - p.xi).norm2(),
    );
    -lap - math::powi(v, 5)
}

/// `-ΔZ⁽ˡ⁾ - 5U⁴Z⁽ˡ⁾` from analytic second derivatives.
pub fn kernel_residual(l: usize, x: Vec3) -> Result<f64> {
    kernel_residual_scaled(l, &BubbleParams::UNIT, x)
}

pub fn kernel_residual_scaled(l: usize, p: &BubbleParams, x: Vec3) -> Result<f64> {
    let (z, _, lap) = kernel_derivs(l, p, x)?;
    let u = eval_bubble(p, x);
    Ok(-lap - 5.0 * math::powi(u, 4) * z)
}

fn bubble_tag(p: &BubbleParams) -> SymmetryTag {
    let mut t = SymmetryTag::empty();
    if p.xi.x2 == 0.0 {
        t |= SymmetryTag::EVEN_X2;
    }
    if p.xi.x3 == 0.0 {
        t |= SymmetryTag::EVEN_X3;
    }
    if p.xi.x1 == 0.0 && p.xi.x2 == 0.0 {
        t |= SymmetryTag::ROTATION | SymmetryTag::REDUCTION;
    }
    if math::abs(p.xi.norm2() + p.delta * p.delta - 1.0) <= 1e-14 {
        t |= SymmetryTag::KELVIN;
    }
    t
}

/// The standard bubble `U`.
pub fn u() -> ScalarField {
    bubble(BubbleParams::UNIT)
}

pub fn bubble(p: BubbleParams) -> ScalarField {
    let amp = C3 * math::sqrt(p.delta);
    let a = p.delta * p.delta;
    let xi = p.xi;
    let mut f = ScalarField::new(move |x| bubble_profile(amp, a, (x - xi).norm2()))
        .with_gradient(move |x| {
            let z = x - xi;
            z * bubble_derivs(amp, a, z.norm2()).1
        })
        .with_laplacian(move |x| bubble_derivs(amp, a, (x - xi).norm2()).2)
        .with_tag(bubble_tag(&p));
    if p.delta < 0.5 {
        f = f.with_hot_spots(vec![HotSpot {
            center: xi,
            scale: p.delta,
        }]);
    }
    f
}

/// `U_{t,j}`, the `j`-th bubble of the ring (`j` is 1-based).
pub fn ring_bubble(cfg: &PolygonConfig, j: usize) -> Result<ScalarField> {
    if j < 1 || j > cfg.k {
        return Err(Error::InvalidParameter("bubble index must lie in 1..=k"));
    }
    let xi = polygon_centers(cfg)[j - 1];
    Ok(bubble(BubbleParams::new(cfg.scale(), xi)?))
}

/// `Z⁽ˡ⁾` rescaled to `(δ, ξ)`.
pub fn kernel(l: usize, p: BubbleParams) -> Result<ScalarField> {
    kernel_derivs(l, &p, Vec3::ZERO)?;
    let mut tag = bubble_tag(&p) - SymmetryTag::KELVIN;
    if l != 0 {
        // odd in x_l, so rotation and the reflection in x_l are lost
        tag -= SymmetryTag::ROTATION | SymmetryTag::REDUCTION;
        match l {
            2 => tag -= SymmetryTag::EVEN_X2,
            3 => tag -= SymmetryTag::EVEN_X3,
            _ => {}
        }
    }
    let f = ScalarField::new(move |x| kernel_derivs(l, &p, x).map_or(f64::NAN, |d| d.0))
        .with_gradient(move |x| kernel_derivs(l, &p, x).map_or(Vec3::ZERO, |d| d.1))
        .with_laplacian(move |x| kernel_derivs(l, &p, x).map_or(f64::NAN, |d| d.2))
        .with_tag(tag);
    Ok(if p.delta < 0.5 {
        f.with_hot_spots(vec![HotSpot {
            center: p.xi,
            scale: p.delta,
        }])
    } else {
        f
    })
}

pub fn z(l: usize) -> Result<ScalarField> {
    kernel(l, BubbleParams::UNIT)
}

/// The `k` bubbles of one ring, evaluated together.
#[derive(Debug, Clone)]
pub struct Ring {
    centers: Vec<Vec3>,
    tau: f64,
    amp: f64,
    a: f64,
}

impl Ring {
    pub fn new(cfg: &PolygonConfig) -> Ring {
        Ring::from_centers(polygon_centers(cfg), cfg.scale())
    }

    pub fn from_centers(centers: Vec<Vec3>, tau: f64) -> Ring {
        Ring {
            centers,
            tau,
            amp: C3 * math::sqrt(tau),
            a: tau * tau,
        }
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn centers(&self) -> &[Vec3] {
        &self.centers
    }

    pub fn scale(&self) -> f64 {
        self.tau
    }

    pub fn hot_spots(&self) -> Vec<HotSpot> {
        self.centers
            .iter()
            .map(|&c| HotSpot {
                center: c,
                scale: self.tau,
            })
            .collect()
    }

    #[inline]
    pub fn value(&self, j: usize, x: Vec3) -> f64 {
        bubble_profile(self.amp, self.a, (x - self.centers[j]).norm2())
    }

    pub fn sum(&self, x: Vec3) -> f64 {
        (0..self.len()).map(|j| self.value(j, x)).sum()
    }

    /// Writes the bubble values into `out` (length `k`).
    pub fn values_into(&self, x: Vec3, out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate() {
            *o = self.value(j, x);
        }
    }

    pub fn gradient(&self, x: Vec3) -> Vec3 {
        self.centers.iter().fold(Vec3::ZERO, |acc, &c| {
            let z = x - c;
            acc + z * bubble_derivs(self.amp, self.a, z.norm2()).1
        })
    }

    pub fn laplacian(&self, x: Vec3) -> f64 {
        self.centers
            .iter()
            .map(|&c| bubble_derivs(self.amp, self.a, (x - c).norm2()).2)
            .sum()
    }

    #[inline]
    pub fn z_value(&self, j: usize, x: Vec3) -> f64 {
        z0_derivs(0.5 * self.amp, self.a, (x - self.centers[j]).norm2()).0
    }

    pub fn z_sum(&self, x: Vec3) -> f64 {
        (0..self.len()).map(|j| self.z_value(j, x)).sum()
    }

    fn z_gradient(&self, x: Vec3) -> Vec3 {
        self.centers.iter().fold(Vec3::ZERO, |acc, &c| {
            let z = x - c;
            acc + z * z0_derivs(0.5 * self.amp, self.a, z.norm2()).1
        })
    }

    fn z_laplacian(&self, x: Vec3) -> f64 {
        self.centers
            .iter()
            .map(|&c| z0_derivs(0.5 * self.amp, self.a, (x - c).norm2()).2)
            .sum()
    }
}

/// Runs `f` on a scratch buffer of length `n` without allocating for small `n`.
#[inline]
pub(crate) fn with_scratch<R>(n: usize, f: impl FnOnce(&mut [f64]) -> R) -> R {
    if n <= 32 {
        let mut buf = [0.0f64; 32];
        f(&mut buf[..n])
    } else {
        let mut buf = vec![0.0f64; n];
        f(&mut buf)
    }
}

fn binomial(p: u32, m: u32) -> f64 {
    let mut c = 1.0;
    for i in 0..m {
        c = c * (p - i) as f64 / (i + 1) as f64;
    }
    c
}

/// `(Σ aᵢ)^p - Σ aᵢ^p` for nonnegative `aᵢ` without cancellation.
///
/// With the values sorted in decreasing order the excess splits as
/// `Σ_{m=1}^{p-1} C(p,m) a₁^{p-m} S^m + excess(rest)`, `S = Σ rest`, a sum of
/// nonnegative terms. `vals` is reordered.
pub fn power_sum_excess(vals: &mut [f64], p: u32) -> f64 {
    vals.sort_unstable_by(|a, b| b.partial_cmp(a).unwrap_or(core::cmp::Ordering::Equal));
    let n = vals.len();
    let mut total = 0.0;
    // suffix sums accumulated from the small end, so no subtraction
    let mut rest = 0.0;
    for i in (1..n).rev() {
        rest += vals[i];
        let a = vals[i - 1];
        if rest <= 0.0 {
            continue;
        }
        let mut term = 0.0;
        for m in 1..p {
            term += binomial(p, m) * math::powi(a, (p - m) as i32) * math::powi(rest, m as i32);
        }
        total += term;
    }
    total
}

fn ring_tag(cfg: &PolygonConfig) -> SymmetryTag {
    let mut t = SymmetryTag::EVEN_X3 | SymmetryTag::ROTATION;
    // the center set is symmetric under x₂ ↦ -x₂ iff the phase is a multiple of π/k
    let m = cfg.phase() * cfg.k as f64 / PI;
    if math::abs(m - libm::round(m)) < 1e-12 {
        t |= SymmetryTag::EVEN_X2;
    }
    let s = cfg.scale();
    let rho = cfg.radius();
    if math::abs(rho * rho + s * s - 1.0) <= 1e-14 {
        t |= SymmetryTag::KELVIN;
    }
    t
}

/// The ansatz `V = Σ_j U_{t,j}`.
pub fn v(cfg: &PolygonConfig) -> ScalarField {
    let ring = Arc::new(Ring::new(cfg));
    let (r1, r2, r3) = (ring.clone(), ring.clone(), ring.clone());
    ScalarField::new(move |x| r1.sum(x))
        .with_gradient(move |x| r2.gradient(x))
        .with_laplacian(move |x| r3.laplacian(x))
        .with_tag(ring_tag(cfg))
        .with_hot_spots(ring.hot_spots())
}

/// `V_r(x) = V(ℛ_{r,k} x)` for the ring `cfg` (taken with phase 1) and `q` copies.
pub fn rotated_v(cfg: &PolygonConfig, q: usize, r: usize) -> Result<ScalarField> {
    let spec = crate::symmetry::SymmetrySpec { k: cfg.k.max(2), q };
    let th = crate::symmetry::reduction_rotation(r, spec)?;
    let base = PolygonConfig::ring(cfg.k, cfg.t, cfg.delta)?;
    let ring = Arc::new(Ring::new(&base));
    let spots: Vec<HotSpot> = ring
        .hot_spots()
        .into_iter()
        .map(|h| HotSpot {
            center: rotate(-th, h.center),
            scale: h.scale,
        })
        .collect();
    let (r1, r2, r3) = (ring.clone(), ring.clone(), ring);
    let mut tag = ring_tag(&base);
    if r != 1 && !(2 * (r - 1)).is_multiple_of(q) {
        tag -= SymmetryTag::EVEN_X2;
    }
    Ok(ScalarField::new(move |x| r1.sum(rotate(th, x)))
        .with_gradient(move |x| rotate(-th, r2.gradient(rotate(th, x))))
        .with_laplacian(move |x| r3.laplacian(rotate(th, x)))
        .with_tag(tag)
        .with_hot_spots(spots))
}

/// `Z_{k,t} = Σ_j Z⁽⁰⁾_{tδ, ξ_{t,j}}`.
///
/// `Z⁽⁰⁾` is odd under the Kelvin inversion, so no Kelvin tag.
pub fn zkt(cfg: &PolygonConfig) -> ScalarField {
    let ring = Arc::new(Ring::new(cfg));
    let (r1, r2, r3) = (ring.clone(), ring.clone(), ring.clone());
    ScalarField::new(move |x| r1.z_sum(x))
        .with_gradient(move |x| r2.z_gradient(x))
        .with_laplacian(move |x| r3.z_laplacian(x))
        .with_tag(ring_tag(cfg) - SymmetryTag::KELVIN)
        .with_hot_spots(ring.hot_spots())
}

/// `dV/dt` in closed form.
pub fn dv_dt(cfg: &PolygonConfig) -> ScalarField {
    let ring = Ring::new(cfg);
    let (t, d) = (cfg.t, cfg.delta);
    let tau = cfg.scale();
    let coef = C3 * math::powf(t, 1.5) * math::powf(d, 2.5) / ((1.0 - tau) * (1.0 + tau));
    let spots = ring.hot_spots();
    ScalarField::new(move |x| {
        let mut drift = 0.0;
        for &c in ring.centers() {
            let z = x - c;
            let w = tau * tau + z.norm2();
            drift += z.dot(c) / (w * math::sqrt(w));
        }
        ring.z_sum(x) / t - coef * drift
    })
    .with_tag(ring_tag(cfg) - SymmetryTag::KELVIN)
    .with_hot_spots(spots)
}

/// Which error density.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    E1,
    E2,
    E1Tilde,
    E2Tilde,
}

/// Which coupling density.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingKind {
    N1,
    N2,
    N1Tilde,
    N2Tilde,
}

/// The rings `V_r`, `r = 2..=q`, as plain rings with rotated centers.
fn extra_rings(cfg: &PolygonConfig, q: usize) -> Vec<(f64, Ring)> {
    let base = Ring::new(&PolygonConfig { q: 1, r: 1, ..*cfg });
    (2..=q)
        .map(|r| {
            let th = (r - 1) as f64 / q as f64 * core::f64::consts::TAU / cfg.k as f64;
            (th, base.clone())
        })
        .collect()
}

fn rings_cubed(extra: &[(f64, Ring)], x: Vec3) -> f64 {
    extra
        .iter()
        .map(|(th, ring)| math::powi(ring.sum(rotate(*th, x)), 3))
        .sum()
}

fn extra_spots(extra: &[(f64, Ring)]) -> Vec<HotSpot> {
    extra
        .iter()
        .flat_map(|(th, ring)| {
            ring.hot_spots().into_iter().map(move |h| HotSpot {
                center: rotate(-*th, h.center),
                scale: h.scale,
            })
        })
        .collect()
}

/// Right-hand-side densities of the error terms. The tilde variants add the
/// nonlocal sums over the `q - 1` rotated rings (empty for `q = 1`).
pub fn error_field(which: ErrorKind, cfg: &PolygonConfig, regime: &CouplingRegime) -> ScalarField {
    let ring = Ring::new(cfg);
    let (beta, alpha) = (regime.beta, regime.alpha);
    let tilde = matches!(which, ErrorKind::E1Tilde | ErrorKind::E2Tilde);
    let extra = if tilde {
        extra_rings(cfg, regime.q)
    } else {
        Vec::new()
    };
    let mut spots = ring.hot_spots();
    spots.extend(extra_spots(&extra));
    let base_tag = ring_tag(cfg) - SymmetryTag::KELVIN;
    let tag = match which {
        ErrorKind::E1Tilde if regime.q > 1 => {
            base_tag | SymmetryTag::EVEN_X2 | SymmetryTag::REDUCTION
        }
        ErrorKind::E1 | ErrorKind::E1Tilde if regime.q == 1 => base_tag | SymmetryTag::REDUCTION,
        _ => base_tag,
    };
    let f = move |x: Vec3| -> f64 {
        let u = eval_u(x);
        match which {
            ErrorKind::E1 | ErrorKind::E1Tilde => {
                let vv = ring.sum(x);
                let extra_sum = if extra.is_empty() {
                    0.0
                } else {
                    rings_cubed(&extra, x)
                };
                beta * u * u * (math::powi(vv, 3) + extra_sum)
            }
            ErrorKind::E2 | ErrorKind::E2Tilde => with_scratch(ring.len(), |buf| {
                ring.values_into(x, buf);
                let vv: f64 = buf.iter().sum();
                let self_part = power_sum_excess(buf, 5);
                let mut out = self_part + beta * math::powi(u, 3) * vv * vv;
                if !extra.is_empty() {
                    out += alpha * vv * vv * rings_cubed(&extra, x);
                }
                out
            }),
        }
    };
    ScalarField::new(f).with_tag(tag).with_hot_spots(spots)
}

#[inline]
fn pos(x: f64) -> f64 {
    x.max(0.0)
}

/// Nonlinear coupling densities for perturbations `(φ, ψ)` of `(U, V)`.
/// Positive parts are exact `max(·, 0)`.
pub fn coupling_field(
    which: CouplingKind,
    cfg: &PolygonConfig,
    regime: &CouplingRegime,
    phi: &ScalarField,
    psi: &ScalarField,
) -> ScalarField {
    let ring = Ring::new(cfg);
    let (beta, alpha) = (regime.beta, regime.alpha);
    let tilde = matches!(which, CouplingKind::N1Tilde | CouplingKind::N2Tilde);
    let extra = if tilde {
        extra_rings(cfg, regime.q)
    } else {
        Vec::new()
    };
    let mut spots = ring.hot_spots();
    spots.extend(extra_spots(&extra));
    spots.extend_from_slice(phi.hot_spots());
    spots.extend_from_slice(psi.hot_spots());
    let (fphi, fpsi) = (phi.eval_fn(), psi.eval_fn());
    let f = move |x: Vec3| -> f64 {
        let u = eval_u(x);
        let vv = ring.sum(x);
        let (p, s) = (fphi(x), fpsi(x));
        let (up, vp) = (pos(u + p), pos(vv + s));
        // Σ_r (V_r + ψ_r)₊³ and Σ_r V_r³
        let (pert, bare) = extra.iter().fold((0.0, 0.0), |(a, b), (th, r)| {
            let y = rotate(*th, x);
            let vr = r.sum(y);
            (a + math::powi(pos(vr + fpsi(y)), 3), b + math::powi(vr, 3))
        });
        match which {
            CouplingKind::N1 | CouplingKind::N1Tilde => {
                let mut out = math::powi(up, 5) - math::powi(u, 5) - 5.0 * math::powi(u, 4) * p
                    + beta * up * up * math::powi(vp, 3)
                    - beta * u * u * math::powi(vv, 3);
                if tilde {
                    out += beta * (up * up * pert - u * u * bare);
                }
                out
            }
            CouplingKind::N2 | CouplingKind::N2Tilde => {
                let mut out = math::powi(vp, 5) - math::powi(vv, 5) - 5.0 * math::powi(vv, 4) * s
                    + beta * vp * vp * math::powi(up, 3)
                    - beta * vv * vv * math::powi(u, 3);
                if tilde {
                    out += alpha * (vp * vp * pert - vv * vv * bare);
                }
                out
            }
        }
    };
    ScalarField::new(f).with_hot_spots(spots)
}

/// Built-in perturbation `ε U`.
pub fn perturbation_u(eps: f64) -> ScalarField {
    scale(&u(), eps)
}

/// Built-in perturbation `ε Z_{k,t}`.
pub fn perturbation_zkt(cfg: &PolygonConfig, eps: f64) -> ScalarField {
    scale(&zkt(cfg), eps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symmetry::{sample_points, symmetry_violation, SymmetrySpec};

    fn cfg(k: usize) -> PolygonConfig {
        PolygonConfig::ring(k, 0.4, 0.02).unwrap()
    }

    #[test]
    fn bubble_values() {
        assert!((eval_u(Vec3::ZERO) - 1.316_074_012_952_492_5).abs() < 1e-15);
        assert!((eval_u(Vec3::new(1.0, 0.0, 0.0)) - C3 / math::sqrt(2.0)).abs() < 1e-15);
        let far = Vec3::new(0.0, 1e6, 0.0);
        assert!((eval_u(far) * 1e6 / C3 - 1.0).abs() < 1e-11);
        let p = BubbleParams::new(1e-2, Vec3::ZERO).unwrap();
        assert!((eval_bubble(&p, Vec3::ZERO) - 10.0 * C3).abs() < 1e-12);
    }

    #[test]
    fn scaling_identity() {
        let p = BubbleParams::new(0.37, Vec3::new(0.1, -0.2, 0.5)).unwrap();
        for x in sample_points(50, 1, 0.05, 20.0) {
            let y = (x - p.xi) * (1.0 / p.delta);
            let want = eval_u(y) / math::sqrt(p.delta);
            assert!((eval_bubble(&p, x) - want).abs() < 1e-13 * want.abs().max(1.0));
        }
    }

    #[test]
    fn kernel_values() {
        assert!((eval_z(0, Vec3::ZERO).unwrap() + C3 / 2.0).abs() < 1e-15);
        assert!(eval_z(0, Vec3::new(0.0, 0.6, 0.8)).unwrap().abs() < 1e-15);
        assert!(eval_z(4, Vec3::ZERO).is_err());
        assert!(kernel_residual(0, Vec3::new(1.0, 1.0, 1.0)).unwrap().abs() < 1e-10);
        assert!(kernel_residual(1, Vec3::new(0.3, 0.0, 0.0)).unwrap().abs() < 1e-10);
    }

    #[test]
    fn residuals_vanish() {
        assert!(yamabe_residual(Vec3::ZERO).abs() < 1e-12);
        assert!(yamabe_residual(Vec3::new(6.0, 0.0, 8.0)).abs() < 1e-12);
        let p = BubbleParams::new(1e-3, Vec3::new(0.2, 0.0, 0.0)).unwrap();
        for x in sample_points(100, 0, 1e-2, 10.0) {
            assert!(yamabe_residual_scaled(&p, x).abs() < 1e-10);
            for l in 0..4 {
                assert!(kernel_residual(l, x).unwrap().abs() < 1e-9);
            }
        }
    }

    #[test]
    fn power_excess_matches_direct() {
        let mut a = [0.3, 1.2, 0.05, 2.0];
        let s: f64 = a.iter().sum();
        let direct = math::powi(s, 5) - a.iter().map(|v| math::powi(*v, 5)).sum::<f64>();
        let stable = power_sum_excess(&mut a, 5);
        assert!((direct - stable).abs() < 1e-12 * direct);
        assert_eq!(power_sum_excess(&mut [3.0], 5), 0.0);
        // one dominant bubble: leading term is 5 a⁴ s
        let mut b = [1e6, 1e-3, 2e-3];
        let e = power_sum_excess(&mut b, 5);
        let lead = 5.0 * 1e24 * 3e-3;
        assert!((e / lead - 1.0).abs() < 1e-8);
    }

    #[test]
    fn ring_fields() {
        let c = cfg(3);
        let vf = v(&c);
        for x in sample_points(50, 2, 0.05, 20.0) {
            let val = vf.eval(x);
            assert!((val - vf.eval(rotate(core::f64::consts::TAU / 3.0, x))).abs() < 1e-12);
            for j in 1..=3 {
                assert!(val >= ring_bubble(&c, j).unwrap().eval(x));
            }
            assert!(eval_zkt(&c, x).abs() <= val);
        }
        let one = PolygonConfig::ring(1, 0.3, 0.1).unwrap();
        let x = Vec3::new(0.4, 0.1, -0.2);
        assert!((eval_v(&one, x) - ring_bubble(&one, 1).unwrap().eval(x)).abs() < 1e-15);
        let unit = PolygonConfig::ring(1, 1.0, 1.0).unwrap();
        assert!((eval_zkt(&unit, x) - eval_z(0, x).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn tagged_fields_pass_their_symmetries() {
        let c = cfg(4);
        let spec = SymmetrySpec::new(4, 3).unwrap();
        let pts = sample_points(200, 5, 0.05, 20.0);
        let regime = CouplingRegime::new(-3.0, 0.7, 3).unwrap();
        let fields = [
            u(),
            v(&c),
            zkt(&c),
            dv_dt(&c),
            error_field(ErrorKind::E1, &c, &regime),
            error_field(ErrorKind::E2, &c, &regime),
            error_field(ErrorKind::E1Tilde, &c, &regime),
            error_field(ErrorKind::E2Tilde, &c, &regime),
            rotated_v(&c, 3, 2).unwrap(),
            z(3).unwrap(),
        ];
        for f in &fields {
            let scale = pts.iter().map(|x| f.eval(*x).abs()).fold(1.0, f64::max);
            assert!(
                symmetry_violation(f, spec, &pts, f.tag()) <= 1e-11 * scale,
                "{f:?}"
            );
        }
        let odd = ScalarField::new(|x| x.x2);
        assert!(symmetry_violation(&odd, spec, &pts, SymmetryTag::XK) > 0.1);
    }

    #[test]
    fn error_field_special_cases() {
        let one = PolygonConfig::ring(1, 0.5, 0.01).unwrap();
        let r0 = CouplingRegime::new(0.0, 0.0, 1).unwrap();
        let e2 = error_field(ErrorKind::E2, &one, &r0);
        let rb = CouplingRegime::new(-2.0, 0.0, 1).unwrap();
        let e2b = error_field(ErrorKind::E2, &one, &rb);
        let b1 = ring_bubble(&one, 1).unwrap();
        let c = cfg(2);
        let e1 = error_field(ErrorKind::E1, &c, &rb);
        let e1t = error_field(ErrorKind::E1Tilde, &c, &rb);
        for x in sample_points(40, 9, 0.01, 10.0) {
            assert_eq!(e2.eval(x), 0.0);
            let want = -2.0 * math::powi(eval_u(x), 3) * math::powi(b1.eval(x), 2);
            assert!((e2b.eval(x) - want).abs() <= 1e-13 * want.abs());
            assert_eq!(e1.eval(x), e1t.eval(x));
        }
    }

    #[test]
    fn coupling_vanishes_at_zero_perturbation() {
        let c = cfg(3);
        let regime = CouplingRegime::new(-5.0, 1.5, 2).unwrap();
        for which in [
            CouplingKind::N1,
            CouplingKind::N2,
            CouplingKind::N1Tilde,
            CouplingKind::N2Tilde,
        ] {
            let n = coupling_field(which, &c, &regime, &zero(), &zero());
            for x in sample_points(30, 4, 0.01, 10.0) {
                assert!(n.eval(x).abs() < 1e-9 * eval_v(&c, x).powi(5).max(1.0));
            }
        }
    }

    #[test]
    fn dv_dt_matches_finite_difference() {
        let (t, d) = (0.6, 0.03);
        let h = 1e-5;
        let c = PolygonConfig::ring(3, t, d).unwrap();
        let f = dv_dt(&c);
        for x in sample_points(40, 11, 0.05, 10.0) {
            let vp = eval_v(&PolygonConfig::ring(3, t + h, d).unwrap(), x);
            let vm = eval_v(&PolygonConfig::ring(3, t - h, d).unwrap(), x);
            let fd = (vp - vm) / (2.0 * h);
            assert!((fd - f.eval(x)).abs() <= 1e-6 * fd.abs().max(1e-3));
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let c = cfg(2);
        let fs = [
            u(),
            v(&c),
            zkt(&c),
            z(0).unwrap(),
            z(2).unwrap(),
            bubble(BubbleParams::new(0.3, Vec3::new(0.5, 0.2, 0.0)).unwrap()),
        ];
        let h = 1e-3;
        for f in &fs {
            for x in sample_points(30, 6, 0.1, 50.0) {
                let e = [
                    Vec3::new(h, 0.0, 0.0),
                    Vec3::new(0.0, h, 0.0),
                    Vec3::new(0.0, 0.0, h),
                ];
                let g = f.gradient(x).unwrap();
                let mut lap_fd = 0.0;
                let f0 = f.eval(x);
                for (i, d) in e.iter().enumerate() {
                    let (p1, m1) = (f.eval(x + *d), f.eval(x - *d));
                    let (p2, m2) = (f.eval(x + *d * 2.0), f.eval(x - *d * 2.0));
                    let gd = (8.0 * (p1 - m1) - (p2 - m2)) / (12.0 * h);
                    let gi = [g.x1, g.x2, g.x3][i];
                    assert!((gd - gi).abs() <= 1e-6 * g.norm().max(1e-6), "{f:?}");
                    lap_fd += (-(p2 + m2) + 16.0 * (p1 + m1) - 30.0 * f0) / (12.0 * h * h);
                }
                let lap = f.laplacian(x).unwrap();
                assert!(
                    (lap_fd - lap).abs() <= 1e-6 * lap.abs().max(f0.abs()).max(1e-6),
                    "{f:?} {lap} {lap_fd}"
                );
            }
        }
    }
}
