//! Adaptive cubature over ℝ³ and its standard subregions.
//!
//! The integrand is split by a partition of unity: every hot spot of the
//! field gets a smooth bump of radius `r₀` integrated in spherical
//! coordinates about the hot spot with the radial map `d = s·sinh u` (`s` the
//! hot-spot scale), and the remainder is integrated in spherical coordinates
//! about the origin, with `|x| > 1` pulled back by the Kelvin map `r = 1/ρ`.
//! All pieces share one global error heap; cells are refined in fixed-size
//! batches so results do not depend on how an [`Executor`] schedules them.

mod rule;

use alloc::collections::BinaryHeap;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::cmp::Reverse;

use crate::error::{Error, Result};
use crate::fields::{abs_pow, HotSpot, ScalarField};
use crate::math::{self, PI, TAU};
use crate::symmetry::{centered_angle, rotate, sample_points, PolygonConfig, Vec3};

pub use rule::{apply as apply_rule, Cube, Estimate, POINTS as RULE_POINTS};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    /// Bump radius `r₀` around hot spots. `None` uses half the smallest
    /// distance between hot spots, capped at 1.
    pub split_radius: Option<f64>,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            rel_tol: 1e-7,
            abs_tol: 1e-14,
            max_subdivisions: 1_000_000,
            split_radius: None,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) || !(self.abs_tol > 0.0) {
            return Err(Error::InvalidParameter("tolerances must be positive"));
        }
        if self.max_subdivisions < 1 {
            return Err(Error::InvalidParameter(
                "max_subdivisions must be at least 1",
            ));
        }
        if let Some(r) = self.split_radius {
            if !(r > 0.0) {
                return Err(Error::InvalidParameter("split_radius must be positive"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    /// Estimated absolute error.
    pub err_est: f64,
    pub n_evals: u64,
    /// False when `max_subdivisions` ran out first; `value` is then partial.
    pub converged: bool,
}

impl QuadratureResult {
    fn combine(self, other: QuadratureResult, sign: f64) -> QuadratureResult {
        QuadratureResult {
            value: self.value + sign * other.value,
            err_est: self.err_est + other.err_est,
            n_evals: self.n_evals + other.n_evals,
            converged: self.converged && other.converged,
        }
    }

    pub fn scaled(self, c: f64) -> QuadratureResult {
        QuadratureResult {
            value: c * self.value,
            err_est: math::abs(c) * self.err_est,
            ..self
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    WholeSpace,
    Ball {
        center: Vec3,
        radius: f64,
    },
    /// The fundamental wedge `Ω₁` of the ring `cfg`.
    Wedge(PolygonConfig),
    WedgeBall {
        cfg: PolygonConfig,
        radius: f64,
    },
    /// ℝ³ minus a union of disjoint balls `(center, radius)`.
    ComplementOfBalls(Vec<(Vec3, f64)>),
}

/// Evaluates batches of independent cell jobs. Implementations must return
/// the results in job order.
pub trait Executor: Sync {
    fn map(&self, n: usize, job: &(dyn Fn(usize) -> Estimate + Sync)) -> Vec<Estimate>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map(&self, n: usize, job: &(dyn Fn(usize) -> Estimate + Sync)) -> Vec<Estimate> {
        (0..n).map(job).collect()
    }
}

type ParamFn = Arc<dyn Fn([f64; 3]) -> f64 + Send + Sync>;

struct Patch {
    g: ParamFn,
    domain: Cube,
    grid: [usize; 3],
}

/// Cells popped per refinement round.
const BATCH: usize = 32;

/// Integration context: tolerances plus the executor used for cell batches.
#[derive(Clone, Copy)]
pub struct Quadrature<'e> {
    pub spec: QuadratureSpec,
    exec: &'e dyn Executor,
}

impl Quadrature<'static> {
    pub fn new(spec: QuadratureSpec) -> Self {
        Quadrature {
            spec,
            exec: &Sequential,
        }
    }
}

impl<'e> Quadrature<'e> {
    pub fn with_executor(spec: QuadratureSpec, exec: &'e dyn Executor) -> Self {
        Quadrature { spec, exec }
    }

    pub fn with_spec(self, spec: QuadratureSpec) -> Self {
        Quadrature { spec, ..self }
    }

    pub fn integrate(&self, f: &ScalarField, region: &Region) -> Result<QuadratureResult> {
        self.spec.validate()?;
        match region {
            Region::WholeSpace => {
                check_decay(f)?;
                let patches = self.sector_patches(f, None, None)?;
                self.adapt(&patches)
            }
            Region::Ball { center, radius } => {
                if !(*radius > 0.0) {
                    return Err(Error::InvalidParameter("ball radius must be positive"));
                }
                self.adapt(&[ball_patch(f, *center, *radius)])
            }
            Region::Wedge(cfg) => {
                check_decay(f)?;
                let patches = self.sector_patches(f, wedge_of(cfg), None)?;
                self.adapt(&patches)
            }
            Region::WedgeBall { cfg, radius } => {
                if !(*radius > 0.0) {
                    return Err(Error::InvalidParameter("ball radius must be positive"));
                }
                let patches = self.sector_patches(f, wedge_of(cfg), Some(*radius))?;
                self.adapt(&patches)
            }
            Region::ComplementOfBalls(balls) => {
                for (i, (c, r)) in balls.iter().enumerate() {
                    if !(*r > 0.0) {
                        return Err(Error::InvalidParameter("ball radius must be positive"));
                    }
                    for (c2, r2) in &balls[..i] {
                        if (*c - *c2).norm() < r + r2 {
                            return Err(Error::InvalidParameter("balls must be disjoint"));
                        }
                    }
                }
                let mut total = self.integrate(f, &Region::WholeSpace)?;
                for (c, r) in balls {
                    let b = self.integrate(
                        f,
                        &Region::Ball {
                            center: *c,
                            radius: *r,
                        },
                    )?;
                    total = total.combine(b, -1.0);
                }
                Ok(total)
            }
        }
    }

    /// `(∫|f|^p)^{1/p}` over ℝ³; `err_est` is propagated to first order.
    pub fn lp_norm(&self, f: &ScalarField, p: f64) -> Result<QuadratureResult> {
        let r = self.integrate(&abs_pow(f, p), &Region::WholeSpace)?;
        Ok(norm_from_integral(r, p))
    }

    /// Like [`lp_norm`](Self::lp_norm) through [`integrate_whole_by_wedges`](Self::integrate_whole_by_wedges).
    pub fn lp_norm_by_wedges(
        &self,
        f: &ScalarField,
        p: f64,
        cfg: &PolygonConfig,
    ) -> Result<QuadratureResult> {
        let r = self.integrate_whole_by_wedges(&abs_pow(f, p), cfg)?;
        Ok(norm_from_integral(r, p))
    }

    /// `k ∫_S f` for a `2π/k`-invariant `f`, with `S` a sector of opening
    /// `2π/k`. The sector is rotated so its walls sit midway between
    /// the azimuths of the hot spots.
    pub fn integrate_whole_by_wedges(
        &self,
        f: &ScalarField,
        cfg: &PolygonConfig,
    ) -> Result<QuadratureResult> {
        self.spec.validate()?;
        let k = cfg.k;
        if k == 1 {
            return self.integrate(f, &Region::WholeSpace);
        }
        let measured = rotation_violation(f, k);
        if measured > 1e-9 {
            return Err(Error::SymmetryViolation {
                measured,
                tolerance: 1e-9,
            });
        }
        check_decay(f)?;
        let open = TAU / k as f64;
        let mut az: Vec<f64> = f
            .hot_spots()
            .iter()
            .filter(|h| math::sqrt(h.center.x1 * h.center.x1 + h.center.x2 * h.center.x2) > 1e-12)
            .map(|h| {
                libm::fmod(
                    math::reduce_angle(math::atan2(h.center.x2, h.center.x1)),
                    open,
                )
            })
            .collect();
        az.sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
        az.dedup_by(|a, b| math::abs(*a - *b) < 1e-12);
        let wall = if az.is_empty() {
            open / 2.0
        } else {
            let mut best = (open - az[az.len() - 1] + az[0], az[az.len() - 1]);
            for w in az.windows(2) {
                if w[1] - w[0] > best.0 + 1e-12 {
                    best = (w[1] - w[0], w[0]);
                }
            }
            best.1 + best.0 / 2.0
        };
        let patches = self.sector_patches(f, Some((wall - open, wall)), None)?;
        Ok(self.adapt(&patches)?.scaled(k as f64))
    }

    fn bump_radius(&self, spots: &[HotSpot]) -> f64 {
        if let Some(r) = self.spec.split_radius {
            return r;
        }
        let mut d: f64 = 2.0;
        for (i, a) in spots.iter().enumerate() {
            for b in &spots[..i] {
                d = d.min((a.center - b.center).norm());
            }
        }
        0.5 * d
    }

    /// Patches for `{azimuth ∈ az} ∩ {|x| < r_max}`; `None` means no limit.
    fn sector_patches(
        &self,
        f: &ScalarField,
        az: Option<(f64, f64)>,
        r_max: Option<f64>,
    ) -> Result<Vec<Patch>> {
        let spots = f.hot_spots();
        let rb = self.bump_radius(spots);
        let tol = 1e-9 * rb;
        let mut inside: Vec<HotSpot> = Vec::new();
        for h in spots {
            let c = h.center;
            let mut state = Placement::Inside;
            if let Some((a, b)) = az {
                let planar = math::sqrt(c.x1 * c.x1 + c.x2 * c.x2);
                let wall = half_plane_distance(c, a).min(half_plane_distance(c, b));
                let rel = centered_angle(math::atan2(c.x2, c.x1) - 0.5 * (a + b));
                let in_angle = planar > 0.0 && math::abs(rel) < 0.5 * (b - a);
                state = if wall + tol < rb {
                    Placement::Straddles
                } else if in_angle {
                    Placement::Inside
                } else {
                    Placement::Outside
                };
            }
            if let Some(rm) = r_max {
                let n = c.norm();
                state = match state {
                    Placement::Inside if n + rb <= rm + tol => Placement::Inside,
                    Placement::Inside | Placement::Outside if n - rb >= rm - tol => {
                        Placement::Outside
                    }
                    Placement::Outside => Placement::Outside,
                    _ => Placement::Straddles,
                };
            }
            match state {
                Placement::Inside => inside.push(*h),
                Placement::Outside => {}
                Placement::Straddles => return Err(Error::HotSpotOnBoundary),
            }
        }

        let eval = f.eval_fn();
        let bumps: Arc<Vec<Vec3>> = Arc::new(inside.iter().map(|h| h.center).collect());
        let background = {
            let eval = eval.clone();
            let bumps = bumps.clone();
            move |x: Vec3| -> f64 {
                let mut w = 1.0;
                for &c in bumps.iter() {
                    w -= bump((x - c).norm(), rb);
                }
                if w <= 0.0 {
                    0.0
                } else {
                    w * eval(x)
                }
            }
        };
        let background = Arc::new(background);
        let (a, b) = az.unwrap_or((0.0, TAU));
        let n_phi = if az.is_some() { 2 } else { 4 };
        let mut patches = Vec::new();

        let r_in = r_max.map_or(1.0, |r| r.min(1.0));
        {
            let bg = background.clone();
            patches.push(Patch {
                g: Arc::new(move |p: [f64; 3]| {
                    let (r, th, ph) = (p[0], p[1], p[2]);
                    let x = Vec3::from_spherical(r, th, ph);
                    bg(x) * r * r * math::sin(th)
                }),
                domain: Cube::new([0.0, 0.0, a], [r_in, PI, b]),
                grid: [2, 2, n_phi],
            });
        }
        let rho_min = match r_max {
            None => Some(0.0),
            Some(r) if r > 1.0 => Some(1.0 / r),
            _ => None,
        };
        if let Some(rho_min) = rho_min {
            let bg = background.clone();
            patches.push(Patch {
                g: Arc::new(move |p: [f64; 3]| {
                    let (rho, th, ph) = (p[0], p[1], p[2]);
                    let x = Vec3::from_spherical(1.0 / rho, th, ph);
                    let r2 = rho * rho;
                    bg(x) / (r2 * r2) * math::sin(th)
                }),
                domain: Cube::new([rho_min, 0.0, a], [1.0, PI, b]),
                grid: [2, 2, n_phi],
            });
        }
        for h in &inside {
            let c = h.center;
            let s = h.scale.min(rb);
            let umax = math::asinh(rb / s);
            let eval = eval.clone();
            patches.push(Patch {
                g: Arc::new(move |p: [f64; 3]| {
                    let (uu, th, ph) = (p[0], p[1], p[2]);
                    let d = s * math::sinh(uu);
                    let x = c + Vec3::from_spherical(d, th, ph);
                    let w = bump(d, rb);
                    if w == 0.0 {
                        return 0.0;
                    }
                    w * eval(x) * d * d * math::sin(th) * s * math::cosh(uu)
                }),
                domain: Cube::new([0.0, 0.0, 0.0], [umax, PI, TAU]),
                grid: [(math::ceil(umax / 1.5) as usize).max(2), 2, 4],
            });
        }
        Ok(patches)
    }

    fn adapt(&self, patches: &[Patch]) -> Result<QuadratureResult> {
        struct Cell {
            patch: usize,
            cube: Cube,
            est: Estimate,
        }
        let eval_jobs = |jobs: &[(usize, Cube)]| -> Result<Vec<Estimate>> {
            let out = self.exec.map(jobs.len(), &|i| {
                let (pi, cube) = jobs[i];
                let g = &patches[pi].g;
                rule::apply(&|p| g(p), &cube)
            });
            if out
                .iter()
                .any(|e| !e.value.is_finite() || !e.err.is_finite())
            {
                return Err(Error::Domain("integrand is not finite on the region"));
            }
            Ok(out)
        };

        let mut jobs = Vec::new();
        for (pi, p) in patches.iter().enumerate() {
            for cube in p.domain.grid(p.grid) {
                jobs.push((pi, cube));
            }
        }
        let first = eval_jobs(&jobs)?;
        let mut n_evals = (jobs.len() * rule::POINTS) as u64;
        let mut cells: Vec<Cell> = jobs
            .iter()
            .zip(first)
            .map(|(&(patch, cube), est)| Cell { patch, cube, est })
            .collect();
        let mut heap: BinaryHeap<(u64, Reverse<usize>)> = cells
            .iter()
            .enumerate()
            .map(|(i, c)| (c.est.err.to_bits(), Reverse(i)))
            .collect();

        let totals = |cells: &[Cell]| {
            let v: Vec<f64> = cells.iter().map(|c| c.est.value).collect();
            let e: Vec<f64> = cells.iter().map(|c| c.est.err).collect();
            (math::pairwise_sum(&v), math::pairwise_sum(&e))
        };
        let (mut value, mut err) = totals(&cells);
        let mut splits = 0usize;
        let mut round = 0usize;
        let tol = |v: f64| (self.spec.rel_tol * math::abs(v)).max(self.spec.abs_tol);
        while err > tol(value) && splits < self.spec.max_subdivisions {
            let take = BATCH.min(self.spec.max_subdivisions - splits);
            let mut popped = Vec::with_capacity(take);
            while popped.len() < take {
                match heap.pop() {
                    Some((_, Reverse(i))) => popped.push(i),
                    None => break,
                }
            }
            let mut jobs = Vec::with_capacity(2 * popped.len());
            for &i in &popped {
                let (a, b) = cells[i].cube.split(cells[i].est.split_axis);
                jobs.push((cells[i].patch, a));
                jobs.push((cells[i].patch, b));
            }
            let ests = eval_jobs(&jobs)?;
            n_evals += (jobs.len() * rule::POINTS) as u64;
            for (n, &i) in popped.iter().enumerate() {
                let (ea, eb) = (ests[2 * n], ests[2 * n + 1]);
                value += ea.value + eb.value - cells[i].est.value;
                err += ea.err + eb.err - cells[i].est.err;
                cells[i] = Cell {
                    patch: jobs[2 * n].0,
                    cube: jobs[2 * n].1,
                    est: ea,
                };
                heap.push((ea.err.to_bits(), Reverse(i)));
                cells.push(Cell {
                    patch: jobs[2 * n + 1].0,
                    cube: jobs[2 * n + 1].1,
                    est: eb,
                });
                heap.push((eb.err.to_bits(), Reverse(cells.len() - 1)));
            }
            splits += popped.len();
            round += 1;
            if round.is_multiple_of(64) {
                (value, err) = totals(&cells);
            }
        }
        (value, err) = totals(&cells);
        Ok(QuadratureResult {
            value,
            err_est: err,
            n_evals,
            converged: err <= tol(value),
        })
    }
}

enum Placement {
    Inside,
    Outside,
    Straddles,
}

fn norm_from_integral(r: QuadratureResult, p: f64) -> QuadratureResult {
    let value = math::powf(r.value.max(0.0), 1.0 / p);
    let err_est = if r.value > 0.0 {
        value * r.err_est / (p * r.value)
    } else {
        math::powf(r.err_est, 1.0 / p)
    };
    QuadratureResult {
        value,
        err_est,
        ..r
    }
}

fn wedge_of(cfg: &PolygonConfig) -> Option<(f64, f64)> {
    if cfg.k == 1 {
        return None;
    }
    let half = PI / cfg.k as f64;
    let ph = cfg.phase();
    Some((ph - half, ph + half))
}

/// Distance from `c` to the half-plane `{ρ(cos α, sin α, z) : ρ ≥ 0}`.
fn half_plane_distance(c: Vec3, alpha: f64) -> f64 {
    let (ca, sa) = (math::cos(alpha), math::sin(alpha));
    let proj = c.x1 * ca + c.x2 * sa;
    if proj >= 0.0 {
        math::abs(c.x1 * sa - c.x2 * ca)
    } else {
        math::sqrt(c.x1 * c.x1 + c.x2 * c.x2)
    }
}

/// Smooth cutoff: 1 at `d = 0`, 0 for `d ≥ R`, C^∞ and flat at both ends.
/// A transition spread over the whole radius keeps the background smooth
/// on the scale of `R`.
#[inline]
fn bump(d: f64, radius: f64) -> f64 {
    let tau = 1.0 - d / radius;
    if tau >= 1.0 {
        1.0
    } else if tau <= 0.0 {
        0.0
    } else {
        let a = math::exp(-1.0 / tau);
        let b = math::exp(-1.0 / (1.0 - tau));
        a / (a + b)
    }
}

fn ball_patch(f: &ScalarField, center: Vec3, radius: f64) -> Patch {
    let s = f
        .hot_spots()
        .iter()
        .filter(|h| (h.center - center).norm() <= 1e-9 * radius)
        .map(|h| h.scale)
        .fold(1.0f64, f64::min)
        .min(radius);
    let umax = math::asinh(radius / s);
    let eval = f.eval_fn();
    Patch {
        g: Arc::new(move |p: [f64; 3]| {
            let (uu, th, ph) = (p[0], p[1], p[2]);
            let d = s * math::sinh(uu);
            let x = center + Vec3::from_spherical(d, th, ph);
            eval(x) * d * d * math::sin(th) * s * math::cosh(uu)
        }),
        domain: Cube::new([0.0, 0.0, 0.0], [umax, PI, TAU]),
        grid: [(math::ceil(umax / 1.5) as usize).max(2), 2, 4],
    }
}

/// Rejects integrands whose far field decays like `|x|⁻³` or slower, judged
/// from the local exponent of `ρ⁻⁴ f(ω/ρ)` near `ρ = 0`.
fn check_decay(f: &ScalarField) -> Result<()> {
    let dirs = [
        Vec3::new(0.48, 0.6, 0.64),
        Vec3::new(-0.36, 0.8, -0.48),
        Vec3::new(0.0, 0.0, 1.0),
        Vec3::new(0.6, -0.8, 0.0),
    ];
    let g = |rho: f64| -> f64 {
        let m = dirs
            .iter()
            .map(|d| math::abs(f.eval(*d * (1.0 / rho))))
            .fold(0.0, f64::max);
        m / (rho * rho * rho * rho)
    };
    let (r1, r2) = (1e-4, 1e-7);
    let (g1, g2) = (g(r1), g(r2));
    if !g1.is_finite() || !g2.is_finite() {
        return Err(Error::NonIntegrable);
    }
    if g2 == 0.0 {
        return Ok(());
    }
    if g1 == 0.0 {
        return Err(Error::NonIntegrable);
    }
    let exponent = math::ln(g1 / g2) / math::ln(r1 / r2);
    if exponent <= -0.95 {
        return Err(Error::NonIntegrable);
    }
    Ok(())
}

/// Relative `2π/k`-rotation defect of `f` on 64 quasi-random points.
fn rotation_violation(f: &ScalarField, k: usize) -> f64 {
    let pts = sample_points(64, 17, 0.2, 5.0);
    let mut scale: f64 = 0.0;
    let mut worst: f64 = 0.0;
    for x in pts {
        let a = f.eval(x);
        let b = f.eval(rotate(TAU / k as f64, x));
        scale = scale.max(math::abs(a));
        let d = math::abs(a - b);
        worst = if d.is_nan() {
            f64::INFINITY
        } else {
            worst.max(d)
        };
    }
    if scale > 0.0 {
        worst / scale
    } else {
        worst
    }
}

/// Sequential convenience wrapper.
pub fn integrate(
    f: &ScalarField,
    region: &Region,
    spec: &QuadratureSpec,
) -> Result<QuadratureResult> {
    Quadrature::new(*spec).integrate(f, region)
}

pub fn lp_norm(f: &ScalarField, p: f64, spec: &QuadratureSpec) -> Result<QuadratureResult> {
    Quadrature::new(*spec).lp_norm(f, p)
}

pub fn integrate_whole_by_wedges(
    f: &ScalarField,
    cfg: &PolygonConfig,
    spec: &QuadratureSpec,
) -> Result<QuadratureResult> {
    Quadrature::new(*spec).integrate_whole_by_wedges(f, cfg)
}
