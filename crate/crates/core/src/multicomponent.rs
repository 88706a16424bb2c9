//! Reduction of the `m = q + 1` component system to the nonlocal
//! two-component system by rotating one ring field `q` times.
//!
//! Components are `u_i(x) = v(ℛ_{i,k}x)` for `i ≤ q` and `u_{q+1} = u`, with
//! `ℛ_{i,k}` the rotation by `((i-1)/q)(2π/k)` about the `x₃`-axis. The
//! couplings are `1` on the diagonal, `α` among the first `q` components and
//! `β` between any of them and the last one.

use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::fields::{CouplingRegime, HotSpot, ScalarField, SymmetryTag};
use crate::math;
use crate::symmetry::{polygon_centers, rotate, sample_points, symmetry_violation};
use crate::symmetry::{PolygonConfig, SymmetrySpec, Vec3};

/// Off-axis probe used for the distinctness check.
pub const PROBE: Vec3 = Vec3::new(0.9, 0.21, 0.13);

/// Tolerance of the sampled symmetry preconditions, relative to the largest
/// sampled value (or 1).
pub const SYMMETRY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MSystemConfig {
    pub q: usize,
    pub k: usize,
    pub regime: CouplingRegime,
    pub cfg: PolygonConfig,
}

impl MSystemConfig {
    /// `q` is taken from the regime and `k` from the polygon.
    pub fn new(regime: CouplingRegime, cfg: PolygonConfig) -> Result<Self> {
        if cfg.k < 2 {
            return Err(Error::InvalidParameter("k must be at least 2"));
        }
        Ok(MSystemConfig {
            q: regime.q,
            k: cfg.k,
            regime,
            cfg,
        })
    }

    pub fn m(&self) -> usize {
        self.q + 1
    }

    pub fn spec(&self) -> SymmetrySpec {
        SymmetrySpec {
            k: self.k,
            q: self.q,
        }
    }

    /// Angle of `ℛ_{i,k}`.
    pub fn angle(&self, i: usize) -> f64 {
        (i - 1) as f64 / self.q as f64 * TAU / self.k as f64
    }

    /// Coupling matrix entry, components numbered `1..=q+1`.
    pub fn beta_ij(&self, i: usize, j: usize) -> f64 {
        let m = self.m();
        if i == j {
            1.0
        } else if i == m || j == m {
            self.regime.beta
        } else {
            self.regime.alpha
        }
    }

    fn check_consistent(&self) -> Result<()> {
        if self.q != self.regime.q || self.k != self.cfg.k || self.q == 0 || self.k < 2 {
            return Err(Error::InvalidParameter(
                "inconsistent k or q in MSystemConfig",
            ));
        }
        Ok(())
    }
}

/// The `m` components together with the generating pair.
#[derive(Clone)]
pub struct ComponentSet {
    pub components: Vec<ScalarField>,
    pub u: ScalarField,
    pub v: ScalarField,
    /// Whether the components take pairwise different values at [`PROBE`].
    pub distinct: bool,
}

impl ComponentSet {
    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn eval(&self, x: Vec3) -> Vec<f64> {
        self.components.iter().map(|c| c.eval(x)).collect()
    }
}

/// Pullback `x ↦ f(ℛ_θ x)`, carrying gradient, Laplacian and hot spots.
pub fn rotated(f: &ScalarField, theta: f64) -> ScalarField {
    let spots: Vec<HotSpot> = f
        .hot_spots()
        .iter()
        .map(|h| HotSpot {
            center: rotate(-theta, h.center),
            scale: h.scale,
        })
        .collect();
    let g = f.clone();
    let mut out = ScalarField::new(move |x| g.eval(rotate(theta, x)))
        .with_tag(f.tag() - SymmetryTag::EVEN_X2)
        .with_hot_spots(spots);
    if f.has_gradient() {
        let g = f.clone();
        out = out.with_gradient(move |x| {
            let d = g.gradient(rotate(theta, x)).unwrap_or(Vec3::ZERO);
            rotate(-theta, d)
        });
    }
    if f.has_laplacian() {
        let g = f.clone();
        out = out.with_laplacian(move |x| g.laplacian(rotate(theta, x)).unwrap_or(f64::NAN));
    }
    out
}

fn precondition_samples() -> Vec<Vec3> {
    sample_points(64, 0, 0.2, 5.0)
}

fn relative_violation(
    f: &ScalarField,
    spec: SymmetrySpec,
    samples: &[Vec3],
    gens: SymmetryTag,
) -> f64 {
    let scale = samples
        .iter()
        .map(|&x| math::abs(f.eval(x)))
        .fold(1.0, f64::max);
    symmetry_violation(f, spec, samples, gens) / scale
}

pub fn build_components(
    u: &ScalarField,
    v: &ScalarField,
    ms: &MSystemConfig,
) -> Result<ComponentSet> {
    ms.check_consistent()?;
    let samples = precondition_samples();
    let spec = ms.spec();
    let dv = relative_violation(v, spec, &samples, SymmetryTag::ROTATION);
    if !(dv <= SYMMETRY_TOL) {
        return Err(Error::SymmetryViolation {
            measured: dv,
            tolerance: SYMMETRY_TOL,
        });
    }
    let du = relative_violation(u, spec, &samples, SymmetryTag::REDUCTION);
    if !(du <= SYMMETRY_TOL) {
        return Err(Error::SymmetryViolation {
            measured: du,
            tolerance: SYMMETRY_TOL,
        });
    }
    let mut components: Vec<ScalarField> = (1..=ms.q).map(|i| rotated(v, ms.angle(i))).collect();
    components.push(u.clone());
    let vals: Vec<f64> = components.iter().map(|c| c.eval(PROBE)).collect();
    let mut distinct = true;
    for i in 0..vals.len() {
        for j in 0..i {
            let d = math::abs(vals[i] - vals[j]);
            if d <= 1e-12 * math::abs(vals[i]).max(math::abs(vals[j])) {
                distinct = false;
            }
        }
    }
    Ok(ComponentSet {
        components,
        u: u.clone(),
        v: v.clone(),
        distinct,
    })
}

/// All bubble centers of the `q` rotated rings.
pub fn all_centers(ms: &MSystemConfig) -> Vec<Vec3> {
    let base = polygon_centers(&PolygonConfig {
        q: 1,
        r: 1,
        ..ms.cfg
    });
    (1..=ms.q)
        .flat_map(|i| {
            let th = ms.angle(i);
            base.iter()
                .map(move |&c| rotate(-th, c))
                .collect::<Vec<_>>()
        })
        .collect()
}

/// Smallest distance between two centers of the rotated family.
pub fn min_center_distance(ms: &MSystemConfig) -> f64 {
    let c = all_centers(ms);
    let mut best = f64::INFINITY;
    for i in 0..c.len() {
        for j in 0..i {
            best = best.min((c[i] - c[j]).norm());
        }
    }
    best
}

/// `2 sin(π/(qk)) √(1-t²δ²)`.
pub fn min_center_distance_closed_form(ms: &MSystemConfig) -> f64 {
    2.0 * math::sin(PI / (ms.q * ms.k) as f64) * ms.cfg.radius()
}

/// Largest `|Σ_{r=2}^q v_r³(ℛ_{i,k}x) - Σ_{j≠i, j≤q} u_j³(x)|` over the
/// samples and `i = 1..=q`, with `v_r = v∘ℛ_{r,k}` and `u_j = v∘ℛ_{j,k}`.
pub fn reduction_identity_check(v: &ScalarField, ms: &MSystemConfig, samples: &[Vec3]) -> f64 {
    let q = ms.q;
    let mut worst: f64 = 0.0;
    for &x in samples {
        let u3: Vec<f64> = (1..=q)
            .map(|j| math::powi(v.eval(rotate(ms.angle(j), x)), 3))
            .collect();
        for i in 1..=q {
            let y = rotate(ms.angle(i), x);
            let lhs: f64 = (2..=q)
                .map(|r| math::powi(v.eval(rotate(ms.angle(r), y)), 3))
                .sum();
            let rhs: f64 = (1..=q).filter(|&j| j != i).map(|j| u3[j - 1]).sum();
            let d = math::abs(lhs - rhs);
            if d > worst || d.is_nan() {
                worst = if d.is_nan() { f64::INFINITY } else { d };
            }
        }
    }
    worst
}

/// Residuals `-Δu_i - u_i⁵ - Σ_{j≠i} β_ij u_i²u_j³` computed twice: directly
/// from the components at `x`, and from the nonlocal two-component system
/// evaluated at `ℛ_{i,k}x` (at `x` for the last component).
#[derive(Debug, Clone, PartialEq)]
pub struct MSystemResidual {
    pub direct: Vec<f64>,
    pub nonlocal: Vec<f64>,
}

impl MSystemResidual {
    pub fn discrepancy(&self) -> f64 {
        self.direct
            .iter()
            .zip(&self.nonlocal)
            .map(|(a, b)| math::abs(a - b))
            .fold(0.0, f64::max)
    }
}

fn laplacian(f: &ScalarField, x: Vec3) -> Result<f64> {
    f.laplacian(x).ok_or(Error::InvalidParameter(
        "component without an analytic Laplacian",
    ))
}

pub fn msystem_residual(cs: &ComponentSet, ms: &MSystemConfig, x: Vec3) -> Result<MSystemResidual> {
    ms.check_consistent()?;
    let m = ms.m();
    if cs.len() != m {
        return Err(Error::InvalidParameter(
            "component count does not match q + 1",
        ));
    }
    let vals = cs.eval(x);
    let mut direct = Vec::with_capacity(m);
    for i in 1..=m {
        let ui = vals[i - 1];
        let coupling: f64 = (1..=m)
            .filter(|&j| j != i)
            .map(|j| ms.beta_ij(i, j) * math::powi(vals[j - 1], 3))
            .sum();
        direct.push(-laplacian(&cs.components[i - 1], x)? - math::powi(ui, 5) - ui * ui * coupling);
    }

    let (beta, alpha) = (ms.regime.beta, ms.regime.alpha);
    let nonlocal_sum = |y: Vec3| -> f64 {
        (2..=ms.q)
            .map(|r| math::powi(cs.v.eval(rotate(ms.angle(r), y)), 3))
            .sum()
    };
    let mut nonlocal = Vec::with_capacity(m);
    for i in 1..=ms.q {
        let y = rotate(ms.angle(i), x);
        let (u, v) = (cs.u.eval(y), cs.v.eval(y));
        nonlocal.push(
            -laplacian(&cs.v, y)?
                - math::powi(v, 5)
                - beta * v * v * math::powi(u, 3)
                - alpha * v * v * nonlocal_sum(y),
        );
    }
    let (u, v) = (cs.u.eval(x), cs.v.eval(x));
    nonlocal.push(
        -laplacian(&cs.u, x)?
            - math::powi(u, 5)
            - beta * u * u * math::powi(v, 3)
            - beta * u * u * nonlocal_sum(x),
    );
    Ok(MSystemResidual { direct, nonlocal })
}

/// Largest two-path discrepancy of [`msystem_residual`] over the samples.
pub fn residual_agreement(cs: &ComponentSet, ms: &MSystemConfig, samples: &[Vec3]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &x in samples {
        let d = msystem_residual(cs, ms, x)?.discrepancy();
        if d > worst || d.is_nan() {
            worst = if d.is_nan() { f64::INFINITY } else { d };
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{self, error_field, BubbleParams, ErrorKind};

    fn setup(q: usize, k: usize, beta: f64, alpha: f64) -> (MSystemConfig, ComponentSet) {
        let cfg = PolygonConfig::ring(k, 2.0 / 9.0, 0.05).unwrap();
        let regime = CouplingRegime::new(beta, alpha, q).unwrap();
        let ms = MSystemConfig::new(regime, cfg).unwrap();
        let cs = build_components(&fields::u(), &fields::v(&cfg), &ms).unwrap();
        (ms, cs)
    }

    #[test]
    fn q1_is_the_plain_pair() {
        let (ms, cs) = setup(1, 3, -5.0, 0.0);
        assert_eq!(cs.len(), 2);
        for x in sample_points(20, 3, 0.1, 10.0) {
            assert_eq!(cs.components[0].eval(x), fields::eval_v(&ms.cfg, x));
            assert_eq!(cs.components[1].eval(x), fields::eval_u(x));
        }
        assert!(cs.distinct);
    }

    #[test]
    fn q2_components_are_quarter_turns() {
        let (ms, cs) = setup(2, 2, -5.0, 1.0);
        let e1 = Vec3::new(1.0, 0.0, 0.0);
        assert_eq!(ms.angle(2), PI / 2.0);
        let a = cs.components[0].eval(e1);
        let b = cs.components[1].eval(e1);
        assert!((b - fields::eval_v(&ms.cfg, Vec3::new(0.0, 1.0, 0.0))).abs() < 1e-12 * a);
        assert!((a - b).abs() > 1.0);
        assert!(cs.distinct);
    }

    #[test]
    fn coupling_pattern() {
        let (ms, _) = setup(3, 2, -7.0, 0.5);
        assert_eq!(ms.beta_ij(2, 2), 1.0);
        assert_eq!(ms.beta_ij(4, 4), 1.0);
        assert_eq!(ms.beta_ij(1, 3), 0.5);
        assert_eq!(ms.beta_ij(2, 4), -7.0);
        assert_eq!(ms.beta_ij(4, 1), -7.0);
    }

    #[test]
    fn closed_form_spacing() {
        for q in 1..=3 {
            for k in 2..=5 {
                let (ms, _) = setup(q, k, -5.0, 1.0);
                let a = min_center_distance(&ms);
                let b = min_center_distance_closed_form(&ms);
                assert!((a - b).abs() < 1e-12, "q {q} k {k}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn reduction_identity_holds_for_ring() {
        let samples = sample_points(200, 1, 0.1, 10.0);
        for q in 1..=3 {
            for k in 2..=4 {
                let (ms, cs) = setup(q, k, -5.0, 1.0);
                let d = reduction_identity_check(&cs.v, &ms, &samples);
                assert!(d < 1e-11, "q {q} k {k}: {d}");
                if q == 1 {
                    assert_eq!(d, 0.0);
                }
            }
        }
    }

    #[test]
    fn reduction_identity_fails_without_symmetry() {
        let (ms, _) = setup(3, 2, -5.0, 1.0);
        let off = fields::bubble(BubbleParams::new(0.3, Vec3::new(0.7, 0.2, 0.1)).unwrap());
        let d = reduction_identity_check(&off, &ms, &sample_points(50, 1, 0.1, 10.0));
        assert!(d > 1e-3);
    }

    #[test]
    fn precondition_rejects_asymmetric_v() {
        let (ms, _) = setup(2, 2, -5.0, 1.0);
        let off = fields::bubble(BubbleParams::new(0.3, Vec3::new(0.7, 0.2, 0.1)).unwrap());
        let err = build_components(&fields::u(), &off, &ms).err();
        assert!(matches!(err, Some(Error::SymmetryViolation { .. })));
        let err = build_components(&off, &fields::v(&ms.cfg), &ms).err();
        assert!(matches!(err, Some(Error::SymmetryViolation { .. })));
    }

    #[test]
    fn two_paths_agree() {
        let (ms, cs) = setup(2, 2, -6.0, 1.5);
        let samples = sample_points(100, 2, 0.2, 5.0);
        let d = residual_agreement(&cs, &ms, &samples).unwrap();
        assert!(d < 1e-10, "{d}");
    }

    #[test]
    fn uncoupled_bubble_component_is_exact() {
        let (ms, cs) = setup(2, 3, 0.0, 0.0);
        for x in sample_points(30, 4, 0.1, 10.0) {
            let r = msystem_residual(&cs, &ms, x).unwrap();
            assert!(r.direct[2].abs() < 1e-12, "{}", r.direct[2]);
        }
    }

    #[test]
    fn residuals_are_rotated_copies() {
        let (ms, cs) = setup(3, 2, -6.0, 0.7);
        for x in sample_points(30, 5, 0.2, 5.0) {
            let r = msystem_residual(&cs, &ms, x).unwrap();
            for i in 2..=3 {
                let ri = msystem_residual(&cs, &ms, rotate(ms.angle(i), x)).unwrap();
                let scale = r.direct[i - 1].abs().max(1.0);
                assert!((ri.direct[0] - r.direct[i - 1]).abs() < 1e-10 * scale);
            }
        }
    }

    #[test]
    fn residuals_are_minus_error_densities() {
        let (ms, cs) = setup(3, 2, -6.0, 0.7);
        let e1 = error_field(ErrorKind::E1Tilde, &ms.cfg, &ms.regime);
        let e2 = error_field(ErrorKind::E2Tilde, &ms.cfg, &ms.regime);
        for x in sample_points(50, 6, 0.2, 5.0) {
            let r = msystem_residual(&cs, &ms, x).unwrap();
            let (a, b) = (e2.eval(x), e1.eval(x));
            assert!((r.nonlocal[0] + a).abs() < 1e-10 * a.abs().max(1.0));
            assert!((r.nonlocal[3] + b).abs() < 1e-10 * b.abs().max(1.0));
        }
    }
}
