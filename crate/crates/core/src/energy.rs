//! Energies, norms and interaction integrals of the ansatz `(U, V)`.

use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fields::{
    self, error_field, power_sum_excess, with_scratch, CouplingRegime, ErrorKind, Ring,
    ScalarField, SymmetryTag,
};
use crate::math::{self, PI};
use crate::quadrature::{Quadrature, QuadratureResult, QuadratureSpec, Region};
use crate::scaling::{constants, solve_delta_beta};
use crate::symmetry::{rotate, PolygonConfig, Vec3};

/// `‖U‖₆⁶ = ∫|∇U|² = 3√3π²/4`.
pub fn u_sextic_norm() -> f64 {
    3.0 * math::sqrt(3.0) * PI * PI / 4.0
}

/// `5∫U⁴(Z⁽⁰⁾)² = 15√3π²/64`, the squared norm of one kernel function.
pub fn z0_norm_squared() -> f64 {
    15.0 * math::sqrt(3.0) * PI * PI / 64.0
}

/// The three integrals of `𝒥_β(u,v) = ½∫(|∇u|²+|∇v|²) - ⅙∫(u₊⁶+v₊⁶) - (β/3)∫u₊³v₊³`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyReport {
    pub gradient_part: f64,
    pub sextic_part: f64,
    pub coupling_part: f64,
    pub total: f64,
    pub err_est: f64,
    pub converged: bool,
}

impl EnergyReport {
    fn assemble(beta: f64, parts: [QuadratureResult; 3]) -> Self {
        let [g, s, c] = parts;
        EnergyReport {
            gradient_part: g.value,
            sextic_part: s.value,
            coupling_part: c.value,
            total: 0.5 * g.value - s.value / 6.0 - beta / 3.0 * c.value,
            err_est: 0.5 * g.err_est + s.err_est / 6.0 + math::abs(beta) / 3.0 * c.err_est,
            converged: g.converged && s.converged && c.converged,
        }
    }
}

fn exact(value: f64) -> QuadratureResult {
    QuadratureResult {
        value,
        err_est: 0.0,
        n_evals: 0,
        converged: true,
    }
}

fn grad_sq(f: &ScalarField) -> Result<ScalarField> {
    if !f.has_gradient() {
        return Err(Error::InvalidParameter("field has no analytic gradient"));
    }
    let g = f.clone();
    Ok(
        ScalarField::new(move |x| g.gradient(x).map_or(f64::NAN, |d| d.norm2()))
            .with_hot_spots(f.hot_spots().to_vec()),
    )
}

fn positive_pow(f: &ScalarField, p: i32) -> ScalarField {
    let g = f.clone();
    ScalarField::new(move |x| math::powi(g.eval(x).max(0.0), p))
        .with_hot_spots(f.hot_spots().to_vec())
}

/// `𝒥_β(u, v)` for general fields with analytic gradients.
pub fn j_beta(
    u: &ScalarField,
    v: &ScalarField,
    regime: &CouplingRegime,
    quad: &Quadrature<'_>,
) -> Result<EnergyReport> {
    let whole = Region::WholeSpace;
    let g = quad.integrate(&fields::add(&grad_sq(u)?, &grad_sq(v)?), &whole)?;
    let s = quad.integrate(
        &fields::add(&positive_pow(u, 6), &positive_pow(v, 6)),
        &whole,
    )?;
    let c = quad.integrate(
        &fields::product(&positive_pow(u, 3), &positive_pow(v, 3)),
        &whole,
    )?;
    Ok(EnergyReport::assemble(regime.beta, [g, s, c]))
}

/// Rotation-invariant integrands built from one ring.
fn ring_field(
    cfg: &PolygonConfig,
    f: impl Fn(&Ring, Vec3) -> f64 + Send + Sync + 'static,
) -> ScalarField {
    let ring = Arc::new(Ring::new(cfg));
    let spots = ring.hot_spots();
    let r = ring.clone();
    ScalarField::new(move |x| f(&r, x))
        .with_tag(SymmetryTag::ROTATION)
        .with_hot_spots(spots)
}

/// `Σ_{i≠j} U_{t,i}⁵ U_{t,j}`.
fn cross5_field(cfg: &PolygonConfig) -> ScalarField {
    ring_field(cfg, |ring, x| {
        with_scratch(ring.len(), |b| {
            ring.values_into(x, b);
            let mut acc = 0.0;
            for i in 0..b.len() {
                let others: f64 = (0..b.len()).filter(|&j| j != i).map(|j| b[j]).sum();
                acc += math::powi(b[i], 5) * others;
            }
            acc
        })
    })
}

/// `V⁶ - Σ U_{t,j}⁶`.
fn excess6_field(cfg: &PolygonConfig) -> ScalarField {
    ring_field(cfg, |ring, x| {
        with_scratch(ring.len(), |b| {
            ring.values_into(x, b);
            power_sum_excess(b, 6)
        })
    })
}

/// `U³V³`.
fn u3v3_field(cfg: &PolygonConfig) -> ScalarField {
    ring_field(cfg, |ring, x| {
        math::powi(fields::eval_u(x) * ring.sum(x), 3)
    })
}

/// `𝒥_β(U, V)` split as `(k+1)/3 ‖U‖₆⁶ + excess`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnsatzEnergy {
    pub report: EnergyReport,
    /// `Σ_{i≠j}∫U_{t,i}⁵U_{t,j}`
    pub cross: QuadratureResult,
    /// `∫(V⁶ - ΣU_{t,j}⁶)`
    pub sextic_excess: QuadratureResult,
    /// `∫U³V³`
    pub coupling: QuadratureResult,
    /// `𝒥_β(U,V) - (k+1)/3 ‖U‖₆⁶`, assembled without the large constant.
    pub excess: f64,
    pub excess_err: f64,
}

/// `𝒥_β(U, V)` through the identities `∫|∇U_{t,j}|² = ‖U‖₆⁶` and
/// `∫∇U_{t,i}·∇U_{t,j} = ∫U_{t,i}⁵U_{t,j}`, so only interaction integrals are
/// computed by quadrature.
pub fn j_beta_ansatz(
    cfg: &PolygonConfig,
    regime: &CouplingRegime,
    quad: &Quadrature<'_>,
) -> Result<AnsatzEnergy> {
    let cross = quad.integrate_whole_by_wedges(&cross5_field(cfg), cfg)?;
    let sextic_excess = quad.integrate_whole_by_wedges(&excess6_field(cfg), cfg)?;
    let coupling = quad.integrate_whole_by_wedges(&u3v3_field(cfg), cfg)?;
    let s = u_sextic_norm();
    let n = (cfg.k + 1) as f64;
    let beta = regime.beta;
    let report = EnergyReport::assemble(
        beta,
        [
            exact(n * s + cross.value),
            exact(n * s + sextic_excess.value),
            coupling,
        ],
    );
    let report = EnergyReport {
        err_est: 0.5 * cross.err_est
            + sextic_excess.err_est / 6.0
            + math::abs(beta) / 3.0 * coupling.err_est,
        converged: cross.converged && sextic_excess.converged && coupling.converged,
        ..report
    };
    let excess = 0.5 * cross.value - sextic_excess.value / 6.0 - beta / 3.0 * coupling.value;
    Ok(AnsatzEnergy {
        report,
        cross,
        sextic_excess,
        coupling,
        excess,
        excess_err: report.err_est,
    })
}

/// Numerical energy of the ansatz against `(k+1)/3 ‖U‖₆⁶ + δ_β g(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionReport {
    pub k: usize,
    pub t: f64,
    pub beta: f64,
    pub delta: f64,
    pub f_numeric: f64,
    pub f_predicted: f64,
    /// `f_numeric - f_predicted`, computed from the excess to avoid cancellation.
    pub theta: f64,
    /// `|θ| |log δ| / δ`
    pub theta_scaled: f64,
    /// `C δ/|log δ|` for the envelope constant `C`.
    pub theta_bound: f64,
    pub envelope_constant: f64,
    pub err_est: f64,
    pub converged: bool,
}

pub const DEFAULT_ENVELOPE: f64 = 5.0;

pub fn f_beta_expansion_check(
    k: usize,
    t: f64,
    beta: f64,
    quad: &Quadrature<'_>,
) -> Result<ExpansionReport> {
    let c = constants(k)?;
    if !(t > 0.0) {
        return Err(Error::InvalidParameter("t must be positive"));
    }
    let delta = solve_delta_beta(beta)?.delta;
    let cfg = PolygonConfig::ring(k, t, delta)?;
    let regime = CouplingRegime::new(beta, 0.0, 1)?;
    let e = j_beta_ansatz(&cfg, &regime, quad)?;
    let base = (k + 1) as f64 / 3.0 * u_sextic_norm();
    let lead = delta * c.g(t);
    let theta = e.excess - lead;
    let logd = math::abs(math::ln(delta));
    Ok(ExpansionReport {
        k,
        t,
        beta,
        delta,
        f_numeric: base + e.excess,
        f_predicted: base + lead,
        theta,
        theta_scaled: math::abs(theta) * logd / delta,
        theta_bound: DEFAULT_ENVELOPE * delta / logd,
        envelope_constant: DEFAULT_ENVELOPE,
        err_est: e.excess_err,
        converged: e.report.converged,
    })
}

/// `L^{6/5}` norms of the four error densities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorNormReport {
    pub e1: QuadratureResult,
    pub e2: QuadratureResult,
    pub e1_tilde: QuadratureResult,
    pub e2_tilde: QuadratureResult,
}

pub fn error_norm_report(
    cfg: &PolygonConfig,
    regime: &CouplingRegime,
    quad: &Quadrature<'_>,
) -> Result<ErrorNormReport> {
    let norm = |kind| quad.lp_norm_by_wedges(&error_field(kind, cfg, regime), 1.2, cfg);
    let e1 = norm(ErrorKind::E1)?;
    let e2 = norm(ErrorKind::E2)?;
    let (e1_tilde, e2_tilde) = if regime.q == 1 {
        (e1, e2)
    } else {
        (norm(ErrorKind::E1Tilde)?, norm(ErrorKind::E2Tilde)?)
    };
    Ok(ErrorNormReport {
        e1,
        e2,
        e1_tilde,
        e2_tilde,
    })
}

/// The exponent pairs `(ν, γ)` for which the integral estimate is used.
pub const LEMMA_A1_PAIRS: [(f64, f64); 11] = [
    (3.6, 0.0),
    (0.0, 3.6),
    (2.4, 0.0),
    (0.0, 2.4),
    (4.8, 1.2),
    (0.0, 6.0),
    (3.0, 0.0),
    (1.5, 0.0),
    (0.0, 1.5),
    (4.5, 0.0),
    (0.0, 4.5),
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemmaA1Row {
    pub delta: f64,
    pub integral: f64,
    pub bound: f64,
    pub ratio: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaA1Report {
    pub nu: f64,
    pub gamma: f64,
    pub k: usize,
    pub t: f64,
    pub rows: Vec<LemmaA1Row>,
    /// Smallest `C` making the bound hold on the grid (largest ratio).
    pub fitted_c: f64,
}

/// `δ^{(ν+γ)/2} f₁ + (k log k)^γ f₂` with `C = 1`.
pub fn lemma_a1_bound(nu: f64, gamma: f64, k: usize, delta: f64) -> f64 {
    let kf = k as f64;
    let lk = math::ln(kf);
    let f1 = if nu < 2.0 {
        math::powf(kf, gamma - 1.0)
    } else if nu == 2.0 {
        math::powf(kf, gamma - 1.0) * math::powf(lk, gamma + 1.0)
    } else {
        math::powf(kf, nu + gamma - 3.0) * math::powf(lk, gamma)
    };
    let f2 = if nu < 3.0 {
        math::powf(delta, 0.5 * (nu + gamma)) * math::powf(kf, nu - 3.0)
    } else if nu == 3.0 {
        math::powf(delta, 0.5 * (3.0 + gamma)) * math::abs(math::ln(delta))
    } else {
        math::powf(delta, 3.0 + 0.5 * (gamma - nu))
    };
    math::powf(delta, 0.5 * (nu + gamma)) * f1 + math::powf(kf * lk, gamma) * f2
}

/// `∫_{Ω₁} U^{6-ν-γ} U_{t,1}^ν (Σ_{j≥2} U_{t,j})^γ` against its bound on a grid of `δ`.
pub fn lemma_a1_check(
    nu: f64,
    gamma: f64,
    k: usize,
    delta_grid: &[f64],
    t: f64,
    quad: &Quadrature<'_>,
) -> Result<LemmaA1Report> {
    if !(nu >= 0.0 && gamma >= 0.0 && nu + gamma <= 6.0) {
        return Err(Error::InvalidParameter(
            "need nu, gamma >= 0 and nu + gamma <= 6",
        ));
    }
    if k < 2 {
        return Err(Error::InvalidParameter("k must be at least 2"));
    }
    let mut rows = Vec::with_capacity(delta_grid.len());
    for &delta in delta_grid {
        if !(delta > 0.0 && delta < math::exp(-2.0)) {
            return Err(Error::InvalidParameter("delta must lie in (0, e^-2)"));
        }
        let cfg = PolygonConfig::ring(k, t, delta)?;
        let a = 6.0 - nu - gamma;
        let f = ring_field(&cfg, move |ring, x| {
            let u = fields::eval_u(x);
            let first = ring.value(0, x);
            let rest: f64 = (1..ring.len()).map(|j| ring.value(j, x)).sum();
            math::powf(u, a) * math::powf(first, nu) * math::powf(rest, gamma)
        });
        let bound = lemma_a1_bound(nu, gamma, k, delta);
        let spec = QuadratureSpec {
            abs_tol: quad.spec.abs_tol.min(1e-6 * bound),
            ..quad.spec
        };
        let r = quad.with_spec(spec).integrate(&f, &Region::Wedge(cfg))?;
        rows.push(LemmaA1Row {
            delta,
            integral: r.value,
            bound,
            ratio: r.value / bound,
            converged: r.converged,
        });
    }
    let fitted_c = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    Ok(LemmaA1Report {
        nu,
        gamma,
        k,
        t,
        rows,
        fitted_c,
    })
}

/// `‖Z_{k,t}‖²` split into the diagonal and cross terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZktNormReport {
    pub value: f64,
    /// `(15√3π²/64) k`
    pub limit: f64,
    pub diagonal: QuadratureResult,
    pub off_diagonal: QuadratureResult,
}

/// `‖Z_{k,t}‖² = Σ_{i,j} 5∫U_{t,i}⁴ Z_i Z_j`, by the kernel equation
/// `-ΔZ_i = 5U_{t,i}⁴Z_i`.
pub fn zkt_norm_check(cfg: &PolygonConfig, quad: &Quadrature<'_>) -> Result<ZktNormReport> {
    let diag = ring_field(cfg, |ring, x| {
        (0..ring.len())
            .map(|i| 5.0 * math::powi(ring.value(i, x), 4) * math::powi(ring.z_value(i, x), 2))
            .sum()
    });
    let off = ring_field(cfg, |ring, x| {
        let n = ring.len();
        let mut acc = 0.0;
        for i in 0..n {
            let others: f64 = (0..n).filter(|&j| j != i).map(|j| ring.z_value(j, x)).sum();
            acc += 5.0 * math::powi(ring.value(i, x), 4) * ring.z_value(i, x) * others;
        }
        acc
    });
    let diagonal = quad.integrate_whole_by_wedges(&diag, cfg)?;
    let off_diagonal = if cfg.k > 1 {
        quad.integrate_whole_by_wedges(&off, cfg)?
    } else {
        exact(0.0)
    };
    Ok(ZktNormReport {
        value: diagonal.value + off_diagonal.value,
        limit: z0_norm_squared() * cfg.k as f64,
        diagonal,
        off_diagonal,
    })
}

/// The three interaction integrals of the reduced equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReductionReport {
    /// `∫(V⁵ - ΣU_{t,j}⁵) Z_{k,t}`
    pub i1: QuadratureResult,
    /// `β∫U³V²Z_{k,t}`
    pub i2: QuadratureResult,
    /// `α∫V²(Σ_{r≥2}V_r)³Z_{k,t}`
    pub i3: QuadratureResult,
    /// `c̃₁ tδ`
    pub i1_leading: f64,
    /// `c̃₂ β (tδ)^{3/2} |log δ|`
    pub i2_leading: f64,
    /// `δ³ |log δ|`
    pub i3_scale: f64,
}

pub fn reduction_integrals(
    cfg: &PolygonConfig,
    regime: &CouplingRegime,
    quad: &Quadrature<'_>,
) -> Result<ReductionReport> {
    let c = constants(cfg.k)?;
    let (beta, alpha) = (regime.beta, regime.alpha);
    let f1 = ring_field(cfg, |ring, x| {
        with_scratch(ring.len(), |b| {
            ring.values_into(x, b);
            let z = ring.z_sum(x);
            power_sum_excess(b, 5) * z
        })
    });
    let f2 = ring_field(cfg, |ring, x| {
        let v = ring.sum(x);
        math::powi(fields::eval_u(x), 3) * v * v * ring.z_sum(x)
    });
    let i1 = quad.integrate_whole_by_wedges(&f1, cfg)?;
    let i2 = quad.integrate_whole_by_wedges(&f2, cfg)?.scaled(beta);
    let i3 = if alpha == 0.0 || regime.q < 2 {
        exact(0.0)
    } else {
        let q = regime.q;
        let k = cfg.k;
        let ring = Arc::new(Ring::new(cfg));
        let mut spots = ring.hot_spots();
        let angles: Vec<f64> = (2..=q)
            .map(|r| (r - 1) as f64 / q as f64 * core::f64::consts::TAU / k as f64)
            .collect();
        for &th in &angles {
            spots.extend(ring.centers().iter().map(|&cc| fields::HotSpot {
                center: rotate(-th, cc),
                scale: ring.scale(),
            }));
        }
        let r = ring.clone();
        let f3 = ScalarField::new(move |x| {
            let v = r.sum(x);
            let others: f64 = angles.iter().map(|&th| r.sum(rotate(th, x))).sum();
            v * v * math::powi(others, 3) * r.z_sum(x)
        })
        .with_tag(SymmetryTag::ROTATION)
        .with_hot_spots(spots);
        // The integral is O(δ³|log δ|), far below the default absolute floor.
        let floor = 1e-6 * math::powi(cfg.delta, 3) * math::abs(math::ln(cfg.delta));
        let spec = QuadratureSpec {
            abs_tol: quad.spec.abs_tol.min(floor),
            ..quad.spec
        };
        quad.with_spec(spec)
            .integrate_whole_by_wedges(&f3, cfg)?
            .scaled(alpha)
    };
    let td = cfg.scale();
    let logd = math::abs(math::ln(cfg.delta));
    Ok(ReductionReport {
        i1,
        i2,
        i3,
        i1_leading: c.c1_tilde * td,
        i2_leading: c.c2_tilde * beta * td * math::sqrt(td) * logd,
        i3_scale: math::powi(cfg.delta, 3) * logd,
    })
}

/// Intercept at `x = 0` of the least-squares line through `(x, y)`.
pub fn richardson_linear(x: &[f64], y: &[f64]) -> f64 {
    math::linear_fit(x, y).1
}

pub use crate::math::loglog_slope;

#[cfg(test)]
mod tests {
    use super::*;

    fn quad() -> Quadrature<'static> {
        Quadrature::new(QuadratureSpec::default())
    }

    #[test]
    fn energy_of_simple_pairs() {
        let q = quad();
        let r = CouplingRegime::new(-3.0, 0.0, 1).unwrap();
        let u = fields::u();
        let z = fields::zero();
        let s = u_sextic_norm();
        let e = j_beta(&u, &z, &r, &q).unwrap();
        assert!((e.total / (s / 3.0) - 1.0).abs() < 1e-6, "{e:?}");
        assert_eq!(j_beta(&z, &z, &r, &q).unwrap().total, 0.0);
        let e = j_beta(&u, &u, &r, &q).unwrap();
        assert!((e.total / ((2.0 + 3.0) / 3.0 * s) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn split_at_zero_coupling() {
        let q = quad();
        let r = CouplingRegime::new(0.0, 0.0, 1).unwrap();
        let cfg = PolygonConfig::ring(2, 1.0, 0.05).unwrap();
        let (u, v) = (fields::u(), fields::v(&cfg));
        let both = j_beta(&u, &v, &r, &q).unwrap().total;
        let a = j_beta(&u, &fields::zero(), &r, &q).unwrap().total;
        let b = j_beta(&fields::zero(), &v, &r, &q).unwrap().total;
        assert!((both - a - b).abs() < 1e-6 * both.abs());
    }

    #[test]
    fn ansatz_identities_match_direct_energy() {
        let q = quad();
        let cfg = PolygonConfig::ring(2, 1.0, 0.05).unwrap();
        let r = CouplingRegime::new(-4.0, 0.0, 1).unwrap();
        let direct = j_beta(&fields::u(), &fields::v(&cfg), &r, &q).unwrap();
        let fast = j_beta_ansatz(&cfg, &r, &q).unwrap();
        assert!((direct.total - fast.report.total).abs() < 1e-6 * direct.total.abs());
    }

    #[test]
    fn lemma_bound_branches() {
        let d = 1e-3;
        let b = lemma_a1_bound(3.0, 0.0, 2, d);
        let want =
            math::powf(d, 1.5) * (2.0f64).powf(0.0) + math::powf(d, 1.5) * math::abs(math::ln(d));
        assert!((b - want).abs() < 1e-15);
    }
}
