//! Cheap versions of the asymptotic checks, on two or three scales.

use bubbleforge_core::energy::{
    f_beta_expansion_check, loglog_slope, reduction_integrals, zkt_norm_check,
};
use bubbleforge_core::quadrature::Quadrature;
use bubbleforge_core::scaling::beta_for_delta;
use bubbleforge_core::{CouplingRegime, PolygonConfig, QuadratureSpec};

fn quad() -> Quadrature<'static> {
    Quadrature::new(QuadratureSpec::default())
}

#[test]
fn kernel_cross_terms_decay_linearly() {
    let q = quad();
    let deltas = [1e-2, 1e-3];
    let off: Vec<f64> = deltas
        .iter()
        .map(|&d| {
            let cfg = PolygonConfig::ring(2, 1.0, d).unwrap();
            zkt_norm_check(&cfg, &q).unwrap().off_diagonal.value
        })
        .collect();
    let s = loglog_slope(&deltas, &off);
    assert!((s - 1.0).abs() < 0.05, "{s}");
}

#[test]
fn first_interaction_integral_approaches_leading_term() {
    let q = quad();
    let d = (-10f64).exp();
    let beta = beta_for_delta(d).unwrap();
    let cfg = PolygonConfig::ring(2, 2.0 / 9.0, d).unwrap();
    let r = reduction_integrals(&cfg, &CouplingRegime::new(beta, 0.0, 1).unwrap(), &q).unwrap();
    assert!((r.i1.value / r.i1_leading - 1.0).abs() < 1e-3);
    assert_eq!(r.i3.value, 0.0);
    // the relative correction to I₂ is of order 1/|log δ|
    let ratio = r.i2.value / r.i2_leading;
    assert!(ratio > 1.0 && ratio < 1.0 + 6.0 / 10.0, "{ratio}");
}

#[test]
fn energy_remainder_is_below_leading_order() {
    let q = quad();
    let d = (-10f64).exp();
    let r = f_beta_expansion_check(2, 2.0 / 9.0, beta_for_delta(d).unwrap(), &q).unwrap();
    assert!(r.converged);
    // θ = O(δ/|log δ|)
    assert!(r.theta.abs() < d);
    assert!(r.theta_scaled < 20.0, "{}", r.theta_scaled);
}
