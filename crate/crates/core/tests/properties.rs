//! Property checks over random parameters.

use bubbleforge_core::fields::{self, power_sum_excess, BubbleParams};
use bubbleforge_core::multicomponent::{
    build_components, reduction_identity_check, residual_agreement, MSystemConfig,
};
use bubbleforge_core::scaling::{beta_for_delta, c_tilde_leading, constants, solve_delta_beta};
use bubbleforge_core::symmetry::{
    in_fundamental_domain, polygon_centers, rotate, sample_points, symmetry_violation,
};
use bubbleforge_core::{CouplingRegime, PolygonConfig, SymmetrySpec, SymmetryTag, Vec3};
use proptest::prelude::*;

fn point() -> impl Strategy<Value = Vec3> {
    (-5.0f64..5.0, -5.0f64..5.0, -5.0f64..5.0).prop_map(|(a, b, c)| Vec3::new(a, b, c))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bubble_is_scaling_covariant(d in 1e-4f64..1.0, x in point()) {
        let p = BubbleParams::new(d, Vec3::ZERO).unwrap();
        let lhs = fields::eval_bubble(&p, x);
        let rhs = fields::eval_u(x * (1.0 / d)) / d.sqrt();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs());
    }

    #[test]
    fn ring_field_has_tagged_symmetries(k in 2usize..7, t in 0.05f64..2.0, ld in -9.0f64..-2.0, seed in 0u64..100) {
        let cfg = PolygonConfig::ring(k, t, ld.exp()).unwrap();
        let v = fields::v(&cfg);
        let samples = sample_points(16, seed, 0.2, 5.0);
        let spec = SymmetrySpec::new(k, 1).unwrap();
        let worst = symmetry_violation(&v, spec, &samples, v.tag());
        prop_assert!(v.tag().contains(SymmetryTag::ROTATION | SymmetryTag::KELVIN));
        prop_assert!(worst < 1e-10, "{}", worst);
    }

    #[test]
    fn every_point_rotates_into_one_wedge(k in 2usize..9, x in point()) {
        prop_assume!(x.x1.abs() + x.x2.abs() > 1e-6);
        let cfg = PolygonConfig::ring(k, 1.0, 0.01).unwrap();
        let hits = (0..k)
            .filter(|&j| in_fundamental_domain(rotate(std::f64::consts::TAU * j as f64 / k as f64, x), &cfg))
            .count();
        prop_assert_eq!(hits, 1);
    }

    #[test]
    fn centers_sit_on_the_kelvin_sphere(k in 1usize..9, t in 0.01f64..5.0, d in 1e-6f64..0.1) {
        let cfg = PolygonConfig::ring(k, t, d).unwrap();
        for c in polygon_centers(&cfg) {
            let s = c.norm2() + (t * d) * (t * d);
            prop_assert!((s - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn power_excess_matches_naive(vals in prop::collection::vec(0.0f64..3.0, 1..8)) {
        let s: f64 = vals.iter().sum();
        let naive = s.powi(5) - vals.iter().map(|v| v.powi(5)).sum::<f64>();
        let mut buf = vals.clone();
        let got = power_sum_excess(&mut buf, 5);
        prop_assert!((got - naive).abs() <= 1e-12 * s.powi(5).max(1.0));
        prop_assert!(got >= 0.0);
    }

    #[test]
    fn scale_relation_round_trips(ld in -40.0f64..-2.5) {
        let d = ld.exp();
        let beta = beta_for_delta(d).unwrap();
        let s = solve_delta_beta(beta).unwrap();
        prop_assert!((s.delta / d - 1.0).abs() < 1e-10);
        prop_assert!(s.residual < 1e-12);
    }

    #[test]
    fn leading_term_is_scaled_g_tilde(k in 2usize..8, ld in -30.0f64..-3.0, t in 0.01f64..3.0) {
        let beta = beta_for_delta(ld.exp()).unwrap();
        let c = constants(k).unwrap();
        let d = solve_delta_beta(beta).unwrap().delta;
        let lead = c_tilde_leading(k, beta, t).unwrap() / d;
        prop_assert!((lead - c.g_tilde(t)).abs() < 1e-9 * c.c1 * t);
    }

    #[test]
    fn reduction_identity_for_random_systems(q in 1usize..5, k in 2usize..6, seed in 0u64..50) {
        let cfg = PolygonConfig::ring(k, 0.5, 0.02).unwrap();
        let ms = MSystemConfig::new(CouplingRegime::new(-4.0, 0.3, q).unwrap(), cfg).unwrap();
        let cs = build_components(&fields::u(), &fields::v(&cfg), &ms).unwrap();
        let samples = sample_points(20, seed, 0.1, 10.0);
        prop_assert!(reduction_identity_check(&cs.v, &ms, &samples) < 1e-11);
        prop_assert!(residual_agreement(&cs, &ms, &samples).unwrap() < 1e-9);
    }
}
