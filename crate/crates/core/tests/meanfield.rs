use allelo_core::meanfield::{
    classify, dulac_divergence, dulac_divergence_numeric, fixed_points, integrate, jacobian, rhs, DensityPair,
    IntegratorOptions, MeanFieldParams, Predicted, Stability,
};
use proptest::prelude::*;

fn params() -> impl Strategy<Value = MeanFieldParams> {
    (0.01f64..5.0, 0.01f64..5.0, 0.01f64..10.0).prop_map(|(a, b, g)| MeanFieldParams::new(a, b, g))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn fixed_points_are_zeros(p in params()) {
        for f in fixed_points(&p).all() {
            prop_assert!(f.residual <= 1e-12, "{:?}", f);
        }
    }

    #[test]
    fn interior_point_membership(p in params()) {
        let r = fixed_points(&p);
        let inside = p.beta1 < p.beta2 && p.beta2 < (1.0 + p.gamma) * p.beta1 - p.gamma;
        prop_assert_eq!(r.p12.unwrap().in_simplex, inside);
    }

    #[test]
    fn regions_agree_with_eigenvalues(p in params()) {
        let c = classify(&p);
        prop_assume!(!c.marginal);
        let stable = |f: Option<&allelo_core::meanfield::FixedPoint>| f.is_some_and(|f| f.stability == Stability::Stable);
        prop_assert_eq!(c.in_b0, stable(Some(&c.report.p0)));
        prop_assert_eq!(c.in_b1, stable(c.report.p1.as_ref()) && c.report.p1.unwrap().in_simplex);
        prop_assert_eq!(c.in_b2, stable(c.report.p2.as_ref()) && c.report.p2.unwrap().in_simplex);
        if c.report.p12.unwrap().in_simplex {
            prop_assert!(c.saddle_det.unwrap() < 0.0);
        }
        prop_assert!(c.predicted != Predicted::Marginal);
    }

    #[test]
    fn dulac_divergence_is_negative_and_matches_differences(p in params(), u1 in 0.01f64..0.98, frac in 0.01f64..0.99) {
        let u = DensityPair::new(u1, (1.0 - u1) * frac);
        let d = dulac_divergence(u, &p).unwrap();
        prop_assert!(d < 0.0);
        let num = dulac_divergence_numeric(u, &p, 1e-6).unwrap();
        prop_assert!((num - d).abs() <= 1e-6 * d.abs().max(1.0), "{} vs {}", num, d);
    }

    #[test]
    fn simplex_is_forward_invariant(p in params(), u1 in 0.0f64..1.0, frac in 0.0f64..1.0) {
        let u = DensityPair::new(u1, (1.0 - u1) * frac);
        let tr = integrate(u, &p, 30.0, &IntegratorOptions::default()).unwrap();
        prop_assert!(tr.simplex_excess < 1e-9);
        prop_assert!(tr.states.iter().all(|s| s.in_simplex(1e-9)));
    }

    #[test]
    fn jacobian_trace_equals_divergence(p in params(), u1 in 0.0f64..1.0, u2 in 0.0f64..1.0) {
        let u = DensityPair::new(u1, u2);
        let h = 1e-6;
        let d = (rhs(DensityPair::new(u1 + h, u2), &p).0 - rhs(DensityPair::new(u1 - h, u2), &p).0
            + rhs(DensityPair::new(u1, u2 + h), &p).1 - rhs(DensityPair::new(u1, u2 - h), &p).1) / (2.0 * h);
        let j = jacobian(u, &p);
        prop_assert!((d - j[0][0] - j[1][1]).abs() < 1e-6);
    }
}
