use allelo_core::percolation::{estimate_theta, percolate, InitialWet, PercSpec};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn wet_sets_grow_with_p(seed in any::<u64>(), p in 0.0f64..1.0, dp in 0.0f64..0.5, dim in 1usize..3) {
        let lo = percolate(&PercSpec::new(p, dim, 20, seed)).unwrap();
        let hi = percolate(&PercSpec::new((p + dp).min(1.0), dim, 20, seed)).unwrap();
        prop_assert!(lo.wet_flags().iter().zip(hi.wet_flags()).all(|(&a, &b)| !a || b));
        prop_assert!(lo.cluster_flags().iter().zip(hi.cluster_flags()).all(|(&a, &b)| !a || b));
        prop_assert!(lo.check_invariants() && hi.check_invariants());
    }

    #[test]
    fn origin_start_gives_the_cluster(seed in any::<u64>(), p in 0.4f64..0.9) {
        let spec = PercSpec { initial: InitialWet::Origin, ..PercSpec::new(p, 1, 30, seed) };
        let s = percolate(&spec).unwrap();
        prop_assert_eq!(s.wet_flags(), s.cluster_flags());
    }
}

#[test]
fn supercritical_wet_density_stays_positive() {
    let alive = (0..100u64)
        .filter(|&seed| {
            let s = percolate(&PercSpec::new(0.9, 1, 200, seed)).unwrap();
            s.wet_density(200) > 0.0
        })
        .count();
    assert!(alive >= 95, "{alive}");
}

#[test]
fn theta_increases_with_p() {
    let lo = estimate_theta(0.6, 1, 200, 500, 3).unwrap();
    let hi = estimate_theta(0.8, 1, 200, 500, 3).unwrap();
    assert!(hi.hits >= lo.hits);
    assert!(hi.theta_hat > lo.theta_hat);
    assert!(hi.ci_lo <= hi.theta_hat && hi.theta_hat <= hi.ci_hi);
}
