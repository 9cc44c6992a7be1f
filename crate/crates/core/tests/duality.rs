use allelo_core::duality::{
    check_duality, first_ancestor, forward_at, renewal_scan, type_via_first_ancestor, AncestorPrediction, DualIndex,
    DualTree,
};
use allelo_core::events::{generate_log, Channel, EventKind, EventLog, LogSpec};
use allelo_core::{sample_initial, Lattice, ModelParams, SiteState};
use proptest::prelude::*;

fn symmetric_log(side: usize, beta: f64, horizon: f64, seed: u64) -> (Lattice, EventLog) {
    let p = ModelParams::new(beta, beta, 0.0, 1.0, 1, side);
    let lat = Lattice::for_params(&p).unwrap();
    let channels = [Channel::new(EventKind::Cross, 1.0), Channel::new(EventKind::Birth1, beta)];
    let log = generate_log(&p, &lat, &channels, LogSpec::new(horizon, seed)).unwrap();
    (lat, log)
}

/// Sites reachable from `(x, t)` by dual paths down to real time `r`, by
/// sweeping the events backwards and growing the set along arrows.
fn brute_force_dual(log: &EventLog, sites: usize, x: usize, t: f64, r: f64) -> Vec<usize> {
    let mut member = vec![false; sites];
    member[x] = true;
    for e in log.events.iter().rev() {
        if e.time > t || e.time <= r {
            continue;
        }
        let h = e.head as usize;
        match e.kind {
            EventKind::Cross => member[h] = false,
            _ => {
                if member[h] {
                    member[e.tail as usize] = true;
                }
            }
        }
    }
    (0..sites).filter(|&y| member[y]).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dual_tree_matches_backward_sweep(seed in any::<u64>(), x in 0usize..15, frac in 0.0f64..1.0) {
        let (_, log) = symmetric_log(15, 3.0, 4.0, seed);
        let index = DualIndex::new(&log).unwrap();
        let tree = DualTree::build(&index, x, 4.0).unwrap();
        for r in [0.0, 4.0 * frac, 2.0] {
            prop_assert_eq!(tree.members_at(r), brute_force_dual(&log, 15, x, 4.0, r), "r = {}", r);
        }
        for (i, n) in tree.nodes.iter().enumerate() {
            prop_assert!(n.bottom < n.top);
            if let Some(p) = n.parent {
                prop_assert!(p < i);
            }
        }
    }

    #[test]
    fn forward_occupancy_equals_dual_hitting(seed in any::<u64>(), density in 0.05f64..0.8) {
        let (_, log) = symmetric_log(20, 4.0, 5.0, seed);
        let init = sample_initial(20, 1, density, 0.0, seed ^ 0xabc).unwrap();
        for x in 0..20 {
            prop_assert!(check_duality(&init, &log, x, 5.0).unwrap());
        }
    }

    #[test]
    fn first_ancestor_predicts_forward_type(seed in any::<u64>()) {
        let (_, log) = symmetric_log(20, 4.0, 5.0, seed);
        let init = sample_initial(20, 1, 0.15, 0.15, seed.wrapping_add(1)).unwrap();
        let fwd = forward_at(&init, &log, 5.0);
        for x in 0..20 {
            match type_via_first_ancestor(&init, &log, x, 5.0).unwrap() {
                AncestorPrediction::Determined(s) => prop_assert_eq!(s, fwd.get(x)),
                AncestorPrediction::Undetermined { dual_alive: false } => prop_assert_eq!(fwd.get(x), SiteState::Empty),
                AncestorPrediction::Undetermined { dual_alive: true } => {}
            }
        }
    }

    #[test]
    fn distinguished_particle_stays_in_the_dual(seed in any::<u64>(), x in 0usize..20) {
        let (_, log) = symmetric_log(20, 4.0, 6.0, seed);
        let path = first_ancestor(&log, x, 6.0).unwrap();
        for k in 0..=60 {
            let s = 0.1 * k as f64;
            if let Some(y) = path.position_at(s) {
                prop_assert!(brute_force_dual(&log, 20, x, 6.0, 6.0 - s).contains(&y), "s = {}", s);
            }
        }
    }
}

#[test]
fn renewal_flags_need_enough_history() {
    let (lat, log) = symmetric_log(40, 4.0, 30.0, 17);
    let path = first_ancestor(&log, 0, 30.0).unwrap();
    let scan = renewal_scan(&path, &log, &lat, 5.0).unwrap();
    assert_eq!(scan.points.len(), path.jumps().count());
    for p in &scan.points {
        let r = 30.0 - p.dual_time;
        assert_eq!(p.flagged.is_none(), r - 5.0 < 0.0);
    }
    let flagged = scan.points.iter().filter(|p| p.flagged == Some(true)).count();
    assert_eq!(scan.displacements.len(), flagged.saturating_sub(1));
}

#[test]
fn kill_arrows_rejected() {
    let p = ModelParams::new(2.0, 2.0, 1.0, 1.0, 1, 10);
    let lat = Lattice::for_params(&p).unwrap();
    let log = allelo_core::generate_events(&p, &lat, 2.0, 1).unwrap();
    assert!(DualIndex::new(&log).is_err());
}
