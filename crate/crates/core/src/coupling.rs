//! Several processes driven by one graphical representation.
//!
//! Two constructions are provided:
//!
//! * monotone ladders, where processes differ in one parameter (`gamma`,
//!   `beta1` or `beta2`) and the process at level `j` additionally sees the
//!   arrows of tiers `1..=j`;
//! * the grass-bush-tree coupling, a pair `(xi, zeta)` updated jointly by
//!   [`gbt_transition`], valid when `gamma <= beta1`.
//!
//! Both check their sitewise ordering after every event, so a nonzero
//! violation count is always an implementation bug.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::engine::{apply_event, ObservableSeries};
use crate::error::{Error, Result};
use crate::events::{Channel, EventKind, EventStream, GraphEvent};
use crate::lattice::{Lattice, ModelParams, SiteState, SpatialConfig};
use crate::rng::{stream_rng, Purpose, StreamKey};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CouplingAxis {
    Gamma,
    Beta1,
    Beta2,
}

impl CouplingAxis {
    fn kind(self) -> EventKind {
        match self {
            CouplingAxis::Gamma => EventKind::Kill,
            CouplingAxis::Beta1 => EventKind::Birth1,
            CouplingAxis::Beta2 => EventKind::Birth2,
        }
    }

    /// Species whose set grows with the parameter, and the one that shrinks.
    fn order(self) -> (SiteState, SiteState) {
        match self {
            CouplingAxis::Gamma | CouplingAxis::Beta1 => (SiteState::Inhibitory, SiteState::Susceptible),
            CouplingAxis::Beta2 => (SiteState::Susceptible, SiteState::Inhibitory),
        }
    }

    pub fn value(self, p: &ModelParams) -> f64 {
        match self {
            CouplingAxis::Gamma => p.gamma,
            CouplingAxis::Beta1 => p.beta1,
            CouplingAxis::Beta2 => p.beta2,
        }
    }

    pub fn with_value(self, p: &ModelParams, v: f64) -> ModelParams {
        let mut q = *p;
        match self {
            CouplingAxis::Gamma => q.gamma = v,
            CouplingAxis::Beta1 => q.beta1 = v,
            CouplingAxis::Beta2 => q.beta2 = v,
        }
        q
    }
}

/// Channels realizing all `levels` of `axis` at once. The axis clock is split
/// into increments `levels[k] - levels[k - 1]` carried at tier `k`.
pub fn ladder_channels(params: &ModelParams, axis: CouplingAxis, levels: &[f64]) -> Result<Vec<Channel>> {
    if levels.is_empty() || levels.len() > u8::MAX as usize {
        return Err(Error::config("a ladder needs between 1 and 255 levels"));
    }
    if levels[0] < 0.0 || levels.windows(2).any(|w| !(w[0] <= w[1])) || levels.iter().any(|v| !v.is_finite()) {
        return Err(Error::config(format!("ladder levels must be finite, >= 0 and nondecreasing: {levels:?}")));
    }
    let mut channels = vec![Channel::new(EventKind::Cross, 1.0)];
    for kind in [EventKind::Kill, EventKind::Birth1, EventKind::Birth2] {
        if kind == axis.kind() {
            let mut prev = 0.0;
            for (k, &v) in levels.iter().enumerate() {
                channels.push(Channel::tiered(kind, k as u8, v - prev));
                prev = v;
            }
        } else {
            let rate = match kind {
                EventKind::Kill => params.gamma,
                EventKind::Birth1 => params.beta1,
                _ => params.beta2,
            };
            channels.push(Channel::new(kind, rate));
        }
    }
    Ok(channels)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub event: GraphEvent,
    pub site: usize,
    /// State of the site in every coupled process after the event.
    pub states: Vec<SiteState>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderingSample {
    pub time: f64,
    /// Species counts of every coupled process.
    pub counts: Vec<[usize; 3]>,
    /// Sites violating the ordering at this time (full scan).
    pub violating_sites: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingReport {
    pub horizon: f64,
    pub events: usize,
    pub violations: usize,
    /// Visits to pair states outside the closed set (grass-bush-tree only).
    pub outside_closed_set: usize,
    pub first_violation: Option<Violation>,
    pub samples: Vec<OrderingSample>,
}

impl CouplingReport {
    pub fn is_exact(&self) -> bool {
        self.violations == 0 && self.outside_closed_set == 0
    }

    /// CSV `t,process,count0,count1,count2,violating_sites`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,process,count0,count1,count2,violating_sites")?;
        for s in &self.samples {
            for (j, c) in s.counts.iter().enumerate() {
                writeln!(w, "{},{j},{},{},{},{}", s.time, c[0], c[1], c[2], s.violating_sites)?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct LadderOutput {
    pub report: CouplingReport,
    /// One series per level.
    pub series: Vec<ObservableSeries>,
    pub finals: Vec<SpatialConfig>,
}

fn ordered(axis: CouplingAxis, lo: SiteState, hi: SiteState) -> bool {
    let (up, down) = axis.order();
    (lo != up || hi == up) && (hi != down || lo == down)
}

fn check_times(times: &[f64], horizon: f64) -> Result<Vec<f64>> {
    if !(horizon > 0.0) {
        return Err(Error::config(format!("horizon must be positive, got {horizon}")));
    }
    let mut t = times.to_vec();
    if t.iter().any(|s| !(0.0..=horizon).contains(s)) {
        return Err(Error::config("sample times must lie in [0, horizon]"));
    }
    t.sort_by(f64::total_cmp);
    Ok(t)
}

/// Run every level of a monotone ladder from the same initial configuration
/// and the same clocks.
#[allow(clippy::too_many_arguments)]
pub fn run_ladder(
    initial: &SpatialConfig,
    lattice: &Lattice,
    params: &ModelParams,
    axis: CouplingAxis,
    levels: &[f64],
    horizon: f64,
    seed: u64,
    times: &[f64],
    key: StreamKey,
) -> Result<LadderOutput> {
    let channels = ladder_channels(params, axis, levels)?;
    for &v in levels {
        axis.with_value(params, v).validate()?;
    }
    if initial.sites() != lattice.sites() {
        return Err(Error::config("initial configuration does not match the lattice"));
    }
    let times = check_times(times, horizon)?;
    let stream = EventStream::new(lattice, &channels, 0.0, horizon, stream_rng(seed, key))?;
    let k = levels.len();
    let mut procs: Vec<SpatialConfig> = vec![initial.clone(); k];
    let mut extinction = vec![[None, None]; k];
    for (j, p) in procs.iter().enumerate() {
        for (i, s) in [SiteState::Inhibitory, SiteState::Susceptible].into_iter().enumerate() {
            if p.count(s) == 0 {
                extinction[j][i] = Some(0.0);
            }
        }
    }
    let mut report = CouplingReport {
        horizon,
        events: 0,
        violations: 0,
        outside_closed_set: 0,
        first_violation: None,
        samples: Vec::with_capacity(times.len()),
    };
    let mut ti = 0;
    let sample = |procs: &[SpatialConfig], time: f64| OrderingSample {
        time,
        counts: procs.iter().map(|p| p.counts()).collect(),
        violating_sites: (0..lattice.sites())
            .filter(|&x| procs.windows(2).any(|w| !ordered(axis, w[0].get(x), w[1].get(x))))
            .count(),
    };

    for e in stream {
        while ti < times.len() && times[ti] < e.time {
            report.samples.push(sample(&procs, times[ti]));
            ti += 1;
        }
        if procs.iter().all(|p| p.count(SiteState::Empty) == p.sites()) {
            break;
        }
        report.events += 1;
        let mut changed = false;
        for (j, p) in procs.iter_mut().enumerate() {
            if (e.tier as usize) <= j && apply_event(p, &e) {
                changed = true;
                for (i, s) in [SiteState::Inhibitory, SiteState::Susceptible].into_iter().enumerate() {
                    if extinction[j][i].is_none() && p.count(s) == 0 {
                        extinction[j][i] = Some(e.time);
                    }
                }
            }
        }
        if changed {
            let h = e.head as usize;
            if procs.windows(2).any(|w| !ordered(axis, w[0].get(h), w[1].get(h))) {
                report.violations += 1;
                if report.first_violation.is_none() {
                    report.first_violation =
                        Some(Violation { event: e, site: h, states: procs.iter().map(|p| p.get(h)).collect() });
                }
            }
        }
    }
    while ti < times.len() {
        report.samples.push(sample(&procs, times[ti]));
        ti += 1;
    }

    let series = (0..k)
        .map(|j| ObservableSeries {
            sites: lattice.sites(),
            horizon,
            times: times.clone(),
            counts: report.samples.iter().map(|s| s.counts[j]).collect(),
            snapshots: Vec::new(),
            extinction: extinction[j],
            final_counts: procs[j].counts(),
        })
        .collect();
    Ok(LadderOutput { report, series, finals: procs })
}

/// Couple the processes with kill rates `gamma_lo <= gamma_hi`.
#[allow(clippy::too_many_arguments)]
pub fn couple_gamma(
    initial: &SpatialConfig,
    lattice: &Lattice,
    params: &ModelParams,
    gamma_lo: f64,
    gamma_hi: f64,
    horizon: f64,
    seed: u64,
    times: &[f64],
) -> Result<CouplingReport> {
    if !(0.0 <= gamma_lo && gamma_lo <= gamma_hi) {
        return Err(Error::config(format!("need 0 <= gamma_lo <= gamma_hi, got {gamma_lo}, {gamma_hi}")));
    }
    let key = StreamKey::replicate(0, Purpose::Events);
    run_ladder(initial, lattice, params, CouplingAxis::Gamma, &[gamma_lo, gamma_hi], horizon, seed, times, key)
        .map(|o| o.report)
}

/// Couple the processes with species-2 birth rates `beta2_lo <= beta2_hi`.
#[allow(clippy::too_many_arguments)]
pub fn couple_birthrate(
    initial: &SpatialConfig,
    lattice: &Lattice,
    params: &ModelParams,
    beta2_lo: f64,
    beta2_hi: f64,
    horizon: f64,
    seed: u64,
    times: &[f64],
) -> Result<CouplingReport> {
    if !(0.0 <= beta2_lo && beta2_lo <= beta2_hi) {
        return Err(Error::config(format!("need 0 <= beta2_lo <= beta2_hi, got {beta2_lo}, {beta2_hi}")));
    }
    let key = StreamKey::replicate(0, Purpose::Events);
    run_ladder(initial, lattice, params, CouplingAxis::Beta2, &[beta2_lo, beta2_hi], horizon, seed, times, key)
        .map(|o| o.report)
}

/// Joint state of the allelopathic model (`a`) and the grass-bush-tree
/// system (`g`: 0 grass, 1 tree, 2 bush) at one site.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PairState {
    pub a: u8,
    pub g: u8,
}

impl PairState {
    pub const fn new(a: u8, g: u8) -> Self {
        Self { a, g }
    }

    pub fn in_closed_set(self) -> bool {
        CLOSED_SET.contains(&self)
    }
}

/// States reachable by the coupling from the diagonal.
pub const CLOSED_SET: [PairState; 6] = [
    PairState::new(0, 0),
    PairState::new(0, 1),
    PairState::new(1, 1),
    PairState::new(2, 0),
    PairState::new(2, 1),
    PairState::new(2, 2),
];

/// The event kinds of the coupling. `Kill` stands for the label-0 arrows
/// (rate gamma / N), `Birth1` for the label-1 arrows (rate (beta1 - gamma) / N).
pub const GBT_KINDS: [EventKind; 4] = [EventKind::Kill, EventKind::Birth1, EventKind::Birth2, EventKind::Cross];

type Row = (EventKind, (u8, u8), (u8, u8), (u8, u8));

/// Every `(label, tail, head before, head after)` where the head changes.
/// Crosses are omitted: they always produce (0, 0).
#[rustfmt::skip]
pub const GBT_TABLE: [Row; 28] = [
    (EventKind::Kill, (0, 1), (0, 0), (0, 1)),
    (EventKind::Kill, (0, 1), (2, 0), (2, 1)),
    (EventKind::Kill, (0, 1), (2, 2), (2, 1)),
    (EventKind::Kill, (1, 1), (0, 0), (1, 1)),
    (EventKind::Kill, (1, 1), (0, 1), (1, 1)),
    (EventKind::Kill, (1, 1), (2, 0), (0, 1)),
    (EventKind::Kill, (1, 1), (2, 1), (0, 1)),
    (EventKind::Kill, (1, 1), (2, 2), (0, 1)),
    (EventKind::Kill, (2, 1), (0, 0), (0, 1)),
    (EventKind::Kill, (2, 1), (2, 0), (2, 1)),
    (EventKind::Kill, (2, 1), (2, 2), (2, 1)),
    (EventKind::Birth1, (0, 1), (0, 0), (0, 1)),
    (EventKind::Birth1, (0, 1), (2, 0), (2, 1)),
    (EventKind::Birth1, (0, 1), (2, 2), (2, 1)),
    (EventKind::Birth1, (1, 1), (0, 0), (1, 1)),
    (EventKind::Birth1, (1, 1), (0, 1), (1, 1)),
    (EventKind::Birth1, (1, 1), (2, 0), (2, 1)),
    (EventKind::Birth1, (1, 1), (2, 2), (2, 1)),
    (EventKind::Birth1, (2, 1), (0, 0), (0, 1)),
    (EventKind::Birth1, (2, 1), (2, 0), (2, 1)),
    (EventKind::Birth1, (2, 1), (2, 2), (2, 1)),
    (EventKind::Birth2, (2, 0), (0, 0), (2, 0)),
    (EventKind::Birth2, (2, 0), (0, 1), (2, 1)),
    (EventKind::Birth2, (2, 1), (0, 0), (2, 0)),
    (EventKind::Birth2, (2, 1), (0, 1), (2, 1)),
    (EventKind::Birth2, (2, 2), (0, 0), (2, 2)),
    (EventKind::Birth2, (2, 2), (0, 1), (2, 1)),
    (EventKind::Birth2, (2, 2), (2, 0), (2, 2)),
];

/// Table lookup; identity for pairs not listed.
pub fn gbt_table_lookup(tail: PairState, head: PairState, kind: EventKind) -> Result<PairState> {
    validate_pair(tail)?;
    validate_pair(head)?;
    if kind == EventKind::Cross {
        return Ok(PairState::new(0, 0));
    }
    Ok(GBT_TABLE
        .iter()
        .find(|r| r.0 == kind && r.1 == (tail.a, tail.g) && r.2 == (head.a, head.g))
        .map_or(head, |r| PairState::new(r.3 .0, r.3 .1)))
}

fn validate_pair(p: PairState) -> Result<()> {
    if p.in_closed_set() {
        Ok(())
    } else {
        Err(Error::OutsideClosedSet(p.a, p.g))
    }
}

/// Allelopathic coordinate: label-0 arrows both give birth (onto 0) and kill (a 2).
fn allelopathic_coordinate(tail: u8, head: u8, kind: EventKind) -> u8 {
    match (kind, tail, head) {
        (EventKind::Cross, _, _) => 0,
        (EventKind::Kill, 1, 0) | (EventKind::Birth1, 1, 0) => 1,
        (EventKind::Kill, 1, 2) => 0,
        (EventKind::Birth2, 2, 0) => 2,
        _ => head,
    }
}

/// Grass-bush-tree coordinate: trees take grass and bushes, bushes take grass.
fn successional_coordinate(tail: u8, head: u8, kind: EventKind) -> u8 {
    match (kind, tail, head) {
        (EventKind::Cross, _, _) => 0,
        (EventKind::Kill | EventKind::Birth1, 1, 0 | 2) => 1,
        (EventKind::Birth2, 2, 0) => 2,
        _ => head,
    }
}

/// Update of the head of an arrow (or the site of a cross) in the coupling.
pub fn gbt_transition(tail: PairState, head: PairState, kind: EventKind) -> Result<PairState> {
    validate_pair(tail)?;
    validate_pair(head)?;
    Ok(PairState::new(allelopathic_coordinate(tail.a, head.a, kind), successional_coordinate(tail.g, head.g, kind)))
}

/// Grass-bush-tree channels: label 0 at gamma, label 1 at beta1 - gamma.
pub fn gbt_channels(params: &ModelParams) -> Result<Vec<Channel>> {
    if params.gamma > params.beta1 {
        return Err(Error::config(format!(
            "grass-bush-tree coupling needs gamma <= beta1, got gamma = {} > beta1 = {}",
            params.gamma, params.beta1
        )));
    }
    Ok(vec![
        Channel::new(EventKind::Cross, 1.0),
        Channel::new(EventKind::Kill, params.gamma),
        Channel::new(EventKind::Birth1, params.beta1 - params.gamma),
        Channel::new(EventKind::Birth2, params.beta2),
    ])
}

#[derive(Debug, Clone)]
pub struct GbtOutput {
    pub report: CouplingReport,
    pub allelopathic: SpatialConfig,
    pub successional: SpatialConfig,
    /// Per sample: whether the 2s of the allelopathic coordinate contain the 2s of the other.
    pub susceptible_dominates: Vec<bool>,
}

/// Run the coupling from the diagonal `(initial, initial)`.
#[allow(clippy::too_many_arguments)]
pub fn couple_gbt(
    initial: &SpatialConfig,
    lattice: &Lattice,
    params: &ModelParams,
    horizon: f64,
    seed: u64,
    times: &[f64],
    key: StreamKey,
) -> Result<GbtOutput> {
    params.validate()?;
    let channels = gbt_channels(params)?;
    if initial.sites() != lattice.sites() {
        return Err(Error::config("initial configuration does not match the lattice"));
    }
    let times = check_times(times, horizon)?;
    let stream = EventStream::new(lattice, &channels, 0.0, horizon, stream_rng(seed, key))?;
    let mut a = initial.clone();
    let mut g = initial.clone();
    let mut report = CouplingReport {
        horizon,
        events: 0,
        violations: 0,
        outside_closed_set: 0,
        first_violation: None,
        samples: Vec::with_capacity(times.len()),
    };
    let mut dominates = Vec::with_capacity(times.len());
    let mut ti = 0;
    let mut sample = |a: &SpatialConfig, g: &SpatialConfig, time: f64, report: &mut CouplingReport| {
        let violating =
            (0..a.sites()).filter(|&x| !PairState::new(a.get(x) as u8, g.get(x) as u8).in_closed_set()).count();
        dominates
            .push((0..a.sites()).all(|x| g.get(x) != SiteState::Susceptible || a.get(x) == SiteState::Susceptible));
        report.samples.push(OrderingSample { time, counts: vec![a.counts(), g.counts()], violating_sites: violating });
    };

    for e in stream {
        while ti < times.len() && times[ti] < e.time {
            sample(&a, &g, times[ti], &mut report);
            ti += 1;
        }
        report.events += 1;
        let (t, h) = (e.tail as usize, e.head as usize);
        let tail = PairState::new(a.get(t) as u8, g.get(t) as u8);
        let head = PairState::new(a.get(h) as u8, g.get(h) as u8);
        let next = match gbt_transition(tail, head, e.kind) {
            Ok(n) => n,
            Err(_) => {
                // already counted when the bad state was produced
                PairState::new(
                    allelopathic_coordinate(tail.a, head.a, e.kind),
                    successional_coordinate(tail.g, head.g, e.kind),
                )
            }
        };
        if next != head {
            a.set(h, SiteState::from_u8(next.a).expect("valid state"));
            g.set(h, SiteState::from_u8(next.g).expect("valid state"));
            if !next.in_closed_set() {
                report.outside_closed_set += 1;
                report.violations += 1;
                if report.first_violation.is_none() {
                    report.first_violation = Some(Violation { event: e, site: h, states: vec![a.get(h), g.get(h)] });
                }
            }
        }
    }
    while ti < times.len() {
        sample(&a, &g, times[ti], &mut report);
        ti += 1;
    }
    Ok(GbtOutput { report, allelopathic: a, successional: g, susceptible_dominates: dominates })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_pairs() -> Vec<PairState> {
        (0..3).flat_map(|a| (0..3).map(move |g| PairState::new(a, g))).collect()
    }

    #[test]
    fn table_rows_from_the_transition_list() {
        let t = |a: (u8, u8), b: (u8, u8), k| {
            gbt_transition(PairState::new(a.0, a.1), PairState::new(b.0, b.1), k).unwrap()
        };
        assert_eq!(t((1, 1), (2, 0), EventKind::Kill), PairState::new(0, 1));
        assert_eq!(t((1, 1), (2, 0), EventKind::Birth1), PairState::new(2, 1));
        assert_eq!(t((2, 1), (0, 0), EventKind::Birth2), PairState::new(2, 0));
    }

    #[test]
    fn table_matches_rules_everywhere() {
        for tail in CLOSED_SET {
            for head in CLOSED_SET {
                for kind in GBT_KINDS {
                    assert_eq!(
                        gbt_table_lookup(tail, head, kind).unwrap(),
                        gbt_transition(tail, head, kind).unwrap(),
                        "{tail:?} -> {head:?} via {kind:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn closed_set_is_closed() {
        for tail in CLOSED_SET {
            for head in CLOSED_SET {
                for kind in GBT_KINDS {
                    assert!(gbt_transition(tail, head, kind).unwrap().in_closed_set());
                }
            }
        }
    }

    #[test]
    fn closed_set_is_exactly_the_ordered_pairs() {
        for p in all_pairs() {
            let ordered = (p.a != 1 || p.g == 1) && (p.g != 2 || p.a == 2);
            assert_eq!(p.in_closed_set(), ordered, "{p:?}");
        }
    }

    #[test]
    fn rejects_pairs_outside_the_set() {
        let bad = PairState::new(1, 0);
        assert_eq!(gbt_transition(bad, PairState::new(0, 0), EventKind::Kill), Err(Error::OutsideClosedSet(1, 0)));
        assert!(gbt_transition(PairState::new(0, 0), PairState::new(0, 2), EventKind::Cross).is_err());
    }

    #[test]
    fn first_coordinate_is_the_allelopathic_update() {
        // label 1, 2 and crosses act as the plain events; label 0 acts as a
        // birth-1 arrow followed by a kill arrow
        let lattice_free = |kinds: &[EventKind], t: u8, h: u8| {
            let mut c = SpatialConfig::from_states(
                1,
                3,
                vec![SiteState::from_u8(t).unwrap(), SiteState::from_u8(h).unwrap(), SiteState::Empty],
            )
            .unwrap();
            for &k in kinds {
                apply_event(&mut c, &GraphEvent { time: 1.0, kind: k, tier: 0, tail: 0, head: 1 });
            }
            c.get(1) as u8
        };
        for tail in CLOSED_SET {
            for head in CLOSED_SET {
                let a = |k| gbt_transition(tail, head, k).unwrap().a;
                assert_eq!(a(EventKind::Kill), lattice_free(&[EventKind::Birth1, EventKind::Kill], tail.a, head.a));
                assert_eq!(a(EventKind::Birth1), lattice_free(&[EventKind::Birth1], tail.a, head.a));
                assert_eq!(a(EventKind::Birth2), lattice_free(&[EventKind::Birth2], tail.a, head.a));
                assert_eq!(a(EventKind::Cross), 0);
            }
        }
    }

    #[test]
    fn gbt_requires_gamma_at_most_beta1() {
        let p = ModelParams::new(1.0, 3.0, 2.0, 1.0, 1, 10);
        assert!(matches!(gbt_channels(&p), Err(Error::Config(_))));
    }

    #[test]
    fn ladder_rejects_decreasing_levels() {
        let p = ModelParams::new(2.0, 3.0, 1.0, 1.0, 1, 10);
        assert!(ladder_channels(&p, CouplingAxis::Gamma, &[2.0, 1.0]).is_err());
        assert!(ladder_channels(&p, CouplingAxis::Gamma, &[-1.0, 1.0]).is_err());
        let ch = ladder_channels(&p, CouplingAxis::Beta2, &[1.0, 3.0, 3.0]).unwrap();
        let b2: Vec<_> = ch.iter().filter(|c| c.kind == EventKind::Birth2).map(|c| (c.tier, c.rate)).collect();
        assert_eq!(b2, vec![(0, 1.0), (1, 2.0), (2, 0.0)]);
    }
}
