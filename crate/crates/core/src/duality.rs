//! Dual process and distinguished particle for the contact process and the
//! symmetric multitype contact process.
//!
//! Birth arrows of either label are read as unlabeled arrows; kill arrows
//! are rejected.
//!
//! The dual of `(x, t)` is stored as a tree of space-time segments. A segment
//! on site `y` starts at the time `u` of the arrow through which it was
//! reached and runs down to the last cross on `y` before `u`. Its children are
//! the arrows pointing into `y` along the segment, ordered by increasing time.
//! The tree is built depth first in that order, which is the ancestor
//! priority order of the symmetric model: the state of `(y, u)` is decided by
//! the straight continuation of `y` if it is alive, otherwise by the earliest
//! arrow into `y` whose tail is occupied. Space-time already covered by an
//! earlier (higher priority) segment is not explored twice, so each site holds
//! at most one live segment at any time.

use std::collections::{BTreeSet, HashMap};
use std::io::{self, Write};

use crate::engine::{replay, ArrowRule};
use crate::error::{Error, Result};
use crate::events::{EventKind, EventLog, GraphEvent};
use crate::lattice::{Lattice, SiteState, SpatialConfig};

/// Per-site lookup of crosses and incoming birth arrows.
#[derive(Debug, Clone)]
pub struct DualIndex {
    start: f64,
    horizon: f64,
    crosses: Vec<Vec<f64>>,
    arrows_in: Vec<Vec<(f64, u32)>>,
}

impl DualIndex {
    pub fn new(log: &EventLog) -> Result<Self> {
        if log.has_kind(EventKind::Kill) {
            return Err(Error::KillArrowsInLog);
        }
        let sites = log.params.sites();
        let mut crosses = vec![Vec::new(); sites];
        let mut arrows_in = vec![Vec::new(); sites];
        for e in &log.events {
            match e.kind {
                EventKind::Cross => crosses[e.head as usize].push(e.time),
                EventKind::Birth1 | EventKind::Birth2 => arrows_in[e.head as usize].push((e.time, e.tail)),
                EventKind::Kill => unreachable!(),
            }
        }
        Ok(Self { start: log.start, horizon: log.horizon, crosses, arrows_in })
    }

    pub fn sites(&self) -> usize {
        self.crosses.len()
    }

    /// Number of crosses on `y` strictly before `u`, and the latest of them.
    fn interval(&self, y: usize, u: f64) -> (usize, Option<f64>) {
        let c = &self.crosses[y];
        let k = c.partition_point(|&v| v < u);
        (k, if k > 0 { Some(c[k - 1]) } else { None })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentEnd {
    /// Hit a death mark.
    Cross,
    /// Continues inside a segment of higher priority.
    Merge,
    /// Reaches the beginning of the log.
    Start,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualNode {
    pub site: u32,
    pub top: f64,
    /// Lower end; `-inf` when the segment reaches the start of the log.
    pub bottom: f64,
    pub end: SegmentEnd,
    pub parent: Option<usize>,
}

impl DualNode {
    #[inline]
    pub fn alive_at(&self, r: f64) -> bool {
        self.bottom < r && r <= self.top
    }
}

/// Dual tree of one space-time point. `nodes` is in priority (preorder) order.
#[derive(Debug, Clone)]
pub struct DualTree {
    pub site: usize,
    pub time: f64,
    pub floor: f64,
    pub nodes: Vec<DualNode>,
}

impl DualTree {
    pub fn build(index: &DualIndex, x: usize, t: f64) -> Result<Self> {
        if x >= index.sites() {
            return Err(Error::config(format!("site {x} outside the torus")));
        }
        if !(index.start <= t && t <= index.horizon) {
            return Err(Error::config(format!("time {t} outside the log window [{}, {}]", index.start, index.horizon)));
        }
        let mut nodes = Vec::new();
        let mut covered: HashMap<(u32, usize), f64> = HashMap::new();
        // (site, top, parent)
        let mut stack: Vec<(u32, f64, Option<usize>)> = vec![(x as u32, t, None)];
        while let Some((y, u, parent)) = stack.pop() {
            let (k, last_cross) = index.interval(y as usize, u);
            let key = (y, k);
            let prev = covered.get(&key).copied();
            if prev.is_some_and(|p| p >= u) {
                continue;
            }
            covered.insert(key, u);
            let (bottom, end) = match (prev, last_cross) {
                (Some(p), _) => (p, SegmentEnd::Merge),
                (None, Some(c)) => (c, SegmentEnd::Cross),
                (None, None) => (f64::NEG_INFINITY, SegmentEnd::Start),
            };
            let id = nodes.len();
            nodes.push(DualNode { site: y, top: u, bottom, end, parent });
            let arrows = &index.arrows_in[y as usize];
            let lo = arrows.partition_point(|a| a.0 <= bottom);
            let hi = arrows.partition_point(|a| a.0 < u);
            // earliest arrow has the highest priority, so it is popped first
            for &(time, tail) in arrows[lo..hi].iter().rev() {
                stack.push((tail, time, Some(id)));
            }
        }
        Ok(Self { site: x, time: t, floor: index.start, nodes })
    }

    /// Sites of the dual at real time `r`, sorted.
    pub fn members_at(&self, r: f64) -> Vec<usize> {
        let mut v: Vec<usize> = self.nodes.iter().filter(|n| n.alive_at(r)).map(|n| n.site as usize).collect();
        v.sort_unstable();
        v
    }

    /// Highest-priority live node at real time `r`.
    pub fn first_member_at(&self, r: f64) -> Option<usize> {
        self.nodes.iter().position(|n| n.alive_at(r))
    }

    /// Whether the dual is still nonempty at real time `r`.
    pub fn alive_at(&self, r: f64) -> bool {
        self.nodes.iter().any(|n| n.alive_at(r))
    }

    /// Depth of node `i` (root has depth 0); panics on a broken parent chain.
    pub fn depth(&self, mut i: usize) -> usize {
        let mut d = 0;
        while let Some(p) = self.nodes[i].parent {
            assert!(p < i, "parent must precede child in preorder");
            i = p;
            d += 1;
        }
        d
    }
}

fn check_query(log: &EventLog, t: f64, s: f64) -> Result<()> {
    if !(0.0 <= s && s <= t - log.start) {
        return Err(Error::config(format!("dual time {s} outside [0, {}]", t - log.start)));
    }
    Ok(())
}

/// Sites `y` with a dual path from `(x, t)` down to `(y, t - s)`.
pub fn dual_set(log: &EventLog, x: usize, t: f64, s: f64) -> Result<Vec<usize>> {
    check_query(log, t, s)?;
    let index = DualIndex::new(log)?;
    Ok(DualTree::build(&index, x, t)?.members_at(t - s))
}

/// Forward configuration at time `t`, symmetric rules, events in `(0, t]`.
pub fn forward_at(initial: &SpatialConfig, log: &EventLog, t: f64) -> SpatialConfig {
    let events = log.until(t);
    let from = events.partition_point(|e| e.time <= 0.0);
    let mut cfg = initial.clone();
    replay(&mut cfg, &events[from..], ArrowRule::Unlabeled);
    cfg
}

/// Whether forward occupancy of `(x, t)` agrees with the dual hitting the
/// initially occupied set.
pub fn check_duality(initial: &SpatialConfig, log: &EventLog, x: usize, t: f64) -> Result<bool> {
    let index = DualIndex::new(log)?;
    let forward = forward_at(initial, log, t);
    check_duality_with(&index, initial, &forward, x, t)
}

pub fn check_duality_with(
    index: &DualIndex,
    initial: &SpatialConfig,
    forward: &SpatialConfig,
    x: usize,
    t: f64,
) -> Result<bool> {
    let tree = DualTree::build(index, x, t)?;
    let hits = tree.members_at(0.0).into_iter().any(|y| initial.get(y).is_occupied());
    Ok(hits == forward.get(x).is_occupied())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathPoint {
    /// Dual time at which the particle arrives at `site`.
    pub dual_time: f64,
    pub site: usize,
    /// Arrived by a jump after a death mark (false for the starting point).
    pub jump: bool,
}

/// Trajectory of the distinguished particle.
#[derive(Debug, Clone, PartialEq)]
pub struct AncestorPath {
    pub root_site: usize,
    pub root_time: f64,
    /// Largest dual time covered by the log.
    pub span: f64,
    pub points: Vec<PathPoint>,
    /// Dual time at which the dual process died, if it did.
    pub death: Option<f64>,
}

impl AncestorPath {
    pub fn position_at(&self, s: f64) -> Option<usize> {
        if self.death.is_some_and(|d| s >= d) || s > self.span {
            return None;
        }
        let k = self.points.partition_point(|p| p.dual_time <= s);
        (k > 0).then(|| self.points[k - 1].site)
    }

    pub fn alive_at(&self, s: f64) -> bool {
        self.position_at(s).is_some()
    }

    pub fn jumps(&self) -> impl Iterator<Item = &PathPoint> {
        self.points.iter().filter(|p| p.jump)
    }

    /// CSV `dual_time,x0,..,x{d-1},jump_flag,renewal_flag`. Renewal flags are
    /// approximate (finite lookahead); empty when not computed.
    pub fn write_csv<W: Write>(&self, lattice: &Lattice, renewals: Option<&RenewalScan>, mut w: W) -> io::Result<()> {
        let coords: Vec<String> = (0..lattice.dim()).map(|k| format!("x{k}")).collect();
        writeln!(w, "dual_time,{},jump_flag,renewal_flag", coords.join(","))?;
        for p in &self.points {
            let c: Vec<String> = lattice.coords(p.site).iter().map(|v| v.to_string()).collect();
            let flag = renewals
                .and_then(|r| r.points.iter().find(|q| q.dual_time == p.dual_time && q.site == p.site))
                .and_then(|q| q.flagged)
                .map_or(String::new(), |f| (f as u8).to_string());
            writeln!(w, "{},{},{},{flag}", p.dual_time, c.join(","), p.jump as u8)?;
        }
        Ok(())
    }
}

/// Follow the first ancestor of `(x, t)` down to the start of the log.
pub fn first_ancestor(log: &EventLog, x: usize, t: f64) -> Result<AncestorPath> {
    let index = DualIndex::new(log)?;
    let tree = DualTree::build(&index, x, t)?;
    Ok(ancestor_path(&tree))
}

pub fn ancestor_path(tree: &DualTree) -> AncestorPath {
    // sweep real time downward; at each breakpoint add nodes starting there
    // and drop nodes ending there
    let mut marks: Vec<(f64, bool, usize)> = Vec::with_capacity(2 * tree.nodes.len());
    for (i, n) in tree.nodes.iter().enumerate() {
        marks.push((n.top, true, i));
        if n.bottom.is_finite() {
            marks.push((n.bottom, false, i));
        }
    }
    marks.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut alive: BTreeSet<usize> = BTreeSet::new();
    let mut points: Vec<PathPoint> = Vec::new();
    let mut current: Option<usize> = None;
    let mut death = None;
    let mut k = 0;
    while k < marks.len() {
        let tau = marks[k].0;
        let mut died_at_cross = false;
        while k < marks.len() && marks[k].0 == tau {
            let (_, enter, i) = marks[k];
            if enter {
                alive.insert(i);
            } else {
                alive.remove(&i);
                if Some(i) == current && tree.nodes[i].end == SegmentEnd::Cross {
                    died_at_cross = true;
                }
            }
            k += 1;
        }
        let first = alive.first().copied();
        let s = tree.time - tau;
        match first {
            None => {
                death = Some(s);
                break;
            }
            Some(i) => {
                let site = tree.nodes[i].site as usize;
                if current.map(|c| tree.nodes[c].site as usize) != Some(site) {
                    points.push(PathPoint { dual_time: s, site, jump: died_at_cross });
                }
                current = Some(i);
            }
        }
    }
    AncestorPath { root_site: tree.site, root_time: tree.time, span: tree.time - tree.floor, points, death }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AncestorPrediction {
    /// The first ancestor lands on an occupied site of this type.
    Determined(SiteState),
    /// The first ancestor lands on an empty site, or the dual died out.
    Undetermined { dual_alive: bool },
}

/// Type of `(x, t)` read off the first ancestor, when it lands on an occupied site.
pub fn type_via_first_ancestor(
    initial: &SpatialConfig,
    log: &EventLog,
    x: usize,
    t: f64,
) -> Result<AncestorPrediction> {
    let index = DualIndex::new(log)?;
    predict_with(&index, initial, x, t)
}

pub fn predict_with(index: &DualIndex, initial: &SpatialConfig, x: usize, t: f64) -> Result<AncestorPrediction> {
    let tree = DualTree::build(index, x, t)?;
    Ok(match tree.first_member_at(0.0) {
        None => AncestorPrediction::Undetermined { dual_alive: false },
        Some(i) => match initial.get(tree.nodes[i].site as usize) {
            SiteState::Empty => AncestorPrediction::Undetermined { dual_alive: true },
            s => AncestorPrediction::Determined(s),
        },
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenewalPoint {
    pub dual_time: f64,
    pub site: usize,
    /// `Some(true)` if the dual of this point survives the lookahead window,
    /// `None` when the log does not reach far enough back.
    pub flagged: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Displacement {
    pub space: Vec<i64>,
    pub time: f64,
}

impl Displacement {
    pub fn norm(&self) -> f64 {
        self.space.iter().map(|&c| (c * c) as f64).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenewalScan {
    pub lookahead: f64,
    pub points: Vec<RenewalPoint>,
    /// Between consecutive flagged points.
    pub displacements: Vec<Displacement>,
}

/// Flag the jump points of `path` whose dual survives for `lookahead`
/// (an approximation of living forever).
pub fn renewal_scan(path: &AncestorPath, log: &EventLog, lattice: &Lattice, lookahead: f64) -> Result<RenewalScan> {
    if !(lookahead >= 0.0) {
        return Err(Error::config("lookahead must be >= 0"));
    }
    if log.has_kind(EventKind::Kill) {
        return Err(Error::KillArrowsInLog);
    }
    let mut points = Vec::new();
    for p in path.jumps() {
        let r = path.root_time - p.dual_time;
        let flagged = if lookahead == 0.0 {
            Some(true)
        } else if r - lookahead < log.start {
            None
        } else {
            Some(survives(&log.events, lattice.sites(), p.site, r, r - lookahead))
        };
        points.push(RenewalPoint { dual_time: p.dual_time, site: p.site, flagged });
    }
    let flagged: Vec<&RenewalPoint> = points.iter().filter(|p| p.flagged == Some(true)).collect();
    let displacements = flagged
        .windows(2)
        .map(|w| Displacement {
            space: lattice.displacement(w[0].site, w[1].site),
            time: w[1].dual_time - w[0].dual_time,
        })
        .collect();
    Ok(RenewalScan { lookahead, points, displacements })
}

/// Backward set evolution from `(z, from)`: is the dual nonempty at `until`?
fn survives(events: &[GraphEvent], sites: usize, z: usize, from: f64, until: f64) -> bool {
    let hi = events.partition_point(|e| e.time < from);
    let lo = events.partition_point(|e| e.time <= until);
    let mut member = vec![false; sites];
    member[z] = true;
    let mut count = 1usize;
    for e in events[lo..hi].iter().rev() {
        let h = e.head as usize;
        match e.kind {
            EventKind::Cross => {
                if member[h] {
                    member[h] = false;
                    count -= 1;
                    if count == 0 {
                        return false;
                    }
                }
            }
            EventKind::Birth1 | EventKind::Birth2 => {
                if member[h] && !member[e.tail as usize] {
                    member[e.tail as usize] = true;
                    count += 1;
                }
            }
            EventKind::Kill => {}
        }
    }
    count > 0
}

/// Least-squares slope of `-ln P(norm > r)` against `r`, a rough exponential
/// decay rate of the displacement tail. `None` with fewer than 3 distinct values.
pub fn tail_decay_rate(norms: &[f64]) -> Option<f64> {
    let mut v: Vec<f64> = norms.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut i = 0;
    while i < v.len() {
        let r = v[i];
        let exceed = v.iter().filter(|&&w| w > r).count() as f64;
        if exceed > 0.0 {
            xs.push(r);
            ys.push(-(exceed / n).ln());
        }
        while i < v.len() && v[i] == r {
            i += 1;
        }
    }
    if xs.len() < 3 {
        return None;
    }
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::ModelParams;

    fn log_with(events: Vec<(f64, EventKind, u32, u32)>, horizon: f64) -> EventLog {
        EventLog {
            params: ModelParams::new(4.0, 0.0, 0.0, 1.0, 1, 10),
            channels: vec![],
            start: 0.0,
            horizon,
            seed: 0,
            stream: 0,
            events: events
                .into_iter()
                .map(|(time, kind, tail, head)| GraphEvent { time, kind, tier: 0, tail, head })
                .collect(),
        }
    }

    #[test]
    fn zero_dual_time_is_the_root() {
        let log = log_with(vec![(1.0, EventKind::Birth1, 4, 5)], 3.0);
        assert_eq!(dual_set(&log, 5, 3.0, 0.0).unwrap(), vec![5]);
        let empty = log_with(vec![], 3.0);
        for s in [0.0, 1.0, 3.0] {
            assert_eq!(dual_set(&empty, 2, 3.0, s).unwrap(), vec![2]);
        }
    }

    #[test]
    fn single_arrow_adds_its_tail() {
        // arrow 4 -> 5 at u = 1, root (5, 3): tail joins at dual time 2
        let log = log_with(vec![(1.0, EventKind::Birth1, 4, 5)], 3.0);
        assert_eq!(dual_set(&log, 5, 3.0, 1.5).unwrap(), vec![5]);
        assert_eq!(dual_set(&log, 5, 3.0, 2.0).unwrap(), vec![4, 5]);
        assert_eq!(dual_set(&log, 5, 3.0, 3.0).unwrap(), vec![4, 5]);
    }

    #[test]
    fn rejects_kill_arrows() {
        let log = log_with(vec![(1.0, EventKind::Kill, 4, 5)], 3.0);
        assert_eq!(dual_set(&log, 5, 3.0, 1.0), Err(Error::KillArrowsInLog));
        assert!(first_ancestor(&log, 5, 3.0).is_err());
    }

    #[test]
    fn ancestor_without_events_stays_put() {
        let log = log_with(vec![], 3.0);
        let p = first_ancestor(&log, 7, 3.0).unwrap();
        assert_eq!(p.points, vec![PathPoint { dual_time: 0.0, site: 7, jump: false }]);
        assert!(p.alive_at(3.0));
        assert_eq!(p.death, None);
    }

    #[test]
    fn ancestor_jumps_at_the_cross() {
        // arrow 4 -> 5 at u = 2, cross on 5 at v = 1
        let log = log_with(vec![(1.0, EventKind::Cross, 5, 5), (2.0, EventKind::Birth1, 4, 5)], 3.0);
        let p = first_ancestor(&log, 5, 3.0).unwrap();
        assert_eq!(p.position_at(1.9), Some(5));
        assert_eq!(p.position_at(2.0), Some(4));
        assert_eq!(p.jumps().count(), 1);
        assert_eq!(p.jumps().next().unwrap().dual_time, 2.0);
    }

    #[test]
    fn ancestor_dies_with_the_dual() {
        let log = log_with(vec![(1.0, EventKind::Cross, 5, 5), (2.0, EventKind::Birth1, 4, 6)], 3.0);
        let p = first_ancestor(&log, 5, 3.0).unwrap();
        assert_eq!(p.death, Some(2.0));
        assert!(!p.alive_at(2.5));
    }

    #[test]
    fn lowest_branch_has_priority() {
        // arrows into 5 from 3 at u = 1.5 and from 4 at u = 2.5, cross on 5 at 1:
        // forward, the earlier arrow fills site 5 first
        let log = log_with(
            vec![(1.0, EventKind::Cross, 5, 5), (1.5, EventKind::Birth1, 3, 5), (2.5, EventKind::Birth1, 4, 5)],
            3.0,
        );
        let p = first_ancestor(&log, 5, 3.0).unwrap();
        assert_eq!(p.position_at(0.5), Some(5));
        assert_eq!(p.position_at(1.9), Some(5));
        assert_eq!(p.position_at(2.1), Some(3));
        let mut init = SpatialConfig::empty(1, 10);
        init.set(3, SiteState::Inhibitory);
        init.set(4, SiteState::Susceptible);
        assert_eq!(
            type_via_first_ancestor(&init, &log, 5, 3.0).unwrap(),
            AncestorPrediction::Determined(SiteState::Inhibitory)
        );
        assert_eq!(forward_at(&init, &log, 3.0).get(5), SiteState::Inhibitory);
    }

    #[test]
    fn duality_trivial_cases() {
        let log = log_with(vec![(1.0, EventKind::Birth1, 4, 5), (2.0, EventKind::Birth1, 5, 6)], 3.0);
        let empty = SpatialConfig::empty(1, 10);
        let full = SpatialConfig::filled(1, 10, SiteState::Inhibitory);
        for x in 0..10 {
            assert!(check_duality(&empty, &log, x, 3.0).unwrap());
            assert!(check_duality(&full, &log, x, 3.0).unwrap());
            assert!(forward_at(&full, &log, 3.0).get(x).is_occupied());
        }
    }

    #[test]
    fn renewal_lookahead_zero_flags_everything() {
        let log = log_with(vec![(1.0, EventKind::Cross, 5, 5), (2.0, EventKind::Birth1, 4, 5)], 3.0);
        let lat = Lattice::new(1, 1.0, 10).unwrap();
        let p = first_ancestor(&log, 5, 3.0).unwrap();
        let scan = renewal_scan(&p, &log, &lat, 0.0).unwrap();
        assert!(scan.points.iter().all(|q| q.flagged == Some(true)));
        // jump point (4, real time 1) needs 2 units below it: insufficient
        let scan = renewal_scan(&p, &log, &lat, 2.0).unwrap();
        assert_eq!(scan.points[0].flagged, None);
        let scan = renewal_scan(&p, &log, &lat, 0.5).unwrap();
        assert_eq!(scan.points[0].flagged, Some(true));
    }

    #[test]
    fn dying_point_is_never_flagged() {
        // jump onto 4 at real time 2, cross on 4 at real time 1
        let log = log_with(
            vec![(1.0, EventKind::Cross, 4, 4), (2.0, EventKind::Cross, 5, 5), (2.5, EventKind::Birth1, 4, 5)],
            3.0,
        );
        let lat = Lattice::new(1, 1.0, 10).unwrap();
        let p = first_ancestor(&log, 5, 3.0).unwrap();
        let scan = renewal_scan(&p, &log, &lat, 1.5).unwrap();
        assert_eq!(scan.points.len(), 1);
        assert_eq!(scan.points[0].flagged, Some(false));
    }

    #[test]
    fn decay_rate_of_an_exponential_sample() {
        let norms: Vec<f64> = (1..2000).map(|k| -(1.0 - k as f64 / 2000.0).ln() / 2.0).collect();
        let rate = tail_decay_rate(&norms).unwrap();
        assert!((rate - 2.0).abs() < 0.2, "{rate}");
    }
}
