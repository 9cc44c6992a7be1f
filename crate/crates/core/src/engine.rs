//! Event application, trajectory simulation, observables and outcome labels.

use std::io::{self, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::{model_channels, EventKind, EventLog, EventStream, GraphEvent};
use crate::lattice::{Lattice, ModelParams, SiteState, SpatialConfig};
use crate::rng::{stream_rng, Purpose, StreamKey};

/// How birth arrows are read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ArrowRule {
    /// A label-`i` arrow can only be used by a type-`i` tail.
    #[default]
    Labeled,
    /// Any birth arrow can be used by any occupied tail, which then passes its
    /// own type to the head. This is the symmetric multitype contact process.
    Unlabeled,
}

/// Apply one event under the allelopathic rules. Returns whether the head changed.
#[inline]
pub fn apply_event(config: &mut SpatialConfig, e: &GraphEvent) -> bool {
    apply_event_with(config, e, ArrowRule::Labeled)
}

#[inline]
pub fn apply_event_with(config: &mut SpatialConfig, e: &GraphEvent, rule: ArrowRule) -> bool {
    let head = e.head as usize;
    let h = config.get(head);
    let next = match e.kind {
        EventKind::Cross => SiteState::Empty,
        EventKind::Kill => {
            if h == SiteState::Susceptible && config.get(e.tail as usize) == SiteState::Inhibitory {
                SiteState::Empty
            } else {
                h
            }
        }
        EventKind::Birth1 | EventKind::Birth2 => {
            if h != SiteState::Empty {
                h
            } else {
                let t = config.get(e.tail as usize);
                let usable = match rule {
                    ArrowRule::Unlabeled => t.is_occupied(),
                    ArrowRule::Labeled => {
                        (e.kind == EventKind::Birth1 && t == SiteState::Inhibitory)
                            || (e.kind == EventKind::Birth2 && t == SiteState::Susceptible)
                    }
                };
                if usable {
                    t
                } else {
                    h
                }
            }
        }
    };
    if next != h {
        config.set(head, next);
        true
    } else {
        false
    }
}

/// Run a configuration through a slice of events.
pub fn replay(config: &mut SpatialConfig, events: &[GraphEvent], rule: ArrowRule) {
    for e in events {
        apply_event_with(config, e, rule);
    }
}

/// Independent product measure: 1 w.p. `p1`, 2 w.p. `p2`, else empty.
pub fn sample_initial(side: usize, dim: usize, p1: f64, p2: f64, seed: u64) -> Result<SpatialConfig> {
    sample_initial_with(side, dim, p1, p2, seed, StreamKey::replicate(0, Purpose::Initial))
}

pub fn sample_initial_with(
    side: usize,
    dim: usize,
    p1: f64,
    p2: f64,
    seed: u64,
    key: StreamKey,
) -> Result<SpatialConfig> {
    if !(p1 >= 0.0 && p2 >= 0.0 && p1 + p2 <= 1.0) {
        return Err(Error::config(format!("densities p1 = {p1}, p2 = {p2} must be >= 0 with sum <= 1")));
    }
    let mut rng = stream_rng(seed, key);
    let sites = side.pow(dim as u32);
    let states = (0..sites)
        .map(|_| {
            let u: f64 = rng.random();
            if u < p1 {
                SiteState::Inhibitory
            } else if u < p1 + p2 {
                SiteState::Susceptible
            } else {
                SiteState::Empty
            }
        })
        .collect();
    SpatialConfig::from_states(dim, side, states)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Events are discarded once applied.
    Streaming,
    /// Events are kept, up to `cap`.
    Recorded { cap: usize },
}

/// What to observe during a run.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSpec {
    pub times: Vec<f64>,
    pub snapshot_times: Vec<f64>,
    pub mode: Mode,
    pub key: StreamKey,
}

impl SampleSpec {
    /// `n + 1` equally spaced sample times on `[0, horizon]`.
    pub fn uniform(horizon: f64, n: usize) -> Self {
        let n = n.max(1);
        Self {
            times: (0..=n).map(|k| horizon * k as f64 / n as f64).collect(),
            snapshot_times: Vec::new(),
            mode: Mode::Streaming,
            key: StreamKey::replicate(0, Purpose::Events),
        }
    }

    pub fn endpoints(horizon: f64) -> Self {
        Self::uniform(horizon, 1)
    }

    pub fn recorded(mut self, cap: usize) -> Self {
        self.mode = Mode::Recorded { cap };
        self
    }

    pub fn snapshots(mut self, times: Vec<f64>) -> Self {
        self.snapshot_times = times;
        self
    }

    pub fn key(mut self, key: StreamKey) -> Self {
        self.key = key;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub config: SpatialConfig,
}

/// Species counts at the sample times, plus optional snapshots.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableSeries {
    pub sites: usize,
    pub horizon: f64,
    pub times: Vec<f64>,
    pub counts: Vec<[usize; 3]>,
    pub snapshots: Vec<Snapshot>,
    /// First time each species (1, 2) hit zero, if it did.
    pub extinction: [Option<f64>; 2],
    pub final_counts: [usize; 3],
}

impl ObservableSeries {
    pub fn densities(&self, k: usize) -> [f64; 3] {
        let n = self.sites as f64;
        self.counts[k].map(|c| c as f64 / n)
    }

    /// CSV with header `t,rho0,rho1,rho2,count1,count2`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,rho0,rho1,rho2,count1,count2")?;
        for (k, t) in self.times.iter().enumerate() {
            let r = self.densities(k);
            let c = self.counts[k];
            writeln!(w, "{t},{},{},{},{},{}", r[0], r[1], r[2], c[1], c[2])?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SimOutput {
    pub series: ObservableSeries,
    pub final_config: SpatialConfig,
    pub log: Option<EventLog>,
}

/// Simulate the allelopathic model from `initial` on `[0, horizon]`.
pub fn simulate(
    initial: &SpatialConfig,
    lattice: &Lattice,
    params: &ModelParams,
    horizon: f64,
    seed: u64,
    spec: &SampleSpec,
) -> Result<SimOutput> {
    params.validate()?;
    if initial.sites() != lattice.sites() || initial.dim() != params.dim || initial.side() != params.side {
        return Err(Error::config("initial configuration does not match the lattice"));
    }
    if !(horizon > 0.0) {
        return Err(Error::config(format!("horizon must be positive, got {horizon}")));
    }
    let mut times = spec.times.clone();
    let mut snap_times = spec.snapshot_times.clone();
    for t in times.iter().chain(&snap_times) {
        if !(0.0..=horizon).contains(t) {
            return Err(Error::config(format!("sample time {t} outside [0, {horizon}]")));
        }
    }
    times.sort_by(f64::total_cmp);
    snap_times.sort_by(f64::total_cmp);

    let channels = model_channels(params);
    let stream = EventStream::new(lattice, &channels, 0.0, horizon, stream_rng(seed, spec.key))?;
    let mut cfg = initial.clone();
    let mut recorded = match spec.mode {
        Mode::Recorded { .. } => Some(Vec::new()),
        Mode::Streaming => None,
    };
    let mut counts = Vec::with_capacity(times.len());
    let mut snapshots = Vec::with_capacity(snap_times.len());
    let mut extinction = [None, None];
    for (i, s) in [SiteState::Inhibitory, SiteState::Susceptible].into_iter().enumerate() {
        if cfg.count(s) == 0 {
            extinction[i] = Some(0.0);
        }
    }
    let (mut ti, mut si) = (0, 0);

    for e in stream {
        while ti < times.len() && times[ti] < e.time {
            counts.push(cfg.counts());
            ti += 1;
        }
        while si < snap_times.len() && snap_times[si] < e.time {
            snapshots.push(Snapshot { time: snap_times[si], config: cfg.clone() });
            si += 1;
        }
        if let Some(rec) = recorded.as_mut() {
            if let Mode::Recorded { cap } = spec.mode {
                if rec.len() >= cap {
                    return Err(Error::EventCap { cap, time: e.time });
                }
            }
            rec.push(e);
        } else if cfg.count(SiteState::Inhibitory) + cfg.count(SiteState::Susceptible) == 0 {
            // nothing can change any more
            break;
        }
        if apply_event(&mut cfg, &e) {
            for (i, s) in [SiteState::Inhibitory, SiteState::Susceptible].into_iter().enumerate() {
                if extinction[i].is_none() && cfg.count(s) == 0 {
                    extinction[i] = Some(e.time);
                }
            }
        }
    }
    while ti < times.len() {
        counts.push(cfg.counts());
        ti += 1;
    }
    while si < snap_times.len() {
        snapshots.push(Snapshot { time: snap_times[si], config: cfg.clone() });
        si += 1;
    }

    let log = recorded.map(|events| EventLog {
        params: *params,
        channels,
        start: 0.0,
        horizon,
        seed,
        stream: spec.key.stream_id(),
        events,
    });
    Ok(SimOutput {
        series: ObservableSeries {
            sites: cfg.sites(),
            horizon,
            times,
            counts,
            snapshots,
            extinction,
            final_counts: cfg.counts(),
        },
        final_config: cfg,
        log,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OutcomeLabel {
    Species1Wins,
    Species2Wins,
    BothExtinct,
    CoexistAtHorizon,
}

impl OutcomeLabel {
    pub const ALL: [OutcomeLabel; 4] = [
        OutcomeLabel::Species1Wins,
        OutcomeLabel::Species2Wins,
        OutcomeLabel::BothExtinct,
        OutcomeLabel::CoexistAtHorizon,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OutcomeLabel::Species1Wins => "species1_wins",
            OutcomeLabel::Species2Wins => "species2_wins",
            OutcomeLabel::BothExtinct => "both_extinct",
            OutcomeLabel::CoexistAtHorizon => "coexist_at_horizon",
        }
    }
}

/// Finite-horizon outcome. Extinction is absorbing, so a zero count at any
/// sample time is conclusive for that species.
pub fn classify_outcome(series: &ObservableSeries) -> OutcomeLabel {
    let extinct = |i: usize, k: usize| {
        series.extinction[i].is_some() || series.final_counts[k] == 0 || series.counts.iter().any(|c| c[k] == 0)
    };
    match (extinct(0, 1), extinct(1, 2)) {
        (true, true) => OutcomeLabel::BothExtinct,
        (false, true) => OutcomeLabel::Species1Wins,
        (true, false) => OutcomeLabel::Species2Wins,
        (false, false) => OutcomeLabel::CoexistAtHorizon,
    }
}

/// Binary portable pixmap of a planar configuration: empty white,
/// species 1 black, species 2 gray.
pub fn write_ppm<W: Write>(config: &SpatialConfig, mut w: W) -> Result<()> {
    if config.dim() != 2 {
        return Err(Error::config(format!("pixmaps need d = 2, got d = {}", config.dim())));
    }
    let l = config.side();
    let io = |e: io::Error| Error::config(format!("write failed: {e}"));
    write!(w, "P6\n{l} {l}\n255\n").map_err(io)?;
    let mut buf = Vec::with_capacity(3 * l * l);
    for s in config.states() {
        let v = match s {
            SiteState::Empty => 255u8,
            SiteState::Inhibitory => 0,
            SiteState::Susceptible => 128,
        };
        buf.extend_from_slice(&[v, v, v]);
    }
    w.write_all(&buf).map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(kind: EventKind, tail: u32, head: u32) -> GraphEvent {
        GraphEvent { time: 1.0, kind, tier: 0, tail, head }
    }

    fn pair(t: SiteState, h: SiteState) -> SpatialConfig {
        SpatialConfig::from_states(1, 3, vec![t, h, SiteState::Empty]).unwrap()
    }

    #[test]
    fn kill_arrow_empties_a_susceptible_head() {
        let mut c = pair(SiteState::Inhibitory, SiteState::Susceptible);
        assert!(apply_event(&mut c, &ev(EventKind::Kill, 0, 1)));
        assert_eq!(c.get(1), SiteState::Empty);
        // 2 -> 2 kill does nothing
        let mut c = pair(SiteState::Susceptible, SiteState::Susceptible);
        assert!(!apply_event(&mut c, &ev(EventKind::Kill, 0, 1)));
    }

    #[test]
    fn birth_needs_an_empty_head_and_matching_label() {
        let mut c = pair(SiteState::Inhibitory, SiteState::Susceptible);
        assert!(!apply_event(&mut c, &ev(EventKind::Birth1, 0, 1)));
        assert_eq!(c.get(1), SiteState::Susceptible);
        let mut c = pair(SiteState::Inhibitory, SiteState::Empty);
        assert!(!apply_event(&mut c, &ev(EventKind::Birth2, 0, 1)));
        assert!(apply_event(&mut c, &ev(EventKind::Birth1, 0, 1)));
        assert_eq!(c.get(1), SiteState::Inhibitory);
        let mut c = pair(SiteState::Inhibitory, SiteState::Empty);
        assert!(apply_event_with(&mut c, &ev(EventKind::Birth2, 0, 1), ArrowRule::Unlabeled));
        assert_eq!(c.get(1), SiteState::Inhibitory);
    }

    #[test]
    fn cross_empties_any_site() {
        for s in SiteState::ALL {
            let mut c = pair(SiteState::Empty, s);
            apply_event(&mut c, &ev(EventKind::Cross, 1, 1));
            assert_eq!(c.get(1), SiteState::Empty);
        }
    }

    #[test]
    fn initial_sampling_edge_cases() {
        let c = sample_initial(10, 2, 1.0, 0.0, 1).unwrap();
        assert_eq!(c.counts(), [0, 100, 0]);
        let c = sample_initial(10, 2, 0.0, 0.0, 1).unwrap();
        assert_eq!(c.counts(), [100, 0, 0]);
        assert!(sample_initial(10, 2, 0.7, 0.4, 1).is_err());
        assert!(sample_initial(10, 2, -0.1, 0.4, 1).is_err());
    }

    #[test]
    fn initial_counts_follow_binomial_moments() {
        // n = 10^4, p = 0.25: mean 2500, sd sqrt(1875)
        let c = sample_initial(100, 2, 0.25, 0.25, 5).unwrap();
        let sd = (10_000.0f64 * 0.25 * 0.75).sqrt();
        for k in [1, 2] {
            assert!((c.counts()[k] as f64 - 2500.0).abs() < 4.0 * sd, "{:?}", c.counts());
        }
    }

    #[test]
    fn empty_lattice_stays_empty() {
        let p = ModelParams::new(3.0, 3.0, 1.0, 1.0, 2, 10);
        let lat = Lattice::for_params(&p).unwrap();
        let out = simulate(&SpatialConfig::empty(2, 10), &lat, &p, 5.0, 1, &SampleSpec::uniform(5.0, 10)).unwrap();
        assert!(out.series.counts.iter().all(|c| c[0] == 100));
        assert_eq!(classify_outcome(&out.series), OutcomeLabel::BothExtinct);
    }

    fn series(counts: Vec<[usize; 3]>) -> ObservableSeries {
        ObservableSeries {
            sites: 10,
            horizon: 1.0,
            times: (0..counts.len()).map(|k| k as f64).collect(),
            final_counts: *counts.last().unwrap(),
            counts,
            snapshots: vec![],
            extinction: [None, None],
        }
    }

    #[test]
    fn outcome_labels() {
        assert_eq!(classify_outcome(&series(vec![[5, 3, 2], [7, 3, 0], [7, 3, 0]])), OutcomeLabel::Species1Wins);
        assert_eq!(classify_outcome(&series(vec![[5, 3, 2], [9, 0, 1]])), OutcomeLabel::Species2Wins);
        assert_eq!(classify_outcome(&series(vec![[5, 3, 2], [10, 0, 0]])), OutcomeLabel::BothExtinct);
        assert_eq!(classify_outcome(&series(vec![[5, 3, 2], [4, 4, 2]])), OutcomeLabel::CoexistAtHorizon);
    }

    #[test]
    fn ppm_header_and_colors() {
        let c = SpatialConfig::filled(2, 5, SiteState::Inhibitory);
        let mut buf = Vec::new();
        write_ppm(&c, &mut buf).unwrap();
        let header = b"P6\n5 5\n255\n";
        assert_eq!(&buf[..header.len()], header);
        assert_eq!(buf.len(), header.len() + 75);
        assert!(buf[header.len()..].iter().all(|&b| b == 0));
        assert!(write_ppm(&SpatialConfig::empty(1, 5), Vec::new()).is_err());
    }
}
