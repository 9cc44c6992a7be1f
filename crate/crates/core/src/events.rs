//! The graphical representation: Poisson clocks on vertices (crosses) and
//! directed edges (labeled arrows).
//!
//! Instead of one clock per edge, events are drawn from the superposition of
//! all clocks: a single exponential stream of total rate
//! `sites * sum(channel rates)`, each event attributed to a channel with
//! probability proportional to its rate, to a uniform tail site and, for
//! arrows, to a uniform neighbor of the tail. This has the same law as the
//! independent per-edge clocks.

use std::fmt;
use std::io::{self, Write};

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Lattice, ModelParams};
use crate::rng::{stream_rng, Purpose, SimRng, StreamKey};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventKind {
    /// Label-0 arrow: a 1 at the tail empties a 2 at the head.
    Kill,
    /// Label-1 arrow: a 1 at the tail gives birth onto an empty head.
    Birth1,
    /// Label-2 arrow: a 2 at the tail gives birth onto an empty head.
    Birth2,
    /// Death mark at a vertex.
    Cross,
}

impl EventKind {
    pub fn is_arrow(self) -> bool {
        self != EventKind::Cross
    }

    pub fn is_birth(self) -> bool {
        matches!(self, EventKind::Birth1 | EventKind::Birth2)
    }

    pub fn code(self) -> &'static str {
        match self {
            EventKind::Kill => "K",
            EventKind::Birth1 => "B1",
            EventKind::Birth2 => "B2",
            EventKind::Cross => "X",
        }
    }
}

/// One mark of the graphical representation. For crosses `tail == head`.
///
/// `tier` is only used by coupled constructions: a process at coupling level
/// `j` sees the event iff `tier <= j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphEvent {
    pub time: f64,
    pub kind: EventKind,
    pub tier: u8,
    pub tail: u32,
    pub head: u32,
}

impl fmt::Display for GraphEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.17e} {} {} {}", self.time, self.kind.code(), self.tail, self.head)
    }
}

/// A Poisson clock family. `rate` is per site: crosses ring at `rate` per
/// vertex, arrows at `rate / N` per directed edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    pub kind: EventKind,
    pub tier: u8,
    pub rate: f64,
}

impl Channel {
    pub fn new(kind: EventKind, rate: f64) -> Self {
        Self { kind, tier: 0, rate }
    }

    pub fn tiered(kind: EventKind, tier: u8, rate: f64) -> Self {
        Self { kind, tier, rate }
    }
}

/// The four clock families of the allelopathic model.
pub fn model_channels(params: &ModelParams) -> Vec<Channel> {
    vec![
        Channel::new(EventKind::Cross, 1.0),
        Channel::new(EventKind::Kill, params.gamma),
        Channel::new(EventKind::Birth1, params.beta1),
        Channel::new(EventKind::Birth2, params.beta2),
    ]
}

/// Lazily generated event stream on `(start, horizon]`.
pub struct EventStream<'a> {
    lattice: &'a Lattice,
    rng: SimRng,
    channels: Vec<Channel>,
    cumulative: Vec<f64>,
    total_rate: f64,
    time: f64,
    horizon: f64,
}

impl<'a> EventStream<'a> {
    pub fn new(lattice: &'a Lattice, channels: &[Channel], start: f64, horizon: f64, rng: SimRng) -> Result<Self> {
        if !(horizon > start) {
            return Err(Error::config(format!("horizon {horizon} must exceed start {start}")));
        }
        let mut channels: Vec<Channel> = channels.to_vec();
        for c in &channels {
            if !(c.rate.is_finite() && c.rate >= 0.0) {
                return Err(Error::config(format!("channel {:?} has invalid rate {}", c.kind, c.rate)));
            }
        }
        channels.retain(|c| c.rate > 0.0);
        let mut acc = 0.0;
        let cumulative = channels
            .iter()
            .map(|c| {
                acc += c.rate;
                acc
            })
            .collect();
        Ok(Self { lattice, rng, total_rate: acc * lattice.sites() as f64, channels, cumulative, time: start, horizon })
    }

    pub fn total_rate(&self) -> f64 {
        self.total_rate
    }
}

impl Iterator for EventStream<'_> {
    type Item = GraphEvent;

    fn next(&mut self) -> Option<GraphEvent> {
        if self.total_rate <= 0.0 {
            return None;
        }
        let next = loop {
            let dt: f64 = Exp1.sample(&mut self.rng);
            let t = self.time + dt / self.total_rate;
            // measure-zero tie in exact arithmetic; redraw on fp collision
            if t > self.time {
                break t;
            }
        };
        if next > self.horizon {
            self.time = self.horizon;
            self.total_rate = 0.0;
            return None;
        }
        self.time = next;
        let per_site = *self.cumulative.last().expect("nonempty");
        let u = self.rng.random::<f64>() * per_site;
        let idx = self.cumulative.iter().position(|&c| u < c).unwrap_or(self.channels.len() - 1);
        let ch = self.channels[idx];
        let tail = self.rng.random_range(0..self.lattice.sites());
        let head = if ch.kind.is_arrow() {
            self.lattice.neighbor(tail, self.rng.random_range(0..self.lattice.degree()))
        } else {
            tail
        };
        Some(GraphEvent { time: next, kind: ch.kind, tier: ch.tier, tail: tail as u32, head: head as u32 })
    }
}

/// A recorded realization of the graphical representation.
#[derive(Debug, Clone, PartialEq)]
pub struct EventLog {
    pub params: ModelParams,
    pub channels: Vec<Channel>,
    pub start: f64,
    pub horizon: f64,
    pub seed: u64,
    pub stream: u64,
    pub events: Vec<GraphEvent>,
}

impl EventLog {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn has_kind(&self, kind: EventKind) -> bool {
        self.events.iter().any(|e| e.kind == kind)
    }

    /// Events with `start < time <= until`, in time order.
    pub fn until(&self, until: f64) -> &[GraphEvent] {
        let n = self.events.partition_point(|e| e.time <= until);
        &self.events[..n]
    }

    /// Exchange the two birth labels, as used by the type-swap symmetry.
    pub fn label_swapped(&self) -> Self {
        let mut out = self.clone();
        std::mem::swap(&mut out.params.beta1, &mut out.params.beta2);
        for e in &mut out.events {
            e.kind = match e.kind {
                EventKind::Birth1 => EventKind::Birth2,
                EventKind::Birth2 => EventKind::Birth1,
                k => k,
            };
        }
        out
    }

    /// Line-oriented text export: `time kind tail head`.
    pub fn write_text<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "# start {} horizon {} seed {} stream {}", self.start, self.horizon, self.seed, self.stream)?;
        for e in &self.events {
            writeln!(w, "{e}")?;
        }
        Ok(())
    }
}

/// Options for generating a recorded log.
#[derive(Debug, Clone, Copy)]
pub struct LogSpec {
    pub start: f64,
    pub horizon: f64,
    pub seed: u64,
    pub key: StreamKey,
    /// Refuse to record more than this many events.
    pub cap: usize,
}

impl LogSpec {
    pub const DEFAULT_CAP: usize = 50_000_000;

    pub fn new(horizon: f64, seed: u64) -> Self {
        Self { start: 0.0, horizon, seed, key: StreamKey::replicate(0, Purpose::Events), cap: Self::DEFAULT_CAP }
    }

    pub fn replicate(mut self, r: u32) -> Self {
        self.key = StreamKey::replicate(r, Purpose::Events);
        self
    }

    pub fn key(mut self, key: StreamKey) -> Self {
        self.key = key;
        self
    }

    pub fn start(mut self, start: f64) -> Self {
        self.start = start;
        self
    }

    pub fn cap(mut self, cap: usize) -> Self {
        self.cap = cap;
        self
    }
}

/// Record the graphical representation of the model on `[0, horizon]`.
pub fn generate_events(params: &ModelParams, lattice: &Lattice, horizon: f64, seed: u64) -> Result<EventLog> {
    generate_log(params, lattice, &model_channels(params), LogSpec::new(horizon, seed))
}

/// Record an arbitrary channel set.
pub fn generate_log(params: &ModelParams, lattice: &Lattice, channels: &[Channel], spec: LogSpec) -> Result<EventLog> {
    params.validate()?;
    let rng = stream_rng(spec.seed, spec.key);
    let stream = EventStream::new(lattice, channels, spec.start, spec.horizon, rng)?;
    let mut events = Vec::new();
    for e in stream {
        if events.len() >= spec.cap {
            return Err(Error::EventCap { cap: spec.cap, time: e.time });
        }
        events.push(e);
    }
    Ok(EventLog {
        params: *params,
        channels: channels.to_vec(),
        start: spec.start,
        horizon: spec.horizon,
        seed: spec.seed,
        stream: spec.key.stream_id(),
        events,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_kill_arrows_without_gamma() {
        let p = ModelParams::new(2.0, 3.0, 0.0, 1.0, 1, 20);
        let lat = Lattice::for_params(&p).unwrap();
        let log = generate_events(&p, &lat, 10.0, 1).unwrap();
        assert!(!log.has_kind(EventKind::Kill));
        assert!(log.has_kind(EventKind::Cross));
    }

    #[test]
    fn events_are_valid_and_strictly_ordered() {
        let p = ModelParams::new(2.0, 3.0, 1.0, 1.5, 2, 9);
        let lat = Lattice::for_params(&p).unwrap();
        let log = generate_events(&p, &lat, 5.0, 3).unwrap();
        assert!(log.events.windows(2).all(|w| w[0].time < w[1].time));
        for e in &log.events {
            assert!(e.time > 0.0 && e.time <= 5.0);
            if e.kind.is_arrow() {
                assert!(lat.is_edge(e.tail as usize, e.head as usize));
            } else {
                assert_eq!(e.tail, e.head);
            }
        }
    }

    #[test]
    fn rejects_nonpositive_horizon() {
        let p = ModelParams::new(2.0, 3.0, 1.0, 1.0, 1, 10);
        let lat = Lattice::for_params(&p).unwrap();
        assert!(generate_events(&p, &lat, 0.0, 1).is_err());
        assert!(generate_events(&p, &lat, -1.0, 1).is_err());
    }

    #[test]
    fn cap_is_enforced() {
        let p = ModelParams::new(2.0, 3.0, 1.0, 1.0, 1, 10);
        let lat = Lattice::for_params(&p).unwrap();
        let err = generate_log(&p, &lat, &model_channels(&p), LogSpec::new(10.0, 1).cap(100)).unwrap_err();
        assert!(matches!(err, Error::EventCap { cap: 100, .. }));
    }

    #[test]
    fn deterministic_given_seed() {
        let p = ModelParams::new(2.0, 3.0, 1.0, 1.0, 2, 6);
        let lat = Lattice::for_params(&p).unwrap();
        let a = generate_events(&p, &lat, 3.0, 11).unwrap();
        let b = generate_events(&p, &lat, 3.0, 11).unwrap();
        let c = generate_events(&p, &lat, 3.0, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.events, c.events);
    }
}
