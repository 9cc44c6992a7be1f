//! Exact-event simulation of a two-species spatial competition model in which
//! the inhibitory species (type 1) raises the death rate of the susceptible
//! species (type 2) in proportion to its local density, together with the
//! analysis tools built on the same event streams: monotone and
//! grass-bush-tree couplings, the dual process and its distinguished
//! particle, the mean-field ODE and oriented site percolation.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coupling;
pub mod duality;
pub mod engine;
pub mod error;
pub mod events;
pub mod lattice;
pub mod meanfield;
pub mod percolation;
pub mod rng;

pub use engine::{classify_outcome, sample_initial, simulate, OutcomeLabel, SampleSpec, SimOutput};
pub use error::{Error, Result};
pub use events::{generate_events, EventKind, EventLog, GraphEvent};
pub use lattice::{Lattice, ModelParams, SiteState, SpatialConfig};
pub use rng::{stream_rng, Purpose, SimRng, StreamKey};
