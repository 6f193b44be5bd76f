//! Learning timed behavior models of discrete-event production plants,
//! detecting timing and functional anomalies against them, and exporting
//! plant structure, model, and anomalies as a queryable RDF knowledge graph.
//!
//! The crate is organized as a pipeline of independent stages, each with its
//! own file format:
//!
//! - [`event`] — signals, state vectors, coalesced events, sample logs
//! - [`learner`] — online timed-automaton learning from event streams
//! - [`detector`] — replaying unseen streams, wrong-timing / unknown-event
//!   classification, syndrome grouping
//! - [`sim`] — a deterministic five-tank mixing plant that produces training
//!   and fault-injected sample logs
//! - [`kg`] — IRIs, triples, graphs, Turtle, and basic graph-pattern queries
//! - [`map`] — the alignment vocabulary and the plant / automaton / anomaly
//!   mappings into the graph
//! - [`pipeline`] — file-to-file commands wiring the stages together, used
//!   by the `takt` binary
//!
//! See the crate examples for one runnable program per stage.

pub mod detector;
pub mod event;
pub mod kg;
pub mod learner;
pub mod map;
pub mod pipeline;
pub mod sim;
