//! Signals, state vectors, and coalesced events.
//!
//! A plant is observed through a fixed, ordered set of discrete IO signals.
//! Raw per-signal samples are folded into [`Event`]s: sets of simultaneous
//! value changes, where "simultaneous" means "within the same controller
//! cycle window". The sequence of events (with timestamps) is what the
//! learner and the detector consume.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{BufRead, Write};

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Discrete signal values. Valves and pumps use 0/1; multi-valued discrete
/// actuators are admitted by keeping this an integer.
pub type SignalValue = i64;

#[derive(Debug, Error)]
pub enum EventError {
    #[error("signal {0:?} is not part of the signal ordering")]
    UnknownSignal(String),
    #[error("timestamps are not monotonic: {found} ms after {prev} ms")]
    NonMonotonicTimestamps { prev: u64, found: u64 },
    #[error("inconsistent old value for {signal:?}: expected {expected}, state holds {found}")]
    InconsistentOldValue {
        signal: String,
        expected: SignalValue,
        found: SignalValue,
    },
    #[error("event is empty")]
    EmptyEvent,
    #[error("signal {0:?} appears more than once in one event")]
    DuplicateSignal(String),
    #[error("change for {signal:?} restates its old value {value}")]
    NoopChange { signal: String, value: SignalValue },
    #[error("signal ordering is invalid: {0}")]
    BadOrdering(String),
    #[error("state vector has length {found}, signal ordering has length {expected}")]
    VectorLengthMismatch { expected: usize, found: usize },
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Identifier of one discrete IO signal, e.g. `PumpP201`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SignalId(String);

impl SignalId {
    pub fn new(name: impl Into<String>) -> Self {
        SignalId(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SignalId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for SignalId {
    fn from(s: &str) -> Self {
        SignalId(s.to_owned())
    }
}

/// The fixed order in which signals form a [`StateVector`]. Established once
/// per plant and never changed afterwards; all vectors and events are
/// interpreted against it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<SignalId>", into = "Vec<SignalId>")]
pub struct SignalOrdering {
    ids: Vec<SignalId>,
    index: HashMap<SignalId, usize>,
}

impl SignalOrdering {
    pub fn new(ids: Vec<SignalId>) -> Result<Self, EventError> {
        if ids.is_empty() {
            return Err(EventError::BadOrdering("no signals".into()));
        }
        let mut index = HashMap::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            if id.as_str().is_empty() {
                return Err(EventError::BadOrdering("empty signal name".into()));
            }
            if index.insert(id.clone(), i).is_some() {
                return Err(EventError::BadOrdering(format!(
                    "duplicate signal {:?}",
                    id.as_str()
                )));
            }
        }
        Ok(SignalOrdering { ids, index })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[SignalId] {
        &self.ids
    }

    pub fn position(&self, id: &SignalId) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// All-zero vector, the usual "everything off" plant idle state.
    pub fn zero_vector(&self) -> StateVector {
        StateVector(vec![0; self.ids.len()])
    }

    /// Applies an event to a state vector, checking that every change's old
    /// value matches the vector. A mismatch signals log corruption or a
    /// desynchronized reader and is reported rather than papered over.
    pub fn apply_event(&self, u: &StateVector, e: &Event) -> Result<StateVector, EventError> {
        if u.len() != self.len() {
            return Err(EventError::VectorLengthMismatch {
                expected: self.len(),
                found: u.len(),
            });
        }
        let mut out = u.clone();
        for ch in e.changes() {
            let idx = self
                .position(&ch.signal)
                .ok_or_else(|| EventError::UnknownSignal(ch.signal.as_str().to_owned()))?;
            if u.0[idx] != ch.old {
                return Err(EventError::InconsistentOldValue {
                    signal: ch.signal.as_str().to_owned(),
                    expected: ch.old,
                    found: u.0[idx],
                });
            }
            out.0[idx] = ch.new;
        }
        Ok(out)
    }
}

impl TryFrom<Vec<SignalId>> for SignalOrdering {
    type Error = EventError;
    fn try_from(ids: Vec<SignalId>) -> Result<Self, Self::Error> {
        SignalOrdering::new(ids)
    }
}

impl From<SignalOrdering> for Vec<SignalId> {
    fn from(o: SignalOrdering) -> Self {
        o.ids
    }
}

/// One snapshot of all discrete IO values, in signal ordering.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateVector(Vec<SignalValue>);

impl StateVector {
    pub fn new(values: Vec<SignalValue>) -> Self {
        StateVector(values)
    }

    pub fn values(&self) -> &[SignalValue] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for StateVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

/// One signal's value change inside an event.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignalChange {
    pub signal: SignalId,
    pub old: SignalValue,
    pub new: SignalValue,
}

/// A set of simultaneous signal changes.
///
/// Identity is the set of `(signal, new value)` pairs: the old values are
/// implied by the source state the event fires from, so two observations of
/// the same labeled transition compare equal regardless of where the old
/// values were recorded. Old values are still carried for integrity checks
/// in [`SignalOrdering::apply_event`].
#[derive(Debug, Clone)]
pub struct Event {
    // sorted by signal id, no duplicates, old != new everywhere
    changes: Vec<SignalChange>,
}

impl Event {
    pub fn new(mut changes: Vec<SignalChange>) -> Result<Self, EventError> {
        if changes.is_empty() {
            return Err(EventError::EmptyEvent);
        }
        changes.sort_by(|a, b| a.signal.cmp(&b.signal));
        for pair in changes.windows(2) {
            if pair[0].signal == pair[1].signal {
                return Err(EventError::DuplicateSignal(
                    pair[0].signal.as_str().to_owned(),
                ));
            }
        }
        for ch in &changes {
            if ch.old == ch.new {
                return Err(EventError::NoopChange {
                    signal: ch.signal.as_str().to_owned(),
                    value: ch.new,
                });
            }
        }
        Ok(Event { changes })
    }

    pub fn changes(&self) -> &[SignalChange] {
        &self.changes
    }

    /// The identity-relevant `(signal, new value)` pairs, in signal order.
    pub fn label(&self) -> impl Iterator<Item = (&SignalId, SignalValue)> {
        self.changes.iter().map(|c| (&c.signal, c.new))
    }

    /// Map form of the label, as used by the wire formats.
    pub fn new_values(&self) -> BTreeMap<SignalId, SignalValue> {
        self.changes
            .iter()
            .map(|c| (c.signal.clone(), c.new))
            .collect()
    }
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.label().eq(other.label())
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.label().cmp(other.label())
    }
}

impl std::hash::Hash for Event {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        for (id, v) in self.label() {
            id.hash(state);
            v.hash(state);
        }
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, c) in self.changes.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}:{}\u{2192}{}", c.signal, c.old, c.new)?;
        }
        write!(f, "}}")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ChangeWire {
    old: SignalValue,
    new: SignalValue,
}

impl Serialize for Event {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let map: BTreeMap<&str, ChangeWire> = self
            .changes
            .iter()
            .map(|c| {
                (
                    c.signal.as_str(),
                    ChangeWire {
                        old: c.old,
                        new: c.new,
                    },
                )
            })
            .collect();
        map.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Event {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let map = BTreeMap::<SignalId, ChangeWire>::deserialize(deserializer)?;
        let changes = map
            .into_iter()
            .map(|(signal, w)| SignalChange {
                signal,
                old: w.old,
                new: w.new,
            })
            .collect();
        Event::new(changes).map_err(D::Error::custom)
    }
}

/// A timestamped event. Within one log, timestamps are strictly increasing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventRecord {
    pub event: Event,
    /// Milliseconds since log start.
    pub t_ms: u64,
}

/// One raw sampled value of one signal, the ingestion format for plant logs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawSample {
    pub t_ms: u64,
    pub signal: SignalId,
    pub value: SignalValue,
}

/// Folds a raw sample stream into coalesced events.
///
/// All value changes whose timestamps fall into the same cycle window
/// (`t / cycle_ms` equal) are merged into one event stamped with the window's
/// first change timestamp; controllers switch several outputs within one
/// cycle and those must count as one alphabet symbol. Samples that restate
/// the current value are dropped. Samples must be sorted by timestamp (ties
/// allowed) and may only reference signals of `ordering`.
pub fn coalesce_samples(
    samples: &[RawSample],
    ordering: &SignalOrdering,
    initial: &StateVector,
    cycle_ms: u64,
) -> Result<Vec<EventRecord>, EventError> {
    assert!(cycle_ms > 0, "cycle_ms must be positive");
    if initial.len() != ordering.len() {
        return Err(EventError::VectorLengthMismatch {
            expected: ordering.len(),
            found: initial.len(),
        });
    }

    let mut out = Vec::new();
    // vector as of the start of the open window
    let mut current = initial.clone();
    // latest raw value per signal index within the open window
    let mut pending: BTreeMap<usize, SignalValue> = BTreeMap::new();
    let mut open_window: Option<u64> = None;
    let mut first_change_t: Option<u64> = None;
    let mut last_t: Option<u64> = None;

    let flush = |current: &mut StateVector,
                 pending: &mut BTreeMap<usize, SignalValue>,
                 first_change_t: &mut Option<u64>,
                 out: &mut Vec<EventRecord>| {
        let mut changes = Vec::new();
        for (&idx, &value) in pending.iter() {
            let old = current.0[idx];
            if value != old {
                changes.push(SignalChange {
                    signal: ordering.ids()[idx].clone(),
                    old,
                    new: value,
                });
            }
        }
        if !changes.is_empty() {
            let t_ms = first_change_t.expect("non-empty window has a first change");
            for ch in &changes {
                let idx = ordering.position(&ch.signal).unwrap();
                current.0[idx] = ch.new;
            }
            out.push(EventRecord {
                event: Event::new(changes).expect("window changes form a valid event"),
                t_ms,
            });
        }
        pending.clear();
        *first_change_t = None;
    };

    for s in samples {
        if let Some(prev) = last_t {
            if s.t_ms < prev {
                return Err(EventError::NonMonotonicTimestamps {
                    prev,
                    found: s.t_ms,
                });
            }
        }
        last_t = Some(s.t_ms);
        let idx = ordering
            .position(&s.signal)
            .ok_or_else(|| EventError::UnknownSignal(s.signal.as_str().to_owned()))?;
        let window = s.t_ms / cycle_ms;
        if open_window != Some(window) {
            flush(&mut current, &mut pending, &mut first_change_t, &mut out);
            open_window = Some(window);
        }
        let effective = pending.get(&idx).copied().unwrap_or(current.0[idx]);
        if s.value != effective && first_change_t.is_none() {
            first_change_t = Some(s.t_ms);
        }
        pending.insert(idx, s.value);
    }
    flush(&mut current, &mut pending, &mut first_change_t, &mut out);
    Ok(out)
}

/// Replays events over an initial vector, returning the final vector.
pub fn fold_events(
    ordering: &SignalOrdering,
    initial: &StateVector,
    events: &[EventRecord],
) -> Result<StateVector, EventError> {
    let mut v = initial.clone();
    for rec in events {
        v = ordering.apply_event(&v, &rec.event)?;
    }
    Ok(v)
}

// ---------------------------------------------------------------------------
// File formats
// ---------------------------------------------------------------------------

/// Writes raw samples as JSON Lines: `{"t_ms":0,"signal":"PumpP201","value":1}`.
pub fn write_raw_samples<W: Write>(mut w: W, samples: &[RawSample]) -> Result<(), EventError> {
    for s in samples {
        serde_json::to_writer(&mut w, s).map_err(|source| EventError::Json { line: 0, source })?;
        writeln!(w)?;
    }
    Ok(())
}

pub fn read_raw_samples<R: BufRead>(r: R) -> Result<Vec<RawSample>, EventError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let sample: RawSample = serde_json::from_str(&line).map_err(|source| EventError::Json {
            line: i + 1,
            source,
        })?;
        out.push(sample);
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct EventLine {
    t_ms: u64,
    changes: BTreeMap<SignalId, SignalValue>,
}

/// Writes coalesced events as JSON Lines:
/// `{"t_ms":0,"changes":{"ValveV201":1}}`. Old values are implied by the
/// stream and are not stored.
pub fn write_event_log<W: Write>(mut w: W, events: &[EventRecord]) -> Result<(), EventError> {
    for rec in events {
        let line = EventLine {
            t_ms: rec.t_ms,
            changes: rec.event.new_values(),
        };
        serde_json::to_writer(&mut w, &line)
            .map_err(|source| EventError::Json { line: 0, source })?;
        writeln!(w)?;
    }
    Ok(())
}

/// Reads a coalesced event log, reconstructing old values by folding from
/// `initial`. Fails if a line restates the running value for some signal.
pub fn read_event_log<R: BufRead>(
    r: R,
    ordering: &SignalOrdering,
    initial: &StateVector,
) -> Result<Vec<EventRecord>, EventError> {
    let mut out = Vec::new();
    let mut current = initial.clone();
    let mut last_t: Option<u64> = None;
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: EventLine = serde_json::from_str(&line).map_err(|source| EventError::Json {
            line: i + 1,
            source,
        })?;
        if let Some(prev) = last_t {
            if parsed.t_ms <= prev {
                return Err(EventError::NonMonotonicTimestamps {
                    prev,
                    found: parsed.t_ms,
                });
            }
        }
        last_t = Some(parsed.t_ms);
        let mut changes = Vec::new();
        for (signal, new) in parsed.changes {
            let idx = ordering
                .position(&signal)
                .ok_or_else(|| EventError::UnknownSignal(signal.as_str().to_owned()))?;
            changes.push(SignalChange {
                signal,
                old: current.0[idx],
                new,
            });
        }
        let event = Event::new(changes)?;
        current = ordering.apply_event(&current, &event)?;
        out.push(EventRecord {
            event,
            t_ms: parsed.t_ms,
        });
    }
    Ok(out)
}
