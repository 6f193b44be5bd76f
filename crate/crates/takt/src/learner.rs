//! Online learning of a timed automaton from a coalesced event stream.
//!
//! States are keyed by state vector: the first time a vector is seen it
//! becomes a new state, and revisiting a vector revisits its state. Each
//! `(source state, event)` pair owns one transition whose timing interval
//! is widened to the minimum and maximum observed dwell time in the source
//! state. The dwell clock resets on every transition, so all timings are
//! relative.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::event::{
    Event, EventError, EventRecord, SignalChange, SignalId, SignalOrdering, SignalValue,
    StateVector,
};

#[derive(Debug, Error)]
pub enum LearnError {
    #[error(transparent)]
    Event(#[from] EventError),
    #[error("state {0} is not reachable from the initial state")]
    UnreachableState(StateId),
    #[error("nondeterministic transition: ({0}, {1}) appears twice")]
    NondeterministicTransition(StateId, Event),
    #[error("transition ({source_state}, {event}) maps to {target}, but applying the event yields a different vector")]
    VectorMismatch {
        source_state: StateId,
        event: Event,
        target: StateId,
    },
    #[error("states {0} and {1} share one state vector")]
    DuplicateStateVector(StateId, StateId),
    #[error("automaton file is invalid: {0}")]
    BadFile(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// State handle. Indices are assigned in discovery order; the initial state
/// is always `q0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateId(pub u32);

impl StateId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "q{}", self.0)
    }
}

/// Allowed dwell-time interval of a transition, learned as the extrema of
/// all observed durations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimingInterval {
    pub min_ms: u64,
    pub max_ms: u64,
    pub observation_count: u64,
}

impl TimingInterval {
    pub fn first(duration_ms: u64) -> Self {
        TimingInterval {
            min_ms: duration_ms,
            max_ms: duration_ms,
            observation_count: 1,
        }
    }

    pub fn observe(&mut self, duration_ms: u64) {
        self.min_ms = self.min_ms.min(duration_ms);
        self.max_ms = self.max_ms.max(duration_ms);
        self.observation_count += 1;
    }

    /// Closed-interval check; observed extremes stay legal.
    pub fn contains(&self, duration_ms: u64) -> bool {
        self.min_ms <= duration_ms && duration_ms <= self.max_ms
    }
}

/// One learned transition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub source: StateId,
    pub event: Event,
    pub target: StateId,
    pub timing: TimingInterval,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct TransitionData {
    target: StateId,
    timing: TimingInterval,
}

/// A learned timed automaton: states keyed by state vector, deterministic
/// transitions labeled with events and dwell-time intervals, and a single
/// initial state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimedAutomaton {
    ordering: SignalOrdering,
    states: Vec<StateVector>,
    state_index: HashMap<StateVector, StateId>,
    initial: StateId,
    transitions: BTreeMap<(StateId, Event), TransitionData>,
}

impl TimedAutomaton {
    pub fn signal_ordering(&self) -> &SignalOrdering {
        &self.ordering
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn state_ids(&self) -> impl Iterator<Item = StateId> {
        (0..self.states.len() as u32).map(StateId)
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn vector(&self, state: StateId) -> Option<&StateVector> {
        self.states.get(state.index())
    }

    pub fn state_of_vector(&self, v: &StateVector) -> Option<StateId> {
        self.state_index.get(v).copied()
    }

    pub fn transition_count(&self) -> usize {
        self.transitions.len()
    }

    /// Transitions in canonical `(source, event)` order.
    pub fn transitions(&self) -> impl Iterator<Item = Transition> + '_ {
        self.transitions
            .iter()
            .map(|((source, event), data)| Transition {
                source: *source,
                event: event.clone(),
                target: data.target,
                timing: data.timing,
            })
    }

    /// The unique transition for `(source, event)`, if trained.
    pub fn transition(&self, source: StateId, event: &Event) -> Option<Transition> {
        self.transitions
            .get(&(source, event.clone()))
            .map(|data| Transition {
                source,
                event: event.clone(),
                target: data.target,
                timing: data.timing,
            })
    }

    /// Outgoing transitions of a state, in canonical event order.
    pub fn outgoing(&self, source: StateId) -> Vec<Transition> {
        self.transitions
            .iter()
            .filter(|((s, _), _)| *s == source)
            .map(|((s, e), d)| Transition {
                source: *s,
                event: e.clone(),
                target: d.target,
                timing: d.timing,
            })
            .collect()
    }

    /// Checks every structural invariant: endpoints exist, vectors are
    /// unique, transition targets agree with event application, and every
    /// state is reachable from the initial one. Violations indicate learner
    /// bugs or hand-edited files, not bad plant data.
    pub fn verify(&self) -> Result<(), LearnError> {
        for (i, v) in self.states.iter().enumerate() {
            match self.state_index.get(v) {
                Some(&id) if id.index() == i => {}
                Some(&id) => return Err(LearnError::DuplicateStateVector(id, StateId(i as u32))),
                None => {
                    return Err(LearnError::BadFile(format!(
                        "state q{i} missing from the vector index"
                    )))
                }
            }
        }
        if self.initial.index() >= self.states.len() {
            return Err(LearnError::BadFile(format!(
                "initial state {} does not exist",
                self.initial
            )));
        }
        let mut adjacency: HashMap<StateId, Vec<StateId>> = HashMap::new();
        for ((source, event), data) in &self.transitions {
            let src_vec = self
                .vector(*source)
                .ok_or(LearnError::UnreachableState(*source))?;
            let tgt_vec = self
                .vector(data.target)
                .ok_or(LearnError::UnreachableState(data.target))?;
            let applied = self.ordering.apply_event(src_vec, event)?;
            if &applied != tgt_vec {
                return Err(LearnError::VectorMismatch {
                    source_state: *source,
                    event: event.clone(),
                    target: data.target,
                });
            }
            adjacency.entry(*source).or_default().push(data.target);
        }
        // reachability from the initial state
        let mut seen = vec![false; self.states.len()];
        seen[self.initial.index()] = true;
        let mut queue = VecDeque::from([self.initial]);
        while let Some(s) = queue.pop_front() {
            for &t in adjacency.get(&s).map(Vec::as_slice).unwrap_or(&[]) {
                if !seen[t.index()] {
                    seen[t.index()] = true;
                    queue.push_back(t);
                }
            }
        }
        if let Some(unreached) = seen.iter().position(|r| !r) {
            return Err(LearnError::UnreachableState(StateId(unreached as u32)));
        }
        Ok(())
    }
}

/// How many structure-preserving events in a row count as "converged".
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[derive(Default)]
pub enum ConvergenceWindow {
    /// Three times the number of transitions seen so far, at least 50.
    #[default]
    Auto,
    Fixed(u64),
}


/// An in-progress learning run over one event stream.
///
/// Single-writer: feed events from one logical thread. The finalized
/// [`TimedAutomaton`] is immutable and freely shareable.
#[derive(Debug, Clone)]
pub struct LearnerSession {
    ordering: SignalOrdering,
    states: Vec<StateVector>,
    state_index: HashMap<StateVector, StateId>,
    transitions: BTreeMap<(StateId, Event), TransitionData>,
    current: StateId,
    last_transition_t: u64,
    any_event_seen: bool,
    window: ConvergenceWindow,
    events_since_change: u64,
    events_total: u64,
}

impl LearnerSession {
    /// Starts a session whose only state is the externally supplied initial
    /// vector. The initial IO snapshot fully determines the initial state,
    /// so it is required as an input rather than inferred from the log head.
    pub fn new(
        ordering: SignalOrdering,
        initial_vector: StateVector,
        window: ConvergenceWindow,
    ) -> Result<Self, LearnError> {
        if initial_vector.len() != ordering.len() {
            return Err(LearnError::Event(EventError::VectorLengthMismatch {
                expected: ordering.len(),
                found: initial_vector.len(),
            }));
        }
        if let ConvergenceWindow::Fixed(0) = window {
            return Err(LearnError::BadFile(
                "convergence window must be positive".into(),
            ));
        }
        let mut state_index = HashMap::new();
        state_index.insert(initial_vector.clone(), StateId(0));
        Ok(LearnerSession {
            ordering,
            states: vec![initial_vector],
            state_index,
            transitions: BTreeMap::new(),
            current: StateId(0),
            last_transition_t: 0,
            any_event_seen: false,
            window,
            events_since_change: 0,
            events_total: 0,
        })
    }

    pub fn current_state(&self) -> StateId {
        self.current
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn transition_count(&self) -> usize {
        self.transitions.len()
    }

    pub fn events_ingested(&self) -> u64 {
        self.events_total
    }

    pub fn events_since_last_change(&self) -> u64 {
        self.events_since_change
    }

    /// The window threshold currently in effect.
    pub fn effective_window(&self) -> u64 {
        match self.window {
            ConvergenceWindow::Fixed(w) => w,
            ConvergenceWindow::Auto => (3 * self.transitions.len() as u64).max(50),
        }
    }

    /// Ingests one event: advances the current state, adding states and
    /// transitions as needed, and widens the timing interval of revisited
    /// transitions. A duration is the time spent in the source state, i.e.
    /// the gap to the previous transition (or to log start).
    pub fn ingest(&mut self, record: &EventRecord) -> Result<(), LearnError> {
        if self.any_event_seen && record.t_ms <= self.last_transition_t {
            return Err(LearnError::Event(EventError::NonMonotonicTimestamps {
                prev: self.last_transition_t,
                found: record.t_ms,
            }));
        }
        let duration = record.t_ms - self.last_transition_t;
        let current_vector = &self.states[self.current.index()];
        // A mismatch here means corrupted training data; abort rather than
        // learn a wrong model.
        let target_vector = self.ordering.apply_event(current_vector, &record.event)?;

        let mut changed = false;
        let target = match self.state_index.get(&target_vector) {
            Some(&id) => id,
            None => {
                let id = StateId(self.states.len() as u32);
                self.states.push(target_vector.clone());
                self.state_index.insert(target_vector, id);
                changed = true;
                id
            }
        };

        match self
            .transitions
            .get_mut(&(self.current, record.event.clone()))
        {
            Some(data) => {
                debug_assert_eq!(data.target, target);
                data.timing.observe(duration);
            }
            None => {
                self.transitions.insert(
                    (self.current, record.event.clone()),
                    TransitionData {
                        target,
                        timing: TimingInterval::first(duration),
                    },
                );
                changed = true;
            }
        }

        if changed {
            self.events_since_change = 0;
        } else {
            self.events_since_change += 1;
        }
        self.current = target;
        self.last_transition_t = record.t_ms;
        self.any_event_seen = true;
        self.events_total += 1;
        Ok(())
    }

    /// True once `effective_window` consecutive events added no state and
    /// no transition.
    pub fn has_converged(&self) -> bool {
        self.events_since_change >= self.effective_window()
    }

    /// Consumes the session, verifying all automaton invariants.
    pub fn finalize(self) -> Result<TimedAutomaton, LearnError> {
        let automaton = TimedAutomaton {
            ordering: self.ordering,
            states: self.states,
            state_index: self.state_index,
            initial: StateId(0),
            transitions: self.transitions,
        };
        automaton.verify()?;
        Ok(automaton)
    }
}

/// Convenience wrapper: learn from a whole event log at once.
pub fn learn(
    ordering: SignalOrdering,
    initial_vector: StateVector,
    window: ConvergenceWindow,
    events: &[EventRecord],
) -> Result<TimedAutomaton, LearnError> {
    let mut session = LearnerSession::new(ordering, initial_vector, window)?;
    for rec in events {
        session.ingest(rec)?;
    }
    session.finalize()
}

// ---------------------------------------------------------------------------
// File format
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct TransitionRecord {
    source: u32,
    changes: BTreeMap<SignalId, SignalValue>,
    target: u32,
    min_ms: u64,
    max_ms: u64,
    count: u64,
}

#[derive(Debug, Serialize, Deserialize)]
struct AutomatonFile {
    signal_ordering: Vec<SignalId>,
    states: BTreeMap<u32, Vec<SignalValue>>,
    initial: u32,
    transitions: Vec<TransitionRecord>,
}

impl TimedAutomaton {
    /// Serializes to the canonical JSON document. Keys and list entries are
    /// emitted in a fixed order so identical automata yield identical bytes.
    pub fn to_json(&self) -> serde_json::Result<String> {
        let file = AutomatonFile {
            signal_ordering: self.ordering.ids().to_vec(),
            states: self
                .states
                .iter()
                .enumerate()
                .map(|(i, v)| (i as u32, v.values().to_vec()))
                .collect(),
            initial: self.initial.0,
            transitions: self
                .transitions
                .iter()
                .map(|((source, event), data)| TransitionRecord {
                    source: source.0,
                    changes: event.new_values(),
                    target: data.target.0,
                    min_ms: data.timing.min_ms,
                    max_ms: data.timing.max_ms,
                    count: data.timing.observation_count,
                })
                .collect(),
        };
        let mut out = serde_json::to_string_pretty(&file)?;
        out.push('\n');
        Ok(out)
    }

    pub fn write_json<W: Write>(&self, mut w: W) -> Result<(), LearnError> {
        let s = self.to_json()?;
        w.write_all(s.as_bytes())?;
        Ok(())
    }

    /// Parses and fully re-verifies an automaton document. Old values of
    /// transition events are reconstructed from the source state vectors.
    pub fn from_json(text: &str) -> Result<Self, LearnError> {
        let file: AutomatonFile = serde_json::from_str(text)?;
        let ordering = SignalOrdering::new(file.signal_ordering).map_err(LearnError::Event)?;
        let n = file.states.len() as u32;
        let mut states = Vec::with_capacity(file.states.len());
        for (expect, (id, values)) in file.states.into_iter().enumerate() {
            if id != expect as u32 {
                return Err(LearnError::BadFile(format!(
                    "state ids must be contiguous from 0; found {id}"
                )));
            }
            if values.len() != ordering.len() {
                return Err(LearnError::BadFile(format!(
                    "state {id} vector length {} does not match {} signals",
                    values.len(),
                    ordering.len()
                )));
            }
            states.push(StateVector::new(values));
        }
        if file.initial >= n {
            return Err(LearnError::BadFile(format!(
                "initial state {} does not exist",
                file.initial
            )));
        }
        if file.initial != 0 {
            return Err(LearnError::BadFile(
                "initial state must be q0 in discovery order".into(),
            ));
        }
        let mut state_index = HashMap::new();
        for (i, v) in states.iter().enumerate() {
            if let Some(prev) = state_index.insert(v.clone(), StateId(i as u32)) {
                return Err(LearnError::DuplicateStateVector(prev, StateId(i as u32)));
            }
        }
        let mut transitions = BTreeMap::new();
        for rec in file.transitions {
            if rec.source >= n || rec.target >= n {
                return Err(LearnError::BadFile(format!(
                    "transition references missing state {} or {}",
                    rec.source, rec.target
                )));
            }
            if rec.min_ms > rec.max_ms {
                return Err(LearnError::BadFile(format!(
                    "transition q{}: min_ms {} exceeds max_ms {}",
                    rec.source, rec.min_ms, rec.max_ms
                )));
            }
            if rec.count == 0 {
                return Err(LearnError::BadFile(format!(
                    "transition q{}: observation count must be positive",
                    rec.source
                )));
            }
            let source_vec = &states[rec.source as usize];
            let mut changes = Vec::new();
            for (signal, new) in rec.changes {
                let idx = ordering.position(&signal).ok_or_else(|| {
                    LearnError::Event(EventError::UnknownSignal(signal.as_str().to_owned()))
                })?;
                changes.push(SignalChange {
                    signal,
                    old: source_vec.values()[idx],
                    new,
                });
            }
            let event = Event::new(changes).map_err(LearnError::Event)?;
            let key = (StateId(rec.source), event);
            if transitions
                .insert(
                    key.clone(),
                    TransitionData {
                        target: StateId(rec.target),
                        timing: TimingInterval {
                            min_ms: rec.min_ms,
                            max_ms: rec.max_ms,
                            observation_count: rec.count,
                        },
                    },
                )
                .is_some()
            {
                return Err(LearnError::NondeterministicTransition(key.0, key.1));
            }
        }
        let automaton = TimedAutomaton {
            ordering,
            states,
            state_index,
            initial: StateId(0),
            transitions,
        };
        automaton.verify()?;
        Ok(automaton)
    }

    pub fn read_json<R: Read>(mut r: R) -> Result<Self, LearnError> {
        let mut text = String::new();
        r.read_to_string(&mut text)?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::SignalChange;

    fn ordering(names: &[&str]) -> SignalOrdering {
        SignalOrdering::new(names.iter().map(|n| SignalId::from(*n)).collect()).unwrap()
    }

    fn event(changes: &[(&str, SignalValue, SignalValue)]) -> Event {
        Event::new(
            changes
                .iter()
                .map(|(s, old, new)| SignalChange {
                    signal: SignalId::from(*s),
                    old: *old,
                    new: *new,
                })
                .collect(),
        )
        .unwrap()
    }

    fn record(t: u64, changes: &[(&str, SignalValue, SignalValue)]) -> EventRecord {
        EventRecord {
            event: event(changes),
            t_ms: t,
        }
    }

    #[test]
    fn fresh_session_has_one_state_and_no_transitions() {
        let ord = ordering(&["a", "b"]);
        let s = LearnerSession::new(
            ord.clone(),
            ord.zero_vector(),
            ConvergenceWindow::Fixed(500),
        )
        .unwrap();
        assert_eq!(s.state_count(), 1);
        assert_eq!(s.transition_count(), 0);
        assert_eq!(s.current_state(), StateId(0));
        assert!(!s.has_converged());
        let a = s.finalize().unwrap();
        assert_eq!(a.state_count(), 1);
        assert_eq!(
            a.vector(StateId(0)),
            Some(&ordering(&["a", "b"]).zero_vector())
        );
    }

    #[test]
    fn first_transition_records_duration_from_log_start() {
        let ord = ordering(&["a", "b"]);
        let mut s = LearnerSession::new(
            ord.clone(),
            ord.zero_vector(),
            ConvergenceWindow::Fixed(500),
        )
        .unwrap();
        s.ingest(&record(1000, &[("a", 0, 1)])).unwrap();
        assert_eq!(s.state_count(), 2);
        assert_eq!(s.transition_count(), 1);
        let a = s.finalize().unwrap();
        let t = a.transitions().next().unwrap();
        assert_eq!(
            t.timing,
            TimingInterval {
                min_ms: 1000,
                max_ms: 1000,
                observation_count: 1
            }
        );
    }

    #[test]
    fn revisiting_a_transition_widens_its_interval() {
        let ord = ordering(&["a"]);
        let mut s = LearnerSession::new(
            ord.clone(),
            ord.zero_vector(),
            ConvergenceWindow::Fixed(500),
        )
        .unwrap();
        // a cycles 0 -> 1 -> 0 with two different dwell times in state q0
        s.ingest(&record(1000, &[("a", 0, 1)])).unwrap();
        s.ingest(&record(1500, &[("a", 1, 0)])).unwrap();
        s.ingest(&record(2700, &[("a", 0, 1)])).unwrap();
        let a = s.finalize().unwrap();
        let t = a
            .transition(StateId(0), &event(&[("a", 0, 1)]))
            .expect("trained transition");
        assert_eq!(
            t.timing,
            TimingInterval {
                min_ms: 1000,
                max_ms: 1200,
                observation_count: 2
            }
        );
    }

    #[test]
    fn ingest_rejects_corrupted_old_values() {
        let ord = ordering(&["a"]);
        let mut s =
            LearnerSession::new(ord.clone(), ord.zero_vector(), ConvergenceWindow::Fixed(10))
                .unwrap();
        let err = s.ingest(&record(100, &[("a", 1, 0)])).unwrap_err();
        assert!(matches!(
            err,
            LearnError::Event(EventError::InconsistentOldValue { .. })
        ));
    }

    #[test]
    fn convergence_counts_structure_preserving_events() {
        let ord = ordering(&["a"]);
        let mut s =
            LearnerSession::new(ord.clone(), ord.zero_vector(), ConvergenceWindow::Fixed(4))
                .unwrap();
        let mut t = 0;
        let mut v = 0;
        for _ in 0..6 {
            t += 100;
            let e = if v == 0 { ("a", 0, 1) } else { ("a", 1, 0) };
            v = 1 - v;
            s.ingest(&record(t, &[e])).unwrap();
        }
        // events 1 and 2 created structure; events 3..6 preserved it
        assert!(s.has_converged());
    }

    #[test]
    fn json_round_trip_preserves_structure() {
        let ord = ordering(&["a", "b"]);
        let mut s =
            LearnerSession::new(ord.clone(), ord.zero_vector(), ConvergenceWindow::default())
                .unwrap();
        s.ingest(&record(100, &[("a", 0, 1)])).unwrap();
        s.ingest(&record(350, &[("a", 1, 0), ("b", 0, 1)])).unwrap();
        s.ingest(&record(500, &[("b", 1, 0)])).unwrap();
        let a = s.finalize().unwrap();
        let text = a.to_json().unwrap();
        let b = TimedAutomaton::from_json(&text).unwrap();
        assert_eq!(a, b);
        assert_eq!(b.to_json().unwrap(), text);
    }

    #[test]
    fn from_json_rejects_duplicate_vectors() {
        let text = r#"{
            "signal_ordering": ["a"],
            "states": {"0": [0], "1": [0]},
            "initial": 0,
            "transitions": []
        }"#;
        assert!(matches!(
            TimedAutomaton::from_json(text),
            Err(LearnError::DuplicateStateVector(_, _))
        ));
    }

    #[test]
    fn from_json_rejects_unreachable_states() {
        let text = r#"{
            "signal_ordering": ["a"],
            "states": {"0": [0], "1": [1]},
            "initial": 0,
            "transitions": []
        }"#;
        assert!(matches!(
            TimedAutomaton::from_json(text),
            Err(LearnError::UnreachableState(_))
        ));
    }
}
