//! Mapping a learned timed automaton into the graph.
//!
//! Each state is described by one property state per signal, linking the
//! actuator's property to the value it holds while the state is active.
//! Each transition carries a timing node with its learned bounds (seconds,
//! one decimal place) and one event whose descriptions list the changed
//! signals with their new values.
//!
//! Triple-count law: for `|S|` states, `|T|` transitions, `n` signals, and
//! `k` changed-signal entries summed over all transition events, the mapped
//! graph holds exactly
//!
//! ```text
//! f(|S|, |T|, n, k) = 3 + |S| * (5n + 2) + 11 * |T| + 5 * k
//! ```
//!
//! triples: one machine-type and one owner link plus one initial-state
//! marker (the 3), per state a type, a membership link, and five triples
//! per property state, per transition eleven triples (membership, type,
//! endpoints, timing node with three values, event node with type), and
//! five triples per event description.

use std::collections::BTreeMap;

use crate::event::Event;
use crate::kg::{rdf, Graph, Iri, Literal, Triple};
use crate::learner::{StateId, TimedAutomaton};

use super::plant::{DeviceKind, PlantFacts};
use super::vocab::{self, ext, sm};
use super::{ms_to_decimal_tenths, IriScheme, MapError};

/// IRIs of one transition's mapped nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionIris {
    pub transition: Iri,
    pub timing: Iri,
    pub event: Iri,
}

/// Naming context of a mapped automaton, used when anomalies are mapped
/// against it and when the prepared queries are instantiated.
#[derive(Debug, Clone)]
pub struct AutomatonContext {
    scheme: IriScheme,
    machine: Iri,
    state_iris: Vec<Iri>,
    transition_iris: BTreeMap<(StateId, Event), TransitionIris>,
}

impl AutomatonContext {
    pub fn scheme(&self) -> &IriScheme {
        &self.scheme
    }

    pub fn machine(&self) -> &Iri {
        &self.machine
    }

    pub fn state(&self, id: StateId) -> Option<&Iri> {
        self.state_iris.get(id.index())
    }

    pub fn transition(&self, source: StateId, event: &Event) -> Option<&TransitionIris> {
        self.transition_iris.get(&(source, event.clone()))
    }
}

/// The closed-form size of a mapped automaton graph.
pub fn expected_triple_count(
    states: usize,
    transitions: usize,
    signals: usize,
    changes: usize,
) -> usize {
    3 + states * (5 * signals + 2) + 11 * transitions + 5 * changes
}

/// Maps an automaton to triples under `owner` (a plant entity). Every
/// signal must name an actuator in the plant facts; the actuator's property
/// is what property states and event descriptions point at.
pub fn map_automaton(
    automaton: &TimedAutomaton,
    owner_id: &str,
    facts: &PlantFacts,
) -> Result<(Graph, AutomatonContext), MapError> {
    if facts.entity(owner_id).is_none() {
        return Err(MapError::UnknownEntity(owner_id.to_owned()));
    }
    let scheme = facts.iri_scheme();
    // resolve each signal to its actuatable property up front
    let mut properties = Vec::new();
    for signal in automaton.signal_ordering().ids() {
        let device = facts
            .device(signal.as_str())
            .filter(|d| d.kind == DeviceKind::Actuator)
            .ok_or_else(|| MapError::UnknownActuator(signal.as_str().to_owned()))?;
        properties.push(scheme.property(&device.property));
    }

    let mut g = Graph::new();
    for (prefix, ns) in vocab::standard_prefixes() {
        g.set_prefix(prefix, ns);
    }

    let machine = scheme.machine(owner_id);
    g.insert(Triple::new(
        scheme.equipment(owner_id),
        sm::HAS_STATE_MACHINE,
        machine.clone(),
    ));
    g.insert(Triple::new(
        machine.clone(),
        rdf::TYPE,
        Iri::new(sm::STATE_MACHINE),
    ));

    let mut state_iris = Vec::new();
    for state in automaton.state_ids() {
        let state_iri = scheme.state(state.0);
        g.insert(Triple::new(
            machine.clone(),
            sm::HAS_STATE,
            state_iri.clone(),
        ));
        g.insert(Triple::new(
            state_iri.clone(),
            rdf::TYPE,
            Iri::new(sm::STATE),
        ));
        if state == automaton.initial() {
            g.insert(Triple::new(
                state_iri.clone(),
                rdf::TYPE,
                Iri::new(sm::INITIAL_STATE),
            ));
        }
        let vector = automaton.vector(state).expect("state exists");
        for (idx, signal) in automaton.signal_ordering().ids().iter().enumerate() {
            let value = vector.values()[idx];
            let ps = scheme.property_state(state.0, signal.as_str());
            g.insert(Triple::new(
                state_iri.clone(),
                ext::HAS_PROPERTY_STATE,
                ps.clone(),
            ));
            g.insert(Triple::new(
                ps.clone(),
                rdf::TYPE,
                Iri::new(ext::PROPERTY_STATE),
            ));
            g.insert(Triple::new(
                ps.clone(),
                ext::FOR_PROPERTY,
                properties[idx].clone(),
            ));
            g.insert(Triple::new(
                ps.clone(),
                ext::HAS_VALUE,
                Literal::integer(value),
            ));
            g.insert(Triple::new(
                ps,
                ext::HAS_VALUE_LABEL,
                Literal::string(vocab::value_label(signal, value)),
            ));
        }
        state_iris.push(state_iri);
    }

    let mut transition_iris = BTreeMap::new();
    for (index, transition) in automaton.transitions().enumerate() {
        let event_number = index + 1;
        let trans_iri = scheme.transition(transition.source.0, transition.target.0);
        let timing_iri = scheme.timing(transition.source.0, transition.target.0);
        let event_iri = scheme.event(event_number);
        g.insert(Triple::new(
            machine.clone(),
            sm::HAS_TRANSITION,
            trans_iri.clone(),
        ));
        g.insert(Triple::new(
            trans_iri.clone(),
            rdf::TYPE,
            Iri::new(sm::TRANSITION),
        ));
        g.insert(Triple::new(
            trans_iri.clone(),
            sm::SOURCE_STATE,
            state_iris[transition.source.index()].clone(),
        ));
        g.insert(Triple::new(
            trans_iri.clone(),
            sm::TARGET_STATE,
            state_iris[transition.target.index()].clone(),
        ));
        g.insert(Triple::new(
            trans_iri.clone(),
            ext::HAS_TIMING,
            timing_iri.clone(),
        ));
        g.insert(Triple::new(
            timing_iri.clone(),
            rdf::TYPE,
            Iri::new(ext::TRANSITION_TIMING),
        ));
        g.insert(Triple::new(
            timing_iri.clone(),
            ext::MIN_DURATION,
            Literal::decimal_tenths(ms_to_decimal_tenths(transition.timing.min_ms)),
        ));
        g.insert(Triple::new(
            timing_iri.clone(),
            ext::MAX_DURATION,
            Literal::decimal_tenths(ms_to_decimal_tenths(transition.timing.max_ms)),
        ));
        g.insert(Triple::new(
            timing_iri.clone(),
            ext::OBSERVATION_COUNT,
            Literal::integer(transition.timing.observation_count as i64),
        ));
        g.insert(Triple::new(
            trans_iri.clone(),
            sm::TRIGGERED_BY,
            event_iri.clone(),
        ));
        g.insert(Triple::new(
            event_iri.clone(),
            rdf::TYPE,
            Iri::new(sm::EVENT),
        ));
        for change in transition.event.changes() {
            let idx = automaton
                .signal_ordering()
                .position(&change.signal)
                .expect("event signals are in the ordering");
            let desc = scheme.event_description(event_number, change.signal.as_str());
            g.insert(Triple::new(
                event_iri.clone(),
                ext::HAS_EVENT_DESCRIPTION,
                desc.clone(),
            ));
            g.insert(Triple::new(
                desc.clone(),
                rdf::TYPE,
                Iri::new(ext::EVENT_DESCRIPTION),
            ));
            g.insert(Triple::new(
                desc.clone(),
                ext::FOR_PROPERTY,
                properties[idx].clone(),
            ));
            g.insert(Triple::new(
                desc.clone(),
                ext::HAS_VALUE,
                Literal::integer(change.new),
            ));
            g.insert(Triple::new(
                desc,
                ext::HAS_VALUE_LABEL,
                Literal::string(vocab::value_label(&change.signal, change.new)),
            ));
        }
        transition_iris.insert(
            (transition.source, transition.event.clone()),
            TransitionIris {
                transition: trans_iri,
                timing: timing_iri,
                event: event_iri,
            },
        );
    }

    let context = AutomatonContext {
        scheme,
        machine,
        state_iris,
        transition_iris,
    };
    Ok((g, context))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::{SignalId, SignalOrdering};
    use crate::learner::{ConvergenceWindow, LearnerSession};
    use crate::map::plant::{DeviceRow, HierarchyRow, Isa88Class};

    fn two_signal_facts() -> PlantFacts {
        PlantFacts::new(
            vec![HierarchyRow {
                id: "Plant".into(),
                class: Isa88Class::ProcessCell,
                parent: None,
            }],
            vec![
                DeviceRow {
                    id: "ValveA".into(),
                    kind: DeviceKind::Actuator,
                    host: "Plant".into(),
                    property: "position_A".into(),
                    semantic_label: "Position of Valve A".into(),
                },
                DeviceRow {
                    id: "PumpB".into(),
                    kind: DeviceKind::Actuator,
                    host: "Plant".into(),
                    property: "power_B".into(),
                    semantic_label: "Power State of Pump B".into(),
                },
            ],
        )
        .unwrap()
    }

    fn single_state_automaton() -> TimedAutomaton {
        let ordering =
            SignalOrdering::new(vec![SignalId::from("ValveA"), SignalId::from("PumpB")]).unwrap();
        LearnerSession::new(
            ordering.clone(),
            ordering.zero_vector(),
            ConvergenceWindow::Auto,
        )
        .unwrap()
        .finalize()
        .unwrap()
    }

    #[test]
    fn degenerate_automaton_matches_hand_count() {
        let facts = two_signal_facts();
        let automaton = single_state_automaton();
        let (g, ctx) = map_automaton(&automaton, "Plant", &facts).unwrap();
        // Hand count: owner link, machine type, state membership, state
        // type, initial marker, and two property states of five triples
        // each: 2 + 2 + 1 + 10 = 15.
        assert_eq!(g.len(), 15);
        assert_eq!(g.len(), expected_triple_count(1, 0, 2, 0));
        assert_eq!(
            ctx.state(StateId(0)).unwrap().as_str(),
            "http://example.org/cpps/Plant/state/q0"
        );
    }

    #[test]
    fn unknown_signal_is_rejected() {
        let facts = PlantFacts::new(
            vec![HierarchyRow {
                id: "Plant".into(),
                class: Isa88Class::ProcessCell,
                parent: None,
            }],
            vec![],
        )
        .unwrap();
        let automaton = single_state_automaton();
        assert!(matches!(
            map_automaton(&automaton, "Plant", &facts),
            Err(MapError::UnknownActuator(_))
        ));
    }

    #[test]
    fn sensors_do_not_satisfy_actuator_signals() {
        let mut facts_rows = two_signal_facts();
        let devices: Vec<DeviceRow> = facts_rows
            .devices()
            .iter()
            .cloned()
            .map(|mut d| {
                if d.id == "ValveA" {
                    d.kind = DeviceKind::Sensor;
                }
                d
            })
            .collect();
        facts_rows = PlantFacts::new(facts_rows.hierarchy().to_vec(), devices).unwrap();
        let automaton = single_state_automaton();
        assert!(matches!(
            map_automaton(&automaton, "Plant", &facts_rows),
            Err(MapError::UnknownActuator(_))
        ));
    }
}
