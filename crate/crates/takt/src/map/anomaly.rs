//! Mapping detected anomalies into the graph as condition-monitoring
//! symptoms, with links back to the states, transitions, and timings of the
//! mapped automaton so every detection carries its engineering context.

use crate::detector::{AnomalyReport, Syndrome, ViolatedBound};
use crate::kg::{rdf, Graph, Iri, Literal, Triple};

use super::automaton::AutomatonContext;
use super::vocab::{self, iso17359};
use super::{ms_to_decimal_tenths, MapError};

/// Maps anomaly reports and their syndrome grouping against a previously
/// mapped automaton. Timing symptoms carry the observed duration, a link to
/// the violated timing node as their reference value, and the deviation —
/// all in seconds with one decimal place, computed so that
/// `observedValue - maxDuration` (or `minDuration - observedValue`) equals
/// `deviation` exactly on the graph's own numbers.
pub fn map_anomalies(
    reports: &[AnomalyReport],
    syndromes: &[Syndrome],
    context: &AutomatonContext,
) -> Result<Graph, MapError> {
    let scheme = context.scheme();
    let mut g = Graph::new();
    for (prefix, ns) in vocab::standard_prefixes() {
        g.set_prefix(prefix, ns);
    }
    if reports.is_empty() {
        return Ok(g);
    }

    // The state machine acts as the diagnostic model for all its symptoms.
    g.insert(Triple::new(
        context.machine().clone(),
        rdf::TYPE,
        Iri::new(iso17359::DIAGNOSTIC_MODEL),
    ));

    let mut symptom_iris = Vec::with_capacity(reports.len());
    for report in reports {
        let symptom = scheme.symptom(report.at());
        g.insert(Triple::new(
            symptom.clone(),
            rdf::TYPE,
            Iri::new(iso17359::SYMPTOM),
        ));
        g.insert(Triple::new(
            symptom.clone(),
            iso17359::DETECTED_BY,
            context.machine().clone(),
        ));
        g.insert(Triple::new(
            symptom.clone(),
            iso17359::OCCURRED_AT,
            Literal::integer(report.at() as i64),
        ));
        match report {
            AnomalyReport::WrongTiming {
                source_state,
                observed_event,
                observed_duration_ms,
                violated_bound,
                reference,
                ..
            } => {
                let iris = context
                    .transition(*source_state, observed_event)
                    .ok_or_else(|| MapError::DanglingReference {
                        state: source_state.to_string(),
                        event: observed_event.to_string(),
                    })?;
                let observed_tenths = ms_to_decimal_tenths(*observed_duration_ms);
                let deviation_tenths = match violated_bound {
                    ViolatedBound::AboveMax => {
                        observed_tenths - ms_to_decimal_tenths(reference.max_ms)
                    }
                    ViolatedBound::BelowMin => {
                        ms_to_decimal_tenths(reference.min_ms) - observed_tenths
                    }
                };
                g.insert(Triple::new(
                    symptom.clone(),
                    iso17359::OBSERVED_VALUE,
                    Literal::decimal_tenths(observed_tenths),
                ));
                g.insert(Triple::new(
                    symptom.clone(),
                    iso17359::REFERENCE_VALUE_LINK,
                    iris.timing.clone(),
                ));
                g.insert(Triple::new(
                    iris.timing.clone(),
                    rdf::TYPE,
                    Iri::new(iso17359::REFERENCE_VALUE),
                ));
                g.insert(Triple::new(
                    symptom.clone(),
                    iso17359::DEVIATION,
                    Literal::decimal_tenths(deviation_tenths),
                ));
                g.insert(Triple::new(
                    symptom.clone(),
                    iso17359::ON_TRANSITION,
                    iris.transition.clone(),
                ));
            }
            AnomalyReport::UnknownEvent {
                source_state,
                expected_events,
                ..
            } => {
                let state_iri =
                    context
                        .state(*source_state)
                        .ok_or_else(|| MapError::DanglingReference {
                            state: source_state.to_string(),
                            event: "-".into(),
                        })?;
                g.insert(Triple::new(
                    symptom.clone(),
                    iso17359::AT_STATE,
                    state_iri.clone(),
                ));
                for expected in expected_events {
                    let iris = context
                        .transition(*source_state, &expected.event)
                        .ok_or_else(|| MapError::DanglingReference {
                            state: source_state.to_string(),
                            event: expected.event.to_string(),
                        })?;
                    g.insert(Triple::new(
                        symptom.clone(),
                        iso17359::EXPECTED_EVENT,
                        iris.event.clone(),
                    ));
                }
            }
        }
        symptom_iris.push(symptom);
    }

    for syndrome in syndromes {
        if syndrome.last >= reports.len() {
            return Err(MapError::DanglingReference {
                state: format!("syndrome range {}..={}", syndrome.first, syndrome.last),
                event: "-".into(),
            });
        }
        let syndrome_iri = scheme.syndrome(reports[syndrome.first].at());
        g.insert(Triple::new(
            syndrome_iri.clone(),
            rdf::TYPE,
            Iri::new(iso17359::SYNDROME),
        ));
        for symptom in &symptom_iris[syndrome.first..=syndrome.last] {
            g.insert(Triple::new(
                symptom.clone(),
                iso17359::PART_OF_SYNDROME,
                syndrome_iri.clone(),
            ));
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detector::{group_syndromes, run, ResyncPolicy};
    use crate::event::{Event, EventRecord, SignalChange, SignalId, SignalOrdering};
    use crate::kg::{evaluate, PatternTerm, Query, Term, TriplePattern};
    use crate::learner::{ConvergenceWindow, LearnerSession};
    use crate::map::automaton::map_automaton;
    use crate::map::plant::{DeviceKind, DeviceRow, HierarchyRow, Isa88Class, PlantFacts};

    fn facts() -> PlantFacts {
        PlantFacts::new(
            vec![HierarchyRow {
                id: "Plant".into(),
                class: Isa88Class::ProcessCell,
                parent: None,
            }],
            vec![DeviceRow {
                id: "ValveA".into(),
                kind: DeviceKind::Actuator,
                host: "Plant".into(),
                property: "position_A".into(),
                semantic_label: "Position of Valve A".into(),
            }],
        )
        .unwrap()
    }

    fn record(t: u64, old: i64, new: i64) -> EventRecord {
        EventRecord {
            event: Event::new(vec![SignalChange {
                signal: SignalId::from("ValveA"),
                old,
                new,
            }])
            .unwrap(),
            t_ms: t,
        }
    }

    #[test]
    fn empty_reports_map_to_an_empty_graph() {
        let ordering = SignalOrdering::new(vec![SignalId::from("ValveA")]).unwrap();
        let automaton = LearnerSession::new(
            ordering.clone(),
            ordering.zero_vector(),
            ConvergenceWindow::Auto,
        )
        .unwrap()
        .finalize()
        .unwrap();
        let (_, ctx) = map_automaton(&automaton, "Plant", &facts()).unwrap();
        let g = map_anomalies(&[], &[], &ctx).unwrap();
        assert!(g.is_empty());
    }

    #[test]
    fn wrong_timing_symptom_carries_exact_decimal_arithmetic() {
        let ordering = SignalOrdering::new(vec![SignalId::from("ValveA")]).unwrap();
        let mut session = LearnerSession::new(
            ordering.clone(),
            ordering.zero_vector(),
            ConvergenceWindow::Auto,
        )
        .unwrap();
        session.ingest(&record(121_800, 0, 1)).unwrap();
        session.ingest(&record(152_800, 1, 0)).unwrap();
        let automaton = session.finalize().unwrap();
        // dwell of 127.0 s against a learned max of 121.8 s
        let outcome = run(
            &automaton,
            crate::learner::StateId(0),
            &[record(127_000, 0, 1)],
            ResyncPolicy::VectorResync,
        )
        .unwrap();
        assert_eq!(outcome.reports.len(), 1);
        let syndromes = group_syndromes(&outcome.reports, 5_000);
        let (_, ctx) = map_automaton(&automaton, "Plant", &facts()).unwrap();
        let g = map_anomalies(&outcome.reports, &syndromes, &ctx).unwrap();

        let q = Query::new(
            &["?obs", "?dev"],
            vec![
                TriplePattern::new(
                    PatternTerm::var("?s"),
                    PatternTerm::iri(iso17359::OBSERVED_VALUE),
                    PatternTerm::var("?obs"),
                ),
                TriplePattern::new(
                    PatternTerm::var("?s"),
                    PatternTerm::iri(iso17359::DEVIATION),
                    PatternTerm::var("?dev"),
                ),
            ],
        );
        let rows = evaluate(&g, &q).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0][0], Term::Literal(Literal::decimal_tenths(1270)));
        assert_eq!(rows[0][1], Term::Literal(Literal::decimal_tenths(52)));
        // symptom is part of a (singleton) syndrome
        let q2 = Query::new(
            &["?sym"],
            vec![TriplePattern::new(
                PatternTerm::var("?sym"),
                PatternTerm::iri(iso17359::PART_OF_SYNDROME),
                PatternTerm::var("?syn"),
            )],
        );
        assert_eq!(evaluate(&g, &q2).unwrap().len(), 1);
    }
}
