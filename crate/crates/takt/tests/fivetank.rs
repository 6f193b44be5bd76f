//! Plant-level behaviors of the five-tank reference setup that go beyond
//! the per-module unit tests: starting a detector mid-cycle, grouping a
//! multi-symptom fault into one syndrome, and the per-state property
//! rendering of the mapped graph.

use takt::detector::{group_syndromes, run, ResyncPolicy};
use takt::event::{coalesce_samples, EventRecord};
use takt::kg::{evaluate, Literal, PatternTerm, Query, Term, TriplePattern};
use takt::learner::{learn, ConvergenceWindow, StateId, TimedAutomaton};
use takt::map::{map_automaton, vocab};
use takt::sim::{
    default_config, default_facts, reference_clogging, simulate, FaultKind, FaultSpec, PlantConfig,
};

fn training(config: &PlantConfig) -> (TimedAutomaton, Vec<EventRecord>) {
    let output = simulate(config, &[]).unwrap();
    let events = coalesce_samples(
        &output.samples,
        &config.signal_ordering(),
        &config.initial_vector(),
        config.sample_period_ms,
    )
    .unwrap();
    let automaton = learn(
        config.signal_ordering(),
        config.initial_vector(),
        ConvergenceWindow::Auto,
        &events,
    )
    .unwrap();
    (automaton, events)
}

#[test]
fn detector_started_at_q2_accepts_the_log_tail() {
    let config = default_config();
    let (automaton, events) = training(&config);
    // the second event enters q2 (q0 -> q1 -> q2)
    let mut state = automaton.initial();
    let mut entry_index = None;
    for (i, rec) in events.iter().enumerate() {
        state = automaton.transition(state, &rec.event).unwrap().target;
        if state == StateId(2) {
            entry_index = Some(i);
            break;
        }
    }
    let entry_index = entry_index.expect("the cycle passes through q2");
    let entry_time = events[entry_index].t_ms;
    let tail: Vec<EventRecord> = events[entry_index + 1..]
        .iter()
        .map(|rec| EventRecord {
            event: rec.event.clone(),
            t_ms: rec.t_ms - entry_time,
        })
        .collect();
    let outcome = run(&automaton, StateId(2), &tail, ResyncPolicy::VectorResync).unwrap();
    assert!(outcome.reports.is_empty(), "{:?}", outcome.reports);
}

#[test]
fn two_faults_in_one_cycle_form_a_single_syndrome() {
    let config = default_config();
    let (automaton, _) = training(&config);
    let faults = [
        reference_clogging(),
        FaultSpec {
            kind: FaultKind::Clogging { delay_ms: 8_000 },
            phase_index: 3,
            onset_cycle: 3,
            duration_cycles: 1,
        },
    ];
    let test = simulate(&config, &faults).unwrap();
    let events = coalesce_samples(
        &test.samples,
        &config.signal_ordering(),
        &config.initial_vector(),
        config.sample_period_ms,
    )
    .unwrap();
    let outcome = run(
        &automaton,
        automaton.initial(),
        &events,
        ResyncPolicy::VectorResync,
    )
    .unwrap();
    assert_eq!(outcome.reports.len(), 2, "{:?}", outcome.reports);
    // both anomalies land in one production cycle, so a 5-minute window
    // groups them while a tight window keeps them apart
    let grouped = group_syndromes(&outcome.reports, 300_000);
    assert_eq!(grouped.len(), 1);
    assert_eq!(grouped[0].len(), 2);
    let tight = group_syndromes(&outcome.reports, 1_000);
    assert_eq!(tight.len(), 2);
}

#[test]
fn q2_is_described_by_nine_property_states_with_engineering_labels() {
    let config = default_config();
    let (automaton, _) = training(&config);
    let facts = default_facts();
    let (graph, context) = map_automaton(&automaton, "MixingModule", &facts).unwrap();
    let q2 = context.scheme().state(2);

    let rows = evaluate(
        &graph,
        &Query::new(
            &["?ps", "?property", "?label"],
            vec![
                TriplePattern::new(
                    PatternTerm::Term(Term::Iri(q2)),
                    PatternTerm::iri(vocab::ext::HAS_PROPERTY_STATE),
                    PatternTerm::var("?ps"),
                ),
                TriplePattern::new(
                    PatternTerm::var("?ps"),
                    PatternTerm::iri(vocab::ext::FOR_PROPERTY),
                    PatternTerm::var("?property"),
                ),
                TriplePattern::new(
                    PatternTerm::var("?ps"),
                    PatternTerm::iri(vocab::ext::HAS_VALUE_LABEL),
                    PatternTerm::var("?label"),
                ),
            ],
        ),
    )
    .unwrap();
    assert_eq!(rows.len(), 9, "one property state per actuator");
    for row in &rows {
        let property = row[1].as_iri().unwrap().as_str();
        let label = &row[2];
        let expected = if property.ends_with("/power_P201") {
            "on"
        } else if property.ends_with("/position_V204") {
            "open"
        } else {
            "closed"
        };
        assert_eq!(
            label,
            &Term::Literal(Literal::string(expected)),
            "{property}"
        );
    }
}
