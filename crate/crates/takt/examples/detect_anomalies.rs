//! Trains on an undisturbed log, then replays fault-injected logs and
//! prints the resulting anomaly reports.
//!
//! Run with: cargo run --example detect_anomalies

use takt::detector::{group_syndromes, run, AnomalyReport, ResyncPolicy};
use takt::event::coalesce_samples;
use takt::learner::{learn, ConvergenceWindow, TimedAutomaton};
use takt::sim::{default_config, reference_clogging, simulate, FaultKind, FaultSpec, PlantConfig};

fn events_for(config: &PlantConfig, faults: &[FaultSpec]) -> Vec<takt::event::EventRecord> {
    let output = simulate(config, faults).expect("config is valid");
    coalesce_samples(
        &output.samples,
        &config.signal_ordering(),
        &config.initial_vector(),
        config.sample_period_ms,
    )
    .expect("simulator log is clean")
}

fn replay(automaton: &TimedAutomaton, config: &PlantConfig, faults: &[FaultSpec], label: &str) {
    let events = events_for(config, faults);
    let outcome = run(
        automaton,
        automaton.initial(),
        &events,
        ResyncPolicy::VectorResync,
    )
    .expect("replay from the initial state");
    println!(
        "{label}: {} events, {} anomalies",
        events.len(),
        outcome.reports.len()
    );
    for report in &outcome.reports {
        match report {
            AnomalyReport::WrongTiming {
                at,
                source_state,
                observed_duration_ms,
                violated_bound,
                reference,
                deviation_ms,
                ..
            } => println!(
                "  t={at} ms: wrong timing leaving {source_state}: dwelled {:.1}s, allowed [{:.1}s, {:.1}s], {:?} by {:.1}s",
                *observed_duration_ms as f64 / 1000.0,
                reference.min_ms as f64 / 1000.0,
                reference.max_ms as f64 / 1000.0,
                violated_bound,
                *deviation_ms as f64 / 1000.0,
            ),
            AnomalyReport::UnknownEvent {
                at,
                source_state,
                observed_event,
                expected_events,
            } => println!(
                "  t={at} ms: unknown event {observed_event} in {source_state}; {} events would have been allowed",
                expected_events.len()
            ),
        }
    }
    let syndromes = group_syndromes(&outcome.reports, 300_000);
    if !syndromes.is_empty() {
        println!("  grouped into {} syndrome(s)", syndromes.len());
    }
    println!();
}

fn main() {
    let config = default_config();
    let training = events_for(&config, &[]);
    let automaton = learn(
        config.signal_ordering(),
        config.initial_vector(),
        ConvergenceWindow::Auto,
        &training,
    )
    .expect("training log is consistent");
    println!(
        "trained automaton: {} states, {} transitions\n",
        automaton.state_count(),
        automaton.transition_count()
    );

    replay(&automaton, &config, &[], "undisturbed log");
    replay(
        &automaton,
        &config,
        &[reference_clogging()],
        "clogged pipe ahead of pump P201",
    );
    replay(
        &automaton,
        &config,
        &[FaultSpec {
            kind: FaultKind::Leakage { early_ms: 7_500 },
            phase_index: 5,
            onset_cycle: 5,
            duration_cycles: 2,
        }],
        "leakage while draining tank B205",
    );
}
