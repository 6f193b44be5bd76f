//! Learns a timed automaton from an undisturbed plant log and prints its
//! states and timing intervals.
//!
//! Run with: cargo run --example learn_automaton

use takt::event::coalesce_samples;
use takt::learner::{ConvergenceWindow, LearnerSession};
use takt::sim::{default_config, simulate};

fn main() {
    let config = default_config();
    let output = simulate(&config, &[]).expect("reference config is valid");
    let ordering = config.signal_ordering();
    let events = coalesce_samples(
        &output.samples,
        &ordering,
        &config.initial_vector(),
        config.sample_period_ms,
    )
    .expect("simulator log is clean");

    let mut session = LearnerSession::new(
        ordering.clone(),
        config.initial_vector(),
        ConvergenceWindow::Auto,
    )
    .expect("vector matches ordering");
    let mut converged_after = None;
    for (i, record) in events.iter().enumerate() {
        session.ingest(record).expect("simulator log is consistent");
        if converged_after.is_none() && session.has_converged() {
            converged_after = Some(i + 1);
        }
    }
    println!(
        "ingested {} events, converged after {} (window {})",
        session.events_ingested(),
        converged_after.map_or("never".to_owned(), |n| n.to_string()),
        session.effective_window()
    );

    let automaton = session.finalize().expect("learned model is consistent");
    println!("\nstates ({}):", automaton.state_count());
    for state in automaton.state_ids() {
        let marker = if state == automaton.initial() {
            " (initial)"
        } else {
            ""
        };
        println!("  {state}{marker}  {}", automaton.vector(state).unwrap());
    }

    println!("\ntransitions ({}):", automaton.transition_count());
    for t in automaton.transitions() {
        println!(
            "  {} -> {}  [{:.1}s, {:.1}s] over {} observations  via {}",
            t.source,
            t.target,
            t.timing.min_ms as f64 / 1000.0,
            t.timing.max_ms as f64 / 1000.0,
            t.timing.observation_count,
            t.event,
        );
    }

    let json = automaton.to_json().expect("serializes");
    println!(
        "\nautomaton document: {} bytes of canonical JSON",
        json.len()
    );
}
