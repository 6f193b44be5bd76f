//! Builds the full five-tank export in memory and answers every prepared
//! competency question against it.
//!
//! Run with: cargo run --example query_graph

use takt::detector::{group_syndromes, run, ResyncPolicy};
use takt::event::coalesce_samples;
use takt::kg::{evaluate, term_display};
use takt::learner::{learn, ConvergenceWindow};
use takt::map::{competency_queries, map_anomalies, map_automaton, map_plant};
use takt::sim::{default_config, default_facts, reference_clogging, simulate};

fn main() {
    let config = default_config();
    let facts = default_facts();
    let ordering = config.signal_ordering();

    let train = simulate(&config, &[]).unwrap();
    let events = coalesce_samples(
        &train.samples,
        &ordering,
        &config.initial_vector(),
        config.sample_period_ms,
    )
    .unwrap();
    let automaton = learn(
        ordering.clone(),
        config.initial_vector(),
        ConvergenceWindow::Auto,
        &events,
    )
    .unwrap();

    let test = simulate(&config, &[reference_clogging()]).unwrap();
    let test_events = coalesce_samples(
        &test.samples,
        &ordering,
        &config.initial_vector(),
        config.sample_period_ms,
    )
    .unwrap();
    let outcome = run(
        &automaton,
        automaton.initial(),
        &test_events,
        ResyncPolicy::VectorResync,
    )
    .unwrap();
    let syndromes = group_syndromes(&outcome.reports, 300_000);

    let mut graph = map_plant(&facts).unwrap();
    let (automaton_graph, context) = map_automaton(&automaton, "MixingModule", &facts).unwrap();
    let anomaly_graph = map_anomalies(&outcome.reports, &syndromes, &context).unwrap();
    graph.merge(&automaton_graph);
    graph.merge(&anomaly_graph);

    for cq in competency_queries(facts.root()) {
        println!("{} [{}] {}", cq.id, cq.requirement, cq.question);
        let rows = evaluate(&graph, &cq.query).unwrap();
        if rows.is_empty() {
            println!("    (no solutions)");
        }
        for row in &rows {
            let cells: Vec<String> = row
                .iter()
                .map(|t| term_display(t, graph.prefixes()))
                .collect();
            println!("    {}", cells.join("  "));
        }
        println!();
    }
}
