//! Maps the plant description, a learned automaton, and detected anomalies
//! to one merged RDF graph and prints a Turtle excerpt.
//!
//! Run with: cargo run --example export_knowledge_graph

use takt::detector::{group_syndromes, run, ResyncPolicy};
use takt::event::coalesce_samples;
use takt::kg::serialize_turtle;
use takt::learner::{learn, ConvergenceWindow};
use takt::map::{map_anomalies, map_automaton, map_plant};
use takt::sim::{default_config, default_facts, reference_clogging, simulate};

fn main() {
    let config = default_config();
    let facts = default_facts();

    let train = simulate(&config, &[]).expect("valid config");
    let ordering = config.signal_ordering();
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

    let test = simulate(&config, &[reference_clogging()]).expect("valid config");
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

    let plant_graph = map_plant(&facts).unwrap();
    let (automaton_graph, context) = map_automaton(&automaton, "MixingModule", &facts).unwrap();
    let anomaly_graph = map_anomalies(&outcome.reports, &syndromes, &context).unwrap();

    println!("plant description: {:>5} triples", plant_graph.len());
    println!("timed automaton:   {:>5} triples", automaton_graph.len());
    println!("anomalies:         {:>5} triples", anomaly_graph.len());

    let mut merged = plant_graph;
    merged.merge(&automaton_graph);
    merged.merge(&anomaly_graph);
    println!("merged export:     {:>5} triples\n", merged.len());

    let turtle = serialize_turtle(&merged);
    println!("--- Turtle excerpt (state q2 and the detected symptom) ---");
    for line in turtle.lines() {
        if line.contains("/state/q2>")
            || line.contains("/symptom/")
            || line.contains("/timing/q2_q3>")
        {
            println!("{line}");
        }
    }
}
