//! Runs the five-tank plant simulator with the reference clogging fault and
//! prints what the log contains.
//!
//! Run with: cargo run --example simulate_plant

use takt::sim::{default_config, reference_clogging, simulate};

fn main() {
    let config = default_config();
    let fault = reference_clogging();
    let output = simulate(&config, &[fault]).expect("reference config is valid");

    println!(
        "five-tank plant, {} production cycles, seed {}",
        config.cycles, config.seed
    );
    println!(
        "{} raw samples over {} actuators\n",
        output.samples.len(),
        config.actuators.len()
    );

    println!("phase timing (cycle 1..4):");
    println!(
        "{:<20} {:>10} {:>10} {:>10} {:>10}",
        "phase", "cycle 1", "cycle 2", "cycle 3", "cycle 4"
    );
    for phase in 0..output.ground_truth.phase_names.len() {
        let name = &output.ground_truth.phase_names[phase];
        let mut cells = Vec::new();
        for cycle in 1..=4 {
            let rec = output
                .ground_truth
                .phases
                .iter()
                .find(|p| p.cycle == cycle && p.phase == phase)
                .expect("simulated cycles");
            cells.push(format!("{:.1}s", rec.actual_ms as f64 / 1000.0));
        }
        println!(
            "{name:<20} {:>10} {:>10} {:>10} {:>10}",
            cells[0], cells[1], cells[2], cells[3]
        );
    }

    println!("\ninjected fault: {:?}", fault.kind);
    for rec in &output.ground_truth.phases {
        if rec.nominal_ms != rec.actual_ms {
            println!(
                "cycle {}, phase {} ({}): {} ms drawn, {} ms actual",
                rec.cycle,
                rec.phase,
                output.ground_truth.phase_names[rec.phase],
                rec.nominal_ms,
                rec.actual_ms
            );
        }
    }
}
