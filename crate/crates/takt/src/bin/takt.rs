//! Pipeline front door: simulate a plant log, learn an automaton from it,
//! replay unseen logs for anomalies, export everything as Turtle, and
//! query the result.
//!
//! Exit codes: 0 success (and `detect` with a clean log), 3 `detect` found
//! anomalies, 64 usage errors, 65 operational errors (a missing or invalid
//! input file).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};

use takt::detector::ResyncPolicy;
use takt::learner::ConvergenceWindow;
use takt::pipeline::{
    cmd_detect, cmd_kg_export, cmd_kg_query, cmd_learn, cmd_simulate, QuerySource,
    DEFAULT_SYNDROME_WINDOW_MS,
};
use takt::sim::{default_config, FaultKind, FaultSpec, PlantConfig};

#[derive(Parser)]
#[command(
    name = "takt",
    version,
    about = "Timed-automaton learning, anomaly detection, and knowledge-graph export for discrete-event plant logs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the five-tank plant simulator and write its sample log,
    /// ground truth, initial state, and plant-facts CSVs
    Simulate {
        /// Output directory
        #[arg(long)]
        out: PathBuf,
        /// Plant configuration JSON (defaults to the reference plant)
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override the configured RNG seed
        #[arg(long)]
        seed: Option<u64>,
        /// Override the configured number of production cycles
        #[arg(long)]
        cycles: Option<u32>,
        /// Inject a fault, formatted KIND:PHASE:ONSET:CYCLES:DELTA_MS
        /// (e.g. clogging:1:3:1:5200); repeatable
        #[arg(long = "fault")]
        faults: Vec<String>,
    },
    /// Learn a timed automaton from a raw sample log
    Learn {
        /// Raw sample log (JSON Lines)
        #[arg(long)]
        samples: PathBuf,
        /// Initial-state JSON (signal ordering + starting values)
        #[arg(long)]
        initial: PathBuf,
        /// Automaton JSON output path
        #[arg(long)]
        out: PathBuf,
        /// Also write the coalesced event log here
        #[arg(long = "events-out")]
        events_out: Option<PathBuf>,
        /// Coalescing window, matching the controller cycle
        #[arg(long = "cycle-ms", default_value_t = 100)]
        cycle_ms: u64,
        /// Convergence window: "auto" or a positive event count
        #[arg(long, default_value = "auto")]
        window: String,
    },
    /// Replay a raw sample log against a trained automaton
    Detect {
        /// Automaton JSON from `learn`
        #[arg(long)]
        automaton: PathBuf,
        /// Raw sample log (JSON Lines)
        #[arg(long)]
        samples: PathBuf,
        /// Anomaly log output path (JSON Lines)
        #[arg(long)]
        out: PathBuf,
        /// What to do after an unknown event
        #[arg(long, value_enum, default_value_t = PolicyArg::Resync)]
        policy: PolicyArg,
        /// Start state index (defaults to the initial state)
        #[arg(long = "start-state")]
        start_state: Option<u32>,
        /// Also group reports into syndromes with this gap in ms
        #[arg(long = "syndrome-window")]
        syndrome_window: Option<u64>,
        /// Coalescing window, matching the controller cycle
        #[arg(long = "cycle-ms", default_value_t = 100)]
        cycle_ms: u64,
    },
    /// Knowledge-graph commands
    Kg {
        #[command(subcommand)]
        command: KgCommand,
    },
}

#[derive(Subcommand)]
enum KgCommand {
    /// Map plant facts, automaton, and anomalies to Turtle files
    Export {
        /// Automaton JSON from `learn`
        #[arg(long)]
        automaton: PathBuf,
        /// Plant hierarchy CSV (id,class,parent)
        #[arg(long)]
        hierarchy: PathBuf,
        /// Device CSV (id,kind,host,property,semantic_label)
        #[arg(long)]
        devices: PathBuf,
        /// Anomaly log from `detect`
        #[arg(long)]
        anomalies: Option<PathBuf>,
        /// Plant entity owning the state machine (default: the common
        /// host of the automaton's signals)
        #[arg(long)]
        owner: Option<String>,
        /// Syndrome grouping gap in ms when the anomaly log carries none
        #[arg(long = "syndrome-window", default_value_t = DEFAULT_SYNDROME_WINDOW_MS)]
        syndrome_window: u64,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a query against Turtle files and print TSV
    Query {
        /// Turtle file; repeatable, files are merged
        #[arg(long = "graph", required = true)]
        graphs: Vec<PathBuf>,
        /// Query JSON file
        #[arg(long, conflicts_with = "cq")]
        query: Option<PathBuf>,
        /// Prepared competency question id (CQ1..CQ12)
        #[arg(long)]
        cq: Option<String>,
        /// Plant name for prepared questions (default: inferred)
        #[arg(long)]
        plant: Option<String>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PolicyArg {
    Halt,
    Resync,
}

impl From<PolicyArg> for ResyncPolicy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Halt => ResyncPolicy::Halt,
            PolicyArg::Resync => ResyncPolicy::VectorResync,
        }
    }
}

fn parse_fault(text: &str) -> Result<FaultSpec, String> {
    let parts: Vec<&str> = text.split(':').collect();
    let [kind, phase, onset, cycles, delta] = parts.as_slice() else {
        return Err(format!(
            "fault {text:?} must look like KIND:PHASE:ONSET:CYCLES:DELTA_MS"
        ));
    };
    let parse_u64 = |v: &str, what: &str| {
        v.parse::<u64>()
            .map_err(|_| format!("fault {text:?}: {what} must be an integer"))
    };
    let phase_index = parse_u64(phase, "phase")? as usize;
    let onset_cycle = parse_u64(onset, "onset cycle")? as u32;
    let duration_cycles = parse_u64(cycles, "cycle count")? as u32;
    let delta_ms = parse_u64(delta, "delta")?;
    let kind = match kind.to_ascii_lowercase().as_str() {
        "clogging" | "clog" => FaultKind::Clogging { delay_ms: delta_ms },
        "leakage" | "leak" => FaultKind::Leakage { early_ms: delta_ms },
        other => return Err(format!("unknown fault kind {other:?}")),
    };
    Ok(FaultSpec {
        kind,
        phase_index,
        onset_cycle,
        duration_cycles,
    })
}

fn load_config(path: Option<&PathBuf>) -> Result<PlantConfig, String> {
    match path {
        None => Ok(default_config()),
        Some(path) => {
            let text =
                std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
        }
    }
}

fn parse_window(text: &str) -> Result<ConvergenceWindow, String> {
    if text.eq_ignore_ascii_case("auto") {
        return Ok(ConvergenceWindow::Auto);
    }
    match text.parse::<u64>() {
        Ok(n) if n > 0 => Ok(ConvergenceWindow::Fixed(n)),
        _ => Err(format!(
            "--window must be \"auto\" or a positive integer, got {text:?}"
        )),
    }
}

const EX_USAGE: u8 = 64;
const EX_DATAERR: u8 = 65;
const EX_ANOMALIES: u8 = 3;

fn dispatch(cli: Cli) -> Result<u8, String> {
    match cli.command {
        Command::Simulate {
            out,
            config,
            seed,
            cycles,
            faults,
        } => {
            let mut config = load_config(config.as_ref())?;
            if let Some(seed) = seed {
                config.seed = seed;
            }
            if let Some(cycles) = cycles {
                config.cycles = cycles;
            }
            let faults = faults
                .iter()
                .map(|f| parse_fault(f))
                .collect::<Result<Vec<_>, _>>()?;
            let paths = cmd_simulate(&config, &faults, &out).map_err(|e| e.to_string())?;
            println!("samples:       {}", paths.samples.display());
            println!("ground truth:  {}", paths.ground_truth.display());
            println!("initial state: {}", paths.initial_state.display());
            println!(
                "plant facts:   {}, {}",
                paths.hierarchy.display(),
                paths.devices.display()
            );
            Ok(0)
        }
        Command::Learn {
            samples,
            initial,
            out,
            events_out,
            cycle_ms,
            window,
        } => {
            let window = parse_window(&window)?;
            let summary = cmd_learn(
                &samples,
                &initial,
                cycle_ms,
                window,
                &out,
                events_out.as_deref(),
            )
            .map_err(|e| e.to_string())?;
            println!(
                "{}",
                serde_json::to_string_pretty(&summary).expect("summary serializes")
            );
            Ok(0)
        }
        Command::Detect {
            automaton,
            samples,
            out,
            policy,
            start_state,
            syndrome_window,
            cycle_ms,
        } => {
            let summary = cmd_detect(
                &automaton,
                &samples,
                policy.into(),
                start_state,
                syndrome_window,
                cycle_ms,
                &out,
            )
            .map_err(|e| e.to_string())?;
            println!(
                "{}",
                serde_json::to_string_pretty(&summary).expect("summary serializes")
            );
            Ok(if summary.reports > 0 { EX_ANOMALIES } else { 0 })
        }
        Command::Kg { command } => match command {
            KgCommand::Export {
                automaton,
                hierarchy,
                devices,
                anomalies,
                owner,
                syndrome_window,
                out,
            } => {
                let paths = cmd_kg_export(
                    &automaton,
                    &hierarchy,
                    &devices,
                    anomalies.as_deref(),
                    owner.as_deref(),
                    syndrome_window,
                    &out,
                )
                .map_err(|e| e.to_string())?;
                println!("plant:     {}", paths.plant.display());
                println!("automaton: {}", paths.automaton.display());
                if let Some(anomalies) = &paths.anomalies {
                    println!("anomalies: {}", anomalies.display());
                }
                println!("merged:    {}", paths.merged.display());
                Ok(0)
            }
            KgCommand::Query {
                graphs,
                query,
                cq,
                plant,
            } => {
                let source = match (query, cq) {
                    (Some(path), None) => QuerySource::File(path),
                    (None, Some(id)) => QuerySource::Named(id),
                    _ => return Err("pass exactly one of --query or --cq".into()),
                };
                let tsv =
                    cmd_kg_query(&graphs, &source, plant.as_deref()).map_err(|e| e.to_string())?;
                print!("{tsv}");
                Ok(0)
            }
        },
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EX_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(message) => {
            eprintln!("takt: {message}");
            ExitCode::from(EX_DATAERR)
        }
    }
}
