//! File-to-file commands behind the `takt` binary: simulate, learn,
//! detect, export graphs, and query graphs. Each command is a pure
//! function of its input files and flags, so re-running with identical
//! inputs produces byte-identical outputs, and every stage can be
//! swapped or re-driven independently through its file format.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::detector::{
    group_syndromes, read_anomaly_log, run, write_anomaly_log, DetectorStatus, ResyncPolicy,
    Syndrome,
};
use crate::event::{
    coalesce_samples, read_raw_samples, write_event_log, write_raw_samples, SignalId,
    SignalOrdering, SignalValue, StateVector,
};
use crate::kg::{
    evaluate, parse_turtle, query_from_json, render_tsv, serialize_turtle, Graph, Query,
};
use crate::learner::{ConvergenceWindow, LearnerSession, StateId, TimedAutomaton};
use crate::map::{
    competency_queries, map_anomalies, map_automaton, map_plant, read_devices_csv,
    read_hierarchy_csv, vocab, write_devices_csv, write_hierarchy_csv, PlantFacts,
};
use crate::sim::{facts_for_actuators, simulate, FaultSpec, PlantConfig};

/// Default gap for grouping anomaly reports into syndromes (5 minutes,
/// roughly one production cycle of the reference plant).
pub const DEFAULT_SYNDROME_WINDOW_MS: u64 = 300_000;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{path}: {reason}")]
    File { path: PathBuf, reason: String },
    #[error("{0}")]
    Invalid(String),
}

impl PipelineError {
    fn file(path: impl Into<PathBuf>, reason: impl Display) -> Self {
        PipelineError::File {
            path: path.into(),
            reason: reason.to_string(),
        }
    }
}

type Result<T> = std::result::Result<T, PipelineError>;

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| PipelineError::file(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| PipelineError::file(parent, e))?;
        }
    }
    Ok(BufWriter::new(
        File::create(path).map_err(|e| PipelineError::file(path, e))?,
    ))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(
        File::open(path).map_err(|e| PipelineError::file(path, e))?,
    ))
}

// ---------------------------------------------------------------------------
// Initial-state file
// ---------------------------------------------------------------------------

/// The IO snapshot a log starts from, paired with the signal ordering.
/// Learning requires it as an explicit input; the simulator writes it next
/// to its sample log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InitialState {
    pub signal_ordering: Vec<SignalId>,
    pub values: Vec<SignalValue>,
}

impl InitialState {
    pub fn ordering(&self) -> Result<SignalOrdering> {
        SignalOrdering::new(self.signal_ordering.clone())
            .map_err(|e| PipelineError::Invalid(e.to_string()))
    }

    pub fn vector(&self) -> StateVector {
        StateVector::new(self.values.clone())
    }

    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("plain data serializes");
        out.push('\n');
        out
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = read_to_string(path)?;
        let parsed: InitialState =
            serde_json::from_str(&text).map_err(|e| PipelineError::file(path, e))?;
        if parsed.signal_ordering.len() != parsed.values.len() {
            return Err(PipelineError::file(
                path,
                "signal_ordering and values have different lengths",
            ));
        }
        Ok(parsed)
    }
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

/// Artifacts written by [`cmd_simulate`].
#[derive(Debug, Clone)]
pub struct SimulateOutputs {
    pub samples: PathBuf,
    pub ground_truth: PathBuf,
    pub initial_state: PathBuf,
    pub hierarchy: PathBuf,
    pub devices: PathBuf,
}

/// Runs the plant and writes the sample log, the ground-truth annotations,
/// the initial-state file, and the plant-facts CSVs into `out_dir`.
pub fn cmd_simulate(
    config: &PlantConfig,
    faults: &[FaultSpec],
    out_dir: &Path,
) -> Result<SimulateOutputs> {
    let output = simulate(config, faults).map_err(|e| PipelineError::Invalid(e.to_string()))?;
    fs::create_dir_all(out_dir).map_err(|e| PipelineError::file(out_dir, e))?;

    let paths = SimulateOutputs {
        samples: out_dir.join("samples.jsonl"),
        ground_truth: out_dir.join("ground_truth.json"),
        initial_state: out_dir.join("initial_state.json"),
        hierarchy: out_dir.join("hierarchy.csv"),
        devices: out_dir.join("devices.csv"),
    };

    let mut w = create(&paths.samples)?;
    write_raw_samples(&mut w, &output.samples)
        .map_err(|e| PipelineError::file(&paths.samples, e))?;
    w.flush()
        .map_err(|e| PipelineError::file(&paths.samples, e))?;

    let gt = output
        .ground_truth
        .to_json()
        .map_err(|e| PipelineError::file(&paths.ground_truth, e))?;
    fs::write(&paths.ground_truth, gt).map_err(|e| PipelineError::file(&paths.ground_truth, e))?;

    let initial = InitialState {
        signal_ordering: config.actuators.clone(),
        values: config.initial_vector().values().to_vec(),
    };
    fs::write(&paths.initial_state, initial.to_json())
        .map_err(|e| PipelineError::file(&paths.initial_state, e))?;

    let facts = facts_for_actuators(&config.actuators);
    let mut w = create(&paths.hierarchy)?;
    write_hierarchy_csv(&mut w, facts.hierarchy())
        .map_err(|e| PipelineError::file(&paths.hierarchy, e))?;
    w.flush()
        .map_err(|e| PipelineError::file(&paths.hierarchy, e))?;
    let mut w = create(&paths.devices)?;
    write_devices_csv(&mut w, facts.devices())
        .map_err(|e| PipelineError::file(&paths.devices, e))?;
    w.flush()
        .map_err(|e| PipelineError::file(&paths.devices, e))?;

    Ok(paths)
}

// ---------------------------------------------------------------------------
// learn
// ---------------------------------------------------------------------------

/// What `learn` did, reported alongside the automaton file.
#[derive(Debug, Clone, Serialize)]
pub struct LearnSummary {
    pub states: usize,
    pub transitions: usize,
    pub events_ingested: u64,
    pub converged: bool,
    pub window_policy: String,
    pub effective_window: u64,
}

/// Coalesces a raw sample log and learns an automaton from it, writing the
/// automaton JSON to `out` and optionally the coalesced event log next to
/// it.
pub fn cmd_learn(
    samples_path: &Path,
    initial_path: &Path,
    cycle_ms: u64,
    window: ConvergenceWindow,
    out: &Path,
    events_out: Option<&Path>,
) -> Result<LearnSummary> {
    if cycle_ms == 0 {
        return Err(PipelineError::Invalid("cycle-ms must be positive".into()));
    }
    let initial = InitialState::read(initial_path)?;
    let ordering = initial.ordering()?;
    let samples =
        read_raw_samples(open(samples_path)?).map_err(|e| PipelineError::file(samples_path, e))?;
    let events = coalesce_samples(&samples, &ordering, &initial.vector(), cycle_ms)
        .map_err(|e| PipelineError::file(samples_path, e))?;

    let mut session = LearnerSession::new(ordering, initial.vector(), window)
        .map_err(|e| PipelineError::Invalid(e.to_string()))?;
    for record in &events {
        session
            .ingest(record)
            .map_err(|e| PipelineError::file(samples_path, e))?;
    }
    let summary = LearnSummary {
        states: session.state_count(),
        transitions: session.transition_count(),
        events_ingested: session.events_ingested(),
        converged: session.has_converged(),
        window_policy: match window {
            ConvergenceWindow::Auto => "auto".to_owned(),
            ConvergenceWindow::Fixed(n) => n.to_string(),
        },
        effective_window: session.effective_window(),
    };
    let automaton = session
        .finalize()
        .map_err(|e| PipelineError::Invalid(e.to_string()))?;

    let mut w = create(out)?;
    automaton
        .write_json(&mut w)
        .map_err(|e| PipelineError::file(out, e))?;
    w.flush().map_err(|e| PipelineError::file(out, e))?;

    if let Some(events_path) = events_out {
        let mut w = create(events_path)?;
        write_event_log(&mut w, &events).map_err(|e| PipelineError::file(events_path, e))?;
        w.flush().map_err(|e| PipelineError::file(events_path, e))?;
    }
    Ok(summary)
}

// ---------------------------------------------------------------------------
// detect
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct DetectSummary {
    pub reports: usize,
    pub wrong_timing: usize,
    pub unknown_event: usize,
    pub syndromes: Option<usize>,
    pub status: DetectorStatus,
}

/// Replays a raw sample log against a trained automaton and writes the
/// anomaly log. The stream is coalesced with the automaton's signal
/// ordering, starting from the start state's vector.
pub fn cmd_detect(
    automaton_path: &Path,
    samples_path: &Path,
    policy: ResyncPolicy,
    start_state: Option<u32>,
    syndrome_window_ms: Option<u64>,
    cycle_ms: u64,
    out: &Path,
) -> Result<DetectSummary> {
    if cycle_ms == 0 {
        return Err(PipelineError::Invalid("cycle-ms must be positive".into()));
    }
    let automaton = read_automaton(automaton_path)?;
    let start = StateId(start_state.unwrap_or(automaton.initial().0));
    let start_vector = automaton
        .vector(start)
        .ok_or_else(|| PipelineError::Invalid(format!("start state q{} does not exist", start.0)))?
        .clone();
    let samples =
        read_raw_samples(open(samples_path)?).map_err(|e| PipelineError::file(samples_path, e))?;
    let events = coalesce_samples(
        &samples,
        automaton.signal_ordering(),
        &start_vector,
        cycle_ms,
    )
    .map_err(|e| PipelineError::file(samples_path, e))?;

    let outcome = run(&automaton, start, &events, policy)
        .map_err(|e| PipelineError::Invalid(e.to_string()))?;
    let syndromes = syndrome_window_ms.map(|w| (w, group_syndromes(&outcome.reports, w)));

    let mut w = create(out)?;
    write_anomaly_log(
        &mut w,
        &outcome.reports,
        syndromes.as_ref().map(|(win, s)| (*win, s.as_slice())),
    )
    .map_err(|e| PipelineError::file(out, e))?;
    w.flush().map_err(|e| PipelineError::file(out, e))?;

    Ok(DetectSummary {
        reports: outcome.reports.len(),
        wrong_timing: outcome
            .reports
            .iter()
            .filter(|r| r.is_wrong_timing())
            .count(),
        unknown_event: outcome
            .reports
            .iter()
            .filter(|r| !r.is_wrong_timing())
            .count(),
        syndromes: syndromes.as_ref().map(|(_, s)| s.len()),
        status: outcome.status,
    })
}

fn read_automaton(path: &Path) -> Result<TimedAutomaton> {
    let text = read_to_string(path)?;
    TimedAutomaton::from_json(&text).map_err(|e| PipelineError::file(path, e))
}

// ---------------------------------------------------------------------------
// kg export
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct ExportPaths {
    pub plant: PathBuf,
    pub automaton: PathBuf,
    pub anomalies: Option<PathBuf>,
    pub merged: PathBuf,
}

/// Maps the plant facts, the automaton, and (optionally) an anomaly log to
/// Turtle files plus a merged export. The automaton's owner entity defaults
/// to the common host of its signals' actuators.
pub fn cmd_kg_export(
    automaton_path: &Path,
    hierarchy_path: &Path,
    devices_path: &Path,
    anomalies_path: Option<&Path>,
    owner: Option<&str>,
    syndrome_window_ms: u64,
    out_dir: &Path,
) -> Result<ExportPaths> {
    let automaton = read_automaton(automaton_path)?;
    let hierarchy = read_hierarchy_csv(open(hierarchy_path)?)
        .map_err(|e| PipelineError::file(hierarchy_path, e))?;
    let devices =
        read_devices_csv(open(devices_path)?).map_err(|e| PipelineError::file(devices_path, e))?;
    let facts =
        PlantFacts::new(hierarchy, devices).map_err(|e| PipelineError::Invalid(e.to_string()))?;

    let owner = match owner {
        Some(owner) => owner.to_owned(),
        None => infer_owner(&automaton, &facts)?,
    };

    let plant_graph = map_plant(&facts).map_err(|e| PipelineError::Invalid(e.to_string()))?;
    let (automaton_graph, context) = map_automaton(&automaton, &owner, &facts)
        .map_err(|e| PipelineError::Invalid(e.to_string()))?;

    let anomaly_graph = match anomalies_path {
        None => None,
        Some(path) => {
            let (reports, stored_syndromes) =
                read_anomaly_log(open(path)?).map_err(|e| PipelineError::file(path, e))?;
            let syndromes: Vec<Syndrome> = match stored_syndromes {
                Some((_, s)) => s,
                None => group_syndromes(&reports, syndrome_window_ms),
            };
            Some(
                map_anomalies(&reports, &syndromes, &context)
                    .map_err(|e| PipelineError::file(path, e))?,
            )
        }
    };

    fs::create_dir_all(out_dir).map_err(|e| PipelineError::file(out_dir, e))?;
    let paths = ExportPaths {
        plant: out_dir.join("plant.ttl"),
        automaton: out_dir.join("automaton.ttl"),
        anomalies: anomaly_graph
            .as_ref()
            .map(|_| out_dir.join("anomalies.ttl")),
        merged: out_dir.join("merged.ttl"),
    };

    fs::write(&paths.plant, serialize_turtle(&plant_graph))
        .map_err(|e| PipelineError::file(&paths.plant, e))?;
    fs::write(&paths.automaton, serialize_turtle(&automaton_graph))
        .map_err(|e| PipelineError::file(&paths.automaton, e))?;
    let mut merged = plant_graph;
    merged.merge(&automaton_graph);
    if let (Some(path), Some(graph)) = (&paths.anomalies, &anomaly_graph) {
        fs::write(path, serialize_turtle(graph)).map_err(|e| PipelineError::file(path, e))?;
        merged.merge(graph);
    }
    fs::write(&paths.merged, serialize_turtle(&merged))
        .map_err(|e| PipelineError::file(&paths.merged, e))?;
    Ok(paths)
}

/// The unique host entity of all the automaton's signals.
fn infer_owner(automaton: &TimedAutomaton, facts: &PlantFacts) -> Result<String> {
    let mut hosts: Vec<&str> = automaton
        .signal_ordering()
        .ids()
        .iter()
        .filter_map(|id| facts.device(id.as_str()).map(|d| d.host.as_str()))
        .collect();
    hosts.sort_unstable();
    hosts.dedup();
    match hosts.as_slice() {
        [only] => Ok((*only).to_owned()),
        [] => Err(PipelineError::Invalid(
            "no automaton signal matches a device; pass --owner".into(),
        )),
        _ => Err(PipelineError::Invalid(format!(
            "automaton signals are hosted by {} entities; pass --owner",
            hosts.len()
        ))),
    }
}

// ---------------------------------------------------------------------------
// kg query
// ---------------------------------------------------------------------------

/// Where a query comes from: a JSON file or a prepared competency question.
#[derive(Debug, Clone)]
pub enum QuerySource {
    File(PathBuf),
    Named(String),
}

/// Loads and merges Turtle files, resolves the query, and renders the
/// solutions as TSV with a header row.
pub fn cmd_kg_query(
    graph_paths: &[PathBuf],
    source: &QuerySource,
    plant_override: Option<&str>,
) -> Result<String> {
    if graph_paths.is_empty() {
        return Err(PipelineError::Invalid("no graph files given".into()));
    }
    let mut graph = Graph::new();
    for path in graph_paths {
        let text = read_to_string(path)?;
        let parsed = parse_turtle(&text).map_err(|e| PipelineError::file(path, e))?;
        graph.merge(&parsed);
    }
    let query = resolve_query(&graph, source, plant_override)?;
    let rows = evaluate(&graph, &query).map_err(|e| PipelineError::Invalid(e.to_string()))?;
    Ok(render_tsv(&query, &rows, graph.prefixes()))
}

fn resolve_query(
    graph: &Graph,
    source: &QuerySource,
    plant_override: Option<&str>,
) -> Result<Query> {
    match source {
        QuerySource::File(path) => {
            let text = read_to_string(path)?;
            let mut prefixes = graph.prefixes().clone();
            for (prefix, ns) in vocab::standard_prefixes() {
                prefixes
                    .entry(prefix.to_owned())
                    .or_insert_with(|| ns.to_owned());
            }
            query_from_json(&text, &prefixes).map_err(|e| PipelineError::file(path, e))
        }
        QuerySource::Named(id) => {
            let plant = match plant_override {
                Some(p) => p.to_owned(),
                None => infer_plant(graph).ok_or_else(|| {
                    PipelineError::Invalid(
                        "cannot infer the plant name from the graphs; pass --plant".into(),
                    )
                })?,
            };
            competency_queries(&plant)
                .into_iter()
                .find(|cq| cq.id.eq_ignore_ascii_case(id))
                .map(|cq| cq.query)
                .ok_or_else(|| {
                    PipelineError::Invalid(format!("unknown competency question {id:?}"))
                })
        }
    }
}

/// First path segment of any instance IRI: `ex:<plant>/...`.
fn infer_plant(graph: &Graph) -> Option<String> {
    for triple in graph.iter() {
        let s = triple.subject.as_str();
        if let Some(rest) = s.strip_prefix(vocab::EX_NS) {
            if let Some((plant, _)) = rest.split_once('/') {
                return Some(plant.to_owned());
            }
        }
    }
    None
}

// ---------------------------------------------------------------------------
// manifest
// ---------------------------------------------------------------------------

/// Records every artifact a pipeline run produced with its content hash, so
/// a re-run can be checked for bit-exact reproducibility.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineManifest {
    pub tool_version: String,
    pub seed: Option<u64>,
    pub config_sha256: Option<String>,
    /// Relative artifact path → SHA-256 of its bytes.
    pub artifacts: BTreeMap<String, String>,
}

impl PipelineManifest {
    pub fn new(seed: Option<u64>) -> Self {
        PipelineManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_owned(),
            seed,
            config_sha256: None,
            artifacts: BTreeMap::new(),
        }
    }

    /// Hashes `path` and records it under `name`.
    pub fn record(&mut self, name: impl Into<String>, path: &Path) -> Result<()> {
        let hash = sha256_file(path)?;
        self.artifacts.insert(name.into(), hash);
        Ok(())
    }

    /// Re-hashes every artifact relative to `base`, reporting the first
    /// mismatch or missing file.
    pub fn verify(&self, base: &Path) -> Result<()> {
        for (name, expected) in &self.artifacts {
            let path = base.join(name);
            let actual = sha256_file(&path)?;
            if &actual != expected {
                return Err(PipelineError::file(
                    path,
                    format!("hash mismatch: recorded {expected}, found {actual}"),
                ));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("plain data serializes");
        out.push('\n');
        out
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| PipelineError::file(path, e))
    }
}

/// SHA-256 of a file's bytes, lowercase hex.
pub fn sha256_file(path: &Path) -> Result<String> {
    let mut file = File::open(path).map_err(|e| PipelineError::file(path, e))?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 8192];
    loop {
        let n = file
            .read(&mut buf)
            .map_err(|e| PipelineError::file(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect())
}

/// SHA-256 of an in-memory blob, lowercase hex (for config hashes).
pub fn sha256_bytes(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}
