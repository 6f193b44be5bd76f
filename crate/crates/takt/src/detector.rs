//! Replay of unseen event streams against a learned automaton.
//!
//! Each incoming event is checked from the current state: a trained
//! transition with a dwell time inside its learned interval advances the
//! detector silently; a trained transition with a dwell time outside the
//! interval raises a wrong-timing anomaly (and still advances, since the
//! event itself was legal); an untrained event raises an unknown-event
//! anomaly, after which the detector either halts or re-synchronizes by
//! state vector.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::event::{Event, EventRecord};
use crate::learner::{StateId, TimedAutomaton, TimingInterval};

#[derive(Debug, Error)]
pub enum DetectError {
    #[error("start state {0} is not part of the automaton")]
    UnknownStartState(StateId),
    #[error("detector has halted and rejects further events")]
    DetectorHalted,
    #[error("record at {found} ms predates state entry at {entered} ms")]
    TimestampBeforeEntry { entered: u64, found: u64 },
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        source: serde_json::Error,
    },
    #[error("anomaly log line {line} is invalid: {reason}")]
    BadLogLine { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// What to do after an unknown event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResyncPolicy {
    /// Stop monitoring; every later event is rejected.
    Halt,
    /// Jump to the state whose vector matches the observed changes, if one
    /// exists; halt otherwise. States carry no memory, so the vector alone
    /// identifies where the plant actually is.
    #[default]
    VectorResync,
}

/// Which learned bound a wrong-timing anomaly violated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ViolatedBound {
    BelowMin,
    AboveMax,
}

/// An event that would have been allowed from a state, with its timing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpectedEvent {
    pub event: Event,
    pub timing: TimingInterval,
}

/// One detected anomaly.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum AnomalyReport {
    /// The event was legal but its dwell time violated the learned interval.
    WrongTiming {
        at: u64,
        source_state: StateId,
        observed_event: Event,
        observed_duration_ms: u64,
        violated_bound: ViolatedBound,
        reference: TimingInterval,
        deviation_ms: u64,
    },
    /// No trained transition matches the event from the current state.
    UnknownEvent {
        at: u64,
        source_state: StateId,
        observed_event: Event,
        expected_events: Vec<ExpectedEvent>,
    },
}

impl AnomalyReport {
    pub fn at(&self) -> u64 {
        match self {
            AnomalyReport::WrongTiming { at, .. } | AnomalyReport::UnknownEvent { at, .. } => *at,
        }
    }

    pub fn source_state(&self) -> StateId {
        match self {
            AnomalyReport::WrongTiming { source_state, .. }
            | AnomalyReport::UnknownEvent { source_state, .. } => *source_state,
        }
    }

    pub fn observed_event(&self) -> &Event {
        match self {
            AnomalyReport::WrongTiming { observed_event, .. }
            | AnomalyReport::UnknownEvent { observed_event, .. } => observed_event,
        }
    }

    pub fn is_wrong_timing(&self) -> bool {
        matches!(self, AnomalyReport::WrongTiming { .. })
    }
}

/// Result of one detector step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepOutcome {
    Advanced(StateId),
    Anomaly {
        report: AnomalyReport,
        /// Where the detector sits afterwards; `None` means halted.
        position: Option<StateId>,
    },
}

/// Detector status after a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorStatus {
    Running,
    Halted,
}

/// Stateful replay cursor over one immutable automaton. Single-writer per
/// stream; run several detectors in parallel for several streams.
#[derive(Debug)]
pub struct Detector<'a> {
    automaton: &'a TimedAutomaton,
    current: StateId,
    entered_at: u64,
    policy: ResyncPolicy,
    halted: bool,
}

impl<'a> Detector<'a> {
    /// Positions the detector at `start_state` with the dwell clock at zero.
    /// Feed it a stream whose time origin is the moment that state was
    /// entered.
    pub fn start(
        automaton: &'a TimedAutomaton,
        start_state: StateId,
        policy: ResyncPolicy,
    ) -> Result<Self, DetectError> {
        if automaton.vector(start_state).is_none() {
            return Err(DetectError::UnknownStartState(start_state));
        }
        Ok(Detector {
            automaton,
            current: start_state,
            entered_at: 0,
            policy,
            halted: false,
        })
    }

    pub fn current_state(&self) -> StateId {
        self.current
    }

    pub fn is_halted(&self) -> bool {
        self.halted
    }

    pub fn status(&self) -> DetectorStatus {
        if self.halted {
            DetectorStatus::Halted
        } else {
            DetectorStatus::Running
        }
    }

    /// Classifies one event and advances the detector.
    pub fn step(&mut self, record: &EventRecord) -> Result<StepOutcome, DetectError> {
        if self.halted {
            return Err(DetectError::DetectorHalted);
        }
        if record.t_ms < self.entered_at {
            return Err(DetectError::TimestampBeforeEntry {
                entered: self.entered_at,
                found: record.t_ms,
            });
        }
        let duration = record.t_ms - self.entered_at;

        if let Some(transition) = self.automaton.transition(self.current, &record.event) {
            if transition.timing.contains(duration) {
                self.current = transition.target;
                self.entered_at = record.t_ms;
                return Ok(StepOutcome::Advanced(transition.target));
            }
            let (violated_bound, deviation_ms) = if duration < transition.timing.min_ms {
                (ViolatedBound::BelowMin, transition.timing.min_ms - duration)
            } else {
                (ViolatedBound::AboveMax, duration - transition.timing.max_ms)
            };
            let report = AnomalyReport::WrongTiming {
                at: record.t_ms,
                source_state: self.current,
                observed_event: record.event.clone(),
                observed_duration_ms: duration,
                violated_bound,
                reference: transition.timing,
                deviation_ms,
            };
            // The event itself was structurally legal, so keep tracking.
            self.current = transition.target;
            self.entered_at = record.t_ms;
            return Ok(StepOutcome::Anomaly {
                report,
                position: Some(transition.target),
            });
        }

        let expected_events = self
            .automaton
            .outgoing(self.current)
            .into_iter()
            .map(|t| ExpectedEvent {
                event: t.event,
                timing: t.timing,
            })
            .collect();
        let report = AnomalyReport::UnknownEvent {
            at: record.t_ms,
            source_state: self.current,
            observed_event: record.event.clone(),
            expected_events,
        };
        let position = match self.policy {
            ResyncPolicy::Halt => None,
            ResyncPolicy::VectorResync => {
                let current_vector = self
                    .automaton
                    .vector(self.current)
                    .expect("current state exists");
                match self
                    .automaton
                    .signal_ordering()
                    .apply_event(current_vector, &record.event)
                {
                    Ok(target_vector) => self.automaton.state_of_vector(&target_vector),
                    // Old values disagree with the tracked vector: the stream
                    // has diverged beyond what vector matching can repair.
                    Err(_) => None,
                }
            }
        };
        match position {
            Some(state) => {
                self.current = state;
                self.entered_at = record.t_ms;
            }
            None => self.halted = true,
        }
        Ok(StepOutcome::Anomaly { report, position })
    }
}

/// Outcome of replaying a whole log.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutcome {
    pub reports: Vec<AnomalyReport>,
    pub status: DetectorStatus,
    /// How many records were consumed (a halted detector stops early).
    pub records_processed: usize,
}

/// Replays a log from `start_state`, collecting anomaly reports in
/// timestamp order. A halt is carried in the outcome, not raised.
pub fn run(
    automaton: &TimedAutomaton,
    start_state: StateId,
    log: &[EventRecord],
    policy: ResyncPolicy,
) -> Result<RunOutcome, DetectError> {
    let mut detector = Detector::start(automaton, start_state, policy)?;
    let mut reports = Vec::new();
    let mut processed = 0;
    for rec in log {
        match detector.step(rec)? {
            StepOutcome::Advanced(_) => {}
            StepOutcome::Anomaly { report, .. } => reports.push(report),
        }
        processed += 1;
        if detector.is_halted() {
            break;
        }
    }
    Ok(RunOutcome {
        reports,
        status: detector.status(),
        records_processed: processed,
    })
}

/// A maximal run of anomaly reports whose consecutive gaps stay within the
/// grouping window, referencing the report list by index range.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Syndrome {
    /// Index of the first report, inclusive.
    pub first: usize,
    /// Index of the last report, inclusive.
    pub last: usize,
    pub window_ms: u64,
}

impl Syndrome {
    pub fn len(&self) -> usize {
        self.last - self.first + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn reports<'a>(&self, all: &'a [AnomalyReport]) -> &'a [AnomalyReport] {
        &all[self.first..=self.last]
    }
}

/// Groups timestamp-ordered reports into maximal runs with consecutive gaps
/// of at most `window_ms`. Isolated reports form singleton groups.
pub fn group_syndromes(reports: &[AnomalyReport], window_ms: u64) -> Vec<Syndrome> {
    assert!(window_ms > 0, "window_ms must be positive");
    let mut out: Vec<Syndrome> = Vec::new();
    for (i, report) in reports.iter().enumerate() {
        match out.last_mut() {
            Some(s) if report.at().saturating_sub(reports[s.last].at()) <= window_ms => {
                s.last = i;
            }
            _ => out.push(Syndrome {
                first: i,
                last: i,
                window_ms,
            }),
        }
    }
    out
}

// ---------------------------------------------------------------------------
// File format
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind")]
enum LogLine {
    #[serde(rename = "SyndromeIndex")]
    SyndromeIndex {
        window_ms: u64,
        /// Inclusive `[first, last]` index pairs into the report lines.
        ranges: Vec<(usize, usize)>,
    },
}

/// Writes an anomaly log: one JSON report per line, optionally followed by
/// one `SyndromeIndex` line holding the grouping as index ranges.
pub fn write_anomaly_log<W: Write>(
    mut w: W,
    reports: &[AnomalyReport],
    syndromes: Option<(u64, &[Syndrome])>,
) -> Result<(), DetectError> {
    for report in reports {
        serde_json::to_writer(&mut w, report)
            .map_err(|source| DetectError::Json { line: 0, source })?;
        writeln!(w)?;
    }
    if let Some((window_ms, syndromes)) = syndromes {
        let line = LogLine::SyndromeIndex {
            window_ms,
            ranges: syndromes.iter().map(|s| (s.first, s.last)).collect(),
        };
        serde_json::to_writer(&mut w, &line)
            .map_err(|source| DetectError::Json { line: 0, source })?;
        writeln!(w)?;
    }
    Ok(())
}

/// Reads an anomaly log written by [`write_anomaly_log`].
pub fn read_anomaly_log<R: BufRead>(
    r: R,
) -> Result<(Vec<AnomalyReport>, Option<(u64, Vec<Syndrome>)>), DetectError> {
    let mut reports = Vec::new();
    let mut syndromes: Option<(u64, Vec<Syndrome>)> = None;
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        if syndromes.is_some() {
            return Err(DetectError::BadLogLine {
                line: i + 1,
                reason: "content after the syndrome index line".into(),
            });
        }
        let value: serde_json::Value =
            serde_json::from_str(&line).map_err(|source| DetectError::Json {
                line: i + 1,
                source,
            })?;
        if value.get("kind").and_then(|k| k.as_str()) == Some("SyndromeIndex") {
            let LogLine::SyndromeIndex { window_ms, ranges } = serde_json::from_value(value)
                .map_err(|source| DetectError::Json {
                    line: i + 1,
                    source,
                })?;
            let parsed = ranges
                .iter()
                .map(|&(first, last)| {
                    if first > last || last >= reports.len() {
                        Err(DetectError::BadLogLine {
                            line: i + 1,
                            reason: format!("range ({first},{last}) out of bounds"),
                        })
                    } else {
                        Ok(Syndrome {
                            first,
                            last,
                            window_ms,
                        })
                    }
                })
                .collect::<Result<Vec<_>, _>>()?;
            syndromes = Some((window_ms, parsed));
        } else {
            let report: AnomalyReport =
                serde_json::from_value(value).map_err(|source| DetectError::Json {
                    line: i + 1,
                    source,
                })?;
            reports.push(report);
        }
    }
    Ok((reports, syndromes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::{SignalChange, SignalId, SignalOrdering};
    use crate::learner::{ConvergenceWindow, LearnerSession};

    fn ordering(names: &[&str]) -> SignalOrdering {
        SignalOrdering::new(names.iter().map(|n| SignalId::from(*n)).collect()).unwrap()
    }

    fn event(changes: &[(&str, i64, i64)]) -> Event {
        Event::new(
            changes
                .iter()
                .map(|(s, old, new)| SignalChange {
                    signal: SignalId::from(*s),
                    old: *old,
                    new: *new,
                })
                .collect(),
        )
        .unwrap()
    }

    fn record(t: u64, changes: &[(&str, i64, i64)]) -> EventRecord {
        EventRecord {
            event: event(changes),
            t_ms: t,
        }
    }

    /// Two-state toggle automaton: q0 --a:0->1 [1000,1200]--> q1 --a:1->0 [500,500]--> q0
    fn toggle_automaton() -> TimedAutomaton {
        let ord = ordering(&["a"]);
        let mut s =
            LearnerSession::new(ord.clone(), ord.zero_vector(), ConvergenceWindow::Fixed(10))
                .unwrap();
        s.ingest(&record(1000, &[("a", 0, 1)])).unwrap();
        s.ingest(&record(1500, &[("a", 1, 0)])).unwrap();
        s.ingest(&record(2700, &[("a", 0, 1)])).unwrap();
        s.ingest(&record(3200, &[("a", 1, 0)])).unwrap();
        s.finalize().unwrap()
    }

    #[test]
    fn start_rejects_unknown_state() {
        let a = toggle_automaton();
        assert!(matches!(
            Detector::start(&a, StateId(9), ResyncPolicy::Halt),
            Err(DetectError::UnknownStartState(_))
        ));
        let d = Detector::start(&a, StateId(0), ResyncPolicy::Halt).unwrap();
        assert_eq!(d.current_state(), StateId(0));
    }

    #[test]
    fn in_interval_step_advances_silently() {
        let a = toggle_automaton();
        let mut d = Detector::start(&a, StateId(0), ResyncPolicy::VectorResync).unwrap();
        let out = d.step(&record(1100, &[("a", 0, 1)])).unwrap();
        assert_eq!(out, StepOutcome::Advanced(StateId(1)));
    }

    #[test]
    fn too_slow_step_reports_wrong_timing_and_advances() {
        let a = toggle_automaton();
        let mut d = Detector::start(&a, StateId(0), ResyncPolicy::VectorResync).unwrap();
        let out = d.step(&record(1700, &[("a", 0, 1)])).unwrap();
        match out {
            StepOutcome::Anomaly {
                report:
                    AnomalyReport::WrongTiming {
                        observed_duration_ms,
                        violated_bound,
                        reference,
                        deviation_ms,
                        ..
                    },
                position,
            } => {
                assert_eq!(observed_duration_ms, 1700);
                assert_eq!(violated_bound, ViolatedBound::AboveMax);
                assert_eq!(reference.max_ms, 1200);
                assert_eq!(deviation_ms, 500);
                assert_eq!(position, Some(StateId(1)));
            }
            other => panic!("unexpected outcome {other:?}"),
        }
        assert!(!d.is_halted());
    }

    #[test]
    fn too_fast_step_reports_below_min() {
        let a = toggle_automaton();
        let mut d = Detector::start(&a, StateId(0), ResyncPolicy::VectorResync).unwrap();
        let out = d.step(&record(400, &[("a", 0, 1)])).unwrap();
        match out {
            StepOutcome::Anomaly {
                report:
                    AnomalyReport::WrongTiming {
                        violated_bound,
                        deviation_ms,
                        ..
                    },
                ..
            } => {
                assert_eq!(violated_bound, ViolatedBound::BelowMin);
                assert_eq!(deviation_ms, 600);
            }
            other => panic!("unexpected outcome {other:?}"),
        }
    }

    #[test]
    fn unknown_event_lists_expected_events_and_halts_under_halt_policy() {
        let a = toggle_automaton();
        let mut d = Detector::start(&a, StateId(0), ResyncPolicy::Halt).unwrap();
        // a: 0 -> 2 was never trained
        let out = d.step(&record(1000, &[("a", 0, 2)])).unwrap();
        match out {
            StepOutcome::Anomaly {
                report:
                    AnomalyReport::UnknownEvent {
                        expected_events, ..
                    },
                position,
            } => {
                assert_eq!(expected_events.len(), 1);
                assert_eq!(expected_events[0].event, event(&[("a", 0, 1)]));
                assert_eq!(position, None);
            }
            other => panic!("unexpected outcome {other:?}"),
        }
        assert!(d.is_halted());
        assert!(matches!(
            d.step(&record(2000, &[("a", 0, 1)])),
            Err(DetectError::DetectorHalted)
        ));
    }

    #[test]
    fn unknown_event_resyncs_by_vector_when_possible() {
        let ord = ordering(&["a", "b"]);
        let mut s =
            LearnerSession::new(ord.clone(), ord.zero_vector(), ConvergenceWindow::Fixed(10))
                .unwrap();
        // q0=(0,0) -> q1=(1,0) -> q2=(1,1) -> q0' ... keep it simple: a 3-state chain
        s.ingest(&record(100, &[("a", 0, 1)])).unwrap();
        s.ingest(&record(200, &[("b", 0, 1)])).unwrap();
        s.ingest(&record(300, &[("a", 1, 0), ("b", 1, 0)])).unwrap();
        let a2 = s.finalize().unwrap();
        let mut d = Detector::start(&a2, StateId(0), ResyncPolicy::VectorResync).unwrap();
        // untrained from q0: both signals at once, lands on q2's vector (1,1)
        let out = d.step(&record(100, &[("a", 0, 1), ("b", 0, 1)])).unwrap();
        match out {
            StepOutcome::Anomaly {
                report: AnomalyReport::UnknownEvent { .. },
                position,
            } => assert_eq!(position, Some(StateId(2))),
            other => panic!("unexpected outcome {other:?}"),
        }
        assert!(!d.is_halted());
    }

    #[test]
    fn run_on_empty_log_reports_nothing() {
        let a = toggle_automaton();
        let out = run(&a, StateId(0), &[], ResyncPolicy::VectorResync).unwrap();
        assert!(out.reports.is_empty());
        assert_eq!(out.status, DetectorStatus::Running);
    }

    #[test]
    fn zero_duration_is_anomalous_only_if_min_positive() {
        let a = toggle_automaton();
        let mut d = Detector::start(&a, StateId(0), ResyncPolicy::VectorResync).unwrap();
        let out = d.step(&record(0, &[("a", 0, 1)])).unwrap();
        match out {
            StepOutcome::Anomaly {
                report: AnomalyReport::WrongTiming { violated_bound, .. },
                ..
            } => assert_eq!(violated_bound, ViolatedBound::BelowMin),
            other => panic!("unexpected outcome {other:?}"),
        }
    }

    #[test]
    fn syndromes_group_by_gap() {
        let mk = |t| AnomalyReport::UnknownEvent {
            at: t,
            source_state: StateId(0),
            observed_event: event(&[("a", 0, 1)]),
            expected_events: vec![],
        };
        let reports = vec![mk(0), mk(1_000), mk(100_000)];
        let syndromes = group_syndromes(&reports, 5_000);
        assert_eq!(syndromes.len(), 2);
        assert_eq!((syndromes[0].first, syndromes[0].last), (0, 1));
        assert_eq!((syndromes[1].first, syndromes[1].last), (2, 2));
        assert!(group_syndromes(&[], 5_000).is_empty());
    }

    #[test]
    fn anomaly_log_round_trips() {
        let a = toggle_automaton();
        let out = run(
            &a,
            StateId(0),
            &[record(1700, &[("a", 0, 1)]), record(2200, &[("a", 1, 0)])],
            ResyncPolicy::VectorResync,
        )
        .unwrap();
        assert_eq!(out.reports.len(), 1);
        let syndromes = group_syndromes(&out.reports, 5_000);
        let mut buf = Vec::new();
        write_anomaly_log(&mut buf, &out.reports, Some((5_000, &syndromes))).unwrap();
        let (reports, parsed_syndromes) = read_anomaly_log(&buf[..]).unwrap();
        assert_eq!(reports, out.reports);
        assert_eq!(parsed_syndromes, Some((5_000, syndromes)));
    }
}
