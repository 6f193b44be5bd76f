//! Mappings into the knowledge graph: plant facts, learned automata, and
//! detected anomalies, plus the prepared competency queries used to
//! validate an export.

pub mod vocab;

mod anomaly;
mod automaton;
mod cq;
mod plant;

pub use anomaly::map_anomalies;
pub use automaton::{expected_triple_count, map_automaton, AutomatonContext};
pub use cq::{competency_queries, CompetencyQuery};
pub use plant::{
    map_plant, read_devices_csv, read_hierarchy_csv, write_devices_csv, write_hierarchy_csv,
    DeviceKind, DeviceRow, HierarchyRow, Isa88Class, PlantFacts,
};

use thiserror::Error;

use crate::kg::Iri;

#[derive(Debug, Error)]
pub enum MapError {
    #[error("entity {child:?} references missing parent {parent:?}")]
    DanglingParent { child: String, parent: String },
    #[error("duplicate entity id {0:?}")]
    DuplicateEntity(String),
    #[error("plant hierarchy must have exactly one root, found {0}")]
    RootCount(usize),
    #[error("hierarchy contains a cycle through {0:?}")]
    HierarchyCycle(String),
    #[error("device {device:?} references missing host {host:?}")]
    DanglingHost { device: String, host: String },
    #[error("signal {0:?} does not name an actuator in the plant facts")]
    UnknownActuator(String),
    #[error("entity {0:?} is not part of the plant facts")]
    UnknownEntity(String),
    #[error("anomaly references untrained transition from {state} via {event}")]
    DanglingReference { state: String, event: String },
    #[error("identifier {0:?} contains characters outside [A-Za-z0-9_.-]")]
    BadIdentifier(String),
    #[error("unknown hierarchy class {0:?}")]
    BadClass(String),
    #[error("unknown device kind {0:?}")]
    BadKind(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Deterministic instance IRIs: `ex:<plant>/<kind>/<name>`. Anomaly IRIs
/// embed their timestamp, which replaces blank nodes for one-off entities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IriScheme {
    plant: String,
}

impl IriScheme {
    pub fn new(plant: impl Into<String>) -> Self {
        IriScheme {
            plant: plant.into(),
        }
    }

    pub fn plant(&self) -> &str {
        &self.plant
    }

    fn mint(&self, kind: &str, name: &str) -> Iri {
        Iri::new(format!("{}{}/{kind}/{name}", vocab::EX_NS, self.plant))
    }

    pub fn equipment(&self, id: &str) -> Iri {
        self.mint("equipment", id)
    }

    pub fn device(&self, id: &str) -> Iri {
        self.mint("device", id)
    }

    pub fn property(&self, id: &str) -> Iri {
        self.mint("property", id)
    }

    pub fn machine(&self, owner_id: &str) -> Iri {
        self.mint("machine", owner_id)
    }

    pub fn state(&self, index: u32) -> Iri {
        self.mint("state", &format!("q{index}"))
    }

    pub fn property_state(&self, state_index: u32, signal: &str) -> Iri {
        self.mint("propertystate", &format!("q{state_index}_{signal}"))
    }

    pub fn transition(&self, source: u32, target: u32) -> Iri {
        self.mint("transition", &format!("q{source}_q{target}"))
    }

    pub fn timing(&self, source: u32, target: u32) -> Iri {
        self.mint("timing", &format!("q{source}_q{target}"))
    }

    pub fn event(&self, index: usize) -> Iri {
        self.mint("event", &format!("e{index}"))
    }

    pub fn event_description(&self, event_index: usize, signal: &str) -> Iri {
        self.mint("eventdescription", &format!("e{event_index}_{signal}"))
    }

    pub fn symptom(&self, t_ms: u64) -> Iri {
        self.mint("symptom", &t_ms.to_string())
    }

    pub fn observed_event(&self, t_ms: u64) -> Iri {
        self.mint("observedevent", &t_ms.to_string())
    }

    pub fn syndrome(&self, first_t_ms: u64) -> Iri {
        self.mint("syndrome", &first_t_ms.to_string())
    }
}

/// Milliseconds to seconds with one decimal digit, rounding half up:
/// `121800 → "121.8"`. The graph presents durations in seconds while the
/// automaton file keeps exact milliseconds; this conversion is the only
/// place the units meet.
pub fn ms_to_decimal_tenths(ms: u64) -> i64 {
    ((ms + 50) / 100) as i64
}

pub(crate) fn check_identifier(id: &str) -> Result<(), MapError> {
    if id.is_empty()
        || !id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.' || c == '-')
    {
        return Err(MapError::BadIdentifier(id.to_owned()));
    }
    Ok(())
}
