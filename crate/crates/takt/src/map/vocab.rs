//! The alignment vocabulary: one shared set of classes and properties
//! covering the plant hierarchy, sensing/actuation, state machines with
//! transition timings, and condition-monitoring symptoms.
//!
//! The sensing terms reuse the W3C SOSA namespace. The remaining groups
//! carry project namespaces; their exact property names are this crate's
//! choices and are documented here as the vocabulary reference.

use crate::event::{SignalId, SignalValue};

/// Instance data namespace; instance IRIs follow
/// `ex:<plant>/<kind>/<name>`.
pub const EX_NS: &str = "http://example.org/cpps/";

/// Physical hierarchy of a batch plant.
pub mod isa88 {
    pub const NS: &str = "http://example.org/vocab/isa88#";
    pub const ENTERPRISE: &str = "http://example.org/vocab/isa88#Enterprise";
    pub const SITE: &str = "http://example.org/vocab/isa88#Site";
    pub const AREA: &str = "http://example.org/vocab/isa88#Area";
    pub const PROCESS_CELL: &str = "http://example.org/vocab/isa88#ProcessCell";
    pub const UNIT: &str = "http://example.org/vocab/isa88#Unit";
    pub const EQUIPMENT_MODULE: &str = "http://example.org/vocab/isa88#EquipmentModule";
    pub const CONTROL_MODULE: &str = "http://example.org/vocab/isa88#ControlModule";
    /// Parent entity → child entity.
    pub const HAS_PART: &str = "http://example.org/vocab/isa88#hasPart";
}

/// Sensors, actuators, their hosts and properties (W3C namespace).
pub mod sosa {
    pub const NS: &str = "http://www.w3.org/ns/sosa/";
    pub const SENSOR: &str = "http://www.w3.org/ns/sosa/Sensor";
    pub const ACTUATOR: &str = "http://www.w3.org/ns/sosa/Actuator";
    pub const PLATFORM: &str = "http://www.w3.org/ns/sosa/Platform";
    pub const FEATURE_OF_INTEREST: &str = "http://www.w3.org/ns/sosa/FeatureOfInterest";
    pub const OBSERVABLE_PROPERTY: &str = "http://www.w3.org/ns/sosa/ObservableProperty";
    pub const ACTUATABLE_PROPERTY: &str = "http://www.w3.org/ns/sosa/ActuatableProperty";
    pub const OBSERVES: &str = "http://www.w3.org/ns/sosa/observes";
    pub const ACTS_ON_PROPERTY: &str = "http://www.w3.org/ns/sosa/actsOnProperty";
    pub const IS_HOSTED_BY: &str = "http://www.w3.org/ns/sosa/isHostedBy";
}

/// Property semantics, reduced to a typed data element with a string
/// description.
pub mod din61360 {
    pub const NS: &str = "http://example.org/vocab/din61360#";
    pub const DATA_ELEMENT: &str = "http://example.org/vocab/din61360#DataElement";
    /// Property → human-readable semantic label.
    pub const TYPE_DESCRIPTION: &str = "http://example.org/vocab/din61360#typeDescription";
}

/// Finite state machines.
pub mod sm {
    pub const NS: &str = "http://example.org/vocab/statemachine#";
    pub const STATE_MACHINE: &str = "http://example.org/vocab/statemachine#StateMachine";
    pub const STATE: &str = "http://example.org/vocab/statemachine#State";
    pub const INITIAL_STATE: &str = "http://example.org/vocab/statemachine#InitialState";
    pub const TRANSITION: &str = "http://example.org/vocab/statemachine#Transition";
    pub const EVENT: &str = "http://example.org/vocab/statemachine#Event";
    /// Plant entity → its state machine.
    pub const HAS_STATE_MACHINE: &str = "http://example.org/vocab/statemachine#hasStateMachine";
    pub const HAS_STATE: &str = "http://example.org/vocab/statemachine#hasState";
    pub const HAS_TRANSITION: &str = "http://example.org/vocab/statemachine#hasTransition";
    pub const SOURCE_STATE: &str = "http://example.org/vocab/statemachine#sourceState";
    pub const TARGET_STATE: &str = "http://example.org/vocab/statemachine#targetState";
    pub const TRIGGERED_BY: &str = "http://example.org/vocab/statemachine#triggeredBy";
}

/// Timed-automaton extensions of the state machine terms: transition
/// timings, per-state property values, and per-event signal changes.
pub mod ext {
    pub const NS: &str = "http://example.org/vocab/ext#";
    pub const TRANSITION_TIMING: &str = "http://example.org/vocab/ext#TransitionTiming";
    /// Transition → its timing node.
    pub const HAS_TIMING: &str = "http://example.org/vocab/ext#hasTiming";
    /// Seconds, one decimal place.
    pub const MIN_DURATION: &str = "http://example.org/vocab/ext#minDuration";
    /// Seconds, one decimal place.
    pub const MAX_DURATION: &str = "http://example.org/vocab/ext#maxDuration";
    pub const OBSERVATION_COUNT: &str = "http://example.org/vocab/ext#observationCount";
    pub const PROPERTY_STATE: &str = "http://example.org/vocab/ext#PropertyState";
    pub const HAS_PROPERTY_STATE: &str = "http://example.org/vocab/ext#hasPropertyState";
    pub const FOR_PROPERTY: &str = "http://example.org/vocab/ext#forProperty";
    /// Raw discrete value, `xsd:integer`.
    pub const HAS_VALUE: &str = "http://example.org/vocab/ext#hasValue";
    /// Engineering rendering of the value ("open", "on", ...).
    pub const HAS_VALUE_LABEL: &str = "http://example.org/vocab/ext#hasValueLabel";
    pub const EVENT_DESCRIPTION: &str = "http://example.org/vocab/ext#EventDescription";
    pub const HAS_EVENT_DESCRIPTION: &str = "http://example.org/vocab/ext#hasEventDescription";
}

/// Condition monitoring: symptoms as deviations from reference values.
pub mod iso17359 {
    pub const NS: &str = "http://example.org/vocab/iso17359#";
    pub const DIAGNOSTIC_MODEL: &str = "http://example.org/vocab/iso17359#DiagnosticModel";
    pub const SYMPTOM: &str = "http://example.org/vocab/iso17359#Symptom";
    pub const REFERENCE_VALUE: &str = "http://example.org/vocab/iso17359#ReferenceValue";
    pub const SYNDROME: &str = "http://example.org/vocab/iso17359#Syndrome";
    /// Seconds, one decimal place.
    pub const OBSERVED_VALUE: &str = "http://example.org/vocab/iso17359#observedValue";
    /// Symptom → the transition timing it was measured against.
    pub const REFERENCE_VALUE_LINK: &str = "http://example.org/vocab/iso17359#referenceValue";
    /// Seconds outside the violated bound, one decimal place.
    pub const DEVIATION: &str = "http://example.org/vocab/iso17359#deviation";
    pub const DETECTED_BY: &str = "http://example.org/vocab/iso17359#detectedBy";
    pub const PART_OF_SYNDROME: &str = "http://example.org/vocab/iso17359#partOfSyndrome";
    /// Milliseconds since stream start, `xsd:integer`.
    pub const OCCURRED_AT: &str = "http://example.org/vocab/iso17359#occurredAt";
    pub const ON_TRANSITION: &str = "http://example.org/vocab/iso17359#onTransition";
    /// Unknown-event symptom → the state it was observed in.
    pub const AT_STATE: &str = "http://example.org/vocab/iso17359#atState";
    /// Unknown-event symptom → an event that would have been allowed.
    pub const EXPECTED_EVENT: &str = "http://example.org/vocab/iso17359#expectedEvent";
}

/// Prefix table shared by every graph the mappers produce.
pub fn standard_prefixes() -> Vec<(&'static str, &'static str)> {
    vec![
        ("din61360", din61360::NS),
        ("ex", EX_NS),
        ("ext", ext::NS),
        ("isa88", isa88::NS),
        ("iso17359", iso17359::NS),
        ("rdf", crate::kg::rdf::NS),
        ("sm", sm::NS),
        ("sosa", sosa::NS),
        ("xsd", crate::kg::xsd::NS),
    ]
}

/// Engineering rendering of a discrete value, keyed off the device naming
/// convention: pumps are on/off, valves open/closed, anything else keeps
/// the raw number.
pub fn value_label(signal: &SignalId, value: SignalValue) -> String {
    let name = signal.as_str();
    if name.starts_with("Pump") {
        match value {
            0 => "off".to_owned(),
            1 => "on".to_owned(),
            other => other.to_string(),
        }
    } else if name.starts_with("Valve") {
        match value {
            0 => "closed".to_owned(),
            1 => "open".to_owned(),
            other => other.to_string(),
        }
    } else {
        value.to_string()
    }
}
