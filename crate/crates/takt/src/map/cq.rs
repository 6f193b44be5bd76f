//! Prepared competency queries against a five-tank export. Each query
//! answers one operator question about the plant, the learned model, or
//! the detected anomalies, and doubles as the acceptance check for the
//! vocabulary: an export is complete exactly when all of them return the
//! expected answers.

use crate::kg::{rdf, PatternTerm, Query, TriplePattern};

use super::vocab::{din61360, ext, iso17359, sm, sosa};
use super::IriScheme;

/// One operator question with its prepared query. The requirement tags the
/// aspect it validates: `R1` plant structure, `R2` behavior model, `R3`
/// anomalies.
#[derive(Debug, Clone)]
pub struct CompetencyQuery {
    pub id: &'static str,
    pub question: &'static str,
    pub requirement: &'static str,
    pub query: Query,
}

fn pattern(s: PatternTerm, p: &str, o: PatternTerm) -> TriplePattern {
    TriplePattern::new(s, PatternTerm::iri(p), o)
}

/// The prepared questions, instantiated for the plant named `plant` using
/// the bundled five-tank identifiers (`Tank_B201`, `MixingModule`,
/// `position_V204`, ...).
pub fn competency_queries(plant: &str) -> Vec<CompetencyQuery> {
    let scheme = IriScheme::new(plant);
    let var = PatternTerm::var;
    vec![
        CompetencyQuery {
            id: "CQ1",
            question: "Which sensors are part of Tank B201?",
            requirement: "R1",
            query: Query::new(
                &["?sensor"],
                vec![
                    pattern(var("?sensor"), rdf::TYPE, PatternTerm::iri(sosa::SENSOR)),
                    pattern(
                        var("?sensor"),
                        sosa::IS_HOSTED_BY,
                        PatternTerm::Term(scheme.equipment("Tank_B201").into()),
                    ),
                ],
            ),
        },
        CompetencyQuery {
            id: "CQ2",
            question: "Which actuators are part of the Mixing Module?",
            requirement: "R1",
            query: Query::new(
                &["?actuator"],
                vec![
                    pattern(
                        var("?actuator"),
                        rdf::TYPE,
                        PatternTerm::iri(sosa::ACTUATOR),
                    ),
                    pattern(
                        var("?actuator"),
                        sosa::IS_HOSTED_BY,
                        PatternTerm::Term(scheme.equipment("MixingModule").into()),
                    ),
                ],
            ),
        },
        CompetencyQuery {
            id: "CQ3",
            question: "Where is sensor tank_B201.level mounted?",
            requirement: "R1",
            query: Query::new(
                &["?host"],
                vec![pattern(
                    PatternTerm::Term(scheme.device("tank_B201.level").into()),
                    sosa::IS_HOSTED_BY,
                    var("?host"),
                )],
            ),
        },
        CompetencyQuery {
            id: "CQ4",
            question: "What property does tank_B201.level measure?",
            requirement: "R1",
            query: Query::new(
                &["?label"],
                vec![
                    pattern(
                        PatternTerm::Term(scheme.device("tank_B201.level").into()),
                        sosa::OBSERVES,
                        var("?property"),
                    ),
                    pattern(var("?property"), din61360::TYPE_DESCRIPTION, var("?label")),
                ],
            ),
        },
        CompetencyQuery {
            id: "CQ5",
            question: "How many states does the state machine of the Mixing Module contain?",
            requirement: "R1",
            query: Query::new(
                &["?state"],
                vec![
                    pattern(
                        PatternTerm::Term(scheme.equipment("MixingModule").into()),
                        sm::HAS_STATE_MACHINE,
                        var("?machine"),
                    ),
                    pattern(var("?machine"), sm::HAS_STATE, var("?state")),
                ],
            ),
        },
        CompetencyQuery {
            id: "CQ6",
            question: "What was the state of Valve V204 in state q2?",
            requirement: "R2",
            query: Query::new(
                &["?value"],
                vec![
                    pattern(
                        PatternTerm::Term(scheme.state(2).into()),
                        ext::HAS_PROPERTY_STATE,
                        var("?ps"),
                    ),
                    pattern(
                        var("?ps"),
                        ext::FOR_PROPERTY,
                        PatternTerm::Term(scheme.property("position_V204").into()),
                    ),
                    pattern(var("?ps"), ext::HAS_VALUE_LABEL, var("?value")),
                ],
            ),
        },
        CompetencyQuery {
            id: "CQ7",
            question: "In which state was Valve V204 open and Pump P201 turned on?",
            requirement: "R2",
            query: Query::new(
                &["?state"],
                vec![
                    pattern(var("?state"), ext::HAS_PROPERTY_STATE, var("?v")),
                    pattern(
                        var("?v"),
                        ext::FOR_PROPERTY,
                        PatternTerm::Term(scheme.property("position_V204").into()),
                    ),
                    pattern(
                        var("?v"),
                        ext::HAS_VALUE_LABEL,
                        PatternTerm::literal(crate::kg::Literal::string("open")),
                    ),
                    pattern(var("?state"), ext::HAS_PROPERTY_STATE, var("?p")),
                    pattern(
                        var("?p"),
                        ext::FOR_PROPERTY,
                        PatternTerm::Term(scheme.property("power_P201").into()),
                    ),
                    pattern(
                        var("?p"),
                        ext::HAS_VALUE_LABEL,
                        PatternTerm::literal(crate::kg::Literal::string("on")),
                    ),
                ],
            ),
        },
        CompetencyQuery {
            id: "CQ8",
            question: "Which events are allowed in state q3?",
            requirement: "R2",
            query: Query::new(
                &["?event", "?property", "?value"],
                vec![
                    pattern(
                        var("?transition"),
                        sm::SOURCE_STATE,
                        PatternTerm::Term(scheme.state(3).into()),
                    ),
                    pattern(var("?transition"), sm::TRIGGERED_BY, var("?event")),
                    pattern(
                        var("?event"),
                        ext::HAS_EVENT_DESCRIPTION,
                        var("?description"),
                    ),
                    pattern(var("?description"), ext::FOR_PROPERTY, var("?property")),
                    pattern(var("?description"), ext::HAS_VALUE, var("?value")),
                ],
            ),
        },
        CompetencyQuery {
            id: "CQ9",
            question: "Between which two states was a timing anomaly observed?",
            requirement: "R3",
            query: Query::new(
                &["?source", "?target"],
                vec![
                    pattern(
                        var("?symptom"),
                        rdf::TYPE,
                        PatternTerm::iri(iso17359::SYMPTOM),
                    ),
                    pattern(var("?symptom"), iso17359::ON_TRANSITION, var("?transition")),
                    pattern(var("?transition"), sm::SOURCE_STATE, var("?source")),
                    pattern(var("?transition"), sm::TARGET_STATE, var("?target")),
                ],
            ),
        },
        CompetencyQuery {
            id: "CQ10",
            question: "By how many seconds was the anomaly outside the max. transition time?",
            requirement: "R3",
            query: Query::new(
                &["?deviation"],
                vec![
                    pattern(
                        var("?symptom"),
                        rdf::TYPE,
                        PatternTerm::iri(iso17359::SYMPTOM),
                    ),
                    pattern(var("?symptom"), iso17359::DEVIATION, var("?deviation")),
                ],
            ),
        },
        CompetencyQuery {
            id: "CQ11",
            question: "Which timing anomalies were part of a syndrome?",
            requirement: "R3",
            query: Query::new(
                &["?symptom"],
                vec![
                    pattern(var("?symptom"), iso17359::ON_TRANSITION, var("?transition")),
                    pattern(
                        var("?symptom"),
                        iso17359::PART_OF_SYNDROME,
                        var("?syndrome"),
                    ),
                ],
            ),
        },
        CompetencyQuery {
            id: "CQ12",
            question: "Which event should have occurred when the timing anomaly was observed?",
            requirement: "R3",
            query: Query::new(
                &["?property", "?value"],
                vec![
                    pattern(var("?symptom"), iso17359::ON_TRANSITION, var("?transition")),
                    pattern(var("?transition"), sm::TRIGGERED_BY, var("?event")),
                    pattern(
                        var("?event"),
                        ext::HAS_EVENT_DESCRIPTION,
                        var("?description"),
                    ),
                    pattern(var("?description"), ext::FOR_PROPERTY, var("?property")),
                    pattern(var("?description"), ext::HAS_VALUE, var("?value")),
                ],
            ),
        },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_queries_with_stable_ids_and_requirements() {
        let queries = competency_queries("FiveTankCPPS");
        assert_eq!(queries.len(), 12);
        for (i, cq) in queries.iter().enumerate() {
            assert_eq!(cq.id, format!("CQ{}", i + 1));
            assert!(matches!(cq.requirement, "R1" | "R2" | "R3"));
            cq.query.validate().unwrap();
        }
        assert_eq!(queries.iter().filter(|c| c.requirement == "R1").count(), 5);
        assert_eq!(queries.iter().filter(|c| c.requirement == "R2").count(), 3);
        assert_eq!(queries.iter().filter(|c| c.requirement == "R3").count(), 4);
    }
}
