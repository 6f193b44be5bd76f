//! Minimal RDF machinery: IRIs, literals, triples, an in-memory graph,
//! a Turtle serializer/parser, and a basic-graph-pattern query evaluator.
//!
//! Deliberately small: no blank nodes (every entity gets a deterministic
//! IRI), no collections, no inference. Graph equality is plain set equality
//! of triples, and serialization is canonical, so files are byte-comparable.

mod graph;
mod query;
mod term;
mod turtle;

pub use graph::Graph;
pub use query::{
    evaluate, query_from_json, render_tsv, term_display, CmpOp, Filter, PatternTerm, Query,
    QueryError, Solution, TriplePattern,
};
pub use term::{Iri, Literal, Term, Triple};
pub use turtle::{parse_turtle, serialize_turtle, TurtleError};

/// Well-known namespaces used by the XML-Schema-typed literals.
pub mod xsd {
    pub const NS: &str = "http://www.w3.org/2001/XMLSchema#";
    pub const STRING: &str = "http://www.w3.org/2001/XMLSchema#string";
    pub const INTEGER: &str = "http://www.w3.org/2001/XMLSchema#integer";
    pub const DECIMAL: &str = "http://www.w3.org/2001/XMLSchema#decimal";
}

/// RDF's own namespace.
pub mod rdf {
    pub const NS: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";
    pub const TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
    pub const LANG_STRING: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#langString";
}
