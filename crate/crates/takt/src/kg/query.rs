//! Basic-graph-pattern queries: conjunctive triple patterns with variables,
//! projection, and numeric comparison filters. This is the query subset
//! needed to answer the competency questions; full SPARQL is out of scope.

use std::collections::BTreeMap;

use thiserror::Error;

use super::graph::Graph;
use super::term::{Iri, Literal, Term, Triple};
use super::{rdf, xsd};

#[derive(Debug, Error)]
pub enum QueryError {
    #[error("malformed query: {0}")]
    Malformed(String),
    #[error("unknown prefix {0:?} in query")]
    UnknownPrefix(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// One position of a triple pattern: a variable or a concrete term.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PatternTerm {
    Var(String),
    Term(Term),
}

impl PatternTerm {
    pub fn var(name: &str) -> Self {
        PatternTerm::Var(name.trim_start_matches('?').to_owned())
    }

    pub fn iri(iri: impl Into<Iri>) -> Self {
        PatternTerm::Term(Term::Iri(iri.into()))
    }

    pub fn literal(l: Literal) -> Self {
        PatternTerm::Term(Term::Literal(l))
    }

    fn var_name(&self) -> Option<&str> {
        match self {
            PatternTerm::Var(v) => Some(v),
            PatternTerm::Term(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriplePattern {
    pub subject: PatternTerm,
    pub predicate: PatternTerm,
    pub object: PatternTerm,
}

impl TriplePattern {
    pub fn new(subject: PatternTerm, predicate: PatternTerm, object: PatternTerm) -> Self {
        TriplePattern {
            subject,
            predicate,
            object,
        }
    }

    fn vars(&self) -> impl Iterator<Item = &str> {
        [&self.subject, &self.predicate, &self.object]
            .into_iter()
            .filter_map(PatternTerm::var_name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "=" | "==" => CmpOp::Eq,
            "!=" => CmpOp::Ne,
            "<" => CmpOp::Lt,
            "<=" => CmpOp::Le,
            ">" => CmpOp::Gt,
            ">=" => CmpOp::Ge,
            _ => return None,
        })
    }
}

/// A comparison of one bound variable against a constant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Filter {
    pub var: String,
    pub op: CmpOp,
    pub value: Term,
}

/// A SELECT query: projected variables, a basic graph pattern, and filters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub select: Vec<String>,
    pub patterns: Vec<TriplePattern>,
    pub filters: Vec<Filter>,
}

impl Query {
    pub fn new(select: &[&str], patterns: Vec<TriplePattern>) -> Self {
        Query {
            select: select
                .iter()
                .map(|s| s.trim_start_matches('?').to_owned())
                .collect(),
            patterns,
            filters: Vec::new(),
        }
    }

    pub fn with_filter(mut self, var: &str, op: CmpOp, value: Term) -> Self {
        self.filters.push(Filter {
            var: var.trim_start_matches('?').to_owned(),
            op,
            value,
        });
        self
    }

    /// Every projected and filtered variable must occur in some pattern.
    pub fn validate(&self) -> Result<(), QueryError> {
        if self.select.is_empty() {
            return Err(QueryError::Malformed("empty projection".into()));
        }
        if self.patterns.is_empty() {
            return Err(QueryError::Malformed("empty graph pattern".into()));
        }
        let bound: Vec<&str> = self.patterns.iter().flat_map(|p| p.vars()).collect();
        for v in &self.select {
            if !bound.contains(&v.as_str()) {
                return Err(QueryError::Malformed(format!(
                    "projected variable ?{v} does not appear in any pattern"
                )));
            }
        }
        for f in &self.filters {
            if !bound.contains(&f.var.as_str()) {
                return Err(QueryError::Malformed(format!(
                    "filtered variable ?{} does not appear in any pattern",
                    f.var
                )));
            }
        }
        Ok(())
    }
}

/// One projected result row, terms in `select` order.
pub type Solution = Vec<Term>;

type Binding = BTreeMap<String, Term>;

fn match_position(pt: &PatternTerm, term: &Term, binding: &mut Binding) -> bool {
    match pt {
        PatternTerm::Term(want) => want == term,
        PatternTerm::Var(name) => match binding.get(name) {
            Some(bound) => bound == term,
            None => {
                binding.insert(name.clone(), term.clone());
                true
            }
        },
    }
}

fn match_triple(pattern: &TriplePattern, triple: &Triple, binding: &Binding) -> Option<Binding> {
    let mut b = binding.clone();
    let subject = Term::Iri(triple.subject.clone());
    let predicate = Term::Iri(triple.predicate.clone());
    if match_position(&pattern.subject, &subject, &mut b)
        && match_position(&pattern.predicate, &predicate, &mut b)
        && match_position(&pattern.object, &triple.object, &mut b)
    {
        Some(b)
    } else {
        None
    }
}

/// Exact decimal value as (mantissa, fractional digits).
fn parse_decimal(lexical: &str) -> Option<(i128, u32)> {
    let s = lexical.trim();
    let (sign, digits) = match s.strip_prefix('-') {
        Some(rest) => (-1i128, rest),
        None => (1i128, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((i, f)) => (i, f),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().all(|c| c.is_ascii_digit())
        || !frac_part.chars().all(|c| c.is_ascii_digit())
        || frac_part.len() > 18
    {
        return None;
    }
    let mut mantissa: i128 = 0;
    for c in int_part.chars().chain(frac_part.chars()) {
        mantissa = mantissa
            .checked_mul(10)?
            .checked_add((c as u8 - b'0') as i128)?;
    }
    Some((sign * mantissa, frac_part.len() as u32))
}

fn numeric_value(term: &Term) -> Option<(i128, u32)> {
    match term {
        Term::Literal(l)
            if l.datatype.as_str() == xsd::INTEGER || l.datatype.as_str() == xsd::DECIMAL =>
        {
            parse_decimal(&l.lexical)
        }
        _ => None,
    }
}

fn compare(left: &Term, op: CmpOp, right: &Term) -> bool {
    use std::cmp::Ordering;
    let ordering = match (numeric_value(left), numeric_value(right)) {
        (Some((lm, ls)), Some((rm, rs))) => {
            // align scales; values stay far below i128 limits
            let scale = ls.max(rs);
            let l = lm * 10i128.pow(scale - ls);
            let r = rm * 10i128.pow(scale - rs);
            l.cmp(&r)
        }
        _ => match (op, left, right) {
            (CmpOp::Eq, _, _) => {
                return left == right;
            }
            (CmpOp::Ne, _, _) => {
                return left != right;
            }
            // ordering comparisons on non-numeric terms fall back to the
            // lexical form; deterministic even if rarely meaningful
            (_, Term::Literal(l), Term::Literal(r)) => l.lexical.cmp(&r.lexical),
            (_, l, r) => format!("{l:?}").cmp(&format!("{r:?}")),
        },
    };
    match op {
        CmpOp::Eq => ordering == Ordering::Equal,
        CmpOp::Ne => ordering != Ordering::Equal,
        CmpOp::Lt => ordering == Ordering::Less,
        CmpOp::Le => ordering != Ordering::Greater,
        CmpOp::Gt => ordering == Ordering::Greater,
        CmpOp::Ge => ordering != Ordering::Less,
    }
}

/// Evaluates a query: conjunctive matching of all patterns (natural join on
/// shared variables), filters, then projection. Results form a bag in a
/// deterministic order (sorted by projected terms).
pub fn evaluate(graph: &Graph, query: &Query) -> Result<Vec<Solution>, QueryError> {
    query.validate()?;
    let mut bindings: Vec<Binding> = vec![Binding::new()];
    for pattern in &query.patterns {
        let mut next = Vec::new();
        for binding in &bindings {
            for triple in graph.iter() {
                if let Some(extended) = match_triple(pattern, triple, binding) {
                    next.push(extended);
                }
            }
        }
        bindings = next;
        if bindings.is_empty() {
            break;
        }
    }
    for filter in &query.filters {
        bindings.retain(|b| {
            b.get(&filter.var)
                .is_some_and(|term| compare(term, filter.op, &filter.value))
        });
    }
    let mut rows: Vec<Solution> = bindings
        .iter()
        .map(|b| {
            query
                .select
                .iter()
                .map(|v| b.get(v).expect("validated projection").clone())
                .collect()
        })
        .collect();
    rows.sort();
    Ok(rows)
}

// ---------------------------------------------------------------------------
// JSON query files and TSV rendering
// ---------------------------------------------------------------------------

fn resolve_iri_text(s: &str, prefixes: &BTreeMap<String, String>) -> Result<Iri, QueryError> {
    if let Some(inner) = s.strip_prefix('<').and_then(|r| r.strip_suffix('>')) {
        return Ok(Iri::new(inner));
    }
    if s == "a" {
        return Ok(Iri::new(rdf::TYPE));
    }
    if let Some((prefix, local)) = s.split_once(':') {
        if let Some(ns) = prefixes.get(prefix) {
            return Ok(Iri::new(format!("{ns}{local}")));
        }
        if s.contains("://") {
            return Ok(Iri::new(s));
        }
        return Err(QueryError::UnknownPrefix(prefix.to_owned()));
    }
    Err(QueryError::Malformed(format!("{s:?} is not an IRI")))
}

fn term_from_json(
    value: &serde_json::Value,
    prefixes: &BTreeMap<String, String>,
) -> Result<Term, QueryError> {
    match value {
        serde_json::Value::String(s) => {
            if s.starts_with('<') || s == "a" || s.contains(':') {
                Ok(Term::Iri(resolve_iri_text(s, prefixes)?))
            } else {
                Ok(Term::Literal(Literal::string(s.clone())))
            }
        }
        serde_json::Value::Number(n) => match n.as_i64() {
            Some(i) => Ok(Term::Literal(Literal::integer(i))),
            None => {
                let text = n.to_string();
                if parse_decimal(&text).is_some() {
                    Ok(Term::Literal(Literal::typed(text, Iri::new(xsd::DECIMAL))))
                } else {
                    Err(QueryError::Malformed(format!(
                        "number {n} is not an exact decimal; use the object literal form"
                    )))
                }
            }
        },
        serde_json::Value::Object(map) => {
            let lexical = map
                .get("lexical")
                .and_then(|v| v.as_str())
                .ok_or_else(|| QueryError::Malformed("literal object needs \"lexical\"".into()))?;
            let datatype = match map.get("datatype").and_then(|v| v.as_str()) {
                Some(dt) => resolve_iri_text(dt, prefixes)?,
                None => Iri::new(xsd::STRING),
            };
            let lang = map
                .get("lang")
                .and_then(|v| v.as_str())
                .map(|s| s.to_owned());
            Ok(Term::Literal(Literal {
                lexical: lexical.to_owned(),
                datatype,
                lang,
            }))
        }
        other => Err(QueryError::Malformed(format!(
            "cannot interpret {other} as a term"
        ))),
    }
}

fn pattern_term_from_json(
    value: &serde_json::Value,
    prefixes: &BTreeMap<String, String>,
) -> Result<PatternTerm, QueryError> {
    if let serde_json::Value::String(s) = value {
        if let Some(name) = s.strip_prefix('?') {
            if name.is_empty() {
                return Err(QueryError::Malformed("variable with empty name".into()));
            }
            return Ok(PatternTerm::Var(name.to_owned()));
        }
    }
    Ok(PatternTerm::Term(term_from_json(value, prefixes)?))
}

/// Parses a JSON query document:
///
/// ```json
/// {
///   "select": ["?s"],
///   "where": [["?s", "rdf:type", "sm:State"]],
///   "filter": [["?d", ">=", {"lexical": "5.0", "datatype": "xsd:decimal"}]]
/// }
/// ```
///
/// Prefixed names are resolved against `prefixes`.
pub fn query_from_json(
    text: &str,
    prefixes: &BTreeMap<String, String>,
) -> Result<Query, QueryError> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    let select = value
        .get("select")
        .and_then(|v| v.as_array())
        .ok_or_else(|| QueryError::Malformed("missing \"select\" list".into()))?
        .iter()
        .map(|v| {
            v.as_str()
                .and_then(|s| s.strip_prefix('?'))
                .map(str::to_owned)
                .ok_or_else(|| QueryError::Malformed(format!("bad select entry {v}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let patterns = value
        .get("where")
        .and_then(|v| v.as_array())
        .ok_or_else(|| QueryError::Malformed("missing \"where\" list".into()))?
        .iter()
        .map(|entry| {
            let parts = entry
                .as_array()
                .filter(|a| a.len() == 3)
                .ok_or_else(|| QueryError::Malformed(format!("pattern {entry} is not a triple")))?;
            Ok(TriplePattern {
                subject: pattern_term_from_json(&parts[0], prefixes)?,
                predicate: pattern_term_from_json(&parts[1], prefixes)?,
                object: pattern_term_from_json(&parts[2], prefixes)?,
            })
        })
        .collect::<Result<Vec<_>, QueryError>>()?;
    let filters = match value.get("filter") {
        None => Vec::new(),
        Some(serde_json::Value::Array(entries)) => entries
            .iter()
            .map(|entry| {
                let parts = entry.as_array().filter(|a| a.len() == 3).ok_or_else(|| {
                    QueryError::Malformed(format!("filter {entry} is not a triple"))
                })?;
                let var = parts[0]
                    .as_str()
                    .and_then(|s| s.strip_prefix('?'))
                    .ok_or_else(|| {
                        QueryError::Malformed(format!("filter must start with a variable: {entry}"))
                    })?;
                let op = parts[1]
                    .as_str()
                    .and_then(CmpOp::parse)
                    .ok_or_else(|| QueryError::Malformed(format!("bad operator in {entry}")))?;
                let value = term_from_json(&parts[2], prefixes)?;
                Ok(Filter {
                    var: var.to_owned(),
                    op,
                    value,
                })
            })
            .collect::<Result<Vec<_>, QueryError>>()?,
        Some(other) => {
            return Err(QueryError::Malformed(format!(
                "\"filter\" must be a list, found {other}"
            )))
        }
    };
    let query = Query {
        select,
        patterns,
        filters,
    };
    query.validate()?;
    Ok(query)
}

/// Display form of a term: IRIs are compressed with the longest matching
/// prefix (display only, regardless of charset), literals print their
/// lexical form.
pub fn term_display(term: &Term, prefixes: &BTreeMap<String, String>) -> String {
    match term {
        Term::Iri(iri) => {
            let s = iri.as_str();
            let mut best: Option<(&String, &String)> = None;
            for (p, ns) in prefixes {
                if s.starts_with(ns.as_str())
                    && best.is_none_or(|(_, b_ns)| ns.len() > b_ns.len())
                {
                    best = Some((p, ns));
                }
            }
            match best {
                Some((p, ns)) => format!("{p}:{}", &s[ns.len()..]),
                None => format!("<{s}>"),
            }
        }
        Term::Literal(l) => l.lexical.clone(),
    }
}

/// Renders query results as TSV with a header row of variable names.
pub fn render_tsv(query: &Query, rows: &[Solution], prefixes: &BTreeMap<String, String>) -> String {
    let mut out = String::new();
    let header: Vec<String> = query.select.iter().map(|v| format!("?{v}")).collect();
    out.push_str(&header.join("\t"));
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|t| term_display(t, prefixes)).collect();
        out.push_str(&cells.join("\t"));
        out.push('\n');
    }
    out
}
