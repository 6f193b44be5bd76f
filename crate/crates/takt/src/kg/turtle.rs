//! Turtle serialization and parsing for the supported RDF subset.
//!
//! Supported syntax: `@prefix` directives, IRIs, prefixed names, plain /
//! typed / language-tagged literals, predicate lists (`;`), object lists
//! (`,`), and `a` for `rdf:type`. Blank nodes and collections are rejected
//! as unsupported. Serialization is canonical: prefixes, subjects,
//! predicates, and objects are each emitted in sorted order, so equal
//! graphs produce identical bytes.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use super::graph::Graph;
use super::term::{Iri, Literal, Term, Triple};
use super::{rdf, xsd};

#[derive(Debug, Error)]
pub enum TurtleError {
    #[error("parse error at {line}:{col}: {message}")]
    Parse {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("unsupported feature at {line}:{col}: {feature}")]
    UnsupportedFeature {
        line: usize,
        col: usize,
        feature: String,
    },
}

// ---------------------------------------------------------------------------
// Serializer
// ---------------------------------------------------------------------------

fn pname_local_is_safe(local: &str) -> bool {
    let mut chars = local.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

/// Renders an IRI as a prefixed name when a prefix covers it and the local
/// part stays within the conservative charset; full `<...>` form otherwise.
fn render_iri(iri: &Iri, prefixes: &BTreeMap<String, String>) -> String {
    let s = iri.as_str();
    let mut best: Option<(&str, &str)> = None;
    for (prefix, ns) in prefixes {
        if let Some(local) = s.strip_prefix(ns.as_str()) {
            if best.is_none_or(|(_, b_ns)| ns.len() > b_ns.len()) {
                best = Some((prefix, ns));
            }
            let _ = local;
        }
    }
    if let Some((prefix, ns)) = best {
        let local = &s[ns.len()..];
        if pname_local_is_safe(local) {
            return format!("{prefix}:{local}");
        }
    }
    format!("<{s}>")
}

fn escape_literal(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            _ => out.push(c),
        }
    }
    out
}

fn render_term(term: &Term, prefixes: &BTreeMap<String, String>) -> String {
    match term {
        Term::Iri(iri) => render_iri(iri, prefixes),
        Term::Literal(Literal {
            lexical,
            datatype,
            lang,
        }) => {
            let quoted = format!("\"{}\"", escape_literal(lexical));
            if let Some(lang) = lang {
                format!("{quoted}@{lang}")
            } else if datatype.as_str() == xsd::STRING {
                quoted
            } else {
                format!("{quoted}^^{}", render_iri(datatype, prefixes))
            }
        }
    }
}

/// Serializes a graph to canonical Turtle.
pub fn serialize_turtle(graph: &Graph) -> String {
    let prefixes = graph.prefixes();
    let mut out = String::new();
    for (prefix, ns) in prefixes {
        let _ = writeln!(out, "@prefix {prefix}: <{ns}> .");
    }
    if !prefixes.is_empty() && !graph.is_empty() {
        out.push('\n');
    }

    // Graph iteration is already (subject, predicate, object)-sorted.
    let mut by_subject: Vec<(&Iri, Vec<(&Iri, Vec<&Term>)>)> = Vec::new();
    for triple in graph.iter() {
        match by_subject.last_mut() {
            Some((subject, preds)) if *subject == &triple.subject => match preds.last_mut() {
                Some((pred, objs)) if *pred == &triple.predicate => objs.push(&triple.object),
                _ => preds.push((&triple.predicate, vec![&triple.object])),
            },
            _ => by_subject.push((
                &triple.subject,
                vec![(&triple.predicate, vec![&triple.object])],
            )),
        }
    }

    for (subject, preds) in by_subject {
        let _ = write!(out, "{}", render_iri(subject, prefixes));
        for (pi, (pred, objs)) in preds.iter().enumerate() {
            if pi == 0 {
                out.push(' ');
            } else {
                out.push_str(" ;\n    ");
            }
            if pred.as_str() == rdf::TYPE {
                out.push('a');
            } else {
                out.push_str(&render_iri(pred, prefixes));
            }
            out.push(' ');
            for (oi, obj) in objs.iter().enumerate() {
                if oi > 0 {
                    out.push_str(", ");
                }
                out.push_str(&render_term(obj, prefixes));
            }
        }
        out.push_str(" .\n");
    }
    out
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Token {
    AtPrefix,
    IriRef(String),
    PName { prefix: String, local: String },
    KeywordA,
    StringLit(String),
    DatatypeMarker, // ^^
    LangTag(String),
    Semicolon,
    Comma,
    Dot,
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    fn new(input: &'a str) -> Self {
        Lexer {
            chars: input.chars().peekable(),
            line: 1,
            col: 1,
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn error(&self, message: impl Into<String>) -> TurtleError {
        TurtleError::Parse {
            line: self.line,
            col: self.col,
            message: message.into(),
        }
    }

    fn unsupported(&self, feature: impl Into<String>) -> TurtleError {
        TurtleError::UnsupportedFeature {
            line: self.line,
            col: self.col,
            feature: feature.into(),
        }
    }

    fn is_pname_char(c: char) -> bool {
        c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.'
    }

    /// Next token with its start position, or None at end of input.
    fn next_token(&mut self) -> Result<Option<(Token, usize, usize)>, TurtleError> {
        loop {
            match self.chars.peek() {
                None => return Ok(None),
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('#') => {
                    while let Some(c) = self.bump() {
                        if c == '\n' {
                            break;
                        }
                    }
                }
                Some(_) => break,
            }
        }
        let (line, col) = (self.line, self.col);
        let c = *self.chars.peek().expect("peeked above");
        let token = match c {
            '<' => {
                self.bump();
                let mut iri = String::new();
                loop {
                    match self.bump() {
                        Some('>') => break,
                        Some('\n') | None => return Err(self.error("unterminated IRI")),
                        Some(ch) => iri.push(ch),
                    }
                }
                Token::IriRef(iri)
            }
            '"' => {
                self.bump();
                let mut s = String::new();
                loop {
                    match self.bump() {
                        Some('"') => break,
                        Some('\\') => match self.bump() {
                            Some('"') => s.push('"'),
                            Some('\\') => s.push('\\'),
                            Some('n') => s.push('\n'),
                            Some('r') => s.push('\r'),
                            Some('t') => s.push('\t'),
                            Some(other) => {
                                return Err(self.error(format!("unknown escape \\{other}")))
                            }
                            None => return Err(self.error("unterminated string")),
                        },
                        Some('\n') | None => return Err(self.error("unterminated string")),
                        Some(ch) => s.push(ch),
                    }
                }
                Token::StringLit(s)
            }
            '^' => {
                self.bump();
                if self.chars.peek() == Some(&'^') {
                    self.bump();
                    Token::DatatypeMarker
                } else {
                    return Err(self.error("expected ^^"));
                }
            }
            '@' => {
                self.bump();
                let mut word = String::new();
                while let Some(&ch) = self.chars.peek() {
                    if ch.is_ascii_alphanumeric() || ch == '-' {
                        word.push(ch);
                        self.bump();
                    } else {
                        break;
                    }
                }
                if word == "prefix" {
                    Token::AtPrefix
                } else if word.is_empty() {
                    return Err(self.error("bare @"));
                } else {
                    Token::LangTag(word)
                }
            }
            ';' => {
                self.bump();
                Token::Semicolon
            }
            ',' => {
                self.bump();
                Token::Comma
            }
            '.' => {
                self.bump();
                Token::Dot
            }
            '[' | ']' => return Err(self.unsupported("blank nodes")),
            '(' | ')' => return Err(self.unsupported("collections")),
            '_' if {
                let mut clone = self.chars.clone();
                clone.next();
                clone.peek() == Some(&':')
            } =>
            {
                return Err(self.unsupported("blank node labels"))
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut word = String::new();
                while let Some(&ch) = self.chars.peek() {
                    if Self::is_pname_char(ch) {
                        // A dot only belongs to the name when more name
                        // characters follow; otherwise it ends the statement.
                        if ch == '.' {
                            let mut clone = self.chars.clone();
                            clone.next();
                            match clone.peek() {
                                Some(&next) if Self::is_pname_char(next) || next == ':' => {}
                                _ => break,
                            }
                        }
                        word.push(ch);
                        self.bump();
                    } else {
                        break;
                    }
                }
                if self.chars.peek() == Some(&':') {
                    self.bump();
                    let mut local = String::new();
                    while let Some(&ch) = self.chars.peek() {
                        if Self::is_pname_char(ch) {
                            if ch == '.' {
                                let mut clone = self.chars.clone();
                                clone.next();
                                match clone.peek() {
                                    Some(&next) if Self::is_pname_char(next) => {}
                                    _ => break,
                                }
                            }
                            local.push(ch);
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    Token::PName {
                        prefix: word,
                        local,
                    }
                } else if word == "a" {
                    Token::KeywordA
                } else {
                    return Err(self.error(format!("unexpected token {word:?}")));
                }
            }
            other => return Err(self.error(format!("unexpected character {other:?}"))),
        };
        Ok(Some((token, line, col)))
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    lookahead: Option<(Token, usize, usize)>,
    graph: Graph,
}

impl<'a> Parser<'a> {
    fn new(input: &'a str) -> Result<Self, TurtleError> {
        let mut lexer = Lexer::new(input);
        let lookahead = lexer.next_token()?;
        Ok(Parser {
            lexer,
            lookahead,
            graph: Graph::new(),
        })
    }

    fn peek(&self) -> Option<&Token> {
        self.lookahead.as_ref().map(|(t, _, _)| t)
    }

    fn advance(&mut self) -> Result<Option<(Token, usize, usize)>, TurtleError> {
        let current = self.lookahead.take();
        self.lookahead = self.lexer.next_token()?;
        Ok(current)
    }

    fn error_here(&self, message: impl Into<String>) -> TurtleError {
        let (line, col) = self
            .lookahead
            .as_ref()
            .map(|(_, l, c)| (*l, *c))
            .unwrap_or((self.lexer.line, self.lexer.col));
        TurtleError::Parse {
            line,
            col,
            message: message.into(),
        }
    }

    fn expect(&mut self, want: &Token, what: &str) -> Result<(), TurtleError> {
        match self.advance()? {
            Some((t, _, _)) if &t == want => Ok(()),
            Some((t, line, col)) => Err(TurtleError::Parse {
                line,
                col,
                message: format!("expected {what}, found {t:?}"),
            }),
            None => Err(self.error_here(format!("expected {what}, found end of input"))),
        }
    }

    fn resolve_pname(
        &self,
        prefix: &str,
        local: &str,
        line: usize,
        col: usize,
    ) -> Result<Iri, TurtleError> {
        match self.graph.prefixes().get(prefix) {
            Some(ns) => Ok(Iri::new(format!("{ns}{local}"))),
            None => Err(TurtleError::Parse {
                line,
                col,
                message: format!("unknown prefix {prefix:?}"),
            }),
        }
    }

    fn parse_iri(&mut self, what: &str) -> Result<Iri, TurtleError> {
        match self.advance()? {
            Some((Token::IriRef(iri), _, _)) => Ok(Iri::new(iri)),
            Some((Token::PName { prefix, local }, line, col)) => {
                self.resolve_pname(&prefix, &local, line, col)
            }
            Some((t, line, col)) => Err(TurtleError::Parse {
                line,
                col,
                message: format!("expected {what}, found {t:?}"),
            }),
            None => Err(self.error_here(format!("expected {what}, found end of input"))),
        }
    }

    fn parse_object(&mut self) -> Result<Term, TurtleError> {
        match self.advance()? {
            Some((Token::IriRef(iri), _, _)) => Ok(Term::Iri(Iri::new(iri))),
            Some((Token::PName { prefix, local }, line, col)) => {
                Ok(Term::Iri(self.resolve_pname(&prefix, &local, line, col)?))
            }
            Some((Token::StringLit(lexical), _, _)) => match self.peek() {
                Some(Token::DatatypeMarker) => {
                    self.advance()?;
                    let datatype = self.parse_iri("datatype IRI")?;
                    Ok(Term::Literal(Literal {
                        lexical,
                        datatype,
                        lang: None,
                    }))
                }
                Some(Token::LangTag(_)) => {
                    let Some((Token::LangTag(lang), _, _)) = self.advance()? else {
                        unreachable!()
                    };
                    Ok(Term::Literal(Literal::lang_string(lexical, lang)))
                }
                _ => Ok(Term::Literal(Literal::string(lexical))),
            },
            Some((t, line, col)) => Err(TurtleError::Parse {
                line,
                col,
                message: format!("expected object term, found {t:?}"),
            }),
            None => Err(self.error_here("expected object term, found end of input")),
        }
    }

    fn parse_prefix_directive(&mut self) -> Result<(), TurtleError> {
        // '@prefix' already consumed
        let (prefix, line, col) = match self.advance()? {
            Some((Token::PName { prefix, local }, line, col)) => {
                if !local.is_empty() {
                    return Err(TurtleError::Parse {
                        line,
                        col,
                        message: "prefix declaration must end with a bare colon".into(),
                    });
                }
                (prefix, line, col)
            }
            Some((t, line, col)) => {
                return Err(TurtleError::Parse {
                    line,
                    col,
                    message: format!("expected prefix name, found {t:?}"),
                })
            }
            None => return Err(self.error_here("expected prefix name")),
        };
        let _ = (line, col);
        let ns = match self.advance()? {
            Some((Token::IriRef(iri), _, _)) => iri,
            Some((t, line, col)) => {
                return Err(TurtleError::Parse {
                    line,
                    col,
                    message: format!("expected namespace IRI, found {t:?}"),
                })
            }
            None => return Err(self.error_here("expected namespace IRI")),
        };
        self.expect(&Token::Dot, "'.'")?;
        self.graph.set_prefix(prefix, ns);
        Ok(())
    }

    fn parse_triples(&mut self) -> Result<(), TurtleError> {
        let subject = self.parse_iri("subject IRI")?;
        loop {
            let predicate = match self.advance()? {
                Some((Token::KeywordA, _, _)) => Iri::new(rdf::TYPE),
                Some((Token::IriRef(iri), _, _)) => Iri::new(iri),
                Some((Token::PName { prefix, local }, line, col)) => {
                    self.resolve_pname(&prefix, &local, line, col)?
                }
                Some((t, line, col)) => {
                    return Err(TurtleError::Parse {
                        line,
                        col,
                        message: format!("expected predicate, found {t:?}"),
                    })
                }
                None => return Err(self.error_here("expected predicate")),
            };
            loop {
                let object = self.parse_object()?;
                self.graph.insert(Triple {
                    subject: subject.clone(),
                    predicate: predicate.clone(),
                    object,
                });
                match self.peek() {
                    Some(Token::Comma) => {
                        self.advance()?;
                    }
                    _ => break,
                }
            }
            match self.advance()? {
                Some((Token::Semicolon, _, _)) => {
                    // tolerate a trailing ';' before '.'
                    if self.peek() == Some(&Token::Dot) {
                        self.advance()?;
                        return Ok(());
                    }
                }
                Some((Token::Dot, _, _)) => return Ok(()),
                Some((t, line, col)) => {
                    return Err(TurtleError::Parse {
                        line,
                        col,
                        message: format!("expected ';' or '.', found {t:?}"),
                    })
                }
                None => return Err(self.error_here("expected ';' or '.'")),
            }
        }
    }

    fn parse_document(mut self) -> Result<Graph, TurtleError> {
        while self.peek().is_some() {
            if self.peek() == Some(&Token::AtPrefix) {
                self.advance()?;
                self.parse_prefix_directive()?;
            } else {
                self.parse_triples()?;
            }
        }
        Ok(self.graph)
    }
}

/// Parses a Turtle document within the supported subset.
pub fn parse_turtle(input: &str) -> Result<Graph, TurtleError> {
    Parser::new(input)?.parse_document()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_graph() -> Graph {
        let mut g = Graph::new();
        g.set_prefix("ex", "http://example.org/cpps/");
        g.set_prefix("sm", "http://example.org/vocab/statemachine#");
        g.set_prefix("rdf", rdf::NS);
        g.set_prefix("xsd", xsd::NS);
        g.insert(Triple::new(
            "http://example.org/cpps/plant/state/q2",
            rdf::TYPE,
            Iri::new("http://example.org/vocab/statemachine#State"),
        ));
        g.insert(Triple::new(
            "http://example.org/cpps/plant/state/q2",
            "http://example.org/vocab/statemachine#note",
            Literal::string("fluid transfer \"phase\"\nline two"),
        ));
        g.insert(Triple::new(
            "http://example.org/cpps/plant/timing/t1",
            "http://example.org/vocab/statemachine#maxDuration",
            Literal::decimal_tenths(1218),
        ));
        g.insert(Triple::new(
            "http://example.org/cpps/plant/timing/t1",
            "http://example.org/vocab/statemachine#count",
            Literal::integer(25),
        ));
        g
    }

    #[test]
    fn empty_graph_serializes_to_prefixes_only() {
        let mut g = Graph::new();
        g.set_prefix("ex", "http://example.org/cpps/");
        let text = serialize_turtle(&g);
        assert_eq!(text, "@prefix ex: <http://example.org/cpps/> .\n");
        let parsed = parse_turtle(&text).unwrap();
        assert!(parsed.is_empty());
        assert_eq!(
            parsed.prefixes().get("ex").map(String::as_str),
            Some("http://example.org/cpps/")
        );
    }

    #[test]
    fn single_type_triple_round_trips() {
        let mut g = Graph::new();
        g.set_prefix("sm", "http://example.org/vocab/statemachine#");
        g.insert(Triple::new(
            "http://example.org/cpps/plant/state/q2",
            rdf::TYPE,
            Iri::new("http://example.org/vocab/statemachine#State"),
        ));
        let text = serialize_turtle(&g);
        assert!(
            text.contains("a sm:State"),
            "uses the 'a' shorthand: {text}"
        );
        let parsed = parse_turtle(&text).unwrap();
        assert!(parsed.same_triples(&g));
    }

    #[test]
    fn round_trip_is_a_fixed_point() {
        let g = sample_graph();
        let first = serialize_turtle(&g);
        let parsed = parse_turtle(&first).unwrap();
        assert!(parsed.same_triples(&g));
        let second = serialize_turtle(&parsed);
        assert_eq!(first, second);
    }

    #[test]
    fn parser_reports_position_of_bad_token() {
        let err = parse_turtle("@prefix ex: <http://x/> .\nex:a ex:b %bad .").unwrap_err();
        match err {
            TurtleError::Parse { line, col, .. } => {
                assert_eq!(line, 2);
                assert_eq!(col, 11);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn parser_rejects_blank_nodes_and_collections_as_unsupported() {
        let err = parse_turtle("@prefix ex: <http://x/> .\nex:a ex:b [ ex:c ex:d ] .").unwrap_err();
        assert!(matches!(err, TurtleError::UnsupportedFeature { .. }));
        let err = parse_turtle("@prefix ex: <http://x/> .\nex:a ex:b ( ex:c ) .").unwrap_err();
        assert!(matches!(err, TurtleError::UnsupportedFeature { .. }));
        let err = parse_turtle("@prefix ex: <http://x/> .\n_:b0 ex:b ex:c .").unwrap_err();
        assert!(matches!(err, TurtleError::UnsupportedFeature { .. }));
    }

    #[test]
    fn parser_handles_predicate_and_object_lists() {
        let text = "@prefix ex: <http://x/> .\nex:s ex:p ex:a, ex:b ;\n    ex:q \"v\" .\n";
        let g = parse_turtle(text).unwrap();
        assert_eq!(g.len(), 3);
    }

    #[test]
    fn unknown_prefix_is_an_error() {
        let err = parse_turtle("ex:a ex:b ex:c .").unwrap_err();
        assert!(matches!(err, TurtleError::Parse { .. }));
    }

    #[test]
    fn unsafe_local_names_use_full_iri_form() {
        let mut g = Graph::new();
        g.set_prefix("ex", "http://example.org/cpps/");
        g.insert(Triple::new(
            "http://example.org/cpps/plant/device/tank_B201.level",
            rdf::TYPE,
            Iri::new("http://example.org/cpps/Thing"),
        ));
        let text = serialize_turtle(&g);
        assert!(
            text.contains("<http://example.org/cpps/plant/device/tank_B201.level>"),
            "slash/dot locals must stay absolute: {text}"
        );
        assert!(parse_turtle(&text).unwrap().same_triples(&g));
    }
}
