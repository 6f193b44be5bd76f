use std::collections::{BTreeMap, BTreeSet};

use super::term::{Iri, Term, Triple};

/// An in-memory RDF graph with set semantics and a prefix table for
/// serialization. Ordered containers keep every traversal deterministic.
///
/// Concurrency: share read-only across threads, or mutate from one writer;
/// queries never mutate.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Graph {
    triples: BTreeSet<Triple>,
    prefixes: BTreeMap<String, String>,
}

impl Graph {
    pub fn new() -> Self {
        Graph::default()
    }

    /// Inserts a triple; duplicates are absorbed. Returns whether the graph
    /// changed.
    pub fn insert(&mut self, triple: Triple) -> bool {
        self.triples.insert(triple)
    }

    pub fn contains(&self, triple: &Triple) -> bool {
        self.triples.contains(triple)
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    /// Triples in canonical (subject, predicate, object) order.
    pub fn iter(&self) -> impl Iterator<Item = &Triple> {
        self.triples.iter()
    }

    pub fn set_prefix(&mut self, prefix: impl Into<String>, namespace: impl Into<String>) {
        self.prefixes.insert(prefix.into(), namespace.into());
    }

    pub fn prefixes(&self) -> &BTreeMap<String, String> {
        &self.prefixes
    }

    /// Union of triples and prefixes. On prefix conflicts the other graph
    /// wins; the mappers all share one fixed prefix table so conflicts do
    /// not arise in practice.
    pub fn merge(&mut self, other: &Graph) {
        for t in other.iter() {
            self.triples.insert(t.clone());
        }
        for (p, ns) in other.prefixes() {
            self.prefixes.insert(p.clone(), ns.clone());
        }
    }

    /// True when both graphs hold exactly the same triples, regardless of
    /// prefix tables.
    pub fn same_triples(&self, other: &Graph) -> bool {
        self.triples == other.triples
    }

    /// All triples matching an optional subject/predicate/object mask.
    pub fn matching<'a>(
        &'a self,
        subject: Option<&'a Iri>,
        predicate: Option<&'a Iri>,
        object: Option<&'a Term>,
    ) -> impl Iterator<Item = &'a Triple> {
        self.triples.iter().filter(move |t| {
            subject.is_none_or(|s| &t.subject == s)
                && predicate.is_none_or(|p| &t.predicate == p)
                && object.is_none_or(|o| &t.object == o)
        })
    }
}

impl Extend<Triple> for Graph {
    fn extend<T: IntoIterator<Item = Triple>>(&mut self, iter: T) {
        for t in iter {
            self.triples.insert(t);
        }
    }
}

impl<'a> IntoIterator for &'a Graph {
    type Item = &'a Triple;
    type IntoIter = std::collections::btree_set::Iter<'a, Triple>;
    fn into_iter(self) -> Self::IntoIter {
        self.triples.iter()
    }
}
