//! Shortest connections between classes over the undirected domain/range
//! graph. Ties are broken by the lexicographically smallest IRI sequence
//! `[start, p1, c1, p2, c2, ...]`.

use std::collections::{BTreeSet, HashMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::graph::TripleGraph;
use super::term::Iri;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SchemaPathError {
    #[error("class {0} is not part of the schema")]
    UnknownClass(Iri),
    #[error("no schema path between {from} and {to}")]
    NoPath { from: Iri, to: Iri },
}

/// One hop: move along `property` to `class`. `forward` is true when the
/// class we leave is the property's domain.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SchemaStep {
    pub property: Iri,
    pub class: Iri,
    pub forward: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConnectorPath {
    pub start: Iri,
    pub steps: Vec<SchemaStep>,
}

impl ConnectorPath {
    pub fn end(&self) -> &Iri {
        self.steps.last().map(|s| &s.class).unwrap_or(&self.start)
    }

    /// Classes strictly between the two endpoints.
    pub fn intermediates(&self) -> impl Iterator<Item = &Iri> {
        let n = self.steps.len();
        self.steps[..n.saturating_sub(1)].iter().map(|s| &s.class)
    }

    /// Flattened IRI sequence used for tie-breaking.
    pub fn key(&self) -> Vec<&Iri> {
        let mut key = vec![&self.start];
        for s in &self.steps {
            key.push(&s.property);
            key.push(&s.class);
        }
        key
    }
}

fn known(graph: &TripleGraph, class: &Iri) -> bool {
    graph.is_class(class) || graph.schema_index().contains_key(class)
}

/// Minimal-length undirected path from `from` to `to`.
pub fn shortest_schema_path(graph: &TripleGraph, from: &Iri, to: &Iri) -> Result<Vec<SchemaStep>, SchemaPathError> {
    for c in [from, to] {
        if !known(graph, c) {
            return Err(SchemaPathError::UnknownClass(c.clone()));
        }
    }
    let starts = BTreeSet::from([from.clone()]);
    let targets = BTreeSet::from([to.clone()]);
    connector_path(graph, &starts, &targets, &BTreeSet::new(), false)
        .map(|p| p.steps)
        .ok_or_else(|| SchemaPathError::NoPath {
            from: from.clone(),
            to: to.clone(),
        })
}

/// Shortest path from any start class to any target class whose
/// intermediate classes avoid `forbidden`. With `nonempty`, a start that is
/// itself a target still needs at least one hop.
pub fn connector_path(
    graph: &TripleGraph,
    starts: &BTreeSet<Iri>,
    targets: &BTreeSet<Iri>,
    forbidden: &BTreeSet<Iri>,
    nonempty: bool,
) -> Option<ConnectorPath> {
    // Distance to the nearest target, expanding only through allowed classes.
    let mut dist: HashMap<&Iri, usize> = HashMap::new();
    let mut queue = VecDeque::new();
    for t in targets {
        dist.insert(t, 0);
        queue.push_back(t);
    }
    while let Some(u) = queue.pop_front() {
        let d = dist[u];
        if forbidden.contains(u) && !targets.contains(u) {
            continue;
        }
        for edge in graph.schema_edges(u) {
            if !dist.contains_key(&edge.other) {
                dist.insert(&edge.other, d + 1);
                queue.push_back(&edge.other);
            }
        }
    }

    let enterable = |c: &Iri, remaining_after: usize| -> bool {
        match dist.get(c) {
            Some(&d) if d == remaining_after => {
                remaining_after == 0 || !forbidden.contains(c) || targets.contains(c) && d == 0
            }
            _ => false,
        }
    };

    let mut best: Option<ConnectorPath> = None;
    for start in starts {
        let length = if nonempty && targets.contains(start) {
            graph
                .schema_edges(start)
                .filter_map(|e| dist.get(&e.other).map(|d| (d, &e.other)))
                .filter(|(d, c)| **d == 0 || !forbidden.contains(*c))
                .map(|(d, _)| d + 1)
                .min()
        } else {
            dist.get(start).copied()
        };
        let Some(length) = length else { continue };
        if best.as_ref().is_some_and(|b| b.steps.len() < length) {
            continue;
        }
        let mut steps = Vec::with_capacity(length);
        let mut at = start;
        for i in 0..length {
            let remaining_after = length - i - 1;
            let next = graph
                .schema_edges(at)
                .filter(|e| enterable(&e.other, remaining_after))
                .min_by(|a, b| (&a.property, &a.other, !a.forward).cmp(&(&b.property, &b.other, !b.forward)))
                .expect("distance labels guarantee a successor");
            steps.push(SchemaStep {
                property: next.property.clone(),
                class: next.other.clone(),
                forward: next.forward,
            });
            at = &next.other;
        }
        let candidate = ConnectorPath {
            start: start.clone(),
            steps,
        };
        let better = match &best {
            None => true,
            Some(b) => (candidate.steps.len(), candidate.key()) < (b.steps.len(), b.key()),
        };
        if better {
            best = Some(candidate);
        }
    }
    best
}
