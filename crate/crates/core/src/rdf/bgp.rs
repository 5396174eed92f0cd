//! Basic graph pattern evaluation: conjunctive triple patterns with named
//! variables, solved by backtracking over the store indexes.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::graph::TripleGraph;
use super::term::{Iri, Term, Triple};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PatternTerm {
    Var(String),
    Term(Term),
}

impl PatternTerm {
    pub fn var(name: impl Into<String>) -> Self {
        let name = name.into();
        debug_assert!(is_valid_var(&name), "invalid variable name {name:?}");
        PatternTerm::Var(name)
    }

    pub fn iri(iri: Iri) -> Self {
        PatternTerm::Term(Term::Iri(iri))
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            PatternTerm::Var(v) => Some(v),
            PatternTerm::Term(_) => None,
        }
    }

    fn resolve<'a>(&'a self, bindings: &'a Solution) -> Option<&'a Term> {
        match self {
            PatternTerm::Term(t) => Some(t),
            PatternTerm::Var(v) => bindings.get(v),
        }
    }
}

impl From<Term> for PatternTerm {
    fn from(t: Term) -> Self {
        PatternTerm::Term(t)
    }
}

impl fmt::Display for PatternTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PatternTerm::Var(v) => write!(f, "?{v}"),
            PatternTerm::Term(t) => t.fmt(f),
        }
    }
}

/// Variable names follow `[A-Za-z_][A-Za-z0-9_]*`.
pub fn is_valid_var(name: &str) -> bool {
    let mut chars = name.chars();
    chars.next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TriplePattern {
    pub subject: PatternTerm,
    pub predicate: PatternTerm,
    pub object: PatternTerm,
}

impl TriplePattern {
    pub fn new(
        subject: impl Into<PatternTerm>,
        predicate: impl Into<PatternTerm>,
        object: impl Into<PatternTerm>,
    ) -> Self {
        TriplePattern {
            subject: subject.into(),
            predicate: predicate.into(),
            object: object.into(),
        }
    }

    pub fn positions(&self) -> [&PatternTerm; 3] {
        [&self.subject, &self.predicate, &self.object]
    }

    pub fn variables(&self) -> impl Iterator<Item = &str> {
        self.positions().into_iter().filter_map(PatternTerm::as_var)
    }

    /// Substitutes bindings; `None` if a variable is unbound or the result
    /// is not a well-formed triple.
    pub fn ground(&self, bindings: &Solution) -> Option<Triple> {
        let s = self.subject.resolve(bindings)?.as_iri()?.clone();
        let p = self.predicate.resolve(bindings)?.as_iri()?.clone();
        let o = self.object.resolve(bindings)?.clone();
        Some(Triple::new(s, p, o))
    }
}

impl fmt::Display for TriplePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} .", self.subject, self.predicate, self.object)
    }
}

/// Variable bindings of one BGP match.
pub type Solution = BTreeMap<String, Term>;

/// Every assignment under which all patterns are graph triples, sorted by
/// binding tuples.
pub fn match_bgp(graph: &TripleGraph, patterns: &[TriplePattern]) -> Vec<Solution> {
    let mut out = Vec::new();
    let mut remaining: Vec<&TriplePattern> = patterns.iter().collect();
    let mut bindings = Solution::new();
    search(graph, &mut remaining, &mut bindings, &mut out);
    out.sort();
    out.dedup();
    out
}

fn bound_count(p: &TriplePattern, bindings: &Solution) -> usize {
    p.positions()
        .into_iter()
        .filter(|t| t.resolve(bindings).is_some())
        .count()
}

fn search(graph: &TripleGraph, remaining: &mut Vec<&TriplePattern>, bindings: &mut Solution, out: &mut Vec<Solution>) {
    if remaining.is_empty() {
        out.push(bindings.clone());
        return;
    }
    // Most constrained pattern first; ties keep the caller's order.
    let (idx, _) = remaining
        .iter()
        .enumerate()
        .max_by(|(ia, a), (ib, b)| bound_count(a, bindings).cmp(&bound_count(b, bindings)).then(ib.cmp(ia)))
        .expect("non-empty");
    let pattern = remaining.remove(idx);

    let s = pattern.subject.resolve(bindings).cloned();
    let p = pattern.predicate.resolve(bindings).cloned();
    let o = pattern.object.resolve(bindings).cloned();
    let s_iri = match &s {
        Some(Term::Iri(i)) => Some(i.clone()),
        Some(Term::Literal(_)) => {
            remaining.insert(idx, pattern);
            return;
        }
        None => None,
    };
    let p_iri = match &p {
        Some(Term::Iri(i)) => Some(i.clone()),
        Some(Term::Literal(_)) => {
            remaining.insert(idx, pattern);
            return;
        }
        None => None,
    };

    let candidates: Vec<Triple> = graph
        .matching(s_iri.as_ref(), p_iri.as_ref(), o.as_ref())
        .into_iter()
        .cloned()
        .collect();
    for triple in candidates {
        let mut added: Vec<String> = Vec::new();
        let values = [
            Term::Iri(triple.subject.clone()),
            Term::Iri(triple.predicate.clone()),
            triple.object.clone(),
        ];
        let mut ok = true;
        for (pos, value) in pattern.positions().into_iter().zip(values) {
            if let PatternTerm::Var(v) = pos {
                match bindings.get(v) {
                    Some(existing) if *existing != value => {
                        ok = false;
                        break;
                    }
                    Some(_) => {}
                    None => {
                        bindings.insert(v.clone(), value);
                        added.push(v.clone());
                    }
                }
            }
        }
        if ok {
            search(graph, remaining, bindings, out);
        }
        for v in added {
            bindings.remove(&v);
        }
    }
    remaining.insert(idx, pattern);
}
