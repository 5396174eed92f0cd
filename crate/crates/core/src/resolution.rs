//! Individual resolution: surviving mentions and hidden nodes are folded
//! into objects, literal values become constraints, relations are copied
//! onto the objects, and objects are bound against the ABox.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::assembly::anchor_classes;
use crate::docgraph::{DocGraphError, DocumentGraph, MentionKind, NodeId, NodeRef, Provenance, SemanticEdge, Stage};
use crate::rdf::{match_bgp, vocab, Iri, Literal, PatternTerm, Term, TripleGraph, TriplePattern};

/// Preferred query variable names per class.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableNames {
    pub by_class: BTreeMap<Iri, String>,
}

impl VariableNames {
    pub fn base_for(&self, class: &Iri) -> String {
        if let Some(v) = self.by_class.get(class) {
            return v.clone();
        }
        let local = class.local_name();
        // hasPhone -> phone
        let local = match local.strip_prefix("has") {
            Some(rest) if rest.starts_with(|c: char| c.is_ascii_uppercase()) => rest,
            _ => local,
        };
        let mut name: String = local
            .chars()
            .map(|c| {
                if c.is_ascii_alphanumeric() {
                    c.to_ascii_lowercase()
                } else {
                    '_'
                }
            })
            .collect();
        if name.is_empty() || name.starts_with(|c: char| c.is_ascii_digit()) {
            name.insert(0, 'x');
        }
        name
    }
}

struct Seed {
    node: NodeId,
    class: Iri,
    individual: Option<Iri>,
    constraints: Vec<(Iri, Literal)>,
    position: usize,
}

struct Group {
    class: Iri,
    individual: Option<Iri>,
    constraints: Vec<(Iri, Literal)>,
    sources: Vec<NodeId>,
}

fn functional_conflict(a: &[(Iri, Literal)], b: &[(Iri, Literal)], ontology: &TripleGraph) -> bool {
    a.iter()
        .any(|(p, v)| ontology.max_cardinality(p) == Some(1) && b.iter().any(|(q, w)| p == q && !v.same_value(w)))
}

/// Known single-valued facts of an individual, as constraints.
fn individual_facts(kg: &TripleGraph, individual: &Iri) -> Vec<(Iri, Literal)> {
    kg.matching(Some(individual), None, None)
        .into_iter()
        .filter(|t| kg.max_cardinality(&t.predicate) == Some(1))
        .filter_map(|t| t.object.as_literal().map(|l| (t.predicate.clone(), l.clone())))
        .collect()
}

fn compatible(g: &Group, s: &Seed, kg: &TripleGraph) -> bool {
    if g.class != s.class {
        return false;
    }
    match (&g.individual, &s.individual) {
        (Some(a), Some(b)) if a != b => return false,
        _ => {}
    }
    let mut left = g.constraints.clone();
    let mut right = s.constraints.clone();
    if let Some(i) = &g.individual {
        left.extend(individual_facts(kg, i));
    }
    if let Some(i) = &s.individual {
        right.extend(individual_facts(kg, i));
    }
    !functional_conflict(&left, &right, kg)
}

/// Folds the semantic layer into objects. Same-class nodes merge unless a
/// single-valued property tells them apart; coreference picks the group
/// when several fit. Hidden nodes always become objects of their own.
pub fn resolve_objects(d: &mut DocumentGraph, kg: &TripleGraph, names: &VariableNames) -> Result<(), DocGraphError> {
    d.require(Stage::Disambiguated)?;
    let live: Vec<SemanticEdge> = d.live_edges().cloned().collect();
    let attached_literals: BTreeSet<NodeId> = live
        .iter()
        .filter(|e| d.mention(e.to).is_some_and(|m| m.kind == MentionKind::LiteralValue))
        .map(|e| e.to)
        .collect();

    let mut seeds = Vec::new();
    for m in d.surviving() {
        let first_token = m.tokens.iter().copied().min().unwrap_or(0);
        let (class, individual, constraints) = match m.kind {
            MentionKind::Class => {
                let constraints = live
                    .iter()
                    .filter(|e| e.from == m.id && attached_literals.contains(&e.to))
                    .filter_map(|e| d.mention(e.to))
                    .filter_map(|lit| lit.value.clone().map(|v| (lit.reference.clone(), v)))
                    .collect();
                (m.reference.clone(), None, constraints)
            }
            MentionKind::Individual => {
                let Some(class) = kg.types_of(&m.reference).into_iter().min() else {
                    continue;
                };
                (class, Some(m.reference.clone()), Vec::new())
            }
            MentionKind::LiteralValue if !attached_literals.contains(&m.id) => {
                let Some(class) = anchor_classes(m, kg).into_iter().next() else {
                    continue;
                };
                let constraints = m
                    .value
                    .clone()
                    .map(|v| vec![(m.reference.clone(), v)])
                    .unwrap_or_default();
                (class, None, constraints)
            }
            _ => continue,
        };
        seeds.push(Seed {
            node: m.id,
            class,
            individual,
            constraints,
            position: first_token,
        });
    }
    seeds.sort_by(|a, b| (a.position, &a.class, a.node).cmp(&(b.position, &b.class, b.node)));

    let linked = |a: NodeId, b: NodeId| {
        d.coreferent_mentions().contains(&(a.min(b), a.max(b)))
            || d.identities.iter().any(|&(x, y)| (x, y) == (a, b) || (x, y) == (b, a))
    };

    let mut groups: Vec<Group> = Vec::new();
    for seed in seeds {
        let fitting: Vec<usize> = (0..groups.len())
            .filter(|&g| compatible(&groups[g], &seed, kg))
            .collect();
        let preferred = fitting
            .iter()
            .copied()
            .find(|&g| groups[g].sources.iter().any(|&s| linked(s, seed.node)))
            .or_else(|| fitting.first().copied());
        match preferred {
            Some(g) => {
                let group = &mut groups[g];
                group.sources.push(seed.node);
                if group.individual.is_none() {
                    group.individual = seed.individual;
                }
                for c in seed.constraints {
                    if !group.constraints.contains(&c) {
                        group.constraints.push(c);
                    }
                }
            }
            None => groups.push(Group {
                class: seed.class,
                individual: seed.individual,
                constraints: seed.constraints,
                sources: vec![seed.node],
            }),
        }
    }
    for h in &d.hidden {
        groups.push(Group {
            class: h.reference.clone(),
            individual: None,
            constraints: Vec::new(),
            sources: vec![h.id],
        });
    }

    let mut used: BTreeMap<String, usize> = BTreeMap::new();
    for g in groups {
        let base = names.base_for(&g.class);
        let n = used.entry(base.clone()).or_insert(0);
        *n += 1;
        let variable = if *n == 1 { base } else { format!("{base}{n}") };
        let id = d.add_object(g.class, g.individual, variable);
        let obj = d.object_mut(id).expect("just added");
        obj.constraints = g.constraints;
        obj.sources = g.sources;
    }

    let object_of: BTreeMap<NodeId, NodeId> = d
        .objects
        .iter()
        .flat_map(|o| o.sources.iter().map(move |&s| (s, o.id)))
        .collect();
    for e in live {
        let Some(&from) = object_of.get(&e.from) else { continue };
        let to = match (object_of.get(&e.to), d.node(e.to)) {
            (Some(&o), _) => o,
            (None, Some(NodeRef::Mention(i))) if d.mentions[i].kind == MentionKind::Property => e.to,
            _ => continue,
        };
        let copied = SemanticEdge {
            from,
            to,
            predicate: e.predicate.clone(),
            provenance: Provenance::Copied,
        };
        if !d
            .object_edges
            .iter()
            .any(|x| x.from == from && x.to == to && x.predicate == copied.predicate)
        {
            d.object_edges.push(copied);
        }
    }
    d.advance(Stage::Resolved);
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "kebab-case")]
pub enum BindingState {
    Bound { iri: Iri },
    Variable,
    Ambiguous { count: usize, candidates: Vec<Iri> },
    Unmatched,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BindingOutcome {
    pub object: NodeId,
    #[serde(flatten)]
    pub state: BindingState,
}

/// Patterns identifying an object by type and literal constraints alone.
pub fn identifying_patterns(class: &Iri, constraints: &[(Iri, Literal)]) -> Vec<TriplePattern> {
    let mut out = vec![TriplePattern::new(
        PatternTerm::var("x"),
        PatternTerm::iri(vocab::rdf_type()),
        PatternTerm::iri(class.clone()),
    )];
    for (p, v) in constraints {
        out.push(TriplePattern::new(
            PatternTerm::var("x"),
            PatternTerm::iri(p.clone()),
            PatternTerm::Term(Term::Literal(v.clone())),
        ));
    }
    out
}

/// Looks each constrained object up in the ABox.
pub fn bind_individuals(d: &DocumentGraph, kg: &TripleGraph) -> Result<Vec<BindingOutcome>, DocGraphError> {
    d.require(Stage::Resolved)?;
    Ok(d.objects
        .iter()
        .map(|o| {
            let state = if let Some(iri) = &o.individual {
                BindingState::Bound { iri: iri.clone() }
            } else if o.constraints.is_empty() {
                BindingState::Variable
            } else {
                let hits: Vec<Iri> = match_bgp(kg, &identifying_patterns(&o.class, &o.constraints))
                    .into_iter()
                    .filter_map(|s| s.get("x").and_then(Term::as_iri).cloned())
                    .collect();
                match hits.len() {
                    0 => BindingState::Unmatched,
                    1 => BindingState::Bound { iri: hits[0].clone() },
                    count => BindingState::Ambiguous {
                        count,
                        candidates: hits,
                    },
                }
            };
            BindingOutcome { object: o.id, state }
        })
        .collect())
}

/// Writes bound individuals back onto the objects.
pub fn apply_bindings(d: &mut DocumentGraph, outcomes: &[BindingOutcome]) {
    for b in outcomes {
        if let BindingState::Bound { iri } = &b.state {
            if let Some(o) = d.object_mut(b.object) {
                o.individual = Some(iri.clone());
            }
        }
    }
}
