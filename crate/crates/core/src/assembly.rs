//! Semantic assembly: relations between mentions induced from the schema,
//! winner selection by min-cost max-flow, and hidden-node insertion until
//! the semantic layer is one weakly connected component.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::docgraph::{
    project_a, weakly_connected_components, DocGraphError, DocumentGraph, Mention, MentionKind, NodeId, NodeRef,
    Provenance, Stage,
};
use crate::flow::{solve_cover, unit_costs, CoverProblem};
use crate::rdf::{connector_path, Iri, Literal, TripleGraph};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AssemblyError {
    #[error(transparent)]
    Stage(#[from] DocGraphError),
    #[error("cannot connect {} fragments of the question", fragments.len())]
    Disconnected { fragments: Vec<BTreeSet<NodeId>> },
}

/// Classes a mention can stand in for when looking for schema relations.
pub fn anchor_classes(m: &Mention, ontology: &TripleGraph) -> BTreeSet<Iri> {
    match m.kind {
        MentionKind::Class => BTreeSet::from([m.reference.clone()]),
        MentionKind::Individual => ontology.types_of(&m.reference).into_iter().collect(),
        MentionKind::Property | MentionKind::LiteralValue => ontology
            .property(&m.reference)
            .map(|p| p.domains.clone())
            .unwrap_or_default(),
    }
}

fn fits(classes: &BTreeSet<Iri>, targets: &BTreeSet<Iri>, ontology: &TripleGraph) -> bool {
    classes
        .iter()
        .any(|c| targets.iter().any(|t| ontology.is_subclass_of(c, t)))
}

fn is_entity(kind: MentionKind) -> bool {
    matches!(kind, MentionKind::Class | MentionKind::Individual)
}

/// Adds schema-licensed relations between every pair of token-disjoint
/// mentions within `max_len` syntactic steps of each other. Steps start from
/// the mention tokens and every token coreferent with them.
pub fn induce_edges(d: &mut DocumentGraph, ontology: &TripleGraph, max_len: usize) -> Result<(), DocGraphError> {
    d.require(Stage::MentionsAdded)?;
    let mentions = d.mentions.clone();
    let anchors: Vec<BTreeSet<Iri>> = mentions.iter().map(|m| anchor_classes(m, ontology)).collect();
    let distances: Vec<Vec<Option<usize>>> = mentions
        .iter()
        .map(|m| {
            // a pronoun stands in for its antecedent
            let mut seeds = m.tokens.clone();
            for &t in &m.tokens {
                if let Some(c) = d.text.cluster_of(t) {
                    seeds.extend(d.text.clusters[c].members.iter().copied());
                }
            }
            seeds.sort_unstable();
            seeds.dedup();
            d.text.distances_from(&seeds)
        })
        .collect();
    let object_properties: Vec<(&Iri, &BTreeSet<Iri>, &BTreeSet<Iri>)> = ontology
        .properties()
        .iter()
        .filter(|(_, info)| !info.datatype)
        .map(|(p, info)| (p, &info.domains, &info.ranges))
        .collect();

    let mut new_edges = Vec::new();
    for (i, a) in mentions.iter().enumerate() {
        for (j, b) in mentions.iter().enumerate().skip(i + 1) {
            if a.tokens.iter().any(|t| b.tokens.contains(t)) {
                continue;
            }
            let near = b
                .tokens
                .iter()
                .filter_map(|&t| distances[i][t])
                .min()
                .is_some_and(|dist| dist <= max_len);
            if !near {
                continue;
            }
            for (x, y, ax, ay) in [(i, j, &anchors[i], &anchors[j]), (j, i, &anchors[j], &anchors[i])] {
                let (mx, my) = (&mentions[x], &mentions[y]);
                match (mx.kind, my.kind) {
                    (kx, ky) if is_entity(kx) && is_entity(ky) => {
                        for (p, domains, ranges) in &object_properties {
                            if fits(ax, domains, ontology) && fits(ay, ranges, ontology) {
                                new_edges.push((mx.id, my.id, (*p).clone()));
                            }
                        }
                    }
                    (MentionKind::Class, MentionKind::LiteralValue) if fits(ax, ay, ontology) => {
                        new_edges.push((mx.id, my.id, my.reference.clone()));
                    }
                    (kx, MentionKind::Property)
                        if (is_entity(kx) || kx == MentionKind::LiteralValue) && fits(ax, ay, ontology) =>
                    {
                        new_edges.push((mx.id, my.id, my.reference.clone()));
                    }
                    _ => {}
                }
            }
        }
    }
    for (from, to, p) in new_edges {
        d.add_edge(from, to, p, Provenance::SchemaInduced);
    }
    d.advance(Stage::PredicatesAdded);
    Ok(())
}

/// Two surviving mentions over the same tokens whose costs are within the
/// ambiguity threshold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ambiguity {
    pub winner: NodeId,
    pub loser: NodeId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Disambiguation {
    /// Maximum flow of the token network before whole-mention restriction.
    pub total_flow: usize,
    pub covered: usize,
    pub ambiguities: Vec<Ambiguity>,
}

/// Effective weight `w × (1 + degree in the mention/relation subgraph)`.
pub fn effective_weights(d: &DocumentGraph) -> Result<Vec<f64>, DocGraphError> {
    let a = project_a(d)?;
    Ok(d.mentions
        .iter()
        .map(|m| m.weight * (1.0 + a.degree(m.id) as f64))
        .collect())
}

/// Keeps a maximum token-disjoint cover of least cost; everything else is
/// tombstoned. Near-equal rivals on identical tokens are reported.
pub fn choose_winners(d: &mut DocumentGraph, epsilon: f64) -> Result<Disambiguation, DocGraphError> {
    d.require(Stage::PredicatesAdded)?;
    let weights = effective_weights(d)?;
    let counts: Vec<usize> = d.mentions.iter().map(|m| m.tokens.len()).collect();
    let problem = CoverProblem {
        token_count: d.text.tokens.len(),
        mentions: d.mentions.iter().map(|m| m.tokens.clone()).collect(),
        unit_costs: unit_costs(&weights, &counts),
    };
    let solution = solve_cover(&problem);
    let chosen: BTreeSet<usize> = solution.chosen.iter().copied().collect();
    for (i, m) in d.mentions.iter_mut().enumerate() {
        m.discarded = !chosen.contains(&i);
    }

    let mut ambiguities = Vec::new();
    for &w in &chosen {
        for (l, loser) in d.mentions.iter().enumerate() {
            let winner = &d.mentions[w];
            if !loser.discarded || loser.tokens != winner.tokens || loser.reference == winner.reference {
                continue;
            }
            let (cw, cl) = (1.0 / weights[w], 1.0 / weights[l]);
            if (cl - cw).abs() / cw.min(cl) < epsilon {
                ambiguities.push(Ambiguity {
                    winner: winner.id,
                    loser: loser.id,
                });
            }
        }
    }
    d.advance(Stage::Disambiguated);
    Ok(Disambiguation {
        total_flow: solution.root_flow,
        covered: solution.covered,
        ambiguities,
    })
}

/// Literal values attached to a node: its own for a literal mention, or
/// those of literal mentions it points at.
fn functional_values(d: &DocumentGraph, node: NodeId, ontology: &TripleGraph) -> BTreeMap<Iri, Literal> {
    let mut out = BTreeMap::new();
    let mut record = |m: &Mention| {
        if let Some(v) = &m.value {
            if ontology.max_cardinality(&m.reference) == Some(1) {
                out.insert(m.reference.clone(), v.clone());
            }
        }
    };
    if let Some(m) = d.mention(node) {
        if m.kind == MentionKind::LiteralValue {
            record(m);
        }
    }
    for e in d.live_edges().filter(|e| e.from == node) {
        if let Some(m) = d.mention(e.to).filter(|m| m.kind == MentionKind::LiteralValue) {
            record(m);
        }
    }
    out
}

/// Whether a node can serve as a connection endpoint, and with which classes.
fn endpoint_classes(d: &DocumentGraph, node: NodeId, ontology: &TripleGraph) -> BTreeSet<Iri> {
    match d.node(node) {
        Some(NodeRef::Mention(i)) => {
            let m = &d.mentions[i];
            match m.kind {
                MentionKind::Class | MentionKind::Individual => anchor_classes(m, ontology),
                MentionKind::LiteralValue if !d.live_edges().any(|e| e.to == node) => anchor_classes(m, ontology),
                _ => BTreeSet::new(),
            }
        }
        Some(NodeRef::Hidden(i)) => BTreeSet::from([d.hidden[i].reference.clone()]),
        _ => BTreeSet::new(),
    }
}

/// Pairs of nodes in different components predicted to denote one
/// individual: same class, and no clash on a single-valued property.
fn unifiable(d: &DocumentGraph, a: NodeId, b: NodeId, ontology: &TripleGraph) -> bool {
    let (ma, mb) = match (d.mention(a), d.mention(b)) {
        (Some(x), Some(y)) => (x, y),
        _ => return false,
    };
    match (ma.kind, mb.kind) {
        (MentionKind::Individual, MentionKind::Individual) => ma.reference == mb.reference,
        (MentionKind::Individual, _) | (_, MentionKind::Individual) => false,
        _ => {
            let (ca, cb) = (endpoint_classes(d, a, ontology), endpoint_classes(d, b, ontology));
            if ca.is_empty() || ca != cb {
                return false;
            }
            let (va, vb) = (functional_values(d, a, ontology), functional_values(d, b, ontology));
            va.iter().all(|(p, v)| vb.get(p).is_none_or(|w| w.same_value(v)))
        }
    }
}

/// Joins the semantic layer into one component, first by identifying
/// nodes that denote the same individual, then by materializing the
/// shortest schema connections as hidden nodes.
pub fn insert_hidden(d: &mut DocumentGraph, ontology: &TripleGraph) -> Result<(), AssemblyError> {
    d.require(Stage::Disambiguated)?;

    // A property with no subject gets a hidden subject of its domain.
    let dangling: Vec<(NodeId, Iri, Iri)> = d
        .surviving()
        .filter(|m| m.kind == MentionKind::Property)
        .filter(|m| !d.live_edges().any(|e| e.to == m.id))
        .filter_map(|m| {
            let domain = ontology.property(&m.reference)?.domains.iter().next()?.clone();
            Some((m.id, m.reference.clone(), domain))
        })
        .collect();
    for (id, property, domain) in dangling {
        let h = d.add_hidden(domain);
        d.add_edge(h, id, property, Provenance::Hidden);
    }

    loop {
        let components = weakly_connected_components(d);
        if components.len() <= 1 {
            return Ok(());
        }
        if let Some((a, b)) = find_unification(d, &components, ontology) {
            d.identities.push((a, b));
            continue;
        }
        let Some((ci, cj, path)) = best_connection(d, &components, ontology) else {
            return Err(AssemblyError::Disconnected { fragments: components });
        };
        let start_node = pick_node(d, &components[ci], &path.start, ontology);
        let end_node = pick_node(d, &components[cj], path.end(), ontology);
        let mut prev = start_node;
        for (k, step) in path.steps.iter().enumerate() {
            let next = if k + 1 == path.steps.len() {
                end_node
            } else {
                d.add_hidden(step.class.clone())
            };
            if step.forward {
                d.add_edge(prev, next, step.property.clone(), Provenance::Hidden);
            } else {
                d.add_edge(next, prev, step.property.clone(), Provenance::Hidden);
            }
            prev = next;
        }
    }
}

fn find_unification(
    d: &DocumentGraph,
    components: &[BTreeSet<NodeId>],
    ontology: &TripleGraph,
) -> Option<(NodeId, NodeId)> {
    for (i, ci) in components.iter().enumerate() {
        for cj in &components[i + 1..] {
            for &a in ci {
                for &b in cj {
                    if unifiable(d, a, b, ontology) {
                        return Some((a, b));
                    }
                }
            }
        }
    }
    None
}

fn pick_node(d: &DocumentGraph, component: &BTreeSet<NodeId>, class: &Iri, ontology: &TripleGraph) -> NodeId {
    *component
        .iter()
        .find(|&&n| endpoint_classes(d, n, ontology).contains(class))
        .expect("connector endpoints come from component classes")
}

fn best_connection(
    d: &DocumentGraph,
    components: &[BTreeSet<NodeId>],
    ontology: &TripleGraph,
) -> Option<(usize, usize, crate::rdf::ConnectorPath)> {
    let forbidden: BTreeSet<Iri> = d.surviving().flat_map(|m| anchor_classes(m, ontology)).collect();
    let classes: Vec<BTreeSet<Iri>> = components
        .iter()
        .map(|c| c.iter().flat_map(|&n| endpoint_classes(d, n, ontology)).collect())
        .collect();
    let mut best: Option<(usize, usize, crate::rdf::ConnectorPath)> = None;
    for i in 0..components.len() {
        for j in i + 1..components.len() {
            let Some(path) = connector_path(ontology, &classes[i], &classes[j], &forbidden, true) else {
                continue;
            };
            let better = match &best {
                None => true,
                Some((_, _, b)) => (path.steps.len(), path.key()) < (b.steps.len(), b.key()),
            };
            if better {
                best = Some((i, j, path));
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{Analyzer, RuleAnalyzer};
    use crate::lexicon::Lexicon;
    use crate::rdf::load_turtle;

    const SCHEMA: &str = r#"
        @prefix : <http://ex.org/#> .
        @prefix rdfs: <http://www.w3.org/2000/01/rdf-schema#> .
        @prefix owl: <http://www.w3.org/2002/07/owl#> .
        @prefix xsd: <http://www.w3.org/2001/XMLSchema#> .
        :isPartOf a owl:ObjectProperty ; rdfs:domain :Tank ; rdfs:range :Unit .
        :memberOf a owl:ObjectProperty ; rdfs:domain :Person ; rdfs:range :Org .
        :operates a owl:ObjectProperty ; rdfs:domain :Org ; rdfs:range :Unit .
        :hasNumber a owl:DatatypeProperty ; rdfs:domain :Tank ; rdfs:range xsd:int ; owl:maxCardinality 1 .
    "#;

    fn iri(s: &str) -> Iri {
        Iri::new(format!("http://ex.org/#{s}"))
    }

    fn doc(text: &str) -> DocumentGraph {
        DocumentGraph::new(RuleAnalyzer::default().analyze(text, &Lexicon::default()).unwrap())
    }

    #[test]
    fn genitive_induces_part_of() {
        let kg = load_turtle(SCHEMA).unwrap();
        let mut d = doc("tank of unit");
        let t = d.add_mention(iri("Tank"), MentionKind::Class, vec![0], 0.8, "t", None);
        let u = d.add_mention(iri("Unit"), MentionKind::Class, vec![2], 0.8, "t", None);
        d.advance(Stage::MentionsAdded);
        induce_edges(&mut d, &kg, 3).unwrap();
        assert_eq!(d.edges.len(), 1);
        assert_eq!((d.edges[0].from, d.edges[0].to), (t, u));
        assert_eq!(d.edges[0].predicate, iri("isPartOf"));
    }

    #[test]
    fn unrelated_mentions_stay_apart() {
        let kg = load_turtle(SCHEMA).unwrap();
        let mut d = doc("tank person");
        d.add_mention(iri("Tank"), MentionKind::Class, vec![0], 0.8, "t", None);
        d.add_mention(iri("Person"), MentionKind::Class, vec![1], 0.8, "t", None);
        d.advance(Stage::MentionsAdded);
        induce_edges(&mut d, &kg, 3).unwrap();
        assert!(d.edges.is_empty());
    }

    #[test]
    fn hidden_org_bridges_person_and_unit() {
        let kg = load_turtle(SCHEMA).unwrap();
        let mut d = doc("person . unit");
        let p = d.add_mention(iri("Person"), MentionKind::Class, vec![0], 0.8, "t", None);
        let u = d.add_mention(iri("Unit"), MentionKind::Class, vec![2], 0.8, "t", None);
        d.advance(Stage::MentionsAdded);
        induce_edges(&mut d, &kg, 3).unwrap();
        choose_winners(&mut d, 0.05).unwrap();
        insert_hidden(&mut d, &kg).unwrap();
        assert_eq!(d.hidden.len(), 1);
        let h = d.hidden[0].id;
        assert_eq!(d.hidden[0].reference, iri("Org"));
        assert!(d
            .edges
            .iter()
            .any(|e| e.from == p && e.to == h && e.predicate == iri("memberOf")));
        assert!(d
            .edges
            .iter()
            .any(|e| e.from == h && e.to == u && e.predicate == iri("operates")));
        assert_eq!(weakly_connected_components(&d).len(), 1);
    }

    #[test]
    fn numbered_tanks_are_not_unified() {
        let kg = load_turtle(SCHEMA).unwrap();
        let mut d = doc("first tank . second tank");
        d.add_mention(
            iri("hasNumber"),
            MentionKind::LiteralValue,
            vec![0],
            0.7,
            "t",
            Some(Literal::typed("1", crate::rdf::vocab::xsd_int())),
        );
        d.add_mention(iri("Tank"), MentionKind::Class, vec![1], 0.8, "t", None);
        d.add_mention(
            iri("hasNumber"),
            MentionKind::LiteralValue,
            vec![3],
            0.7,
            "t",
            Some(Literal::typed("2", crate::rdf::vocab::xsd_int())),
        );
        d.add_mention(iri("Tank"), MentionKind::Class, vec![4], 0.8, "t", None);
        d.advance(Stage::MentionsAdded);
        induce_edges(&mut d, &kg, 3).unwrap();
        choose_winners(&mut d, 0.05).unwrap();
        // tanks only relate through a unit, which nobody mentioned
        insert_hidden(&mut d, &kg).unwrap();
        assert!(d.identities.is_empty());
        assert_eq!(d.hidden.len(), 1);
        assert_eq!(d.hidden[0].reference, iri("Unit"));
    }

    #[test]
    fn disconnected_schema_is_an_error() {
        let kg = load_turtle(SCHEMA).unwrap();
        let mut d = doc("tank . zebra");
        d.add_mention(iri("Tank"), MentionKind::Class, vec![0], 0.8, "t", None);
        d.add_mention(iri("Zebra"), MentionKind::Class, vec![2], 0.8, "t", None);
        d.advance(Stage::MentionsAdded);
        induce_edges(&mut d, &kg, 3).unwrap();
        choose_winners(&mut d, 0.05).unwrap();
        assert!(matches!(
            insert_hidden(&mut d, &kg),
            Err(AssemblyError::Disconnected { .. })
        ));
    }

    #[test]
    fn equal_rivals_are_reported() {
        let kg = load_turtle(SCHEMA).unwrap();
        let mut d = doc("plant");
        d.add_mention(iri("Unit"), MentionKind::Class, vec![0], 0.8, "t", None);
        d.add_mention(iri("Flora"), MentionKind::Class, vec![0], 0.8, "t", None);
        d.advance(Stage::MentionsAdded);
        induce_edges(&mut d, &kg, 3).unwrap();
        let r = choose_winners(&mut d, 0.05).unwrap();
        assert_eq!(r.ambiguities.len(), 1);
        assert_eq!(d.surviving().count(), 1);
    }
}
