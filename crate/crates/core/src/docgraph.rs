//! The per-utterance document graph: tokens, mentions, hidden nodes and
//! resolved objects, plus the typed edges between them. Each pipeline stage
//! only adds to it; losing mentions are kept with a tombstone.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::AnalyzedText;
use crate::rdf::{Iri, Literal, TripleGraph};

/// Dense node identifier. Tokens occupy `0..token_count`; every later node
/// gets the next free id in creation order.
pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Analyzed,
    MentionsAdded,
    PredicatesAdded,
    Disambiguated,
    Resolved,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DocGraphError {
    #[error("operation needs stage {required:?} but the graph is at {actual:?}")]
    Stage { required: Stage, actual: Stage },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MentionKind {
    Class,
    Property,
    Individual,
    LiteralValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mention {
    pub id: NodeId,
    pub reference: Iri,
    pub kind: MentionKind,
    pub tokens: Vec<usize>,
    pub weight: f64,
    pub matcher: String,
    /// Normalized value for literal-value mentions.
    pub value: Option<Literal>,
    pub discarded: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    SchemaInduced,
    Hidden,
    Copied,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SemanticEdge {
    pub from: NodeId,
    pub to: NodeId,
    pub predicate: Iri,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HiddenNode {
    pub id: NodeId,
    pub reference: Iri,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolvedObject {
    pub id: NodeId,
    pub class: Iri,
    /// Set when the object denotes a known individual.
    pub individual: Option<Iri>,
    pub variable: String,
    pub constraints: Vec<(Iri, Literal)>,
    pub sources: Vec<NodeId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeRef {
    Token(usize),
    Mention(usize),
    Hidden(usize),
    Object(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentGraph {
    pub text: AnalyzedText,
    pub mentions: Vec<Mention>,
    pub hidden: Vec<HiddenNode>,
    pub objects: Vec<ResolvedObject>,
    /// Relations between mentions and hidden nodes.
    pub edges: Vec<SemanticEdge>,
    /// Relations copied onto objects. A target may also be a property
    /// mention, which then stands for the requested value.
    pub object_edges: Vec<SemanticEdge>,
    /// hasCoreference links between tokens.
    pub coreference: Vec<(NodeId, NodeId)>,
    /// Nodes of different fragments taken to denote the same individual.
    pub identities: Vec<(NodeId, NodeId)>,
    pub stage: Stage,
    next_id: NodeId,
}

impl DocumentGraph {
    pub fn new(text: AnalyzedText) -> Self {
        let coreference = text
            .clusters
            .iter()
            .flat_map(|c| c.members.windows(2).map(|w| (w[0], w[1])).collect::<Vec<_>>())
            .collect();
        let next_id = text.tokens.len();
        DocumentGraph {
            text,
            mentions: Vec::new(),
            hidden: Vec::new(),
            objects: Vec::new(),
            edges: Vec::new(),
            object_edges: Vec::new(),
            coreference,
            identities: Vec::new(),
            stage: Stage::Analyzed,
            next_id,
        }
    }

    pub fn require(&self, required: Stage) -> Result<(), DocGraphError> {
        if self.stage >= required {
            Ok(())
        } else {
            Err(DocGraphError::Stage {
                required,
                actual: self.stage,
            })
        }
    }

    pub fn advance(&mut self, stage: Stage) {
        debug_assert!(stage >= self.stage, "stages only move forward");
        self.stage = self.stage.max(stage);
    }

    fn fresh_id(&mut self) -> NodeId {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    pub fn add_mention(
        &mut self,
        reference: Iri,
        kind: MentionKind,
        tokens: Vec<usize>,
        weight: f64,
        matcher: &str,
        value: Option<Literal>,
    ) -> NodeId {
        debug_assert!(!tokens.is_empty() && weight > 0.0);
        let id = self.fresh_id();
        self.mentions.push(Mention {
            id,
            reference,
            kind,
            tokens,
            weight,
            matcher: matcher.to_string(),
            value,
            discarded: false,
        });
        id
    }

    pub fn add_hidden(&mut self, reference: Iri) -> NodeId {
        let id = self.fresh_id();
        self.hidden.push(HiddenNode { id, reference });
        id
    }

    pub fn add_object(&mut self, class: Iri, individual: Option<Iri>, variable: String) -> NodeId {
        let id = self.fresh_id();
        self.objects.push(ResolvedObject {
            id,
            class,
            individual,
            variable,
            constraints: Vec::new(),
            sources: Vec::new(),
        });
        id
    }

    pub fn add_edge(&mut self, from: NodeId, to: NodeId, predicate: Iri, provenance: Provenance) {
        let edge = SemanticEdge {
            from,
            to,
            predicate,
            provenance,
        };
        if !self
            .edges
            .iter()
            .any(|e| e.from == edge.from && e.to == edge.to && e.predicate == edge.predicate)
        {
            self.edges.push(edge);
        }
    }

    pub fn node(&self, id: NodeId) -> Option<NodeRef> {
        if id < self.text.tokens.len() {
            return Some(NodeRef::Token(id));
        }
        if let Ok(i) = self.mentions.binary_search_by_key(&id, |m| m.id) {
            return Some(NodeRef::Mention(i));
        }
        if let Ok(i) = self.hidden.binary_search_by_key(&id, |h| h.id) {
            return Some(NodeRef::Hidden(i));
        }
        self.objects
            .binary_search_by_key(&id, |o| o.id)
            .ok()
            .map(NodeRef::Object)
    }

    pub fn mention(&self, id: NodeId) -> Option<&Mention> {
        match self.node(id) {
            Some(NodeRef::Mention(i)) => Some(&self.mentions[i]),
            _ => None,
        }
    }

    pub fn mention_mut(&mut self, id: NodeId) -> Option<&mut Mention> {
        match self.node(id) {
            Some(NodeRef::Mention(i)) => Some(&mut self.mentions[i]),
            _ => None,
        }
    }

    pub fn object(&self, id: NodeId) -> Option<&ResolvedObject> {
        match self.node(id) {
            Some(NodeRef::Object(i)) => Some(&self.objects[i]),
            _ => None,
        }
    }

    pub fn object_mut(&mut self, id: NodeId) -> Option<&mut ResolvedObject> {
        match self.node(id) {
            Some(NodeRef::Object(i)) => Some(&mut self.objects[i]),
            _ => None,
        }
    }

    pub fn surviving(&self) -> impl Iterator<Item = &Mention> {
        self.mentions.iter().filter(|m| !m.discarded)
    }

    pub fn is_alive(&self, id: NodeId) -> bool {
        match self.node(id) {
            Some(NodeRef::Mention(i)) => !self.mentions[i].discarded,
            Some(_) => true,
            None => false,
        }
    }

    /// Semantic edges whose endpoints both survived disambiguation.
    pub fn live_edges(&self) -> impl Iterator<Item = &SemanticEdge> {
        self.edges
            .iter()
            .filter(|e| self.is_alive(e.from) && self.is_alive(e.to))
    }

    /// The object a mention or hidden node was folded into.
    pub fn object_of(&self, source: NodeId) -> Option<&ResolvedObject> {
        self.objects.iter().find(|o| o.sources.contains(&source))
    }

    /// Pairs of surviving mentions whose tokens corefer.
    pub fn coreferent_mentions(&self) -> Vec<(NodeId, NodeId)> {
        let alive: Vec<&Mention> = self.surviving().collect();
        let mut out = Vec::new();
        for (i, a) in alive.iter().enumerate() {
            for b in &alive[i + 1..] {
                let linked = a.tokens.iter().any(|&ta| {
                    b.tokens.iter().any(|&tb| {
                        matches!((self.text.cluster_of(ta), self.text.cluster_of(tb)), (Some(x), Some(y)) if x == y)
                    })
                });
                if linked {
                    out.push((a.id, b.id));
                }
            }
        }
        out
    }
}

/// The mention/relation subgraph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProjectionA {
    pub nodes: Vec<NodeId>,
    pub edges: Vec<(NodeId, NodeId)>,
}

impl ProjectionA {
    pub fn degree(&self, node: NodeId) -> usize {
        self.edges.iter().filter(|(a, b)| *a == node || *b == node).count()
    }
}

pub fn project_a(d: &DocumentGraph) -> Result<ProjectionA, DocGraphError> {
    d.require(Stage::PredicatesAdded)?;
    let nodes: Vec<NodeId> = d.mentions.iter().map(|m| m.id).collect();
    let ids: BTreeSet<NodeId> = nodes.iter().copied().collect();
    let edges = d
        .edges
        .iter()
        .filter(|e| ids.contains(&e.from) && ids.contains(&e.to))
        .map(|e| (e.from, e.to))
        .collect();
    Ok(ProjectionA { nodes, edges })
}

/// The bipartite token/mention subgraph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProjectionB {
    pub tokens: Vec<NodeId>,
    pub mentions: Vec<NodeId>,
    /// hasToken edges (mention, token).
    pub edges: Vec<(NodeId, NodeId)>,
}

pub fn project_b(d: &DocumentGraph) -> Result<ProjectionB, DocGraphError> {
    d.require(Stage::MentionsAdded)?;
    Ok(ProjectionB {
        tokens: (0..d.text.tokens.len()).collect(),
        mentions: d.mentions.iter().map(|m| m.id).collect(),
        edges: d
            .mentions
            .iter()
            .flat_map(|m| m.tokens.iter().map(move |&t| (m.id, t)))
            .collect(),
    })
}

/// Components of the semantic layer: surviving mentions and hidden nodes,
/// joined by live semantic edges, coreference and identity links.
pub fn weakly_connected_components(d: &DocumentGraph) -> Vec<BTreeSet<NodeId>> {
    let nodes: Vec<NodeId> = d
        .surviving()
        .map(|m| m.id)
        .chain(d.hidden.iter().map(|h| h.id))
        .collect();
    let index: BTreeMap<NodeId, usize> = nodes.iter().enumerate().map(|(i, &n)| (n, i)).collect();
    let mut parent: Vec<usize> = (0..nodes.len()).collect();
    fn find(parent: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while parent[r] != r {
            r = parent[r];
        }
        let mut c = x;
        while parent[c] != r {
            let next = parent[c];
            parent[c] = r;
            c = next;
        }
        r
    }
    let links = d
        .live_edges()
        .map(|e| (e.from, e.to))
        .chain(d.coreferent_mentions())
        .chain(d.identities.iter().copied())
        .collect::<Vec<_>>();
    for (a, b) in links {
        if let (Some(&ia), Some(&ib)) = (index.get(&a), index.get(&b)) {
            let (ra, rb) = (find(&mut parent, ia), find(&mut parent, ib));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
    }
    let mut groups: BTreeMap<usize, BTreeSet<NodeId>> = BTreeMap::new();
    for (i, &n) in nodes.iter().enumerate() {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().insert(n);
    }
    let mut out: Vec<BTreeSet<NodeId>> = groups.into_values().collect();
    out.sort_by_key(|c| *c.first().expect("components are non-empty"));
    out
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Graphviz rendering. Node ids are `n<id>`; shapes and colours follow the
/// node kind, edge labels carry the relation or predicate name.
pub fn to_dot(d: &DocumentGraph, kg: &TripleGraph) -> String {
    let name = |iri: &Iri| kg.compact(iri);
    let mut out = String::from("digraph D {\n  rankdir=LR;\n");
    for t in &d.text.tokens {
        let _ = writeln!(
            out,
            "  n{} [label=\"{}\", shape=box, color=gray40];",
            t.index,
            dot_escape(&t.text)
        );
    }
    for m in &d.mentions {
        let mut label = format!("Mention\\n{}", dot_escape(&name(&m.reference)));
        if let Some(v) = &m.value {
            let _ = write!(label, "\\n\\\"{}\\\"", dot_escape(&v.lexical));
        }
        let _ = write!(label, "\\n{:.2}", m.weight);
        let style = if m.discarded { ", style=dashed" } else { "" };
        let _ = writeln!(
            out,
            "  n{} [label=\"{label}\", shape=ellipse, color=blue{style}];",
            m.id
        );
    }
    for h in &d.hidden {
        let _ = writeln!(
            out,
            "  n{} [label=\"Hidden\\n{}\", shape=diamond, color=orange];",
            h.id,
            dot_escape(&name(&h.reference))
        );
    }
    for o in &d.objects {
        let who = o
            .individual
            .as_ref()
            .map(name)
            .unwrap_or_else(|| format!("?{}", o.variable));
        let _ = writeln!(
            out,
            "  n{} [label=\"Object\\n{}\\n{}\", shape=doubleoctagon, color=darkgreen];",
            o.id,
            dot_escape(&name(&o.class)),
            dot_escape(&who)
        );
    }
    for e in &d.text.edges {
        let _ = writeln!(
            out,
            "  n{} -> n{} [label=\"{}\", color=gray40];",
            e.head,
            e.dependent,
            dot_escape(&e.relation)
        );
    }
    for m in &d.mentions {
        for t in &m.tokens {
            let _ = writeln!(out, "  n{} -> n{t} [label=\"hasToken\", style=dotted];", m.id);
        }
    }
    for (a, b) in &d.identities {
        let _ = writeln!(out, "  n{a} -> n{b} [label=\"sameAs\", style=dashed, color=red];");
    }
    for (a, b) in &d.coreference {
        let _ = writeln!(
            out,
            "  n{a} -> n{b} [label=\"hasCoreference\", style=dashed, color=red];"
        );
    }
    for e in d.edges.iter().chain(&d.object_edges) {
        let _ = writeln!(
            out,
            "  n{} -> n{} [label=\"{}\", color=darkgreen];",
            e.from,
            e.to,
            dot_escape(&name(&e.predicate))
        );
    }
    for o in &d.objects {
        for s in &o.sources {
            let _ = writeln!(
                out,
                "  n{} -> n{s} [label=\"denotes\", style=dotted, color=darkgreen];",
                o.id
            );
        }
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{Analyzer, RuleAnalyzer};
    use crate::lexicon::Lexicon;

    fn graph(text: &str) -> DocumentGraph {
        DocumentGraph::new(RuleAnalyzer::default().analyze(text, &Lexicon::default()).unwrap())
    }

    fn iri(s: &str) -> Iri {
        Iri::new(format!("http://ex.org/#{s}"))
    }

    #[test]
    fn projections_require_stage() {
        let d = graph("a b");
        assert!(matches!(project_a(&d), Err(DocGraphError::Stage { .. })));
        assert!(matches!(project_b(&d), Err(DocGraphError::Stage { .. })));
    }

    #[test]
    fn degrees_and_components() {
        let mut d = graph("a b");
        let a = d.add_mention(iri("A"), MentionKind::Class, vec![0], 0.5, "t", None);
        let b = d.add_mention(iri("B"), MentionKind::Class, vec![1], 0.5, "t", None);
        d.advance(Stage::PredicatesAdded);
        let pa = project_a(&d).unwrap();
        assert_eq!((pa.degree(a), pa.degree(b)), (0, 0));
        assert_eq!(weakly_connected_components(&d).len(), 2);

        d.add_edge(a, b, iri("p"), Provenance::SchemaInduced);
        let pa = project_a(&d).unwrap();
        assert_eq!((pa.degree(a), pa.degree(b)), (1, 1));
        assert_eq!(weakly_connected_components(&d), vec![BTreeSet::from([a, b])]);

        let pb = project_b(&d).unwrap();
        assert_eq!(pb.edges, vec![(a, 0), (b, 1)]);
    }

    #[test]
    fn node_lookup_by_kind() {
        let mut d = graph("x");
        let m = d.add_mention(iri("A"), MentionKind::Class, vec![0], 1.0, "t", None);
        let h = d.add_hidden(iri("H"));
        let o = d.add_object(iri("A"), None, "a".into());
        assert_eq!(d.node(0), Some(NodeRef::Token(0)));
        assert_eq!(d.node(m), Some(NodeRef::Mention(0)));
        assert_eq!(d.node(h), Some(NodeRef::Hidden(0)));
        assert_eq!(d.node(o), Some(NodeRef::Object(0)));
        assert_eq!(d.node(o + 1), None);
    }

    #[test]
    fn dot_of_token_only_graph() {
        let d = graph("Tank.");
        let dot = to_dot(&d, &TripleGraph::new());
        assert!(dot.starts_with("digraph D {"));
        assert!(dot.contains("n0 [label=\"Tank\""));
        assert!(!dot.contains("Mention"));
        assert_eq!(dot, to_dot(&d, &TripleGraph::new()));
    }
}
