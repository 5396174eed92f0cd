//! Query compilation: decide between SELECT, ASK and INSERT, turn the
//! resolved objects and their relations into triple patterns, print SPARQL,
//! execute against the store and render answer cards with their proof.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use uuid::Uuid;

use crate::docgraph::{DocGraphError, DocumentGraph, MentionKind, NodeId, NodeRef, Stage};
use crate::rdf::{match_bgp, vocab, Iri, PatternTerm, Solution, Term, Triple, TripleGraph, TriplePattern};
use crate::templates::Templates;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CompileError {
    #[error(transparent)]
    Stage(#[from] DocGraphError),
    #[error("nothing in the text could be turned into a query")]
    EmptyPlan,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QueryKind {
    Select,
    Ask,
    Insert,
}

/// What the user wants back.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum AnswerTarget {
    Object {
        object: NodeId,
    },
    /// A requested property value of an object; `mention` is the property
    /// mention standing for the value.
    Value {
        subject: NodeId,
        property: Iri,
        mention: NodeId,
    },
    None,
}

/// Object edges that point at a property mention, i.e. ask for a value,
/// unless the same relation already links the subject to an object.
pub fn value_requests(d: &DocumentGraph) -> Vec<(NodeId, Iri, NodeId)> {
    d.object_edges
        .iter()
        .filter(|e| matches!(d.node(e.to), Some(NodeRef::Mention(_))))
        .filter(|e| {
            !d.object_edges
                .iter()
                .any(|o| o.from == e.from && o.predicate == e.predicate && d.object(o.to).is_some())
        })
        .map(|e| (e.from, e.predicate.clone(), e.to))
        .collect()
}

/// A SELECT target asked for in one turn: a requested value, else the
/// object linked to the wh-word.
fn select_target(d: &DocumentGraph, turn: usize) -> Option<AnswerTarget> {
    let current: Vec<usize> = d
        .text
        .tokens
        .iter()
        .filter(|t| t.turn == turn)
        .map(|t| t.index)
        .collect();
    let request = value_requests(d).into_iter().find(|(_, _, m)| {
        d.mention(*m)
            .is_some_and(|m| m.tokens.iter().any(|t| current.contains(t)))
    });
    if let Some((subject, property, mention)) = request {
        return Some(AnswerTarget::Value {
            subject,
            property,
            mention,
        });
    }
    let w = current
        .iter()
        .copied()
        .find(|&i| d.text.tokens[i].features.is_question_word)?;
    let containing = d.objects.iter().find(|o| {
        o.sources
            .iter()
            .any(|&s| d.mention(s).is_some_and(|m| m.tokens.contains(&w)))
    });
    let target = containing.or_else(|| {
        let dist = d.text.distances_from(&[w]);
        d.objects
            .iter()
            .filter_map(|o| {
                o.sources
                    .iter()
                    .filter_map(|&s| d.mention(s))
                    .flat_map(|m| m.tokens.iter().filter_map(|&t| dist[t]))
                    .min()
                    .map(|k| (k, o.id))
            })
            .min()
            .and_then(|(_, id)| d.object(id))
    });
    let target = target.or_else(|| d.objects.first());
    Some(target.map_or(AnswerTarget::None, |o| AnswerTarget::Object { object: o.id }))
}

/// Picks the statement kind and the answer target. The last turn decides;
/// when it neither asks for a value nor has a wh-word, the latest earlier
/// turn that does supplies the question. Otherwise a question mark makes
/// an ASK and anything else is a statement to insert.
pub fn classify(d: &DocumentGraph) -> Result<(QueryKind, AnswerTarget), CompileError> {
    d.require(Stage::Resolved)?;
    let last = d.text.last_turn();
    for turn in (0..=last).rev() {
        if let Some(target) = select_target(d, turn) {
            return Ok((QueryKind::Select, target));
        }
    }
    let question = d.text.tokens.iter().any(|t| t.turn == last && t.text == "?");
    if question {
        return Ok((QueryKind::Ask, AnswerTarget::None));
    }
    Ok((QueryKind::Insert, AnswerTarget::None))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryPlan {
    pub kind: QueryKind,
    pub patterns: Vec<TriplePattern>,
    /// Projected variables; empty means `SELECT *`.
    pub targets: Vec<String>,
    pub insert: Vec<Triple>,
    /// Term each object compiles to.
    pub object_terms: BTreeMap<NodeId, PatternTerm>,
    pub target: AnswerTarget,
    /// Variable holding the requested value, if any.
    pub value_variable: Option<String>,
}

impl QueryPlan {
    /// Term standing for the entity a card is about.
    pub fn subject_term(&self) -> Option<&PatternTerm> {
        match &self.target {
            AnswerTarget::Object { object } => self.object_terms.get(object),
            AnswerTarget::Value { subject, .. } => self.object_terms.get(subject),
            AnswerTarget::None => None,
        }
    }
}

/// Namespace for minted individual identifiers.
const MINT_NAMESPACE: Uuid = Uuid::from_u128(0x6f6e_746f_7175_6572_795f_6d69_6e74_0001);

fn minted_iri(base: &str, key: &str) -> Iri {
    Iri::new(format!("{base}{}", Uuid::new_v5(&MINT_NAMESPACE, key.as_bytes())))
}

/// Compiles the resolved graph. Bound objects appear as IRIs; the others
/// become variables with a type pattern and their literal constraints.
/// INSERT plans mint identifiers under `mint_base` for unbound objects.
pub fn compile(
    d: &DocumentGraph,
    kind: QueryKind,
    target: AnswerTarget,
    templates: &Templates,
    mint_base: &str,
) -> Result<QueryPlan, CompileError> {
    d.require(Stage::Resolved)?;
    let mut object_terms = BTreeMap::new();
    let mut used: BTreeSet<String> = d.objects.iter().map(|o| o.variable.clone()).collect();

    if kind == QueryKind::Insert {
        let mut minted_keys: BTreeMap<String, usize> = BTreeMap::new();
        for o in &d.objects {
            let term = match &o.individual {
                Some(iri) => iri.clone(),
                None => {
                    let mut key = o.class.as_str().to_string();
                    let mut facts: Vec<String> = o.constraints.iter().map(|(p, v)| format!("{p}={v}")).collect();
                    for e in d.object_edges.iter().filter(|e| e.from == o.id) {
                        if let Some(iri) = d.object(e.to).and_then(|t| t.individual.as_ref()) {
                            facts.push(format!("{}->{iri}", e.predicate));
                        }
                    }
                    facts.sort();
                    for f in facts {
                        key.push('|');
                        key.push_str(&f);
                    }
                    let n = minted_keys.entry(key.clone()).or_insert(0);
                    *n += 1;
                    if *n > 1 {
                        let _ = write!(key, "#{n}");
                    }
                    minted_iri(mint_base, &key)
                }
            };
            object_terms.insert(o.id, PatternTerm::iri(term));
        }
        let mut insert = Vec::new();
        let mut push = |t: Triple| {
            if !insert.contains(&t) {
                insert.push(t);
            }
        };
        for o in &d.objects {
            let subject = object_terms[&o.id].clone();
            let PatternTerm::Term(Term::Iri(s)) = subject else {
                unreachable!("insert terms are IRIs")
            };
            if o.individual.is_none() {
                push(Triple::new(s.clone(), vocab::rdf_type(), o.class.clone()));
                for (p, v) in &o.constraints {
                    push(Triple::new(s.clone(), p.clone(), v.clone()));
                }
            }
            for e in d.object_edges.iter().filter(|e| e.from == o.id) {
                if let Some(PatternTerm::Term(Term::Iri(obj))) = object_terms.get(&e.to) {
                    push(Triple::new(s.clone(), e.predicate.clone(), obj.clone()));
                }
            }
        }
        if insert.is_empty() {
            return Err(CompileError::EmptyPlan);
        }
        return Ok(QueryPlan {
            kind,
            patterns: Vec::new(),
            targets: Vec::new(),
            insert,
            object_terms,
            target,
            value_variable: None,
        });
    }

    for o in &d.objects {
        let term = match &o.individual {
            Some(iri) => PatternTerm::iri(iri.clone()),
            None => PatternTerm::var(o.variable.clone()),
        };
        object_terms.insert(o.id, term);
    }
    let requests = value_requests(d);
    let mut value_vars: BTreeMap<NodeId, String> = BTreeMap::new();
    let mut patterns = Vec::new();
    for o in &d.objects {
        let s = object_terms[&o.id].clone();
        if o.individual.is_none() {
            patterns.push(TriplePattern::new(
                s.clone(),
                PatternTerm::iri(vocab::rdf_type()),
                PatternTerm::iri(o.class.clone()),
            ));
            for (p, v) in &o.constraints {
                patterns.push(TriplePattern::new(
                    s.clone(),
                    PatternTerm::iri(p.clone()),
                    PatternTerm::Term(v.clone().into()),
                ));
            }
        }
        let mut outgoing: Vec<_> = d.object_edges.iter().filter(|e| e.from == o.id).collect();
        outgoing.sort_by_key(|e| (d.object(e.to).is_none(), e.to, e.predicate.clone()));
        for e in outgoing {
            let object = if let Some(t) = object_terms.get(&e.to) {
                t.clone()
            } else if requests
                .iter()
                .any(|(f, p, m)| *f == e.from && *p == e.predicate && *m == e.to)
            {
                let name = value_vars.entry(e.to).or_insert_with(|| {
                    let base = templates.variables.base_for(&e.predicate);
                    let mut name = base.clone();
                    let mut n = 1;
                    while used.contains(&name) {
                        n += 1;
                        name = format!("{base}{n}");
                    }
                    used.insert(name.clone());
                    name
                });
                PatternTerm::var(name.clone())
            } else {
                continue;
            };
            patterns.push(TriplePattern::new(
                s.clone(),
                PatternTerm::iri(e.predicate.clone()),
                object,
            ));
        }
    }

    let subject_bound = match &target {
        AnswerTarget::Object { object } | AnswerTarget::Value { subject: object, .. } => {
            d.object(*object).is_some_and(|o| o.individual.is_some())
        }
        AnswerTarget::None => false,
    };
    if patterns.is_empty() && !subject_bound {
        return Err(CompileError::EmptyPlan);
    }

    let mut targets = Vec::new();
    let mut value_variable = None;
    if let AnswerTarget::Value { subject, mention, .. } = &target {
        if let Some(PatternTerm::Var(v)) = object_terms.get(subject) {
            targets.push(v.clone());
        }
        if let Some(v) = value_vars.get(mention) {
            targets.push(v.clone());
            value_variable = Some(v.clone());
        }
    }
    Ok(QueryPlan {
        kind,
        patterns,
        targets,
        insert: Vec::new(),
        object_terms,
        target,
        value_variable,
    })
}

fn pattern_term(kg: &TripleGraph, t: &PatternTerm) -> String {
    match t {
        PatternTerm::Var(v) => format!("?{v}"),
        PatternTerm::Term(term) => kg.compact_term(term),
    }
}

fn used_prefixes(rendered: &str, kg: &TripleGraph) -> Vec<(String, String)> {
    kg.prefixes()
        .iter()
        .filter(|(p, _)| {
            let needle = format!("{p}:");
            rendered.match_indices(&needle).any(|(i, _)| {
                i == 0 || !rendered[..i].ends_with(|c: char| c.is_alphanumeric() || c == '_' || c == '-' || c == '.')
            })
        })
        .map(|(p, ns)| (p.clone(), ns.clone()))
        .collect()
}

/// SPARQL text with sorted prefix declarations for the names it uses.
pub fn to_sparql(plan: &QueryPlan, kg: &TripleGraph) -> String {
    let mut body = String::new();
    match plan.kind {
        QueryKind::Select | QueryKind::Ask => {
            if plan.kind == QueryKind::Select {
                if plan.targets.is_empty() {
                    body.push_str("SELECT * WHERE {\n");
                } else {
                    let vars: Vec<String> = plan.targets.iter().map(|v| format!("?{v}")).collect();
                    let _ = writeln!(body, "SELECT {} WHERE {{", vars.join(" "));
                }
            } else {
                body.push_str("ASK {\n");
            }
            for p in &plan.patterns {
                let _ = writeln!(
                    body,
                    "  {} {} {} .",
                    pattern_term(kg, &p.subject),
                    pattern_term(kg, &p.predicate),
                    pattern_term(kg, &p.object)
                );
            }
        }
        QueryKind::Insert => {
            body.push_str("INSERT DATA {\n");
            for t in &plan.insert {
                let _ = writeln!(
                    body,
                    "  {} {} {} .",
                    kg.compact(&t.subject),
                    kg.compact(&t.predicate),
                    kg.compact_term(&t.object)
                );
            }
        }
    }
    body.push_str("}\n");
    let mut out = String::new();
    for (p, ns) in used_prefixes(&body, kg) {
        let _ = writeln!(out, "PREFIX {p}: <{ns}>");
    }
    out.push_str(&body);
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Card {
    pub title: String,
    pub lines: Vec<String>,
}

impl Card {
    pub fn text(&self) -> String {
        std::iter::once(self.title.as_str())
            .chain(self.lines.iter().map(String::as_str))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProofStep {
    pub solution: usize,
    pub pattern: String,
    pub triple: Triple,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Answer {
    pub kind: QueryKind,
    pub cards: Vec<Card>,
    pub sparql: String,
    pub proof: Vec<ProofStep>,
    pub solutions: Vec<Solution>,
    pub ask_result: Option<bool>,
    pub inserted: usize,
}

impl Answer {
    pub fn row_count(&self) -> usize {
        match self.kind {
            QueryKind::Select => self.solutions.len(),
            _ => self.cards.len(),
        }
    }
}

fn proof_of(plan: &QueryPlan, solutions: &[Solution], kg: &TripleGraph) -> Vec<ProofStep> {
    let mut out = Vec::new();
    for (i, s) in solutions.iter().enumerate() {
        for p in &plan.patterns {
            if let Some(triple) = p.ground(s) {
                out.push(ProofStep {
                    solution: i,
                    pattern: format!(
                        "{} {} {}",
                        pattern_term(kg, &p.subject),
                        pattern_term(kg, &p.predicate),
                        pattern_term(kg, &p.object)
                    ),
                    triple,
                });
            }
        }
    }
    out
}

fn resolve(term: &PatternTerm, s: &Solution) -> Option<Term> {
    match term {
        PatternTerm::Var(v) => s.get(v).cloned(),
        PatternTerm::Term(t) => Some(t.clone()),
    }
}

fn render_card(plan: &QueryPlan, d: &DocumentGraph, s: &Solution, kg: &TripleGraph, templates: &Templates) -> Card {
    let subject_term = plan.subject_term();
    let Some(subject) = subject_term.and_then(|t| resolve(t, s)) else {
        let title = s.values().map(|t| kg.display_name(t)).collect::<Vec<_>>().join(", ");
        return Card {
            title,
            lines: Vec::new(),
        };
    };
    let class = match &plan.target {
        AnswerTarget::Object { object } | AnswerTarget::Value { subject: object, .. } => {
            d.object(*object).map(|o| o.class.clone())
        }
        AnswerTarget::None => None,
    };
    let mut lines = Vec::new();
    if let Some(c) = class {
        lines.push(format!("class: {}", kg.display_name(&c.into())));
    }
    for p in &plan.patterns {
        if Some(&p.subject) != subject_term {
            continue;
        }
        let Some(Term::Iri(pred)) = resolve(&p.predicate, s) else {
            continue;
        };
        if pred == vocab::rdf_type() {
            continue;
        }
        if let Some(obj) = resolve(&p.object, s) {
            lines.push(templates.relation_line(kg, &pred, &kg.display_name(&obj)));
        }
    }
    Card {
        title: kg.display_name(&subject),
        lines,
    }
}

/// Runs a SELECT or ASK plan on a snapshot and renders one card per row.
pub fn execute_query(plan: &QueryPlan, d: &DocumentGraph, kg: &TripleGraph, templates: &Templates) -> Answer {
    let sparql = to_sparql(plan, kg);
    let solutions = match_bgp(kg, &plan.patterns);
    let proof = proof_of(plan, &solutions, kg);
    match plan.kind {
        QueryKind::Ask => {
            let yes = !solutions.is_empty();
            let first_proof: Vec<ProofStep> = proof.into_iter().filter(|p| p.solution == 0).collect();
            let lines = first_proof.iter().map(|p| kg.compact_triple(&p.triple)).collect();
            Answer {
                kind: plan.kind,
                cards: vec![Card {
                    title: if yes { "yes".into() } else { "no".into() },
                    lines,
                }],
                sparql,
                proof: first_proof,
                solutions,
                ask_result: Some(yes),
                inserted: 0,
            }
        }
        _ => Answer {
            kind: plan.kind,
            cards: solutions
                .iter()
                .map(|s| render_card(plan, d, s, kg, templates))
                .collect(),
            sparql,
            proof,
            solutions,
            ask_result: None,
            inserted: 0,
        },
    }
}

/// Applies an INSERT plan under the writer and reports what was new.
pub fn execute_insert(plan: &QueryPlan, kg: &mut TripleGraph) -> Answer {
    let sparql = to_sparql(plan, kg);
    let inserted = kg.apply_insert(plan.insert.clone());
    let lines = plan.insert.iter().map(|t| kg.compact_triple(t)).collect();
    Answer {
        kind: plan.kind,
        cards: vec![Card {
            title: format!("Added {inserted} new triples of {}", plan.insert.len()),
            lines,
        }],
        sparql,
        proof: Vec::new(),
        solutions: Vec::new(),
        ask_result: None,
        inserted,
    }
}

/// Whether any surviving mention supports the plan at all.
pub fn has_content(d: &DocumentGraph) -> bool {
    d.surviving().any(|m| m.kind != MentionKind::Property) || !d.hidden.is_empty()
}
