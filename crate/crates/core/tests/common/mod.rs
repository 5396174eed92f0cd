//! Random instance generators and brute-force reference implementations
//! shared by the property tests and the acceptance run.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use ontoquery::analysis::{AnalyzedText, SyntacticEdge, Token, TokenFeatures};
use ontoquery::docgraph::{DocumentGraph, MentionKind, Provenance, Stage};
use ontoquery::lexicon::PartOfSpeech;
use ontoquery::rdf::{vocab, Iri, Literal, PatternTerm, Solution, Term, Triple, TripleGraph, TriplePattern};
use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;
pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn ex(local: &str) -> Iri {
    Iri::new(format!("http://ex.org/#{local}"))
}

/// A token sequence with the given syntactic edges and no lexicon.
pub fn synthetic_text(n: usize, edges: &[(usize, usize)]) -> AnalyzedText {
    let tokens = (0..n)
        .map(|i| Token {
            index: i,
            sentence: 0,
            turn: 0,
            text: format!("w{i}"),
            lemma: format!("w{i}"),
            pos: PartOfSpeech::Noun,
            features: TokenFeatures::default(),
        })
        .collect();
    AnalyzedText {
        source: (0..n).map(|i| format!("w{i}")).collect::<Vec<_>>().join(" "),
        tokens,
        edges: edges
            .iter()
            .map(|&(a, b)| SyntacticEdge {
                head: a,
                dependent: b,
                relation: "adjacent".into(),
            })
            .collect(),
        clusters: Vec::new(),
    }
}

// ---------------------------------------------------------------- covers

#[derive(Debug, Clone)]
pub struct CoverInstance {
    pub tokens: usize,
    pub mentions: Vec<(Vec<usize>, f64)>,
    /// Relations between mentions, by index.
    pub relations: Vec<(usize, usize)>,
}

pub fn random_cover(rng: &mut TestRng, max_tokens: usize, max_mentions: usize) -> CoverInstance {
    let tokens = rng.random_range(1..=max_tokens);
    let count = rng.random_range(0..=max_mentions);
    let mut mentions = Vec::new();
    for _ in 0..count {
        let len = rng.random_range(1..=tokens.min(3));
        let start = rng.random_range(0..=tokens - len);
        let mut span: Vec<usize> = (start..start + len).collect();
        if len == 3 && rng.random_bool(0.3) {
            span.remove(1);
        }
        // coarse weights make exact ties common
        let weight = *[0.3, 0.5, 0.6, 0.8, 0.9, 1.0].choose(rng).unwrap();
        mentions.push((span, weight));
    }
    let mut relations = Vec::new();
    if count > 1 {
        for _ in 0..rng.random_range(0..count) {
            let a = rng.random_range(0..count);
            let b = rng.random_range(0..count);
            if a != b {
                relations.push((a, b));
            }
        }
    }
    CoverInstance {
        tokens,
        mentions,
        relations,
    }
}

/// The instance as a document graph ready for winner selection.
pub fn cover_document(inst: &CoverInstance, weight_scale: f64) -> DocumentGraph {
    let mut d = DocumentGraph::new(synthetic_text(inst.tokens, &[]));
    let ids: Vec<usize> = inst
        .mentions
        .iter()
        .enumerate()
        .map(|(i, (span, w))| {
            d.add_mention(
                ex(&format!("C{i}")),
                MentionKind::Class,
                span.clone(),
                w * weight_scale,
                "test",
                None,
            )
        })
        .collect();
    d.advance(Stage::MentionsAdded);
    for &(a, b) in &inst.relations {
        d.add_edge(ids[a], ids[b], ex("rel"), Provenance::SchemaInduced);
    }
    d.advance(Stage::PredicatesAdded);
    d
}

fn degrees(inst: &CoverInstance) -> Vec<usize> {
    let mut pairs = BTreeSet::new();
    for &(a, b) in &inst.relations {
        pairs.insert((a, b));
    }
    let mut deg = vec![0; inst.mentions.len()];
    for (a, b) in pairs {
        deg[a] += 1;
        deg[b] += 1;
    }
    deg
}

/// Real-valued cost of a selection: every chosen token costs 1/w'.
pub fn cover_cost(inst: &CoverInstance, chosen: &[usize]) -> f64 {
    let deg = degrees(inst);
    chosen
        .iter()
        .map(|&i| {
            let (span, w) = &inst.mentions[i];
            span.len() as f64 / (w * (1.0 + deg[i] as f64))
        })
        .sum()
}

pub fn is_disjoint(inst: &CoverInstance, chosen: &[usize]) -> bool {
    let mut seen = BTreeSet::new();
    chosen
        .iter()
        .all(|&i| inst.mentions[i].0.iter().all(|t| seen.insert(*t)))
}

pub fn covered(inst: &CoverInstance, chosen: &[usize]) -> usize {
    chosen.iter().map(|&i| inst.mentions[i].0.len()).sum()
}

/// Exhaustive search: most tokens covered, then least cost.
pub fn cover_oracle(inst: &CoverInstance) -> (usize, f64) {
    let m = inst.mentions.len();
    let mut best = (0usize, 0.0f64);
    for mask in 0u32..(1 << m) {
        let chosen: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
        if !is_disjoint(inst, &chosen) {
            continue;
        }
        let c = covered(inst, &chosen);
        let cost = cover_cost(inst, &chosen);
        if c > best.0 || (c == best.0 && cost < best.1) {
            best = (c, cost);
        }
    }
    best
}

// ------------------------------------------------------------- schemas

#[derive(Debug, Clone)]
pub struct SchemaInstance {
    pub classes: Vec<Iri>,
    /// (property, domain index, range index)
    pub properties: Vec<(Iri, usize, usize)>,
}

pub fn random_schema(rng: &mut TestRng, max_classes: usize) -> SchemaInstance {
    let n = rng.random_range(2..=max_classes);
    let classes: Vec<Iri> = (0..n).map(|i| ex(&format!("K{i}"))).collect();
    let count = rng.random_range(0..=n + 3);
    let properties = (0..count)
        .map(|k| (ex(&format!("p{k}")), rng.random_range(0..n), rng.random_range(0..n)))
        .collect();
    SchemaInstance { classes, properties }
}

pub fn schema_graph(s: &SchemaInstance) -> TripleGraph {
    let mut g = TripleGraph::new();
    for c in &s.classes {
        g.insert(Triple::new(c.clone(), vocab::rdf_type(), vocab::owl_class()));
    }
    for (p, d, r) in &s.properties {
        g.insert(Triple::new(p.clone(), vocab::rdf_type(), vocab::owl_object_property()));
        g.insert(Triple::new(p.clone(), vocab::rdfs_domain(), s.classes[*d].clone()));
        g.insert(Triple::new(p.clone(), vocab::rdfs_range(), s.classes[*r].clone()));
    }
    g
}

fn linked_within(s: &SchemaInstance, allowed: &BTreeSet<usize>, a: usize, b: usize) -> bool {
    // union-find over the induced subgraph
    let n = s.classes.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(p: &mut [usize], x: usize) -> usize {
        if p[x] == x {
            x
        } else {
            let r = root(p, p[x]);
            p[x] = r;
            r
        }
    }
    for &(_, d, r) in &s.properties {
        if allowed.contains(&d) && allowed.contains(&r) {
            let (x, y) = (root(&mut parent, d), root(&mut parent, r));
            parent[x] = y;
        }
    }
    root(&mut parent, a) == root(&mut parent, b)
}

/// Fewest intermediate classes joining `a` and `b`: the smallest class set
/// whose induced subgraph links them.
pub fn connector_oracle(s: &SchemaInstance, a: usize, b: usize) -> Option<usize> {
    let others: Vec<usize> = (0..s.classes.len()).filter(|&c| c != a && c != b).collect();
    let mut best: Option<usize> = None;
    for mask in 0u32..(1 << others.len()) {
        let size = mask.count_ones() as usize;
        if best.is_some_and(|b| size >= b) {
            continue;
        }
        let mut allowed: BTreeSet<usize> = BTreeSet::from([a, b]);
        allowed.extend(
            others
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, &c)| c),
        );
        if linked_within(s, &allowed, a, b) {
            best = Some(size);
        }
    }
    best
}

/// Two class mentions in separate fragments, ready for hidden-node insertion.
pub fn two_fragment_document(a: &Iri, b: &Iri) -> DocumentGraph {
    let mut d = DocumentGraph::new(synthetic_text(3, &[]));
    d.add_mention(a.clone(), MentionKind::Class, vec![0], 0.8, "test", None);
    d.add_mention(b.clone(), MentionKind::Class, vec![2], 0.8, "test", None);
    d.advance(Stage::MentionsAdded);
    d.advance(Stage::PredicatesAdded);
    d.advance(Stage::Disambiguated);
    d
}

// ------------------------------------------------------------------ BGP

pub fn random_graph(rng: &mut TestRng, max_triples: usize) -> TripleGraph {
    let mut g = TripleGraph::new();
    let n = rng.random_range(0..=max_triples);
    for _ in 0..n {
        let s = ex(&format!("s{}", rng.random_range(0..6)));
        let p = ex(&format!("p{}", rng.random_range(0..3)));
        let o: Term = if rng.random_bool(0.7) {
            ex(&format!("s{}", rng.random_range(0..6))).into()
        } else {
            Literal::integer(rng.random_range(0..3)).into()
        };
        g.insert(Triple::new(s, p, o));
    }
    g
}

fn random_position(rng: &mut TestRng, kind: usize) -> PatternTerm {
    if rng.random_bool(0.6) {
        return PatternTerm::var(*["a", "b", "c"].choose(rng).unwrap());
    }
    match kind {
        1 => PatternTerm::iri(ex(&format!("p{}", rng.random_range(0..3)))),
        2 if rng.random_bool(0.3) => PatternTerm::Term(Literal::integer(rng.random_range(0..3)).into()),
        _ => PatternTerm::iri(ex(&format!("s{}", rng.random_range(0..6)))),
    }
}

pub fn random_patterns(rng: &mut TestRng, max_patterns: usize) -> Vec<TriplePattern> {
    (0..rng.random_range(1..=max_patterns))
        .map(|_| {
            TriplePattern::new(
                random_position(rng, 0),
                random_position(rng, 1),
                random_position(rng, 2),
            )
        })
        .collect()
}

fn unify(term: &PatternTerm, value: &Term, s: &mut Solution) -> bool {
    match term {
        PatternTerm::Term(t) => t == value,
        PatternTerm::Var(v) => match s.get(v) {
            Some(bound) => bound == value,
            None => {
                s.insert(v.clone(), value.clone());
                true
            }
        },
    }
}

/// Nested loops over every triple for every pattern.
pub fn nested_loop_bgp(g: &TripleGraph, patterns: &[TriplePattern]) -> Vec<Solution> {
    let triples: Vec<&Triple> = g.triples().collect();
    let mut partial: Vec<Solution> = vec![BTreeMap::new()];
    for p in patterns {
        let mut next = Vec::new();
        for s in &partial {
            for t in &triples {
                let mut s2 = s.clone();
                if unify(&p.subject, &t.subject.clone().into(), &mut s2)
                    && unify(&p.predicate, &t.predicate.clone().into(), &mut s2)
                    && unify(&p.object, &t.object, &mut s2)
                {
                    next.push(s2);
                }
            }
        }
        partial = next;
    }
    partial.sort();
    partial.dedup();
    partial
}

pub fn sorted(mut v: Vec<Solution>) -> Vec<Solution> {
    v.sort();
    v
}

// -------------------------------------------------------------- golden

pub const Q1: &str = "Who is responsible for the fire safety of the gas liquefaction units?";
pub const Q2: &str = "Which is his phone?";
pub const TANKS: &str = "In the first tank of the gas liquefaction unit... in the second tank... in the third tank...";

/// The reference query, one pattern per entry.
pub const Q1_PATTERNS: [&str; 7] = [
    "?psr rdf:type base:PersonalSafetyResponsibility",
    "?psr base:hasSafetyAspect base:FireSafety",
    "?psr base:hasPerson ?person",
    "?org rdf:type org:OrganizationalUnit",
    "?org base:operates base:1d8dc36f-909d-4711-a1cd-1ae74b305e9d",
    "?person rdf:type foaf:Person",
    "?person org:memberOf ?org",
];

pub const Q2_AUGMENTATION: [&str; 3] = [
    "?person rdf:type foaf:Person",
    "?person org:memberOf ?org",
    "?person base:hasPhone ?phone",
];

/// Splits on whitespace outside double quotes.
pub fn split_terms(line: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut quoted = false;
    let mut escaped = false;
    for c in line.chars() {
        if escaped {
            cur.push(c);
            escaped = false;
            continue;
        }
        match c {
            '\\' if quoted => {
                cur.push(c);
                escaped = true;
            }
            '"' => {
                quoted = !quoted;
                cur.push(c);
            }
            c if c.is_whitespace() && !quoted => {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
            }
            c => cur.push(c),
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedSparql {
    pub prefixes: BTreeMap<String, String>,
    /// `SELECT`, `ASK` or `INSERT DATA`.
    pub form: String,
    pub projection: Vec<String>,
    pub patterns: Vec<Vec<String>>,
}

/// Reads back the query forms the compiler writes.
pub fn parse_sparql(text: &str) -> Result<ParsedSparql, String> {
    let mut prefixes = BTreeMap::new();
    let mut lines = text.lines().peekable();
    while let Some(l) = lines.peek() {
        let Some(rest) = l.strip_prefix("PREFIX ") else { break };
        let (p, ns) = rest.split_once(": ").ok_or(format!("bad prefix line {l}"))?;
        let ns = ns
            .strip_prefix('<')
            .and_then(|n| n.strip_suffix('>'))
            .ok_or("bad namespace")?;
        prefixes.insert(p.to_string(), ns.to_string());
        lines.next();
    }
    let head = lines.next().ok_or("missing query head")?;
    let (form, projection) = if let Some(rest) = head.strip_prefix("SELECT ") {
        let vars = rest.strip_suffix(" WHERE {").ok_or("bad select head")?;
        ("SELECT".to_string(), split_terms(vars))
    } else if head == "ASK {" {
        ("ASK".to_string(), Vec::new())
    } else if head == "INSERT DATA {" {
        ("INSERT DATA".to_string(), Vec::new())
    } else {
        return Err(format!("unknown head {head}"));
    };
    let mut patterns = Vec::new();
    let mut closed = false;
    for l in lines {
        if l == "}" {
            closed = true;
            continue;
        }
        if closed {
            return Err("text after closing brace".into());
        }
        let body = l
            .strip_prefix("  ")
            .and_then(|b| b.strip_suffix(" ."))
            .ok_or(format!("bad pattern {l}"))?;
        let terms = split_terms(body);
        if terms.len() != 3 {
            return Err(format!("pattern without three terms: {l}"));
        }
        for t in &terms {
            let name = t.rsplit("^^").next().unwrap();
            if let Some((p, _)) = name.split_once(':').filter(|_| !name.starts_with(['?', '"', '<'])) {
                if !prefixes.contains_key(p) {
                    return Err(format!("undeclared prefix {p}"));
                }
            }
        }
        patterns.push(terms);
    }
    if !closed {
        return Err("unterminated query".into());
    }
    Ok(ParsedSparql {
        prefixes,
        form,
        projection,
        patterns,
    })
}

fn rename(pattern: &[String], map: &BTreeMap<String, String>) -> Vec<String> {
    pattern
        .iter()
        .map(|t| map.get(t).cloned().unwrap_or_else(|| t.clone()))
        .collect()
}

fn variables(patterns: &[Vec<String>]) -> Vec<String> {
    let set: BTreeSet<String> = patterns
        .iter()
        .flatten()
        .filter(|t| t.starts_with('?'))
        .cloned()
        .collect();
    set.into_iter().collect()
}

fn permutations(items: &[String]) -> Vec<Vec<String>> {
    if items.is_empty() {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head.clone());
            out.push(tail);
        }
    }
    out
}

fn multiset(patterns: Vec<Vec<String>>) -> Vec<Vec<String>> {
    let mut v = patterns;
    v.sort();
    v
}

/// Whether `expected` is a sub-multiset of `actual` (or equal, when
/// `exact`) under some renaming of the actual variables.
pub fn matches_under_bijection(actual: &[Vec<String>], expected: &[&str], exact: bool) -> bool {
    let expected: Vec<Vec<String>> = expected.iter().map(|p| split_terms(p)).collect();
    if exact && actual.len() != expected.len() {
        return false;
    }
    let ours = variables(actual);
    let theirs = variables(&expected);
    if ours.len() < theirs.len() || (exact && ours.len() != theirs.len()) {
        return false;
    }
    let want = multiset(expected);
    for perm in permutations(&ours) {
        let map: BTreeMap<String, String> = perm
            .iter()
            .cloned()
            .zip(theirs.iter().cloned().chain((0..).map(|i| format!("?_free{i}"))))
            .collect();
        let mut have = multiset(actual.iter().map(|p| rename(p, &map)).collect());
        if exact {
            if have == want {
                return true;
            }
        } else if want.iter().all(|w| {
            if let Some(i) = have.iter().position(|h| h == w) {
                have.remove(i);
                true
            } else {
                false
            }
        }) {
            return true;
        }
    }
    false
}

/// (from, to, label)
pub type DotEdge = (String, String, String);

/// Structural check of the DOT subset the visualiser writes.
pub fn check_dot(text: &str) -> Result<(BTreeSet<String>, Vec<DotEdge>), String> {
    let mut lines = text.lines();
    let head = lines.next().ok_or("empty")?;
    if !head.starts_with("digraph ") || !head.ends_with(" {") {
        return Err(format!("bad header {head}"));
    }
    let mut nodes = BTreeSet::new();
    let mut edges = Vec::new();
    let mut closed = false;
    for l in lines {
        let l = l.trim();
        if l == "}" {
            closed = true;
            continue;
        }
        if closed {
            return Err("statement after closing brace".into());
        }
        let stmt = l.strip_suffix(';').ok_or(format!("missing semicolon: {l}"))?;
        if stmt.contains('=') && !stmt.contains('[') {
            continue;
        }
        let (target, attrs) = stmt.split_once(" [").ok_or(format!("no attribute list: {l}"))?;
        let attrs = attrs.strip_suffix(']').ok_or(format!("unclosed attributes: {l}"))?;
        let label = attribute(attrs, "label").ok_or(format!("no label: {l}"))?;
        if let Some((a, b)) = target.split_once(" -> ") {
            edges.push((a.to_string(), b.to_string(), label));
        } else {
            nodes.insert(target.to_string());
        }
    }
    if !closed {
        return Err("unterminated graph".into());
    }
    for (a, b, _) in &edges {
        if !nodes.contains(a) || !nodes.contains(b) {
            return Err(format!("dangling edge {a} -> {b}"));
        }
    }
    Ok((nodes, edges))
}

fn attribute(attrs: &str, key: &str) -> Option<String> {
    let start = attrs.find(&format!("{key}=\""))? + key.len() + 2;
    let mut out = String::new();
    let mut chars = attrs[start..].chars();
    while let Some(c) = chars.next() {
        match c {
            '\\' => {
                out.push(c);
                out.push(chars.next()?);
            }
            '"' => return Some(out),
            c => out.push(c),
        }
    }
    None
}
