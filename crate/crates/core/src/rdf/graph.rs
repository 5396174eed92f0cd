//! In-memory triple store with the schema and cardinality indexes the
//! pipeline needs: which properties connect which classes, and which
//! properties are functional.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::{Arc, RwLock};

use super::term::{vocab, Iri, Literal, Term, Triple, OWL, RDF, RDFS, SKOS, XSD};

/// Knowledge graph shared between dialogue sessions. Readers take the read
/// lock for a whole turn so they see one consistent snapshot.
pub type SharedGraph = Arc<RwLock<TripleGraph>>;

/// One undirected schema adjacency: `property` links this class to `other`.
/// `forward` is true when this class is the domain side.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SchemaEdge {
    pub property: Iri,
    pub other: Iri,
    pub forward: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PropertyInfo {
    pub domains: BTreeSet<Iri>,
    pub ranges: BTreeSet<Iri>,
    pub datatype: bool,
    pub max_cardinality: Option<i64>,
}

impl PropertyInfo {
    pub fn is_functional(&self) -> bool {
        self.max_cardinality == Some(1)
    }
}

#[derive(Debug, Clone, Default)]
pub struct TripleGraph {
    triples: BTreeSet<Triple>,
    by_subject: HashMap<Iri, BTreeSet<Triple>>,
    by_predicate: HashMap<Iri, BTreeSet<Triple>>,
    by_object: HashMap<Term, BTreeSet<Triple>>,
    prefixes: BTreeMap<String, String>,
    schema: BTreeMap<Iri, BTreeSet<SchemaEdge>>,
    properties: BTreeMap<Iri, PropertyInfo>,
    classes: BTreeSet<Iri>,
    superclasses: BTreeMap<Iri, BTreeSet<Iri>>,
}

impl PartialEq for TripleGraph {
    fn eq(&self, other: &Self) -> bool {
        self.triples == other.triples
    }
}

fn is_datatype_iri(iri: &Iri) -> bool {
    iri.as_str().starts_with(XSD) || iri.as_str() == format!("{RDFS}Literal")
}

fn is_schema_predicate(p: &Iri) -> bool {
    let s = p.as_str();
    s == format!("{RDF}type")
        || s == format!("{RDFS}domain")
        || s == format!("{RDFS}range")
        || s == format!("{RDFS}subClassOf")
        || s == format!("{OWL}maxCardinality")
}

impl TripleGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn triples(&self) -> impl Iterator<Item = &Triple> {
        self.triples.iter()
    }

    pub fn contains(&self, triple: &Triple) -> bool {
        self.triples.contains(triple)
    }

    pub fn prefixes(&self) -> &BTreeMap<String, String> {
        &self.prefixes
    }

    pub fn add_prefix(&mut self, prefix: impl Into<String>, namespace: impl Into<String>) {
        self.prefixes.insert(prefix.into(), namespace.into());
    }

    /// Copies prefixes from `other` that are not already registered.
    pub fn merge_prefixes(&mut self, other: &BTreeMap<String, String>) {
        for (p, ns) in other {
            self.prefixes.entry(p.clone()).or_insert_with(|| ns.clone());
        }
    }

    /// Expands `prefix:local` against the registered prefixes.
    pub fn expand(&self, curie: &str) -> Option<Iri> {
        let (prefix, local) = curie.split_once(':')?;
        self.prefixes.get(prefix).map(|ns| Iri::new(format!("{ns}{local}")))
    }

    /// Shortest `prefix:local` rendering, falling back to `<iri>`.
    pub fn compact(&self, iri: &Iri) -> String {
        let mut best: Option<String> = None;
        for (prefix, ns) in &self.prefixes {
            if let Some(local) = iri.as_str().strip_prefix(ns.as_str()) {
                if super::turtle::is_valid_local(local) {
                    let candidate = format!("{prefix}:{local}");
                    if best.as_ref().is_none_or(|b| candidate.len() < b.len()) {
                        best = Some(candidate);
                    }
                }
            }
        }
        best.unwrap_or_else(|| iri.to_string())
    }

    pub fn compact_term(&self, term: &Term) -> String {
        match term {
            Term::Iri(iri) => self.compact(iri),
            Term::Literal(lit) => {
                if lit.datatype == vocab::xsd_string() {
                    format!("\"{}\"", super::term::escape_string(&lit.lexical))
                } else {
                    format!(
                        "\"{}\"^^{}",
                        super::term::escape_string(&lit.lexical),
                        self.compact(&lit.datatype)
                    )
                }
            }
        }
    }

    pub fn compact_triple(&self, t: &Triple) -> String {
        format!(
            "{} {} {}",
            self.compact(&t.subject),
            self.compact(&t.predicate),
            self.compact_term(&t.object)
        )
    }

    /// Inserts one triple; returns whether it was new.
    pub fn insert(&mut self, triple: Triple) -> bool {
        if self.triples.contains(&triple) {
            return false;
        }
        let schema_relevant = is_schema_predicate(&triple.predicate);
        self.by_subject
            .entry(triple.subject.clone())
            .or_default()
            .insert(triple.clone());
        self.by_predicate
            .entry(triple.predicate.clone())
            .or_default()
            .insert(triple.clone());
        self.by_object
            .entry(triple.object.clone())
            .or_default()
            .insert(triple.clone());
        self.triples.insert(triple);
        if schema_relevant {
            self.rebuild_schema();
        }
        true
    }

    /// Adds all triples, returning how many were not already present.
    pub fn apply_insert(&mut self, triples: impl IntoIterator<Item = Triple>) -> usize {
        let mut added = 0;
        let mut schema_dirty = false;
        for t in triples {
            if self.triples.contains(&t) {
                continue;
            }
            schema_dirty |= is_schema_predicate(&t.predicate);
            self.by_subject.entry(t.subject.clone()).or_default().insert(t.clone());
            self.by_predicate
                .entry(t.predicate.clone())
                .or_default()
                .insert(t.clone());
            self.by_object.entry(t.object.clone()).or_default().insert(t.clone());
            self.triples.insert(t);
            added += 1;
        }
        if schema_dirty {
            self.rebuild_schema();
        }
        added
    }

    /// All triples matching the bound positions.
    pub fn matching(&self, subject: Option<&Iri>, predicate: Option<&Iri>, object: Option<&Term>) -> Vec<&Triple> {
        let candidates: Box<dyn Iterator<Item = &Triple>> = match (subject, predicate, object) {
            (Some(s), _, _) => match self.by_subject.get(s) {
                Some(set) => Box::new(set.iter()),
                None => return Vec::new(),
            },
            (None, _, Some(o)) => match self.by_object.get(o) {
                Some(set) => Box::new(set.iter()),
                None => return Vec::new(),
            },
            (None, Some(p), None) => match self.by_predicate.get(p) {
                Some(set) => Box::new(set.iter()),
                None => return Vec::new(),
            },
            (None, None, None) => Box::new(self.triples.iter()),
        };
        candidates
            .filter(|t| subject.is_none_or(|s| &t.subject == s))
            .filter(|t| predicate.is_none_or(|p| &t.predicate == p))
            .filter(|t| object.is_none_or(|o| &t.object == o))
            .collect()
    }

    pub fn objects(&self, subject: &Iri, predicate: &Iri) -> Vec<&Term> {
        self.matching(Some(subject), Some(predicate), None)
            .into_iter()
            .map(|t| &t.object)
            .collect()
    }

    pub fn types_of(&self, individual: &Iri) -> Vec<Iri> {
        self.objects(individual, &vocab::rdf_type())
            .into_iter()
            .filter_map(|t| t.as_iri().cloned())
            .collect()
    }

    pub fn instances_of(&self, class: &Iri) -> Vec<Iri> {
        let class = Term::Iri(class.clone());
        self.matching(None, Some(&vocab::rdf_type()), Some(&class))
            .into_iter()
            .map(|t| t.subject.clone())
            .collect()
    }

    /// Whether the IRI occurs anywhere in the graph.
    pub fn mentions(&self, iri: &Iri) -> bool {
        self.by_subject.contains_key(iri)
            || self.by_predicate.contains_key(iri)
            || self.by_object.contains_key(&Term::Iri(iri.clone()))
    }

    pub fn label(&self, iri: &Iri) -> Option<&str> {
        self.objects(iri, &vocab::rdfs_label())
            .into_iter()
            .filter_map(|t| t.as_literal())
            .map(|l| l.lexical.as_str())
            .min()
    }

    /// Human-readable name: `rdfs:label`, then `skos:prefLabel`, then the
    /// local name.
    pub fn display_name(&self, term: &Term) -> String {
        match term {
            Term::Literal(lit) => lit.lexical.clone(),
            Term::Iri(iri) => self
                .label(iri)
                .map(str::to_string)
                .or_else(|| {
                    self.objects(iri, &vocab::skos_pref_label())
                        .into_iter()
                        .filter_map(|t| t.as_literal())
                        .map(|l| l.lexical.clone())
                        .min()
                })
                .unwrap_or_else(|| iri.local_name().to_string()),
        }
    }

    pub fn is_class(&self, iri: &Iri) -> bool {
        self.classes.contains(iri)
    }

    pub fn classes(&self) -> &BTreeSet<Iri> {
        &self.classes
    }

    pub fn property(&self, iri: &Iri) -> Option<&PropertyInfo> {
        self.properties.get(iri)
    }

    pub fn properties(&self) -> &BTreeMap<Iri, PropertyInfo> {
        &self.properties
    }

    pub fn is_property(&self, iri: &Iri) -> bool {
        self.properties.contains_key(iri)
    }

    /// Object-property adjacency of a class (both directions).
    pub fn schema_edges(&self, class: &Iri) -> impl Iterator<Item = &SchemaEdge> {
        self.schema.get(class).into_iter().flatten()
    }

    pub fn schema_index(&self) -> &BTreeMap<Iri, BTreeSet<SchemaEdge>> {
        &self.schema
    }

    pub fn max_cardinality(&self, property: &Iri) -> Option<i64> {
        self.properties.get(property).and_then(|p| p.max_cardinality)
    }

    /// `class` equals `ancestor` or reaches it through `rdfs:subClassOf`.
    pub fn is_subclass_of(&self, class: &Iri, ancestor: &Iri) -> bool {
        class == ancestor || self.superclasses.get(class).is_some_and(|s| s.contains(ancestor))
    }

    fn rebuild_schema(&mut self) {
        let type_p = vocab::rdf_type();
        let domain_p = vocab::rdfs_domain();
        let range_p = vocab::rdfs_range();
        let sub_p = vocab::rdfs_subclass_of();
        let maxc_p = vocab::owl_max_cardinality();
        let class_markers = [vocab::owl_class(), vocab::rdfs_class()];
        let object_marker = vocab::owl_object_property();
        let datatype_marker = vocab::owl_datatype_property();
        let property_marker = vocab::rdf_property();

        let mut properties: BTreeMap<Iri, PropertyInfo> = BTreeMap::new();
        let mut classes = BTreeSet::new();
        let mut direct_super: BTreeMap<Iri, BTreeSet<Iri>> = BTreeMap::new();

        for t in &self.triples {
            let object_iri = t.object.as_iri();
            if t.predicate == type_p {
                match object_iri {
                    Some(o) if class_markers.contains(o) => {
                        classes.insert(t.subject.clone());
                    }
                    Some(o) if *o == object_marker || *o == property_marker => {
                        properties.entry(t.subject.clone()).or_default();
                    }
                    Some(o) if *o == datatype_marker => {
                        properties.entry(t.subject.clone()).or_default().datatype = true;
                    }
                    _ => {}
                }
            } else if t.predicate == domain_p {
                if let Some(o) = object_iri {
                    properties
                        .entry(t.subject.clone())
                        .or_default()
                        .domains
                        .insert(o.clone());
                    classes.insert(o.clone());
                }
            } else if t.predicate == range_p {
                if let Some(o) = object_iri {
                    let info = properties.entry(t.subject.clone()).or_default();
                    info.ranges.insert(o.clone());
                    if is_datatype_iri(o) {
                        info.datatype = true;
                    } else {
                        classes.insert(o.clone());
                    }
                }
            } else if t.predicate == sub_p {
                if let Some(o) = object_iri {
                    direct_super.entry(t.subject.clone()).or_default().insert(o.clone());
                    classes.insert(t.subject.clone());
                    classes.insert(o.clone());
                }
            } else if t.predicate == maxc_p {
                if let Some(n) = t.object.as_literal().and_then(Literal::as_integer) {
                    properties.entry(t.subject.clone()).or_default().max_cardinality = Some(n);
                }
            }
        }

        let mut schema: BTreeMap<Iri, BTreeSet<SchemaEdge>> = BTreeMap::new();
        for (p, info) in &properties {
            if info.datatype {
                continue;
            }
            for d in &info.domains {
                for r in &info.ranges {
                    if is_datatype_iri(r) {
                        continue;
                    }
                    schema.entry(d.clone()).or_default().insert(SchemaEdge {
                        property: p.clone(),
                        other: r.clone(),
                        forward: true,
                    });
                    schema.entry(r.clone()).or_default().insert(SchemaEdge {
                        property: p.clone(),
                        other: d.clone(),
                        forward: false,
                    });
                }
            }
        }

        let mut superclasses = BTreeMap::new();
        for class in direct_super.keys() {
            let mut seen = BTreeSet::new();
            let mut stack: Vec<Iri> = direct_super[class].iter().cloned().collect();
            while let Some(c) = stack.pop() {
                if seen.insert(c.clone()) {
                    if let Some(next) = direct_super.get(&c) {
                        stack.extend(next.iter().cloned());
                    }
                }
            }
            superclasses.insert(class.clone(), seen);
        }

        self.properties = properties;
        self.classes = classes;
        self.schema = schema;
        self.superclasses = superclasses;
    }
}

/// Standard prefixes every graph understands without declaration.
pub fn standard_prefixes() -> BTreeMap<String, String> {
    [("rdf", RDF), ("rdfs", RDFS), ("owl", OWL), ("xsd", XSD), ("skos", SKOS)]
        .into_iter()
        .map(|(p, ns)| (p.to_string(), ns.to_string()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iri(s: &str) -> Iri {
        Iri::new(format!("http://ex.org/#{s}"))
    }

    #[test]
    fn insert_is_set_semantics() {
        let mut g = TripleGraph::new();
        let t = Triple::new(iri("a"), iri("p"), iri("b"));
        assert!(g.insert(t.clone()));
        assert!(!g.insert(t.clone()));
        assert_eq!(g.apply_insert(vec![t]), 0);
        assert_eq!(g.len(), 1);
    }

    #[test]
    fn schema_index_follows_domain_and_range() {
        let mut g = TripleGraph::new();
        g.apply_insert(vec![
            Triple::new(iri("partOf"), vocab::rdfs_domain(), iri("Tank")),
            Triple::new(iri("partOf"), vocab::rdfs_range(), iri("Unit")),
            Triple::new(iri("num"), vocab::rdfs_domain(), iri("Tank")),
            Triple::new(iri("num"), vocab::rdfs_range(), vocab::xsd_int()),
            Triple::new(iri("num"), vocab::owl_max_cardinality(), Literal::integer(1)),
        ]);
        let tank: Vec<_> = g.schema_edges(&iri("Tank")).collect();
        assert_eq!(tank.len(), 1);
        assert!(tank[0].forward);
        assert_eq!(g.schema_edges(&iri("Unit")).count(), 1);
        assert!(g.property(&iri("num")).unwrap().is_functional());
        assert!(g.property(&iri("num")).unwrap().datatype);
    }
}
