use std::fmt;

use serde::{Deserialize, Serialize};

pub const RDF: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";
pub const RDFS: &str = "http://www.w3.org/2000/01/rdf-schema#";
pub const OWL: &str = "http://www.w3.org/2002/07/owl#";
pub const XSD: &str = "http://www.w3.org/2001/XMLSchema#";
pub const SKOS: &str = "http://www.w3.org/2004/02/skos/core#";

/// Common vocabulary IRIs used throughout the engine.
pub mod vocab {
    use super::Iri;

    pub fn rdf_type() -> Iri {
        Iri::new(format!("{}type", super::RDF))
    }
    pub fn rdfs_label() -> Iri {
        Iri::new(format!("{}label", super::RDFS))
    }
    pub fn rdfs_domain() -> Iri {
        Iri::new(format!("{}domain", super::RDFS))
    }
    pub fn rdfs_range() -> Iri {
        Iri::new(format!("{}range", super::RDFS))
    }
    pub fn rdfs_subclass_of() -> Iri {
        Iri::new(format!("{}subClassOf", super::RDFS))
    }
    pub fn rdfs_class() -> Iri {
        Iri::new(format!("{}Class", super::RDFS))
    }
    pub fn rdf_property() -> Iri {
        Iri::new(format!("{}Property", super::RDF))
    }
    pub fn owl_class() -> Iri {
        Iri::new(format!("{}Class", super::OWL))
    }
    pub fn owl_object_property() -> Iri {
        Iri::new(format!("{}ObjectProperty", super::OWL))
    }
    pub fn owl_datatype_property() -> Iri {
        Iri::new(format!("{}DatatypeProperty", super::OWL))
    }
    pub fn owl_max_cardinality() -> Iri {
        Iri::new(format!("{}maxCardinality", super::OWL))
    }
    pub fn skos_pref_label() -> Iri {
        Iri::new(format!("{}prefLabel", super::SKOS))
    }
    pub fn xsd_string() -> Iri {
        Iri::new(format!("{}string", super::XSD))
    }
    pub fn xsd_integer() -> Iri {
        Iri::new(format!("{}integer", super::XSD))
    }
    pub fn xsd_int() -> Iri {
        Iri::new(format!("{}int", super::XSD))
    }
    pub fn xsd_decimal() -> Iri {
        Iri::new(format!("{}decimal", super::XSD))
    }
}

/// An absolute IRI.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Iri(String);

impl Iri {
    pub fn new(value: impl Into<String>) -> Self {
        let value = value.into();
        debug_assert!(!value.is_empty(), "IRI must not be empty");
        Iri(value)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// The part after the last `#` or `/`.
    pub fn local_name(&self) -> &str {
        let cut = self.0.rfind(['#', '/']).map(|i| i + 1).unwrap_or(0);
        &self.0[cut..]
    }
}

impl fmt::Display for Iri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}>", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Literal {
    pub lexical: String,
    pub datatype: Iri,
}

const INTEGER_TYPES: &[&str] = &[
    "integer",
    "int",
    "long",
    "short",
    "byte",
    "nonNegativeInteger",
    "positiveInteger",
    "unsignedInt",
];

impl Literal {
    pub fn string(lexical: impl Into<String>) -> Self {
        Literal {
            lexical: lexical.into(),
            datatype: vocab::xsd_string(),
        }
    }

    pub fn integer(value: i64) -> Self {
        Literal {
            lexical: value.to_string(),
            datatype: vocab::xsd_integer(),
        }
    }

    pub fn typed(lexical: impl Into<String>, datatype: Iri) -> Self {
        Literal {
            lexical: lexical.into(),
            datatype,
        }
    }

    pub fn is_integer_typed(&self) -> bool {
        self.datatype
            .as_str()
            .strip_prefix(XSD)
            .is_some_and(|local| INTEGER_TYPES.contains(&local))
    }

    /// Integer value for any of the xsd integer datatypes.
    pub fn as_integer(&self) -> Option<i64> {
        if self.is_integer_typed() {
            self.lexical.trim().parse().ok()
        } else {
            None
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        self.lexical.trim().parse().ok()
    }

    /// Two literals denote the same value (integers compared numerically).
    pub fn same_value(&self, other: &Literal) -> bool {
        match (self.as_integer(), other.as_integer()) {
            (Some(a), Some(b)) => a == b,
            _ => self == other,
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "\"{}\"", escape_string(&self.lexical))?;
        if self.datatype.as_str() != format!("{XSD}string") {
            write!(f, "^^{}", self.datatype)?;
        }
        Ok(())
    }
}

pub(crate) fn escape_string(s: &str) -> String {
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

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Term {
    Iri(Iri),
    Literal(Literal),
}

impl Term {
    pub fn as_iri(&self) -> Option<&Iri> {
        match self {
            Term::Iri(iri) => Some(iri),
            Term::Literal(_) => None,
        }
    }

    pub fn as_literal(&self) -> Option<&Literal> {
        match self {
            Term::Literal(lit) => Some(lit),
            Term::Iri(_) => None,
        }
    }
}

impl From<Iri> for Term {
    fn from(iri: Iri) -> Self {
        Term::Iri(iri)
    }
}

impl From<Literal> for Term {
    fn from(lit: Literal) -> Self {
        Term::Literal(lit)
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Iri(iri) => iri.fmt(f),
            Term::Literal(lit) => lit.fmt(f),
        }
    }
}

/// An RDF statement. Subjects are always IRIs: blank nodes are not supported.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Triple {
    pub subject: Iri,
    pub predicate: Iri,
    pub object: Term,
}

impl Triple {
    pub fn new(subject: Iri, predicate: Iri, object: impl Into<Term>) -> Self {
        Triple {
            subject,
            predicate,
            object: object.into(),
        }
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} .", self.subject, self.predicate, self.object)
    }
}
