//! Answer-card phrases, query variable names and clarifying-question texts,
//! all loaded from one TOML file keyed by prefixed names.

use std::collections::BTreeMap;

use serde::Deserialize;
use thiserror::Error;

use crate::rdf::{Iri, TripleGraph};
use crate::resolution::VariableNames;

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("templates: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("templates: cannot expand {0}")]
    UnknownName(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(default)]
pub struct Clarifications {
    pub empty_result: String,
    pub unmatched: String,
    pub ambiguous_binding: String,
    pub too_many_results: String,
    pub disconnected: String,
    pub ambiguous_parse: String,
    pub nothing_understood: String,
}

impl Default for Clarifications {
    fn default() -> Self {
        Clarifications {
            empty_result: "I found no answer to this question. Could you rephrase it or add a detail?".into(),
            unmatched:
                "I could not find any {class} with {constraints}. Could you check the spelling or give another detail?"
                    .into(),
            ambiguous_binding:
                "I found {count} candidates for {class} with {constraints}: {candidates}. Which one do you mean?".into(),
            too_many_results: "The question matches {count} results. Could you add a detail to narrow it down?".into(),
            disconnected: "I could not relate {fragments} to each other. How are they connected?".into(),
            ambiguous_parse: "By \"{text}\" do you mean {options}?".into(),
            nothing_understood: "I did not recognize anything I know about in this message. Could you rephrase it?"
                .into(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Templates {
    /// Card line per property; `{object}` is replaced by the value's name.
    pub relations: BTreeMap<Iri, String>,
    pub variables: VariableNames,
    pub clarifications: Clarifications,
}

#[derive(Deserialize)]
struct RawTemplates {
    #[serde(default)]
    relations: BTreeMap<String, String>,
    #[serde(default)]
    variables: BTreeMap<String, String>,
    #[serde(default)]
    clarifications: Clarifications,
}

fn expand(kg: &TripleGraph, name: &str) -> Result<Iri, TemplateError> {
    if let Some(full) = name.strip_prefix('<').and_then(|n| n.strip_suffix('>')) {
        return Ok(Iri::new(full));
    }
    kg.expand(name)
        .ok_or_else(|| TemplateError::UnknownName(name.to_string()))
}

impl Templates {
    /// Parses the TOML text; prefixed names expand against `kg`.
    pub fn parse(text: &str, kg: &TripleGraph) -> Result<Templates, TemplateError> {
        let raw: RawTemplates = toml::from_str(text)?;
        let mut relations = BTreeMap::new();
        for (k, v) in raw.relations {
            relations.insert(expand(kg, &k)?, v);
        }
        let mut variables = VariableNames::default();
        for (k, v) in raw.variables {
            variables.by_class.insert(expand(kg, &k)?, v);
        }
        Ok(Templates {
            relations,
            variables,
            clarifications: raw.clarifications,
        })
    }

    /// Card line for one relation.
    pub fn relation_line(&self, kg: &TripleGraph, property: &Iri, object_name: &str) -> String {
        match self.relations.get(property) {
            Some(t) => t.replace("{object}", object_name),
            None => {
                let label = kg.display_name(&property.clone().into());
                format!("{label}: {object_name}")
            }
        }
    }
}

/// Fills `{key}` placeholders.
pub fn fill(template: &str, values: &[(&str, String)]) -> String {
    let mut out = template.to_string();
    for (k, v) in values {
        out = out.replace(&format!("{{{k}}}"), v);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdf::load_turtle;

    #[test]
    fn relations_and_variables_expand() {
        let kg = load_turtle("@prefix ex: <http://ex.org/#> .").unwrap();
        let t = Templates::parse(
            r#"
            [relations]
            "ex:memberOf" = "Is an employee of the unit: {object}."
            [variables]
            "ex:Person" = "person"
            "#,
            &kg,
        )
        .unwrap();
        let member = Iri::new("http://ex.org/#memberOf");
        assert_eq!(t.relation_line(&kg, &member, "X"), "Is an employee of the unit: X.");
        assert_eq!(t.variables.base_for(&Iri::new("http://ex.org/#Person")), "person");
        assert_eq!(
            t.relation_line(&kg, &Iri::new("http://ex.org/#hasPhone"), "1"),
            "hasPhone: 1"
        );
    }

    #[test]
    fn unknown_prefix_is_reported() {
        let kg = TripleGraph::new();
        assert!(matches!(
            Templates::parse("[relations]\n\"zz:p\" = \"x\"", &kg),
            Err(TemplateError::UnknownName(_))
        ));
    }

    #[test]
    fn placeholders() {
        assert_eq!(fill("{a} and {b}", &[("a", "1".into()), ("b", "2".into())]), "1 and 2");
    }
}
