//! Lexical layer: words with surface forms, lexical senses that point at
//! ontology entities, and semantic fields that group senses so ambiguous
//! words can be narrowed for a domain.
//!
//! Lexicon files are Turtle using the `lex:` vocabulary:
//!
//! ```text
//! lex:w-tank a lex:Word ;
//!     lex:canonicalForm "tank" ; lex:otherForm "tanks" ;
//!     lex:partOfSpeech "noun" ; lex:sense lex:s-tank .
//! lex:s-tank a lex:LexicalSense ; lex:reference base:Tank ;
//!     lex:inField lex:FieldIndustry ; lex:weight 1.0 .
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rdf::{vocab, Iri, Literal, TripleGraph};

pub const LEX: &str = "http://example.org/lexicon#";

fn lex(local: &str) -> Iri {
    Iri::new(format!("{LEX}{local}"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PartOfSpeech {
    Noun,
    Verb,
    Adjective,
    Pronoun,
    Interrogative,
    Preposition,
    Determiner,
    Other,
}

impl FromStr for PartOfSpeech {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "noun" => PartOfSpeech::Noun,
            "verb" => PartOfSpeech::Verb,
            "adjective" => PartOfSpeech::Adjective,
            "pronoun" => PartOfSpeech::Pronoun,
            "interrogative" => PartOfSpeech::Interrogative,
            "preposition" => PartOfSpeech::Preposition,
            "determiner" => PartOfSpeech::Determiner,
            "other" => PartOfSpeech::Other,
            other => return Err(format!("unknown part of speech `{other}`")),
        })
    }
}

impl fmt::Display for PartOfSpeech {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            PartOfSpeech::Noun => "noun",
            PartOfSpeech::Verb => "verb",
            PartOfSpeech::Adjective => "adjective",
            PartOfSpeech::Pronoun => "pronoun",
            PartOfSpeech::Interrogative => "interrogative",
            PartOfSpeech::Preposition => "preposition",
            PartOfSpeech::Determiner => "determiner",
            PartOfSpeech::Other => "other",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Word {
    pub iri: Iri,
    pub canonical_form: String,
    pub other_forms: Vec<String>,
    pub part_of_speech: PartOfSpeech,
}

impl Word {
    pub fn forms(&self) -> impl Iterator<Item = &str> {
        std::iter::once(self.canonical_form.as_str()).chain(self.other_forms.iter().map(String::as_str))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LexicalSense {
    pub iri: Iri,
    pub word: Iri,
    pub reference: Iri,
    pub field: Option<Iri>,
    pub prior_weight: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SemanticField {
    pub iri: Iri,
    pub members: Vec<Iri>,
}

#[derive(Debug, Error, PartialEq)]
pub enum LexiconError {
    #[error("lexical senses reference entities missing from the ontology: {}", list(.0))]
    DanglingReferences(Vec<Iri>),
    #[error("invalid lexicon entry {iri}: {message}")]
    InvalidEntry { iri: Iri, message: String },
}

fn list(iris: &[Iri]) -> String {
    iris.iter().map(Iri::to_string).collect::<Vec<_>>().join(", ")
}

/// Normalizes a surface form: lowercase, single spaces.
pub fn normalize_form(form: &str) -> String {
    form.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    words: BTreeMap<Iri, Word>,
    senses: BTreeMap<Iri, LexicalSense>,
    fields: BTreeMap<Iri, SemanticField>,
    by_form: BTreeMap<String, BTreeSet<Iri>>,
    senses_by_word: BTreeMap<Iri, Vec<Iri>>,
    senses_by_reference: BTreeMap<Iri, Vec<Iri>>,
}

impl Lexicon {
    /// Builds the lexicon from `lexicon_graph`, checking every sense
    /// reference against `domain`.
    pub fn load(lexicon_graph: &TripleGraph, domain: &TripleGraph) -> Result<Lexicon, LexiconError> {
        let mut lexicon = Lexicon::default();
        let rdf_type = vocab::rdf_type();
        let word_class = lex("Word").into();

        let string_values = |subject: &Iri, prop: &str| -> Vec<String> {
            let mut v: Vec<String> = lexicon_graph
                .objects(subject, &lex(prop))
                .into_iter()
                .filter_map(|t| t.as_literal())
                .map(|l| l.lexical.clone())
                .collect();
            v.sort();
            v
        };
        let iri_values = |subject: &Iri, prop: &str| -> Vec<Iri> {
            let mut v: Vec<Iri> = lexicon_graph
                .objects(subject, &lex(prop))
                .into_iter()
                .filter_map(|t| t.as_iri().cloned())
                .collect();
            v.sort();
            v
        };

        let mut word_iris: Vec<Iri> = lexicon_graph
            .matching(None, Some(&rdf_type), Some(&word_class))
            .into_iter()
            .map(|t| t.subject.clone())
            .collect();
        word_iris.sort();

        let mut dangling = BTreeSet::new();
        for iri in word_iris {
            let canonical = string_values(&iri, "canonicalForm");
            let [canonical] = canonical.as_slice() else {
                return Err(LexiconError::InvalidEntry {
                    iri,
                    message: "word needs exactly one lex:canonicalForm".into(),
                });
            };
            let canonical_form = normalize_form(canonical);
            if canonical_form.is_empty() {
                return Err(LexiconError::InvalidEntry {
                    iri,
                    message: "empty canonical form".into(),
                });
            }
            let part_of_speech = match string_values(&iri, "partOfSpeech").first() {
                Some(p) => p.parse().map_err(|message| LexiconError::InvalidEntry {
                    iri: iri.clone(),
                    message,
                })?,
                None => PartOfSpeech::Noun,
            };
            let mut other_forms: Vec<String> = string_values(&iri, "otherForm")
                .iter()
                .map(|f| normalize_form(f))
                .filter(|f| !f.is_empty() && *f != canonical_form)
                .collect();
            other_forms.dedup();

            for sense_iri in iri_values(&iri, "sense") {
                let references = iri_values(&sense_iri, "reference");
                let [reference] = references.as_slice() else {
                    return Err(LexiconError::InvalidEntry {
                        iri: sense_iri,
                        message: "sense needs exactly one lex:reference".into(),
                    });
                };
                if !domain.mentions(reference) {
                    dangling.insert(reference.clone());
                }
                let fields = iri_values(&sense_iri, "inField");
                if fields.len() > 1 {
                    return Err(LexiconError::InvalidEntry {
                        iri: sense_iri,
                        message: "a sense belongs to at most one semantic field".into(),
                    });
                }
                let prior_weight = lexicon_graph
                    .objects(&sense_iri, &lex("weight"))
                    .into_iter()
                    .filter_map(|t| t.as_literal().and_then(Literal::as_f64))
                    .next()
                    .unwrap_or(1.0);
                if !(prior_weight > 0.0 && prior_weight <= 1.0) {
                    return Err(LexiconError::InvalidEntry {
                        iri: sense_iri,
                        message: format!("prior weight {prior_weight} outside (0, 1]"),
                    });
                }
                let field = fields.into_iter().next();
                if let Some(f) = &field {
                    lexicon
                        .fields
                        .entry(f.clone())
                        .or_insert_with(|| SemanticField {
                            iri: f.clone(),
                            members: Vec::new(),
                        })
                        .members
                        .push(sense_iri.clone());
                }
                lexicon
                    .senses_by_word
                    .entry(iri.clone())
                    .or_default()
                    .push(sense_iri.clone());
                lexicon
                    .senses_by_reference
                    .entry(reference.clone())
                    .or_default()
                    .push(sense_iri.clone());
                lexicon.senses.insert(
                    sense_iri.clone(),
                    LexicalSense {
                        iri: sense_iri,
                        word: iri.clone(),
                        reference: reference.clone(),
                        field,
                        prior_weight,
                    },
                );
            }

            let word = Word {
                iri: iri.clone(),
                canonical_form,
                other_forms,
                part_of_speech,
            };
            for form in word.forms() {
                lexicon.by_form.entry(form.to_string()).or_default().insert(iri.clone());
            }
            lexicon.words.insert(iri, word);
        }
        if !dangling.is_empty() {
            return Err(LexiconError::DanglingReferences(dangling.into_iter().collect()));
        }
        Ok(lexicon)
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> impl Iterator<Item = &Word> {
        self.words.values()
    }

    pub fn senses(&self) -> impl Iterator<Item = &LexicalSense> {
        self.senses.values()
    }

    pub fn fields(&self) -> impl Iterator<Item = &SemanticField> {
        self.fields.values()
    }

    pub fn word(&self, iri: &Iri) -> Option<&Word> {
        self.words.get(iri)
    }

    /// Words having `form` as canonical or other form (case-insensitive).
    pub fn words_for_form(&self, form: &str) -> Vec<&Word> {
        self.by_form
            .get(&normalize_form(form))
            .into_iter()
            .flatten()
            .filter_map(|iri| self.words.get(iri))
            .collect()
    }

    /// All senses of all words with this surface form.
    pub fn senses_for_form(&self, form: &str) -> Vec<&LexicalSense> {
        self.words_for_form(form)
            .into_iter()
            .flat_map(|w| self.senses_of_word(&w.iri))
            .collect()
    }

    pub fn senses_of_word(&self, word: &Iri) -> Vec<&LexicalSense> {
        self.senses_by_word
            .get(word)
            .into_iter()
            .flatten()
            .filter_map(|s| self.senses.get(s))
            .collect()
    }

    pub fn senses_for_reference(&self, reference: &Iri) -> Vec<&LexicalSense> {
        self.senses_by_reference
            .get(reference)
            .into_iter()
            .flatten()
            .filter_map(|s| self.senses.get(s))
            .collect()
    }

    /// Canonical form of the first word carrying this form.
    pub fn lemma(&self, form: &str) -> Option<&str> {
        self.words_for_form(form).first().map(|w| w.canonical_form.as_str())
    }
}

/// Narrows senses to the active semantic fields. A word's senses outside
/// every active field are dropped only when that word has at least one
/// in-field sense; senses without a field are always kept.
pub fn field_filter<'a>(senses: &[&'a LexicalSense], active_fields: &BTreeSet<Iri>) -> Vec<&'a LexicalSense> {
    if active_fields.is_empty() {
        return senses.to_vec();
    }
    let words_with_in_field: BTreeSet<&Iri> = senses
        .iter()
        .filter(|s| s.field.as_ref().is_some_and(|f| active_fields.contains(f)))
        .map(|s| &s.word)
        .collect();
    senses
        .iter()
        .filter(|s| match &s.field {
            None => true,
            Some(f) => active_fields.contains(f) || !words_with_in_field.contains(&s.word),
        })
        .copied()
        .collect()
}
