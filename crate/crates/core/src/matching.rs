//! Mention search. Matchers scan every syntactic path (and every single
//! token) and propose weighted references to ontology entities. All
//! candidates are kept; choosing among them happens later.

use std::collections::{BTreeMap, BTreeSet};

use regex::Regex;
use thiserror::Error;

use crate::analysis::{ordinal_value, syntactic_paths, tokenize, AnalyzedText, Token};
use crate::docgraph::{DocumentGraph, MentionKind, Stage};
use crate::lexicon::{field_filter, Lexicon};
use crate::rdf::{vocab, Iri, Literal, Term, TripleGraph};

pub const LABEL: &str = "label";
pub const LEXICON: &str = "lexicon";
pub const TEMPLATE: &str = "template";
pub const GAZETTEER: &str = "gazetteer";

#[derive(Debug, Error)]
pub enum MatcherError {
    #[error("template {name}: {source}")]
    BadRegex {
        name: String,
        #[source]
        source: regex::Error,
    },
    #[error("base weight of {0} must be in (0, 1]")]
    BadWeight(String),
    #[error("unknown matcher {0}")]
    UnknownMatcher(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueKind {
    Ordinal,
    Integer,
    Text,
}

#[derive(Debug, Clone)]
pub struct TemplateRule {
    pub name: String,
    pub pattern: Regex,
    pub property: Iri,
    pub value: ValueKind,
}

impl TemplateRule {
    /// The pattern is anchored to the whole token sequence.
    pub fn new(name: &str, pattern: &str, property: Iri, value: ValueKind) -> Result<Self, MatcherError> {
        let pattern = Regex::new(&format!("^(?i:{pattern})$")).map_err(|source| MatcherError::BadRegex {
            name: name.to_string(),
            source,
        })?;
        Ok(TemplateRule {
            name: name.to_string(),
            pattern,
            property,
            value,
        })
    }
}

/// Word lists of named entities, each tied to the datatype property its
/// terms are values of.
#[derive(Debug, Clone, Default)]
pub struct Gazetteer {
    entries: BTreeMap<String, Vec<(Iri, String)>>,
}

impl Gazetteer {
    pub fn add(&mut self, property: &Iri, term: &str) {
        let term = term.trim();
        if term.is_empty() {
            return;
        }
        let slot = self.entries.entry(term.to_lowercase()).or_default();
        if !slot.iter().any(|(p, _)| p == property) {
            slot.push((property.clone(), term.to_string()));
        }
    }

    /// Adds one term per non-empty line; `#` starts a comment line.
    pub fn add_list(&mut self, property: &Iri, text: &str) {
        for line in text.lines().filter(|l| !l.trim_start().starts_with('#')) {
            self.add(property, line);
        }
    }

    pub fn lookup(&self, phrase: &str) -> &[(Iri, String)] {
        self.entries
            .get(&phrase.to_lowercase())
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct MatcherConfig {
    pub enabled: Vec<String>,
    pub base_weights: BTreeMap<String, f64>,
    pub templates: Vec<TemplateRule>,
    pub gazetteer: Gazetteer,
    pub active_fields: BTreeSet<Iri>,
}

impl Default for MatcherConfig {
    fn default() -> Self {
        let base_weights = [(LABEL, 0.9), (LEXICON, 0.8), (TEMPLATE, 0.7), (GAZETTEER, 0.6)]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect();
        MatcherConfig {
            enabled: vec![LABEL.into(), LEXICON.into(), TEMPLATE.into(), GAZETTEER.into()],
            base_weights,
            templates: Vec::new(),
            gazetteer: Gazetteer::default(),
            active_fields: BTreeSet::new(),
        }
    }
}

impl MatcherConfig {
    pub fn validate(&self) -> Result<(), MatcherError> {
        for name in &self.enabled {
            if ![LABEL, LEXICON, TEMPLATE, GAZETTEER].contains(&name.as_str()) {
                return Err(MatcherError::UnknownMatcher(name.clone()));
            }
        }
        for (name, w) in &self.base_weights {
            if !(*w > 0.0 && *w <= 1.0) {
                return Err(MatcherError::BadWeight(name.clone()));
            }
        }
        Ok(())
    }

    pub fn base(&self, matcher: &str) -> f64 {
        self.base_weights.get(matcher).copied().unwrap_or(1.0)
    }
}

/// A proposed mention before it enters the document graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub reference: Iri,
    pub kind: MentionKind,
    pub tokens: Vec<usize>,
    pub weight: f64,
    pub matcher: String,
    pub value: Option<Literal>,
}

/// What a matcher sees: one token sequence in text order.
pub struct Sequence<'a> {
    pub tokens: Vec<&'a Token>,
    pub surface: String,
    pub lemmas: String,
}

impl<'a> Sequence<'a> {
    fn new(at: &'a AnalyzedText, indices: &[usize]) -> Self {
        let mut idx = indices.to_vec();
        idx.sort_unstable();
        let tokens: Vec<&Token> = idx.iter().map(|&i| &at.tokens[i]).collect();
        let surface = tokens
            .iter()
            .map(|t| t.text.to_lowercase())
            .collect::<Vec<_>>()
            .join(" ");
        let lemmas = tokens.iter().map(|t| t.lemma.as_str()).collect::<Vec<_>>().join(" ");
        Sequence {
            tokens,
            surface,
            lemmas,
        }
    }

    fn coverage(&self) -> f64 {
        let first = self.tokens.first().map_or(0, |t| t.index);
        let last = self.tokens.last().map_or(0, |t| t.index);
        self.tokens.len() as f64 / (last - first + 1) as f64
    }
}

pub struct MatchContext<'a> {
    pub lexicon: &'a Lexicon,
    pub ontology: &'a TripleGraph,
    pub config: &'a MatcherConfig,
    labels: BTreeMap<String, BTreeSet<Iri>>,
}

impl<'a> MatchContext<'a> {
    pub fn new(lexicon: &'a Lexicon, ontology: &'a TripleGraph, config: &'a MatcherConfig) -> Self {
        let mut labels: BTreeMap<String, BTreeSet<Iri>> = BTreeMap::new();
        let label_p = vocab::rdfs_label();
        for t in ontology.matching(None, Some(&label_p), None) {
            if let Term::Literal(l) = &t.object {
                let words = tokenize(&l.lexical);
                let surface = words.iter().map(|w| w.to_lowercase()).collect::<Vec<_>>().join(" ");
                let lemmas = words
                    .iter()
                    .map(|w| lexicon.lemma(w).map(str::to_string).unwrap_or_else(|| w.to_lowercase()))
                    .collect::<Vec<_>>()
                    .join(" ");
                labels.entry(surface).or_default().insert(t.subject.clone());
                labels.entry(lemmas).or_default().insert(t.subject.clone());
            }
        }
        MatchContext {
            lexicon,
            ontology,
            config,
            labels,
        }
    }

    pub fn kind_of(&self, entity: &Iri) -> MentionKind {
        if self.ontology.is_class(entity) {
            MentionKind::Class
        } else if self.ontology.is_property(entity) {
            MentionKind::Property
        } else {
            MentionKind::Individual
        }
    }

    /// Typed literal for a property value, following the property's range.
    fn value_literal(&self, property: &Iri, lexical: &str) -> Literal {
        let range = self
            .ontology
            .property(property)
            .and_then(|p| p.ranges.iter().next().cloned())
            .unwrap_or_else(vocab::xsd_string);
        if range == vocab::xsd_string() {
            Literal::string(lexical)
        } else {
            Literal::typed(lexical, range)
        }
    }
}

pub trait Matcher: Send + Sync {
    fn name(&self) -> &str;
    /// Candidates as (reference, kind, unscaled weight, value).
    fn match_sequence(
        &self,
        seq: &Sequence<'_>,
        ctx: &MatchContext<'_>,
    ) -> Vec<(Iri, MentionKind, f64, Option<Literal>)>;
}

pub struct LabelMatcher;

impl Matcher for LabelMatcher {
    fn name(&self) -> &str {
        LABEL
    }

    fn match_sequence(
        &self,
        seq: &Sequence<'_>,
        ctx: &MatchContext<'_>,
    ) -> Vec<(Iri, MentionKind, f64, Option<Literal>)> {
        let mut hits: BTreeSet<&Iri> = BTreeSet::new();
        for key in [&seq.surface, &seq.lemmas] {
            if let Some(found) = ctx.labels.get(key) {
                hits.extend(found);
            }
        }
        hits.into_iter()
            .map(|iri| (iri.clone(), ctx.kind_of(iri), 1.0, None))
            .collect()
    }
}

pub struct LexiconMatcher;

impl Matcher for LexiconMatcher {
    fn name(&self) -> &str {
        LEXICON
    }

    fn match_sequence(
        &self,
        seq: &Sequence<'_>,
        ctx: &MatchContext<'_>,
    ) -> Vec<(Iri, MentionKind, f64, Option<Literal>)> {
        let mut senses = ctx.lexicon.senses_for_form(&seq.surface);
        if seq.lemmas != seq.surface {
            for s in ctx.lexicon.senses_for_form(&seq.lemmas) {
                if !senses.iter().any(|x| x.iri == s.iri) {
                    senses.push(s);
                }
            }
        }
        field_filter(&senses, &ctx.config.active_fields)
            .into_iter()
            .map(|s| (s.reference.clone(), ctx.kind_of(&s.reference), s.prior_weight, None))
            .collect()
    }
}

pub struct TemplateMatcher;

impl Matcher for TemplateMatcher {
    fn name(&self) -> &str {
        TEMPLATE
    }

    fn match_sequence(
        &self,
        seq: &Sequence<'_>,
        ctx: &MatchContext<'_>,
    ) -> Vec<(Iri, MentionKind, f64, Option<Literal>)> {
        let raw = seq.tokens.iter().map(|t| t.text.as_str()).collect::<Vec<_>>().join(" ");
        let mut out = Vec::new();
        for rule in &ctx.config.templates {
            if !rule.pattern.is_match(&raw) {
                continue;
            }
            let lexical = match rule.value {
                ValueKind::Ordinal => match ordinal_value(&raw) {
                    Some(n) => n.to_string(),
                    None => continue,
                },
                ValueKind::Integer => match raw.parse::<i64>() {
                    Ok(n) => n.to_string(),
                    Err(_) => continue,
                },
                ValueKind::Text => raw.clone(),
            };
            let value = ctx.value_literal(&rule.property, &lexical);
            out.push((rule.property.clone(), MentionKind::LiteralValue, 1.0, Some(value)));
        }
        out
    }
}

pub struct GazetteerMatcher;

impl Matcher for GazetteerMatcher {
    fn name(&self) -> &str {
        GAZETTEER
    }

    fn match_sequence(
        &self,
        seq: &Sequence<'_>,
        ctx: &MatchContext<'_>,
    ) -> Vec<(Iri, MentionKind, f64, Option<Literal>)> {
        ctx.config
            .gazetteer
            .lookup(&seq.surface)
            .iter()
            .map(|(property, term)| {
                let value = ctx.value_literal(property, term);
                (property.clone(), MentionKind::LiteralValue, 1.0, Some(value))
            })
            .collect()
    }
}

fn matcher_by_name(name: &str) -> Option<Box<dyn Matcher>> {
    match name {
        LABEL => Some(Box::new(LabelMatcher)),
        LEXICON => Some(Box::new(LexiconMatcher)),
        TEMPLATE => Some(Box::new(TemplateMatcher)),
        GAZETTEER => Some(Box::new(GazetteerMatcher)),
        _ => None,
    }
}

/// Every candidate of every enabled matcher over every path of up to
/// `max_len` edges and every single token. Identical hypotheses keep their
/// best weight; the result is sorted so it does not depend on matcher order.
pub fn run_matchers(
    at: &AnalyzedText,
    lexicon: &Lexicon,
    ontology: &TripleGraph,
    config: &MatcherConfig,
    max_len: usize,
) -> Vec<Candidate> {
    let ctx = MatchContext::new(lexicon, ontology, config);
    let matchers: Vec<Box<dyn Matcher>> = config.enabled.iter().filter_map(|n| matcher_by_name(n)).collect();

    let mut sequences: BTreeSet<Vec<usize>> = syntactic_paths(at, max_len)
        .into_iter()
        .map(|mut p| {
            p.sort_unstable();
            p
        })
        .collect();
    sequences.extend((0..at.tokens.len()).map(|i| vec![i]));

    type Key = (Iri, MentionKind, Vec<usize>, Option<Literal>);
    let mut best: BTreeMap<Key, (f64, String)> = BTreeMap::new();
    for indices in &sequences {
        let seq = Sequence::new(at, indices);
        if seq.tokens.iter().all(|t| t.features.is_punctuation) {
            continue;
        }
        let coverage = seq.coverage();
        for m in &matchers {
            let base = config.base(m.name());
            for (reference, kind, prior, value) in m.match_sequence(&seq, &ctx) {
                let weight = base * prior * coverage;
                if weight <= 0.0 {
                    continue;
                }
                let key = (reference, kind, indices.clone(), value);
                let slot = best.entry(key).or_insert((0.0, String::new()));
                let better = weight > slot.0 || (weight == slot.0 && m.name() < slot.1.as_str());
                if better {
                    *slot = (weight, m.name().to_string());
                }
            }
        }
    }

    let mut out: Vec<Candidate> = best
        .into_iter()
        .map(|((reference, kind, tokens, value), (weight, matcher))| Candidate {
            reference,
            kind,
            tokens,
            weight,
            matcher,
            value,
        })
        .collect();
    out.sort_by(|a, b| (&a.tokens, &a.reference, a.kind, &a.value).cmp(&(&b.tokens, &b.reference, b.kind, &b.value)));
    out
}

/// Adds candidates as mentions, in order, and marks the stage.
pub fn add_mentions(d: &mut DocumentGraph, candidates: Vec<Candidate>) {
    for c in candidates {
        d.add_mention(c.reference, c.kind, c.tokens, c.weight, &c.matcher, c.value);
    }
    d.advance(Stage::MentionsAdded);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{Analyzer, RuleAnalyzer};
    use crate::rdf::load_turtle;

    const KG: &str = r#"
        @prefix : <http://ex.org/#> .
        @prefix rdfs: <http://www.w3.org/2000/01/rdf-schema#> .
        @prefix owl: <http://www.w3.org/2002/07/owl#> .
        @prefix xsd: <http://www.w3.org/2001/XMLSchema#> .
        :Unit a owl:Class ; rdfs:label "Plant unit" .
        :hasNumber a owl:DatatypeProperty ; rdfs:range xsd:int .
        :familyName a owl:DatatypeProperty ; rdfs:range xsd:string .
        :u1 a :Unit ; rdfs:label "Gas liquefaction unit" .
        :u2 a :Unit ; rdfs:label "Boiler" .
        :u3 a :Unit ; rdfs:label "Boiler" .
    "#;

    fn iri(s: &str) -> Iri {
        Iri::new(format!("http://ex.org/#{s}"))
    }

    fn config() -> MatcherConfig {
        let mut c = MatcherConfig::default();
        c.templates.push(
            TemplateRule::new(
                "ordinal",
                r"first|second|third|\d+(st|nd|rd|th)",
                iri("hasNumber"),
                ValueKind::Ordinal,
            )
            .unwrap(),
        );
        c.gazetteer.add(&iri("familyName"), "Smith");
        c
    }

    fn run(text: &str) -> Vec<Candidate> {
        let kg = load_turtle(KG).unwrap();
        let lex = Lexicon::default();
        let at = RuleAnalyzer::default().analyze(text, &lex).unwrap();
        run_matchers(&at, &lex, &kg, &config(), 3)
    }

    #[test]
    fn label_phrase_matches_individual() {
        let c = run("the gas liquefaction unit");
        let hit = c.iter().find(|c| c.reference == iri("u1")).unwrap();
        assert_eq!(hit.kind, MentionKind::Individual);
        assert_eq!(hit.tokens, vec![1, 2, 3]);
        assert!((hit.weight - 0.9).abs() < 1e-12);
    }

    #[test]
    fn partial_label_does_not_match() {
        assert!(run("gas unit").iter().all(|c| c.reference != iri("u1")));
    }

    #[test]
    fn duplicate_labels_give_equal_candidates() {
        let c = run("boiler");
        let hits: Vec<_> = c.iter().filter(|c| c.tokens == vec![0]).collect();
        assert_eq!(hits.len(), 2);
        assert_eq!(hits[0].weight, hits[1].weight);
    }

    #[test]
    fn ordinal_template_and_gazetteer() {
        let c = run("third Smith");
        let third = c.iter().find(|c| c.reference == iri("hasNumber")).unwrap();
        assert_eq!(third.value, Some(Literal::typed("3", vocab::xsd_int())));
        let smith = c.iter().find(|c| c.reference == iri("familyName")).unwrap();
        assert_eq!(smith.kind, MentionKind::LiteralValue);
        assert_eq!(smith.value, Some(Literal::string("Smith")));
        assert!((smith.weight - 0.6).abs() < 1e-12);
    }

    #[test]
    fn unknown_word_gives_nothing() {
        assert!(run("zzz").is_empty());
    }

    #[test]
    fn invalid_template_regex() {
        assert!(matches!(
            TemplateRule::new("bad", "(", iri("p"), ValueKind::Text),
            Err(MatcherError::BadRegex { .. })
        ));
    }
}
