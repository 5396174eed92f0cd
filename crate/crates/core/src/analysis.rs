//! Preliminary text analysis: sentences, tokens, lemma and part-of-speech
//! assignment through the lexicon, syntactic-relatedness edges and
//! pronoun coreference.
//!
//! The default [`RuleAnalyzer`] targets controlled English. Any other
//! implementation of [`Analyzer`] can replace it as long as it produces the
//! same [`AnalyzedText`] shape.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lexicon::{Lexicon, PartOfSpeech};
use crate::rdf::Iri;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AnalysisError {
    #[error("text is empty")]
    EmptyText,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenFeatures {
    pub is_question_word: bool,
    pub is_ordinal: bool,
    pub is_punctuation: bool,
    pub is_copula: bool,
    pub number: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub index: usize,
    pub sentence: usize,
    /// Which utterance of a multi-turn analysis the token came from.
    pub turn: usize,
    pub text: String,
    pub lemma: String,
    pub pos: PartOfSpeech,
    pub features: TokenFeatures,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SyntacticEdge {
    pub head: usize,
    pub dependent: usize,
    pub relation: String,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CoreferenceCluster {
    pub members: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalyzedText {
    pub source: String,
    pub tokens: Vec<Token>,
    pub edges: Vec<SyntacticEdge>,
    pub clusters: Vec<CoreferenceCluster>,
}

impl AnalyzedText {
    pub fn token_count(&self) -> usize {
        self.tokens.len()
    }

    pub fn connects(&self, a: usize, b: usize) -> bool {
        self.edges
            .iter()
            .any(|e| (e.head == a && e.dependent == b) || (e.head == b && e.dependent == a))
    }

    pub fn neighbors(&self, token: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges.iter().filter_map(move |e| {
            if e.head == token {
                Some(e.dependent)
            } else if e.dependent == token {
                Some(e.head)
            } else {
                None
            }
        })
    }

    /// Unweighted shortest-path distances over syntactic edges from `from`.
    pub fn distances_from(&self, from: &[usize]) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.tokens.len()];
        let mut queue = VecDeque::new();
        for &t in from {
            dist[t] = Some(0);
            queue.push_back(t);
        }
        while let Some(u) = queue.pop_front() {
            let d = dist[u].expect("queued tokens have distances");
            for v in self.neighbors(u) {
                if dist[v].is_none() {
                    dist[v] = Some(d + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    pub fn cluster_of(&self, token: usize) -> Option<usize> {
        self.clusters.iter().position(|c| c.members.contains(&token))
    }

    pub fn last_turn(&self) -> usize {
        self.tokens.iter().map(|t| t.turn).max().unwrap_or(0)
    }
}

pub trait Analyzer: Send + Sync {
    /// Analyzes consecutive utterances as one discourse.
    fn analyze_turns(&self, turns: &[&str], lexicon: &Lexicon) -> Result<AnalyzedText, AnalysisError>;

    fn analyze(&self, text: &str, lexicon: &Lexicon) -> Result<AnalyzedText, AnalysisError> {
        self.analyze_turns(&[text], lexicon)
    }
}

const DETERMINERS: &[&str] = &[
    "the", "a", "an", "this", "that", "these", "those", "each", "every", "any", "some",
];
const PREPOSITIONS: &[&str] = &[
    "of", "for", "in", "on", "at", "to", "from", "with", "by", "about", "into", "under", "over", "between",
];
const CONJUNCTIONS: &[&str] = &["and", "or", "but", "also"];
const WH_WORDS: &[&str] = &["who", "whom", "whose", "what", "which", "where", "when", "how"];
const COPULAS: &[&str] = &[
    "is", "are", "was", "were", "be", "been", "am", "has", "have", "had", "do", "does", "did",
];
const PERSONAL_PRONOUNS: &[&str] = &["he", "him", "his", "she", "her", "hers", "they", "them", "their"];
const NEUTER_PRONOUNS: &[&str] = &["it", "its"];
const POSSESSIVE_PRONOUNS: &[&str] = &["his", "her", "its", "their"];
const ORDINALS: &[&str] = &[
    "first", "second", "third", "fourth", "fifth", "sixth", "seventh", "eighth", "ninth", "tenth",
];

/// Numeric value of an ordinal word (`third`) or suffix form (`3rd`).
pub fn ordinal_value(word: &str) -> Option<i64> {
    let lower = word.to_lowercase();
    if let Some(i) = ORDINALS.iter().position(|o| *o == lower) {
        return Some(i as i64 + 1);
    }
    static SUFFIXED: OnceLock<Regex> = OnceLock::new();
    let re = SUFFIXED.get_or_init(|| Regex::new(r"^(\d+)(st|nd|rd|th)$").expect("valid regex"));
    re.captures(&lower).and_then(|c| c[1].parse().ok())
}

/// Third-person pronouns that need an antecedent.
pub fn is_anaphoric_pronoun(word: &str) -> bool {
    let lower = word.to_lowercase();
    PERSONAL_PRONOUNS.contains(&lower.as_str()) || NEUTER_PRONOUNS.contains(&lower.as_str())
}

fn token_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"\+?\d[\d\-]*\d|\d|['’]s\b|[\p{L}\p{N}_]+(?:-[\p{L}\p{N}_]+)*|\.\.\.|…|\S").expect("valid regex")
    })
}

/// Splits text into token strings; every non-whitespace character is covered.
pub fn tokenize(text: &str) -> Vec<String> {
    token_regex()
        .find_iter(text)
        .map(|m| m.as_str().replace('’', "'"))
        .collect()
}

fn is_sentence_end(text: &str) -> bool {
    matches!(text, "." | "?" | "!" | "..." | "…")
}

/// Rule-based default analyzer. `person_classes` are the ontology classes
/// counted as person-denoting for pronoun resolution.
#[derive(Debug, Clone, Default)]
pub struct RuleAnalyzer {
    pub person_classes: BTreeSet<Iri>,
}

impl RuleAnalyzer {
    pub fn new(person_classes: BTreeSet<Iri>) -> Self {
        RuleAnalyzer { person_classes }
    }

    fn classify(&self, text: &str, lexicon: &Lexicon) -> (PartOfSpeech, TokenFeatures) {
        let lower = text.to_lowercase();
        let mut features = TokenFeatures {
            is_question_word: WH_WORDS.contains(&lower.as_str()),
            ..Default::default()
        };
        if text.chars().all(|c| !c.is_alphanumeric()) {
            features.is_punctuation = true;
            return (PartOfSpeech::Other, features);
        }
        if let Some(n) = ordinal_value(&lower) {
            features.is_ordinal = true;
            features.number = Some(n);
            return (PartOfSpeech::Adjective, features);
        }
        if lower.chars().all(|c| c.is_ascii_digit()) {
            features.number = lower.parse().ok();
            return (PartOfSpeech::Other, features);
        }
        if COPULAS.contains(&lower.as_str()) {
            features.is_copula = true;
        }
        if let Some(word) = lexicon.words_for_form(&lower).first() {
            return (word.part_of_speech, features);
        }
        let pos = if features.is_question_word {
            PartOfSpeech::Interrogative
        } else if lower == "'s" || CONJUNCTIONS.contains(&lower.as_str()) {
            PartOfSpeech::Other
        } else if DETERMINERS.contains(&lower.as_str()) {
            PartOfSpeech::Determiner
        } else if PREPOSITIONS.contains(&lower.as_str()) {
            PartOfSpeech::Preposition
        } else if PERSONAL_PRONOUNS.contains(&lower.as_str()) || NEUTER_PRONOUNS.contains(&lower.as_str()) {
            PartOfSpeech::Pronoun
        } else if features.is_copula {
            PartOfSpeech::Verb
        } else {
            PartOfSpeech::Noun
        };
        (pos, features)
    }

    fn is_person_token(&self, token: &Token, lexicon: &Lexicon) -> bool {
        [token.text.as_str(), token.lemma.as_str()].iter().any(|form| {
            lexicon
                .senses_for_form(form)
                .iter()
                .any(|s| self.person_classes.contains(&s.reference))
        })
    }
}

fn is_content(t: &Token) -> bool {
    if t.features.is_punctuation || t.text == "'s" {
        return false;
    }
    match t.pos {
        PartOfSpeech::Noun
        | PartOfSpeech::Verb
        | PartOfSpeech::Adjective
        | PartOfSpeech::Pronoun
        | PartOfSpeech::Interrogative => true,
        PartOfSpeech::Other => t.features.number.is_some(),
        PartOfSpeech::Preposition | PartOfSpeech::Determiner => false,
    }
}

fn is_nominal(t: &Token) -> bool {
    t.pos == PartOfSpeech::Noun || (t.pos == PartOfSpeech::Other && t.features.number.is_some())
}

/// Head (last nominal) of the noun phrase starting at `start`, skipping
/// determiners, adjectives and possessive pronouns.
fn phrase_head(tokens: &[Token], start: usize, end: usize) -> Option<usize> {
    let mut i = start;
    while i < end
        && (tokens[i].pos == PartOfSpeech::Determiner
            || tokens[i].pos == PartOfSpeech::Adjective
            || POSSESSIVE_PRONOUNS.contains(&tokens[i].text.to_lowercase().as_str()))
    {
        i += 1;
    }
    let mut head = None;
    while i < end && is_nominal(&tokens[i]) {
        head = Some(i);
        i += 1;
    }
    head
}

fn add_edge(edges: &mut Vec<SyntacticEdge>, head: usize, dependent: usize, relation: &str) {
    if head == dependent {
        return;
    }
    let exists = edges
        .iter()
        .any(|e| (e.head == head && e.dependent == dependent) || (e.head == dependent && e.dependent == head));
    if !exists {
        edges.push(SyntacticEdge {
            head,
            dependent,
            relation: relation.to_string(),
        });
    }
}

fn sentence_edges(tokens: &[Token], start: usize, end: usize, edges: &mut Vec<SyntacticEdge>) {
    let lower = |i: usize| tokens[i].text.to_lowercase();
    for i in start..end {
        let t = &tokens[i];
        // adjective or ordinal directly before a noun
        if t.pos == PartOfSpeech::Adjective && i + 1 < end && is_nominal(&tokens[i + 1]) {
            if let Some(head) = phrase_head(tokens, i + 1, end) {
                add_edge(edges, head, i, "amod");
            }
        }
        // noun run: compound
        if is_nominal(t) && i + 1 < end && is_nominal(&tokens[i + 1]) {
            add_edge(edges, i + 1, i, "compound");
        }
        // genitive "X of Y"
        if lower(i) == "of" && i > start && is_nominal(&tokens[i - 1]) {
            if let Some(right) = phrase_head(tokens, i + 1, end) {
                add_edge(edges, i - 1, right, "nmod:of");
            }
        }
        // possessive "X 's Y"
        if t.text == "'s" && i > start && is_nominal(&tokens[i - 1]) {
            if let Some(right) = phrase_head(tokens, i + 1, end) {
                add_edge(edges, right, i - 1, "nmod:poss");
            }
        }
        // possessive pronoun before its noun phrase
        if POSSESSIVE_PRONOUNS.contains(&lower(i).as_str()) {
            if let Some(right) = phrase_head(tokens, i + 1, end) {
                add_edge(edges, right, i, "nmod:poss");
            }
        }
    }
    // wh-words attach to the main verb, else to the next content word
    for i in start..end {
        if !tokens[i].features.is_question_word {
            continue;
        }
        let verb = (start..end).find(|&j| j != i && tokens[j].pos == PartOfSpeech::Verb);
        let target = verb.or_else(|| (i + 1..end).find(|&j| is_content(&tokens[j])));
        if let Some(v) = target {
            add_edge(edges, v, i, "wh");
        }
    }
    // remaining neighbouring content words
    let content: Vec<usize> = (start..end).filter(|&i| is_content(&tokens[i])).collect();
    for pair in content.windows(2) {
        add_edge(edges, pair[0], pair[1], "adjacent");
    }
}

impl Analyzer for RuleAnalyzer {
    fn analyze_turns(&self, turns: &[&str], lexicon: &Lexicon) -> Result<AnalyzedText, AnalysisError> {
        if turns.iter().all(|t| t.trim().is_empty()) {
            return Err(AnalysisError::EmptyText);
        }
        let mut tokens: Vec<Token> = Vec::new();
        let mut sentence = 0;
        for (turn, text) in turns.iter().enumerate() {
            let mut open = false;
            for piece in tokenize(text) {
                let (pos, features) = self.classify(&piece, lexicon);
                let lemma = lexicon
                    .lemma(&piece)
                    .map(str::to_string)
                    .unwrap_or_else(|| piece.to_lowercase());
                let ends = is_sentence_end(&piece);
                tokens.push(Token {
                    index: tokens.len(),
                    sentence,
                    turn,
                    text: piece,
                    lemma,
                    pos,
                    features,
                });
                open = true;
                if ends {
                    sentence += 1;
                    open = false;
                }
            }
            if open {
                sentence += 1;
            }
        }

        let mut edges = Vec::new();
        let mut start = 0;
        while start < tokens.len() {
            let s = tokens[start].sentence;
            let end = (start..tokens.len())
                .find(|&i| tokens[i].sentence != s)
                .unwrap_or(tokens.len());
            sentence_edges(&tokens, start, end, &mut edges);
            start = end;
        }
        edges.sort();

        let clusters = self.coreference(&tokens, lexicon);
        Ok(AnalyzedText {
            source: turns.join(" "),
            tokens,
            edges,
            clusters,
        })
    }
}

impl RuleAnalyzer {
    fn coreference(&self, tokens: &[Token], lexicon: &Lexicon) -> Vec<CoreferenceCluster> {
        let mut parent: Vec<usize> = (0..tokens.len()).collect();
        fn find(parent: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while parent[r] != r {
                r = parent[r];
            }
            parent[x] = r;
            r
        }
        let mut linked = BTreeSet::new();
        for (i, t) in tokens.iter().enumerate() {
            let lower = t.text.to_lowercase();
            let antecedent = if PERSONAL_PRONOUNS.contains(&lower.as_str()) {
                (0..i).rev().find(|&j| self.is_person_token(&tokens[j], lexicon))
            } else if NEUTER_PRONOUNS.contains(&lower.as_str()) {
                (0..i)
                    .rev()
                    .find(|&j| tokens[j].pos == PartOfSpeech::Noun && !self.is_person_token(&tokens[j], lexicon))
            } else {
                None
            };
            if let Some(j) = antecedent {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a.max(b)] = a.min(b);
                linked.insert(i);
                linked.insert(j);
            }
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for &i in &linked {
            let root = find(&mut parent, i);
            groups.entry(root).or_default().push(i);
        }
        let mut clusters: Vec<CoreferenceCluster> = groups
            .into_values()
            .filter(|m| m.len() >= 2)
            .map(|members| CoreferenceCluster { members })
            .collect();
        clusters.sort();
        clusters
    }
}

/// All simple paths of 1..=`max_len` edges in the token graph, each listed
/// once, oriented so the first index is smaller than the last.
pub fn syntactic_paths(at: &AnalyzedText, max_len: usize) -> BTreeSet<Vec<usize>> {
    let n = at.tokens.len();
    let mut adjacency: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for e in &at.edges {
        adjacency[e.head].insert(e.dependent);
        adjacency[e.dependent].insert(e.head);
    }
    let mut out = BTreeSet::new();
    let mut path = Vec::new();
    let mut on_path = vec![false; n];
    for start in 0..n {
        extend(start, &adjacency, max_len, &mut path, &mut on_path, &mut out);
    }
    out
}

fn extend(
    node: usize,
    adjacency: &[BTreeSet<usize>],
    max_len: usize,
    path: &mut Vec<usize>,
    on_path: &mut [bool],
    out: &mut BTreeSet<Vec<usize>>,
) {
    path.push(node);
    on_path[node] = true;
    if path.len() >= 2 && path[0] < node {
        out.insert(path.clone());
    }
    if path.len() <= max_len {
        for &next in &adjacency[node] {
            if !on_path[next] {
                extend(next, adjacency, max_len, path, on_path, out);
            }
        }
    }
    on_path[node] = false;
    path.pop();
}
