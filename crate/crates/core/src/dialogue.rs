//! Finite-state dialogue: a declarative scenario of states and condition
//! transitions, per-session history, and the rules that decide which
//! earlier turns a new utterance is read together with.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{is_anaphoric_pronoun, AnalyzedText};
use crate::compiler::{Answer, QueryPlan};
use crate::docgraph::DocumentGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Condition {
    Answered,
    EmptyResult,
    TooManyResults,
    AmbiguousBinding,
    AmbiguousParse,
    DisconnectedGraph,
    UserMessage,
    ClarificationSent,
}

impl Condition {
    pub const ALL: [Condition; 8] = [
        Condition::Answered,
        Condition::EmptyResult,
        Condition::TooManyResults,
        Condition::AmbiguousBinding,
        Condition::AmbiguousParse,
        Condition::DisconnectedGraph,
        Condition::UserMessage,
        Condition::ClarificationSent,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Condition::Answered => "answered",
            Condition::EmptyResult => "empty-result",
            Condition::TooManyResults => "too-many-results",
            Condition::AmbiguousBinding => "ambiguous-binding",
            Condition::AmbiguousParse => "ambiguous-parse",
            Condition::DisconnectedGraph => "disconnected-graph",
            Condition::UserMessage => "user-message",
            Condition::ClarificationSent => "clarification-sent",
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Condition {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Condition::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| s.to_string())
    }
}

/// What a state does on entry. States without an action wait for the user.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Action {
    RunPipeline,
    Clarify,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DialogueState {
    pub name: String,
    pub action: Option<Action>,
    pub transitions: BTreeMap<Condition, String>,
}

#[derive(Debug, Error, PartialEq)]
pub enum ScenarioError {
    #[error("scenario: {0}")]
    Toml(String),
    #[error("scenario: state `{state}` uses unknown condition `{condition}`")]
    UnknownCondition { state: String, condition: String },
    #[error("scenario: initial state `{0}` is not defined")]
    MissingInitial(String),
    #[error("scenario: state `{state}` has two transitions on `{condition}`")]
    DuplicateTransition { state: String, condition: Condition },
    #[error("scenario: state `{state}` moves to undefined state `{target}`")]
    UnknownTarget { state: String, target: String },
    #[error("scenario: unreachable states: {}", .0.join(", "))]
    Unreachable(Vec<String>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTransition {
    on: String,
    to: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawState {
    action: Option<Action>,
    #[serde(default)]
    transitions: Vec<RawTransition>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    initial: Option<String>,
    #[serde(default)]
    states: BTreeMap<String, RawState>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    pub initial: String,
    pub states: BTreeMap<String, DialogueState>,
}

impl Scenario {
    /// Loads and validates a scenario.
    pub fn parse(text: &str) -> Result<Scenario, ScenarioError> {
        let raw: RawScenario = toml::from_str(text).map_err(|e| ScenarioError::Toml(e.to_string()))?;
        let initial = raw.initial.unwrap_or_default();
        if !raw.states.contains_key(&initial) {
            return Err(ScenarioError::MissingInitial(initial));
        }
        let mut states = BTreeMap::new();
        for (name, rs) in &raw.states {
            let mut transitions = BTreeMap::new();
            for t in &rs.transitions {
                let condition: Condition = t.on.parse().map_err(|condition| ScenarioError::UnknownCondition {
                    state: name.clone(),
                    condition,
                })?;
                if !raw.states.contains_key(&t.to) {
                    return Err(ScenarioError::UnknownTarget {
                        state: name.clone(),
                        target: t.to.clone(),
                    });
                }
                if transitions.insert(condition, t.to.clone()).is_some() {
                    return Err(ScenarioError::DuplicateTransition {
                        state: name.clone(),
                        condition,
                    });
                }
            }
            states.insert(
                name.clone(),
                DialogueState {
                    name: name.clone(),
                    action: rs.action,
                    transitions,
                },
            );
        }
        let scenario = Scenario { initial, states };
        let unreachable = scenario.unreachable_states();
        if !unreachable.is_empty() {
            return Err(ScenarioError::Unreachable(unreachable));
        }
        Ok(scenario)
    }

    /// States not reachable from the initial state.
    pub fn unreachable_states(&self) -> Vec<String> {
        let mut seen = BTreeSet::from([self.initial.as_str()]);
        let mut queue = VecDeque::from([self.initial.as_str()]);
        while let Some(s) = queue.pop_front() {
            for next in self.states[s].transitions.values() {
                if seen.insert(next.as_str()) {
                    queue.push_back(next.as_str());
                }
            }
        }
        self.states
            .keys()
            .filter(|k| !seen.contains(k.as_str()))
            .cloned()
            .collect()
    }

    pub fn state(&self, name: &str) -> Option<&DialogueState> {
        self.states.get(name)
    }

    pub fn next(&self, state: &str, condition: Condition) -> Option<&str> {
        self.states.get(state)?.transitions.get(&condition).map(String::as_str)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReplyKind {
    Answer,
    ClarifyingQuestion,
    ExtractionReport,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BotReply {
    pub kind: ReplyKind,
    pub text: String,
    /// State after the reply.
    pub state: String,
    /// The outcome that chose the reply.
    pub condition: Condition,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub answer: Option<Answer>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sparql: Option<String>,
    /// Candidates found for an ambiguous or oversized result.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub candidate_count: Option<usize>,
    pub dot: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DialogueSettings {
    pub max_results: usize,
    /// How many earlier answered turns a follow-up is read with.
    pub context_depth: usize,
}

impl Default for DialogueSettings {
    fn default() -> Self {
        DialogueSettings {
            max_results: 5,
            context_depth: 1,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Turn {
    pub utterance: String,
    /// Every utterance the pipeline read for this turn, oldest first.
    pub read_with: Vec<String>,
    pub reply: BotReply,
    #[serde(skip)]
    pub plan: Option<QueryPlan>,
    #[serde(skip)]
    pub graph: Option<DocumentGraph>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DialogueSession {
    pub id: String,
    pub state: String,
    pub history: Vec<Turn>,
    /// Utterances awaiting a clarification answer.
    pub pending: Option<Vec<String>>,
}

impl DialogueSession {
    pub fn new(id: impl Into<String>, scenario: &Scenario) -> Self {
        DialogueSession {
            id: id.into(),
            state: scenario.initial.clone(),
            history: Vec::new(),
            pending: None,
        }
    }

    /// Utterances of the last `depth` answered turns, oldest first.
    pub fn context(&self, depth: usize) -> Vec<String> {
        let answered: Vec<&Turn> = self
            .history
            .iter()
            .filter(|t| t.reply.condition == Condition::Answered && t.reply.kind == ReplyKind::Answer)
            .collect();
        let start = answered.len().saturating_sub(depth);
        let mut out: Vec<String> = Vec::new();
        for t in &answered[start..] {
            for u in &t.read_with {
                if out.last() != Some(u) && !out.contains(u) {
                    out.push(u.clone());
                }
            }
        }
        out
    }
}

const CONTINUATIONS: &[&str] = &["and", "also", "what about", "how about"];

/// Whether an utterance leans on earlier turns: an unresolved third-person
/// pronoun, or an opening such as "and" or "what about".
pub fn is_follow_up(alone: &AnalyzedText) -> bool {
    let dangling = alone
        .tokens
        .iter()
        .any(|t| is_anaphoric_pronoun(&t.text) && alone.cluster_of(t.index).is_none());
    dangling || starts_with_continuation(&alone.source)
}

pub fn starts_with_continuation(text: &str) -> bool {
    let lower: Vec<String> = text
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect();
    CONTINUATIONS.iter().any(|c| {
        let words: Vec<&str> = c.split(' ').collect();
        lower.len() >= words.len() && lower.iter().zip(&words).all(|(a, b)| a == b)
    })
}

/// For a follow-up like "And for industrial safety?": an individual named
/// in the last turn that reaches an earlier object over `p` replaces that
/// object's earlier `p` value of the same class. Returns the removed
/// edges as (from, predicate, to).
pub fn substitute_follow_up(d: &mut DocumentGraph) -> Vec<(usize, String, usize)> {
    let turn = d.text.last_turn();
    let in_turn = |d: &DocumentGraph, object: usize, current: bool| {
        d.object(object).is_some_and(|o| {
            !o.sources.is_empty()
                && o.sources.iter().all(|&s| {
                    d.mention(s)
                        .is_some_and(|m| m.tokens.iter().all(|&t| (d.text.tokens[t].turn == turn) == current))
                })
        })
    };
    let mut removed = Vec::new();
    let edges = d.object_edges.clone();
    for new in &edges {
        let Some(new_obj) = d.object(new.to) else { continue };
        if new_obj.individual.is_none() || !in_turn(d, new.to, true) || in_turn(d, new.from, true) {
            continue;
        }
        let class = new_obj.class.clone();
        for old in &edges {
            if old.from != new.from || old.predicate != new.predicate || old.to == new.to {
                continue;
            }
            let Some(old_obj) = d.object(old.to) else { continue };
            if old_obj.individual.is_some() && old_obj.class == class && in_turn(d, old.to, false) {
                removed.push((old.from, old.predicate.as_str().to_string(), old.to));
            }
        }
    }
    d.object_edges.retain(|e| {
        !removed
            .iter()
            .any(|(f, p, t)| e.from == *f && e.predicate.as_str() == p && e.to == *t)
    });
    removed
}
