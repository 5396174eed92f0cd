//! The assembled engine: knowledge graph, lexicon, matchers, templates and
//! scenario, with entry points for dialogue turns, one-shot questions,
//! fact extraction and graph rendering.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::{Arc, RwLock};

use thiserror::Error;

use crate::analysis::{Analyzer, RuleAnalyzer};
use crate::compiler::{
    classify, compile, execute_insert, execute_query, has_content, CompileError, QueryKind, QueryPlan,
};
use crate::config::{Config, ConfigError};
use crate::dialogue::{
    is_follow_up, starts_with_continuation, substitute_follow_up, Action, BotReply, Condition, DialogueSession,
    DialogueSettings, ReplyKind, Scenario, ScenarioError, Turn,
};
use crate::docgraph::{to_dot, DocumentGraph};
use crate::lexicon::{Lexicon, LexiconError};
use crate::matching::{MatcherConfig, MatcherError, TemplateRule, ValueKind};
use crate::pipeline::{parse, Parsed, PipelineError, PipelineInputs, PipelineSettings};
use crate::rdf::graph::standard_prefixes;
use crate::rdf::{load_turtle_into, vocab, Iri, SharedGraph, Term, TripleGraph, TurtleError};
use crate::resolution::BindingState;
use crate::templates::{fill, TemplateError, Templates};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{file}: {source}")]
    Turtle {
        file: String,
        #[source]
        source: TurtleError,
    },
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
    #[error(transparent)]
    Templates(#[from] TemplateError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Matcher(#[from] MatcherError),
    #[error("config: cannot expand `{0}`")]
    UnknownName(String),
    #[error("config: unknown template value kind `{0}`")]
    ValueKind(String),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error("cannot relate the parts of the text: {}", .0.join("; "))]
    Disconnected(Vec<String>),
    #[error("{0}")]
    Ambiguous(String),
}

/// Everything `extract` produced.
#[derive(Debug, Clone)]
pub struct Extraction {
    pub plan: QueryPlan,
    pub sparql: String,
    pub triples: Vec<String>,
    /// New triples written; zero unless committed.
    pub inserted: usize,
    pub dot: String,
}

pub struct Engine {
    kg: SharedGraph,
    lexicon: Lexicon,
    matchers: MatcherConfig,
    templates: Templates,
    scenario: Scenario,
    analyzer: RuleAnalyzer,
    pipeline: PipelineSettings,
    dialogue: DialogueSettings,
    mint_base: String,
}

const DEMO_CONFIG: &str = include_str!("../fixtures/ontoquery.toml");

fn demo_file(path: &Path) -> Option<&'static str> {
    Some(match path.to_str()? {
        "tbox.ttl" => include_str!("../fixtures/tbox.ttl"),
        "abox.ttl" => include_str!("../fixtures/abox.ttl"),
        "abox-smiths.ttl" => include_str!("../fixtures/abox-smiths.ttl"),
        "lexicon.ttl" => include_str!("../fixtures/lexicon.ttl"),
        "scenario.toml" => include_str!("../fixtures/scenario.toml"),
        "templates.toml" => include_str!("../fixtures/templates.toml"),
        "surnames.txt" => include_str!("../fixtures/surnames.txt"),
        "given_names.txt" => include_str!("../fixtures/given_names.txt"),
        _ => return None,
    })
}

fn expand(kg: &TripleGraph, name: &str) -> Result<Iri, EngineError> {
    if let Some(full) = name.strip_prefix('<').and_then(|n| n.strip_suffix('>')) {
        return Ok(Iri::new(full));
    }
    kg.expand(name)
        .ok_or_else(|| EngineError::UnknownName(name.to_string()))
}

impl Engine {
    /// Builds from a config whose files are read by `read`.
    pub fn build(config: &Config, read: &dyn Fn(&Path) -> Result<String, EngineError>) -> Result<Engine, EngineError> {
        let mut kg = TripleGraph::new();
        kg.merge_prefixes(&standard_prefixes());
        let load = |kg: &mut TripleGraph, path: &Path| -> Result<(), EngineError> {
            let text = read(path)?;
            load_turtle_into(kg, &text).map_err(|source| EngineError::Turtle {
                file: path.display().to_string(),
                source,
            })?;
            Ok(())
        };
        load(&mut kg, &config.data.tbox)?;
        for a in &config.data.abox {
            load(&mut kg, a)?;
        }
        let mut lexicon_graph = TripleGraph::new();
        load(&mut lexicon_graph, &config.data.lexicon)?;
        let lexicon = Lexicon::load(&lexicon_graph, &kg)?;
        kg.merge_prefixes(lexicon_graph.prefixes());

        let mut matchers = MatcherConfig {
            enabled: config.matching.enabled.clone(),
            ..MatcherConfig::default()
        };
        for (k, v) in &config.matching.weights {
            matchers.base_weights.insert(k.clone(), *v);
        }
        for f in &config.matching.active_fields {
            matchers.active_fields.insert(expand(&kg, f)?);
        }
        for t in &config.matching.templates {
            let value = match t.value.as_str() {
                "ordinal" => ValueKind::Ordinal,
                "integer" => ValueKind::Integer,
                "text" => ValueKind::Text,
                other => return Err(EngineError::ValueKind(other.to_string())),
            };
            matchers.templates.push(TemplateRule::new(
                &t.name,
                &t.pattern,
                expand(&kg, &t.property)?,
                value,
            )?);
        }
        for (property, path) in &config.gazetteers {
            let p = expand(&kg, property)?;
            matchers.gazetteer.add_list(&p, &read(path)?);
        }
        matchers.validate()?;

        let templates = Templates::parse(&read(&config.data.templates)?, &kg)?;
        let scenario = Scenario::parse(&read(&config.data.scenario)?)?;
        let person = Iri::new("http://xmlns.com/foaf/0.1/Person");
        let person_classes: BTreeSet<Iri> = kg
            .classes()
            .iter()
            .filter(|c| kg.is_subclass_of(c, &person))
            .cloned()
            .chain(std::iter::once(person.clone()))
            .collect();
        Ok(Engine {
            kg: Arc::new(RwLock::new(kg)),
            lexicon,
            matchers,
            templates,
            scenario,
            analyzer: RuleAnalyzer::new(person_classes),
            pipeline: PipelineSettings {
                max_path: config.matching.max_path,
                ambiguity_epsilon: config.pipeline.ambiguity_epsilon,
            },
            dialogue: DialogueSettings {
                max_results: config.dialogue.max_results,
                context_depth: config.dialogue.context_depth,
            },
            mint_base: config.pipeline.mint_base.clone(),
        })
    }

    /// Builds from a config file on disk.
    pub fn from_config(config: &Config) -> Result<Engine, EngineError> {
        Engine::build(config, &|p| Ok(config.read(p)?))
    }

    /// The bundled plant-safety fixtures.
    pub fn demo() -> Engine {
        Engine::demo_with(&[])
    }

    /// The bundled fixtures plus extra bundled ABox files, by name.
    pub fn demo_with(extra_abox: &[&str]) -> Engine {
        let mut config = Config::parse(DEMO_CONFIG, "").expect("bundled config parses");
        config.data.abox.extend(extra_abox.iter().map(|a| a.into()));
        Engine::build(&config, &|p| {
            demo_file(p)
                .map(str::to_string)
                .ok_or_else(|| EngineError::UnknownName(p.display().to_string()))
        })
        .expect("bundled fixtures load")
    }

    pub fn kg(&self) -> &SharedGraph {
        &self.kg
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    pub fn templates(&self) -> &Templates {
        &self.templates
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn analyzer(&self) -> &RuleAnalyzer {
        &self.analyzer
    }

    pub fn matchers(&self) -> &MatcherConfig {
        &self.matchers
    }

    pub fn settings(&self) -> (PipelineSettings, DialogueSettings) {
        (self.pipeline, self.dialogue)
    }

    fn inputs(&self) -> PipelineInputs<'_> {
        PipelineInputs {
            analyzer: &self.analyzer,
            lexicon: &self.lexicon,
            matchers: &self.matchers,
            variables: &self.templates.variables,
            settings: self.pipeline,
        }
    }

    fn read_kg(&self) -> std::sync::RwLockReadGuard<'_, TripleGraph> {
        self.kg.read().unwrap_or_else(|e| e.into_inner())
    }

    fn write_kg(&self) -> std::sync::RwLockWriteGuard<'_, TripleGraph> {
        self.kg.write().unwrap_or_else(|e| e.into_inner())
    }

    /// Runs the pipeline over `turns` read as one discourse.
    pub fn parse(&self, turns: &[&str]) -> Result<Parsed, PipelineError> {
        let kg = self.read_kg();
        parse(turns, &kg, &self.inputs())
    }

    /// Graphviz rendering of the document graph for `text`.
    pub fn viz(&self, text: &str) -> Result<String, PipelineError> {
        let parsed = self.parse(&[text])?;
        Ok(to_dot(&parsed.graph, &self.read_kg()))
    }

    /// Compiles `text` as facts to insert; writes them when `commit`.
    pub fn extract(&self, text: &str, commit: bool) -> Result<Extraction, EngineError> {
        let parsed = self.parse(&[text])?;
        let dot = to_dot(&parsed.graph, &self.read_kg());
        if parsed.disconnected.is_some() {
            return Err(EngineError::Disconnected(parsed.fragment_texts()));
        }
        if let Some(text) = self.ambiguous_binding_text(&parsed) {
            return Err(EngineError::Ambiguous(text.0));
        }
        let plan = compile(
            &parsed.graph,
            QueryKind::Insert,
            crate::compiler::AnswerTarget::None,
            &self.templates,
            &self.mint_base,
        )?;
        let (sparql, triples, inserted) = if commit {
            let mut kg = self.write_kg();
            let answer = execute_insert(&plan, &mut kg);
            (answer.sparql, answer.cards[0].lines.clone(), answer.inserted)
        } else {
            let kg = self.read_kg();
            let sparql = crate::compiler::to_sparql(&plan, &kg);
            (sparql, plan.insert.iter().map(|t| kg.compact_triple(t)).collect(), 0)
        };
        Ok(Extraction {
            plan,
            sparql,
            triples,
            inserted,
            dot,
        })
    }

    /// Instances per class plus the total triple count.
    pub fn stats(&self) -> BTreeMap<String, usize> {
        let kg = self.read_kg();
        let mut out = BTreeMap::new();
        for t in kg.matching(None, Some(&vocab::rdf_type()), None) {
            if let Term::Iri(c) = &t.object {
                if kg.is_class(c) {
                    *out.entry(kg.compact(c)).or_insert(0) += 1;
                }
            }
        }
        out.insert("triples".into(), kg.len());
        out
    }

    pub fn new_session(&self, id: impl Into<String>) -> DialogueSession {
        DialogueSession::new(id, &self.scenario)
    }

    /// Answers `text` in a fresh session.
    pub fn ask(&self, text: &str) -> BotReply {
        let mut s = self.new_session("ask");
        self.handle_turn(&mut s, text)
    }

    /// Advances the session by one user utterance.
    pub fn handle_turn(&self, session: &mut DialogueSession, utterance: &str) -> BotReply {
        let mut state = self
            .scenario
            .next(&session.state, Condition::UserMessage)
            .or_else(|| self.scenario.next(&self.scenario.initial, Condition::UserMessage))
            .unwrap_or(&self.scenario.initial)
            .to_string();

        let context = match &session.pending {
            Some(p) => p.clone(),
            None => match self.analyzer.analyze(utterance, &self.lexicon) {
                Ok(alone) if is_follow_up(&alone) => session.context(self.dialogue.context_depth),
                _ => Vec::new(),
            },
        };

        let mut outcome: Option<Outcome> = None;
        for _ in 0..=2 * self.scenario.states.len() {
            let action = self.scenario.state(&state).and_then(|s| s.action);
            let condition = match action {
                Some(Action::RunPipeline) => {
                    let o = self.run_with_context(&context, utterance);
                    let c = o.condition;
                    outcome = Some(o);
                    c
                }
                Some(Action::Clarify) => Condition::ClarificationSent,
                None => break,
            };
            match self.scenario.next(&state, condition) {
                Some(next) => state = next.to_string(),
                None => break,
            }
        }
        let o = outcome.unwrap_or_else(|| self.run_with_context(&context, utterance));

        session.state = state.clone();
        session.pending = (o.kind == ReplyKind::ClarifyingQuestion).then(|| o.read_with.clone());
        let reply = BotReply {
            kind: o.kind,
            text: o.text,
            state,
            condition: o.condition,
            answer: o.answer,
            sparql: o.sparql,
            candidate_count: o.candidate_count,
            dot: o.dot,
        };
        session.history.push(Turn {
            utterance: utterance.to_string(),
            read_with: o.read_with,
            reply: reply.clone(),
            plan: o.plan,
            graph: o.graph,
        });
        reply
    }

    fn run_with_context(&self, context: &[String], utterance: &str) -> Outcome {
        if context.is_empty() {
            return self.run_turns(&[utterance.to_string()]);
        }
        let mut turns = context.to_vec();
        turns.push(utterance.to_string());
        let combined = self.run_turns(&turns);
        if combined.condition == Condition::Answered {
            return combined;
        }
        let alone = self.run_turns(&[utterance.to_string()]);
        if alone.condition == Condition::Answered {
            alone
        } else {
            combined
        }
    }

    fn ambiguous_binding_text(&self, parsed: &Parsed) -> Option<(String, usize)> {
        let kg = self.read_kg();
        parsed.bindings.iter().find_map(|b| match &b.state {
            BindingState::Ambiguous { count, candidates } => {
                let o = parsed.graph.object(b.object)?;
                let mut names: Vec<String> = candidates.iter().map(|c| kg.display_name(&c.clone().into())).collect();
                names.sort();
                let text = fill(
                    &self.templates.clarifications.ambiguous_binding,
                    &[
                        ("count", count.to_string()),
                        ("class", kg.display_name(&o.class.clone().into())),
                        ("constraints", constraint_text(&kg, &o.constraints)),
                        ("candidates", names.join(", ")),
                    ],
                );
                Some((text, *count))
            }
            _ => None,
        })
    }

    fn run_turns(&self, turns: &[String]) -> Outcome {
        let refs: Vec<&str> = turns.iter().map(String::as_str).collect();
        let current = refs.last().copied().unwrap_or_default();
        let clar = &self.templates.clarifications;
        let mut o = Outcome::clarify(turns.to_vec(), Condition::EmptyResult, String::new());

        let mut parsed = match self.parse(&refs) {
            Ok(p) => p,
            Err(_) => {
                o.text = fill(&clar.nothing_understood, &[("text", current.to_string())]);
                return o;
            }
        };
        let kg = self.read_kg();
        o.dot = to_dot(&parsed.graph, &kg);
        if !has_content(&parsed.graph) {
            o.text = fill(&clar.nothing_understood, &[("text", current.to_string())]);
            o.graph = Some(parsed.graph);
            return o;
        }
        if parsed.disconnected.is_some() {
            o.condition = Condition::DisconnectedGraph;
            o.text = fill(
                &clar.disconnected,
                &[("fragments", parsed.fragment_texts().join(" and "))],
            );
            o.graph = Some(parsed.graph);
            return o;
        }
        if turns.len() > 1 && starts_with_continuation(current) {
            substitute_follow_up(&mut parsed.graph);
        }
        if let Some(text) = self.parse_ambiguity_text(&parsed, &kg) {
            o.condition = Condition::AmbiguousParse;
            o.text = text;
            o.graph = Some(parsed.graph);
            return o;
        }

        let (kind, target) = match classify(&parsed.graph) {
            Ok(k) => k,
            Err(_) => {
                o.text = fill(&clar.nothing_understood, &[("text", current.to_string())]);
                return o;
            }
        };
        if let Some((text, count)) = self.ambiguous_binding_text(&parsed) {
            o.condition = Condition::AmbiguousBinding;
            o.text = text;
            o.candidate_count = Some(count);
            o.graph = Some(parsed.graph);
            return o;
        }
        if kind != QueryKind::Insert {
            let unmatched = parsed.bindings.iter().find_map(|b| match b.state {
                BindingState::Unmatched => parsed.graph.object(b.object),
                _ => None,
            });
            if let Some(obj) = unmatched {
                o.text = fill(
                    &clar.unmatched,
                    &[
                        ("class", kg.display_name(&obj.class.clone().into())),
                        ("constraints", constraint_text(&kg, &obj.constraints)),
                    ],
                );
                o.candidate_count = Some(0);
                o.graph = Some(parsed.graph);
                return o;
            }
        }
        let plan = match compile(&parsed.graph, kind, target, &self.templates, &self.mint_base) {
            Ok(p) => p,
            Err(_) => {
                o.text = fill(&clar.nothing_understood, &[("text", current.to_string())]);
                o.graph = Some(parsed.graph);
                return o;
            }
        };

        let answer = if kind == QueryKind::Insert {
            drop(kg);
            let mut w = self.write_kg();
            execute_insert(&plan, &mut w)
        } else {
            let a = execute_query(&plan, &parsed.graph, &kg, &self.templates);
            drop(kg);
            a
        };
        o.sparql = Some(answer.sparql.clone());
        let rows = answer.solutions.len();
        if kind == QueryKind::Select && rows == 0 {
            o.text = clar.empty_result.clone();
            o.candidate_count = Some(0);
        } else if kind == QueryKind::Select && rows > self.dialogue.max_results {
            o.condition = Condition::TooManyResults;
            o.text = fill(&clar.too_many_results, &[("count", rows.to_string())]);
            o.candidate_count = Some(rows);
        } else {
            o.condition = Condition::Answered;
            o.kind = if kind == QueryKind::Insert {
                ReplyKind::ExtractionReport
            } else {
                ReplyKind::Answer
            };
            o.text = answer.cards.iter().map(|c| c.text()).collect::<Vec<_>>().join("\n\n");
        }
        o.answer = Some(answer);
        o.plan = Some(plan);
        o.graph = Some(parsed.graph);
        o
    }

    fn parse_ambiguity_text(&self, parsed: &Parsed, kg: &TripleGraph) -> Option<String> {
        let d = &parsed.graph;
        let turn = d.text.last_turn();
        let a = parsed.disambiguation.ambiguities.iter().find(|a| {
            d.mention(a.winner)
                .is_some_and(|m| m.tokens.iter().any(|&t| d.text.tokens[t].turn == turn))
        })?;
        let (w, l) = (d.mention(a.winner)?, d.mention(a.loser)?);
        let text: Vec<&str> = w.tokens.iter().map(|&t| d.text.tokens[t].text.as_str()).collect();
        let mut options = [
            kg.display_name(&w.reference.clone().into()),
            kg.display_name(&l.reference.clone().into()),
        ];
        options.sort();
        Some(fill(
            &self.templates.clarifications.ambiguous_parse,
            &[("text", text.join(" ")), ("options", options.join(" or "))],
        ))
    }
}

fn constraint_text(kg: &TripleGraph, constraints: &[(Iri, crate::rdf::Literal)]) -> String {
    constraints
        .iter()
        .map(|(p, v)| format!("{} \"{}\"", kg.display_name(&p.clone().into()), v.lexical))
        .collect::<Vec<_>>()
        .join(" and ")
}

struct Outcome {
    kind: ReplyKind,
    condition: Condition,
    text: String,
    answer: Option<crate::compiler::Answer>,
    sparql: Option<String>,
    candidate_count: Option<usize>,
    dot: String,
    read_with: Vec<String>,
    plan: Option<QueryPlan>,
    graph: Option<DocumentGraph>,
}

impl Outcome {
    fn clarify(read_with: Vec<String>, condition: Condition, text: String) -> Self {
        Outcome {
            kind: ReplyKind::ClarifyingQuestion,
            condition,
            text,
            answer: None,
            sparql: None,
            candidate_count: None,
            dot: String::new(),
            read_with,
            plan: None,
            graph: None,
        }
    }
}
