//! One pass from text to a resolved document graph: analysis, mention
//! search, relation induction, winner choice, hidden nodes, objects and
//! bindings.

use thiserror::Error;

use crate::analysis::{AnalysisError, Analyzer};
use crate::assembly::{choose_winners, induce_edges, insert_hidden, AssemblyError, Disambiguation};
use crate::docgraph::{DocGraphError, DocumentGraph, NodeId};
use crate::lexicon::Lexicon;
use crate::matching::{add_mentions, run_matchers, MatcherConfig};
use crate::rdf::TripleGraph;
use crate::resolution::{apply_bindings, bind_individuals, resolve_objects, BindingOutcome, VariableNames};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PipelineError {
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Stage(#[from] DocGraphError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineSettings {
    /// Longest syntactic path, in edges, for mention search and relations.
    pub max_path: usize,
    pub ambiguity_epsilon: f64,
}

impl Default for PipelineSettings {
    fn default() -> Self {
        PipelineSettings {
            max_path: 3,
            ambiguity_epsilon: 0.05,
        }
    }
}

pub struct PipelineInputs<'a> {
    pub analyzer: &'a dyn Analyzer,
    pub lexicon: &'a Lexicon,
    pub matchers: &'a MatcherConfig,
    pub variables: &'a VariableNames,
    pub settings: PipelineSettings,
}

#[derive(Debug, Clone)]
pub struct Parsed {
    pub graph: DocumentGraph,
    pub disambiguation: Disambiguation,
    /// Components that could not be joined; resolution was skipped.
    pub disconnected: Option<Vec<Vec<NodeId>>>,
    pub bindings: Vec<BindingOutcome>,
}

impl Parsed {
    /// Text of each unjoined fragment, e.g. `"fire safety", "tank"`.
    pub fn fragment_texts(&self) -> Vec<String> {
        let d = &self.graph;
        self.disconnected
            .iter()
            .flatten()
            .map(|component| {
                let parts: Vec<String> = component
                    .iter()
                    .filter_map(|&id| d.mention(id))
                    .map(|m| {
                        let words: Vec<&str> = m.tokens.iter().map(|&t| d.text.tokens[t].text.as_str()).collect();
                        format!("\"{}\"", words.join(" "))
                    })
                    .collect();
                parts.join(", ")
            })
            .collect()
    }
}

/// Runs every stage over `turns`, read as one discourse.
pub fn parse(turns: &[&str], kg: &TripleGraph, inputs: &PipelineInputs<'_>) -> Result<Parsed, PipelineError> {
    let at = inputs.analyzer.analyze_turns(turns, inputs.lexicon)?;
    let candidates = run_matchers(&at, inputs.lexicon, kg, inputs.matchers, inputs.settings.max_path);
    let mut d = DocumentGraph::new(at);
    add_mentions(&mut d, candidates);
    induce_edges(&mut d, kg, inputs.settings.max_path)?;
    let disambiguation = choose_winners(&mut d, inputs.settings.ambiguity_epsilon)?;
    match insert_hidden(&mut d, kg) {
        Ok(()) => {}
        Err(AssemblyError::Stage(e)) => return Err(e.into()),
        Err(AssemblyError::Disconnected { fragments }) => {
            return Ok(Parsed {
                graph: d,
                disambiguation,
                disconnected: Some(fragments.into_iter().map(|c| c.into_iter().collect()).collect()),
                bindings: Vec::new(),
            });
        }
    }
    resolve_objects(&mut d, kg, inputs.variables)?;
    let bindings = bind_individuals(&d, kg)?;
    apply_bindings(&mut d, &bindings);
    Ok(Parsed {
        graph: d,
        disambiguation,
        disconnected: None,
        bindings,
    })
}
