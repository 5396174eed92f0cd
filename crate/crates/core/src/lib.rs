pub mod analysis;
pub mod assembly;
pub mod compiler;
pub mod config;
pub mod dialogue;
pub mod docgraph;
pub mod engine;
pub mod flow;
pub mod lexicon;
pub mod matching;
pub mod pipeline;
pub mod rdf;
pub mod resolution;
pub mod templates;
