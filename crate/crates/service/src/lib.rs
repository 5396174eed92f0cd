//! HTTP service and command-line shell around the ontoquery engine.

pub mod api;
pub mod cli;
