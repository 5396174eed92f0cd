//! RDF store: terms, the in-memory triple graph, the Turtle subset reader
//! and writer, BGP matching and schema path search.

pub mod bgp;
pub mod graph;
pub mod schema_path;
pub mod term;
pub mod turtle;

pub use bgp::{is_valid_var, match_bgp, PatternTerm, Solution, TriplePattern};
pub use graph::{PropertyInfo, SchemaEdge, SharedGraph, TripleGraph};
pub use schema_path::{connector_path, shortest_schema_path, ConnectorPath, SchemaPathError, SchemaStep};
pub use term::{vocab, Iri, Literal, Term, Triple};
pub use turtle::{load_turtle, load_turtle_into, to_turtle, TurtleError};
