//! Reader and writer for the Turtle subset used by fixtures: prefix
//! directives, `a`, `;` and `,` abbreviations, IRIs, prefixed names, plain
//! and typed string literals, integers, decimals and booleans.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use super::graph::{standard_prefixes, TripleGraph};
use super::term::{vocab, Iri, Literal, Term, Triple, XSD};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TurtleError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown prefix `{prefix}` at line {line}, column {column}")]
    UnknownPrefix { prefix: String, line: usize, column: usize },
}

/// Parses Turtle text into a fresh graph.
pub fn load_turtle(text: &str) -> Result<TripleGraph, TurtleError> {
    let mut graph = TripleGraph::new();
    load_turtle_into(&mut graph, text)?;
    Ok(graph)
}

/// Parses Turtle text, adding its triples and prefixes to `graph`.
pub fn load_turtle_into(graph: &mut TripleGraph, text: &str) -> Result<usize, TurtleError> {
    let mut prefixes = standard_prefixes();
    for (p, ns) in graph.prefixes() {
        prefixes.insert(p.clone(), ns.clone());
    }
    let mut parser = Parser {
        chars: text.chars().collect(),
        pos: 0,
        line: 1,
        column: 1,
        prefixes,
        declared: BTreeMap::new(),
        triples: Vec::new(),
    };
    parser.parse_document()?;
    for (p, ns) in &parser.declared {
        graph.add_prefix(p.clone(), ns.clone());
    }
    Ok(graph.apply_insert(parser.triples))
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    column: usize,
    prefixes: BTreeMap<String, String>,
    declared: BTreeMap<String, String>,
    triples: Vec<Triple>,
}

fn is_name_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '-'
}

/// Whether `local` can be written after `prefix:` without escaping.
pub(crate) fn is_valid_local(local: &str) -> bool {
    !local.ends_with('.')
        && local.chars().all(|c| is_name_char(c) || c == '.')
        && !local.starts_with('-')
        && !local.starts_with('.')
}

impl Parser {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, offset: usize) -> Option<char> {
        self.chars.get(self.pos + offset).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, TurtleError> {
        Err(TurtleError::Syntax {
            line: self.line,
            column: self.column,
            message: message.into(),
        })
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == '#' {
                while let Some(c) = self.bump() {
                    if c == '\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn expect(&mut self, want: char) -> Result<(), TurtleError> {
        self.skip_ws();
        match self.peek() {
            Some(c) if c == want => {
                self.bump();
                Ok(())
            }
            Some(c) => self.error(format!("expected `{want}`, found `{c}`")),
            None => self.error(format!("expected `{want}`, found end of input")),
        }
    }

    fn starts_with_keyword(&self, kw: &str, case_insensitive: bool) -> bool {
        let n = kw.chars().count();
        let slice: String = self.chars[self.pos..].iter().take(n).collect();
        let matches = if case_insensitive {
            slice.eq_ignore_ascii_case(kw)
        } else {
            slice == kw
        };
        matches && self.peek_at(n).is_none_or(|c| c.is_whitespace() || c == '<')
    }

    fn parse_document(&mut self) -> Result<(), TurtleError> {
        loop {
            self.skip_ws();
            if self.peek().is_none() {
                return Ok(());
            }
            if self.starts_with_keyword("@prefix", false) {
                self.pos_advance(7);
                self.parse_prefix_body()?;
                self.expect('.')?;
            } else if self.starts_with_keyword("PREFIX", true) {
                self.pos_advance(6);
                self.parse_prefix_body()?;
            } else {
                self.parse_triples()?;
                self.expect('.')?;
            }
        }
    }

    fn pos_advance(&mut self, n: usize) {
        for _ in 0..n {
            self.bump();
        }
    }

    fn parse_prefix_body(&mut self) -> Result<(), TurtleError> {
        self.skip_ws();
        let mut name = String::new();
        while let Some(c) = self.peek() {
            if c == ':' {
                break;
            }
            if !is_name_char(c) {
                return self.error(format!("invalid character `{c}` in prefix name"));
            }
            name.push(c);
            self.bump();
        }
        self.expect(':')?;
        self.skip_ws();
        let ns = self.parse_iriref()?;
        self.prefixes.insert(name.clone(), ns.as_str().to_string());
        self.declared.insert(name, ns.as_str().to_string());
        Ok(())
    }

    fn parse_iriref(&mut self) -> Result<Iri, TurtleError> {
        if self.peek() != Some('<') {
            return self.error("expected `<`");
        }
        self.bump();
        let mut value = String::new();
        loop {
            match self.bump() {
                Some('>') => break,
                Some(c) if c.is_whitespace() => return self.error("whitespace inside IRI"),
                Some(c) => value.push(c),
                None => return self.error("unterminated IRI"),
            }
        }
        if value.is_empty() {
            return self.error("empty IRI");
        }
        if !value.contains(':') {
            return self.error(format!("relative IRI `{value}` is not supported"));
        }
        Ok(Iri::new(value))
    }

    fn parse_prefixed_name(&mut self) -> Result<Iri, TurtleError> {
        let (line, column) = (self.line, self.column);
        let mut prefix = String::new();
        while let Some(c) = self.peek() {
            if c == ':' {
                break;
            }
            if !is_name_char(c) {
                return self.error(format!("unexpected character `{c}`"));
            }
            prefix.push(c);
            self.bump();
        }
        if self.peek() != Some(':') {
            return self.error(format!("expected prefixed name, found `{prefix}`"));
        }
        self.bump();
        let mut local = String::new();
        while let Some(c) = self.peek() {
            // A dot belongs to the name only when followed by a name character.
            if is_name_char(c) || (c == '.' && self.peek_at(1).is_some_and(is_name_char)) {
                local.push(c);
                self.bump();
            } else {
                break;
            }
        }
        match self.prefixes.get(&prefix) {
            Some(ns) => Ok(Iri::new(format!("{ns}{local}"))),
            None => Err(TurtleError::UnknownPrefix { prefix, line, column }),
        }
    }

    fn parse_iri(&mut self) -> Result<Iri, TurtleError> {
        self.skip_ws();
        match self.peek() {
            Some('<') => self.parse_iriref(),
            Some(_) => self.parse_prefixed_name(),
            None => self.error("unexpected end of input"),
        }
    }

    fn parse_triples(&mut self) -> Result<(), TurtleError> {
        self.skip_ws();
        if self.peek() == Some('_') || self.peek() == Some('[') {
            return self.error("blank nodes are not supported");
        }
        let subject = self.parse_iri()?;
        loop {
            self.skip_ws();
            let predicate =
                if self.peek() == Some('a') && self.peek_at(1).is_some_and(|c| c.is_whitespace() || c == '<') {
                    self.bump();
                    vocab::rdf_type()
                } else {
                    self.parse_iri()?
                };
            loop {
                let object = self.parse_object()?;
                self.triples
                    .push(Triple::new(subject.clone(), predicate.clone(), object));
                self.skip_ws();
                if self.peek() == Some(',') {
                    self.bump();
                } else {
                    break;
                }
            }
            self.skip_ws();
            if self.peek() == Some(';') {
                while self.peek() == Some(';') {
                    self.bump();
                    self.skip_ws();
                }
                if self.peek() == Some('.') {
                    return Ok(());
                }
            } else {
                return Ok(());
            }
        }
    }

    fn parse_object(&mut self) -> Result<Term, TurtleError> {
        self.skip_ws();
        match self.peek() {
            Some('"') => self.parse_literal().map(Term::Literal),
            Some(c) if c.is_ascii_digit() || c == '-' || c == '+' => self.parse_number().map(Term::Literal),
            Some('_') | Some('[') | Some('(') => self.error("blank nodes are not supported"),
            Some(_) if self.starts_with_bool() => {
                let value = if self.peek() == Some('t') { "true" } else { "false" };
                self.pos_advance(value.len());
                Ok(Term::Literal(Literal::typed(value, Iri::new(format!("{XSD}boolean")))))
            }
            Some(_) => self.parse_iri().map(Term::Iri),
            None => self.error("expected object, found end of input"),
        }
    }

    fn starts_with_bool(&self) -> bool {
        ["true", "false"].iter().any(|kw| {
            let n = kw.len();
            let slice: String = self.chars[self.pos..].iter().take(n).collect();
            slice == *kw && self.peek_at(n).is_none_or(|c| !is_name_char(c) && c != ':')
        })
    }

    fn parse_literal(&mut self) -> Result<Literal, TurtleError> {
        self.bump();
        let mut lexical = String::new();
        loop {
            match self.bump() {
                Some('"') => break,
                Some('\\') => match self.bump() {
                    Some('n') => lexical.push('\n'),
                    Some('t') => lexical.push('\t'),
                    Some('r') => lexical.push('\r'),
                    Some('"') => lexical.push('"'),
                    Some('\\') => lexical.push('\\'),
                    Some(c) => return self.error(format!("unsupported escape `\\{c}`")),
                    None => return self.error("unterminated string"),
                },
                Some('\n') => return self.error("newline in string literal"),
                Some(c) => lexical.push(c),
                None => return self.error("unterminated string"),
            }
        }
        match self.peek() {
            Some('^') => {
                self.bump();
                if self.bump() != Some('^') {
                    return self.error("expected `^^`");
                }
                let datatype = self.parse_iri()?;
                Ok(Literal::typed(lexical, datatype))
            }
            Some('@') => self.error("language-tagged literals are not supported"),
            _ => Ok(Literal::string(lexical)),
        }
    }

    fn parse_number(&mut self) -> Result<Literal, TurtleError> {
        let mut text = String::new();
        if let Some(c @ ('-' | '+')) = self.peek() {
            text.push(c);
            self.bump();
        }
        let mut seen_dot = false;
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() {
                text.push(c);
                self.bump();
            } else if c == '.' && !seen_dot && self.peek_at(1).is_some_and(|d| d.is_ascii_digit()) {
                seen_dot = true;
                text.push(c);
                self.bump();
            } else {
                break;
            }
        }
        if !text.chars().any(|c| c.is_ascii_digit()) {
            return self.error("malformed number");
        }
        let datatype = if seen_dot {
            vocab::xsd_decimal()
        } else {
            vocab::xsd_integer()
        };
        Ok(Literal::typed(text, datatype))
    }
}

/// Serializes the graph as Turtle with sorted prefixes and subjects.
pub fn to_turtle(graph: &TripleGraph) -> String {
    let mut out = String::new();
    for (prefix, ns) in graph.prefixes() {
        let _ = writeln!(out, "@prefix {prefix}: <{ns}> .");
    }
    if !graph.prefixes().is_empty() {
        out.push('\n');
    }
    let mut current: Option<&Iri> = None;
    for t in graph.triples() {
        let pred = if t.predicate == vocab::rdf_type() {
            "a".to_string()
        } else {
            graph.compact(&t.predicate)
        };
        let obj = match &t.object {
            Term::Literal(lit) if lit.datatype == vocab::xsd_integer() && lit.as_integer().is_some() => {
                lit.lexical.clone()
            }
            other => graph.compact_term(other),
        };
        if current == Some(&t.subject) {
            let _ = write!(out, " ;\n    {pred} {obj}");
        } else {
            if current.is_some() {
                out.push_str(" .\n");
            }
            let _ = write!(out, "{} {pred} {obj}", graph.compact(&t.subject));
            current = Some(&t.subject);
        }
    }
    if current.is_some() {
        out.push_str(" .\n");
    }
    out
}
