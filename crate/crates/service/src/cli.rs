//! Command-line front end.

use std::io::{BufRead, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use ontoquery::config::{Config, CONFIG_ENV};
use ontoquery::dialogue::BotReply;
use ontoquery::engine::{Engine, EngineError};

use crate::api::{router, AppState};

/// Looked up in the working directory when neither `--config` nor the
/// environment names a file.
pub const DEFAULT_CONFIG: &str = "ontoquery.toml";

#[derive(Debug, Parser)]
#[command(
    name = "ontoquery",
    version,
    about = "Ask questions of an ontology in plain language"
)]
pub struct Cli {
    /// Configuration file; overrides the environment and the default path.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Answer one question and print the cards and the query.
    Ask {
        #[arg(short, long)]
        query: String,
    },
    /// Interactive conversation on standard input.
    Chat,
    /// Compile a text into facts; write them with `--commit`.
    Extract {
        #[arg(short, long)]
        file: PathBuf,
        #[arg(long)]
        commit: bool,
    },
    /// Write the document graph of a question as DOT.
    Viz {
        #[arg(short, long)]
        query: String,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
    },
}

/// Engine from `--config`, `ONTOQUERY_CONFIG` or `./ontoquery.toml`, in
/// that order; the bundled demo data when none of them exists.
pub fn load_engine(explicit: Option<&Path>) -> Result<Engine, EngineError> {
    let named = explicit
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os(CONFIG_ENV).map(PathBuf::from));
    match named {
        Some(path) => Engine::from_config(&Config::load(&path)?),
        None if Path::new(DEFAULT_CONFIG).exists() => Engine::from_config(&Config::load(Path::new(DEFAULT_CONFIG))?),
        None => Ok(Engine::demo()),
    }
}

fn print_reply(out: &mut dyn Write, reply: &BotReply) -> std::io::Result<()> {
    writeln!(out, "{}", reply.text)?;
    if let Some(sparql) = &reply.sparql {
        writeln!(out)?;
        write!(out, "{sparql}")?;
    }
    Ok(())
}

/// Runs a parsed command; the return value is the process exit code.
pub fn execute(cli: Cli, input: &mut dyn BufRead, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let engine = match load_engine(cli.config.as_deref()) {
        Ok(e) => e,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return 1;
        }
    };
    match run(engine, cli.command, input, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

fn run(
    engine: Engine,
    command: Command,
    input: &mut dyn BufRead,
    out: &mut dyn Write,
) -> Result<(), Box<dyn std::error::Error>> {
    match command {
        Command::Ask { query } => print_reply(out, &engine.ask(&query))?,
        Command::Chat => {
            let mut session = engine.new_session("chat");
            let mut line = String::new();
            loop {
                write!(out, "> ")?;
                out.flush()?;
                line.clear();
                if input.read_line(&mut line)? == 0 {
                    break;
                }
                let text = line.trim();
                if text.is_empty() {
                    continue;
                }
                if matches!(text, "quit" | "exit") {
                    break;
                }
                print_reply(out, &engine.handle_turn(&mut session, text))?;
                writeln!(out)?;
            }
        }
        Command::Extract { file, commit } => {
            let text = std::fs::read_to_string(&file).map_err(|e| format!("{}: {e}", file.display()))?;
            let x = engine.extract(&text, commit)?;
            write!(out, "{}", x.sparql)?;
            if commit {
                writeln!(out, "inserted {} new triples of {}", x.inserted, x.plan.insert.len())?;
            }
        }
        Command::Viz { query, output } => {
            let dot = engine.viz(&query)?;
            match output {
                Some(path) => std::fs::write(&path, dot).map_err(|e| format!("{}: {e}", path.display()))?,
                None => write!(out, "{dot}")?,
            }
        }
        Command::Serve { addr } => {
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(async {
                let listener = tokio::net::TcpListener::bind(addr).await?;
                writeln!(out, "listening on http://{}", listener.local_addr()?)?;
                out.flush()?;
                axum::serve(listener, router(AppState::new(engine))).await
            })?;
        }
    }
    Ok(())
}
