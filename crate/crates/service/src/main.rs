use std::io::{stderr, stdin, stdout};
use std::process::ExitCode;

use clap::Parser;
use ontoquery_service::cli::{execute, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = execute(cli, &mut stdin().lock(), &mut stdout().lock(), &mut stderr().lock());
    ExitCode::from(code as u8)
}
