//! Command-line front end: family parsing, JSON reports and Julia-set rendering.

pub mod commands;
pub mod points;
pub mod render;
pub mod report;

use std::io::Write;

use clap::Parser;

pub use commands::{run, Cli, Outcome};

/// Parses `args` (including the program name), runs the command and writes
/// its output; returns the process exit code.
pub fn main_with_args<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let outcome = run(&cli);
    let common = cli.command.common();
    let json = outcome.report.to_json();
    let is_render = matches!(cli.command, commands::Command::Render { .. });
    if let (Some(path), false) = (&common.out, is_render) {
        if let Err(e) = std::fs::write(path, &json) {
            eprintln!("cannot write {}: {e}", path.display());
            return 1;
        }
    }
    let mut stdout = std::io::stdout().lock();
    let _ = if common.json { writeln!(stdout, "{json}") } else { write!(stdout, "{}", outcome.summary) };
    for e in &outcome.report.errors {
        eprintln!("{} error in {}: {}", e.kind, e.stage, e.message);
    }
    outcome.exit
}
