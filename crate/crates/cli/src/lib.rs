//! Config parsing, command dispatch and result emission for the `gup` binary.

pub mod config;
pub mod dispatch;
pub mod output;

use std::io::Write;
use std::path::PathBuf;

pub use config::{parse_config, ConfigError, Format, RunConfig};
pub use dispatch::{dispatch, usage, Command, Failure, Outcome, EXIT_CONFIG, EXIT_INVARIANT, EXIT_NUMERICAL, EXIT_OK};
pub use output::{fmt_real, write_document, Cell, Document, Table};

/// Flag values after command-line parsing.
#[derive(Debug, Clone, PartialEq)]
pub struct Invocation {
    pub config: PathBuf,
    pub command: String,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

/// Runs one invocation end to end and returns the process exit code.
/// Diagnostics go to `err`; results go to `--out` or, failing that, `stdout`.
pub fn run(inv: &Invocation, stdout: &mut impl Write, err: &mut impl Write) -> i32 {
    let command: Command = match inv.command.parse() {
        Ok(c) => c,
        Err(m) => {
            let _ = writeln!(err, "error: {m}\n{}", usage());
            return EXIT_CONFIG;
        }
    };
    let text = match std::fs::read_to_string(&inv.config) {
        Ok(t) => t,
        Err(e) => {
            let _ = writeln!(err, "error: cannot read {}: {e}", inv.config.display());
            return EXIT_CONFIG;
        }
    };
    let mut config = match parse_config(&text) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(err, "error: {}: {e}", inv.config.display());
            return EXIT_CONFIG;
        }
    };
    if let Some(f) = inv.format {
        config.output.format = f;
    }
    if let Some(p) = &inv.out {
        config.output.path = Some(p.clone());
    }

    let outcome = match dispatch(command, &config) {
        Ok(o) => o,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            return f.exit_code;
        }
    };
    let written = match &config.output.path {
        Some(path) => std::fs::File::create(path).and_then(|file| {
            let mut w = std::io::BufWriter::new(file);
            write_document(&outcome.document, config.output.format, &mut w)?;
            w.flush()
        }),
        None => write_document(&outcome.document, config.output.format, stdout),
    };
    if let Err(e) = written {
        let _ = writeln!(err, "error: cannot write output: {e}");
        return EXIT_CONFIG;
    }
    if let Some(note) = &outcome.note {
        let _ = writeln!(err, "{command}: {note}");
    }
    outcome.exit_code
}
