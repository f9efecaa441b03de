use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use gup_cli::{run, usage, Format, Invocation, EXIT_CONFIG};

#[derive(Debug, Parser)]
#[command(
    name = "gup",
    version,
    about = "Deformed-commutator phase signatures of pulsed optomechanics"
)]
struct Args {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Command to run, e.g. `scan` or `oracle fock`.
    #[arg(long)]
    command: String,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(["csv", "jsonl"]))]
    format: Option<String>,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            eprintln!("{}", usage());
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    let inv = Invocation {
        config: args.config,
        command: args.command,
        out: args.out,
        format: args.format.map(|f| f.parse::<Format>().expect("validated by clap")),
    };
    let code = run(&inv, &mut std::io::stdout().lock(), &mut std::io::stderr().lock());
    ExitCode::from(code as u8)
}
