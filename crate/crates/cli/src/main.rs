use std::io::Write;
use std::process::ExitCode;

use churnlab::cli::Cli;
use churnlab::commands::run;
use clap::Parser;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(outcome) => {
            let mut stdout = std::io::stdout().lock();
            for line in &outcome.lines {
                // a closed pipe is not an experiment failure
                if writeln!(stdout, "{line}").is_err() {
                    break;
                }
            }
            for f in &outcome.files {
                eprintln!("wrote {}", f.display());
            }
            if outcome.problems > 0 {
                eprintln!("error: {} check or run failure(s)", outcome.problems);
                ExitCode::FAILURE
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
