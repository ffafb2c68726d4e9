use std::process::ExitCode;

use clap::Parser;
use latent_bounds_cli::{run, Cli};

fn main() -> ExitCode {
    // Usage errors exit with 1 so that 2 and 3 keep their meaning.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
