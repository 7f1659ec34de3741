//! `tmc` — synth / discover / complete / targeted / sweep over triplet and
//! CSV files.
//!
//! Exit codes: 0 success, 1 usage error, 2 computation error.

mod commands;

use clap::error::ErrorKind;
use clap::Parser;

use commands::Cli;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e)
            if matches!(
                e.kind(),
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion
            ) =>
        {
            print!("{e}");
            std::process::exit(0);
        }
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(1);
        }
    };
    match commands::run(cli) {
        Ok(()) => {}
        Err(commands::CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            std::process::exit(1);
        }
        Err(commands::CliError::Compute(err)) => {
            eprintln!("error: {err}");
            std::process::exit(2);
        }
    }
}
