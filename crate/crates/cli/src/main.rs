use std::process::ExitCode;

use clap::Parser;
use elastowave_cli::{run, Cli, RunError};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = cli.resolve().map_err(RunError::from).and_then(|cfg| {
        if cli.print_config {
            println!("{}", cfg.to_json());
            return Ok(());
        }
        run(&cfg, &mut std::io::stdout().lock())
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("elastowave: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
