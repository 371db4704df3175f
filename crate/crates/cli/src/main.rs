use std::fs;
use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use lpiv_cli::{exit_code, run, Cli};

fn main() -> ExitCode {
    env_logger::init();
    let argv: Vec<String> = std::env::args().collect();
    // clap exits with code 2 on its own for malformed argument lines.
    let cli = Cli::parse();
    match run(&cli, &argv) {
        Ok(rendered) => {
            let result = match rendered.output {
                None => std::io::stdout()
                    .write_all(rendered.text.as_bytes())
                    .map_err(|e| e.to_string()),
                Some(path) => fs::write(&path, rendered.text.as_bytes())
                    .map_err(|e| format!("cannot write {}: {e}", path.display())),
            };
            match result {
                Ok(()) => ExitCode::SUCCESS,
                Err(msg) => {
                    eprintln!("error: {msg}");
                    ExitCode::from(1)
                }
            }
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err) as u8)
        }
    }
}
