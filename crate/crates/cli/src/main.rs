use std::io::{stdin, stdout};
use std::process::ExitCode;

use clap::Parser;
use cobisim_cli::{exit_code, run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut input = stdin().lock();
    let mut out = stdout().lock();
    match run(cli, &mut input, &mut out) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
