use std::io::{self, Write};
use std::process::ExitCode;

use clap::Parser;
use gelsolve_cli::{execute, init_threads, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let mut err = io::stderr();
    let result = init_threads().and_then(|()| execute(&cli, &mut out, &mut err));
    let _ = out.flush();
    match result {
        Ok(status) => ExitCode::from(status.code() as u8),
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.code() as u8)
        }
    }
}
