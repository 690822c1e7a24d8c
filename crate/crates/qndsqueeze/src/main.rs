use std::io::{self, Write};
use std::process::ExitCode;

use clap::Parser;
use qndsqueeze::cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let result = run(cli, &mut out).and_then(|()| out.flush().map_err(Into::into));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qndsqueeze: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
