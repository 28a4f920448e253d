use std::io::{self, Write};
use std::process::ExitCode;

use clap::Parser;
use streamctc::cli::{self, Cli};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("STREAMCTC_LOG")).init();
    let cli = Cli::parse();
    let stdin = io::stdin();
    let mut input = stdin.lock();
    let mut out = cli::stdout();
    let result = cli::run(cli, &mut input, &mut out);
    let flushed = out.flush();
    match result {
        Ok(()) if flushed.is_ok() => ExitCode::SUCCESS,
        Ok(()) => {
            eprintln!("streamctc: writing output failed");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("streamctc: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
