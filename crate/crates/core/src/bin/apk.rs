use std::io::{self, Write};
use std::process::ExitCode;

use apk_core::cli::{self, Cli, Outcome};
use clap::Parser;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Cli::parse();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let code = match cli::run(args, &mut out) {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::CheckFailed) => ExitCode::from(1),
        Err(e) => {
            let _ = out.flush();
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    };
    let _ = out.flush();
    code
}
