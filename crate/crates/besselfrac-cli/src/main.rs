use std::process::ExitCode;

use besselfrac_cli::{dispatch, Cli, ExitStatus};
use clap::Parser;

fn threads() -> Result<(), String> {
    let Ok(v) = std::env::var("BESSELFRAC_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("BESSELFRAC_THREADS must be a positive integer, got '{v}'"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { ExitStatus::Config.code() } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    if let Err(e) = threads() {
        eprintln!("configuration error: {e}");
        return ExitCode::from(ExitStatus::Config.code() as u8);
    }
    match dispatch(cli) {
        Ok(s) => ExitCode::from(s.code() as u8),
        Err(e) if e.is_broken_pipe() => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.status().code() as u8)
        }
    }
}
