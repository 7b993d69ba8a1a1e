//! Library half of the `besselfrac` command: configuration, the
//! subcommands and the verification suites behind `verify`.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod apply;
pub mod characterize;
pub mod config;
pub mod dump;
pub mod error;
pub mod report;
pub mod suites;

use std::io::Write;
use std::path::Path;

pub use config::{Cli, Command, RunConfig};
pub use error::{CliError, ExitStatus};

/// The output file, or stdout.
pub fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

/// Run one parsed command.
pub fn dispatch(cli: Cli) -> Result<ExitStatus, CliError> {
    match cli.command {
        Command::Apply(args) => apply::run(&RunConfig::resolve(&args)?),
        Command::Dump { kind, common } => dump::run(kind, &RunConfig::resolve(&common)?),
        Command::Holder(args) => characterize::holder(&RunConfig::resolve(&args)?),
        Command::Carleson(args) => characterize::carleson(&RunConfig::resolve(&args)?),
        Command::Verify { suite, common } => {
            let cfg = RunConfig::resolve(&common)?;
            let opts = suites::SuiteOptions {
                quick: cfg.quick,
                lambda: cfg.lambda_explicit,
            };
            let report = suites::run_suite(suite, &opts);
            let mut out = open_output(cfg.output.as_deref())?;
            writeln!(out, "{}", report.to_json()?)?;
            out.flush()?;
            for c in report.failing() {
                eprintln!(
                    "FAIL {} (measured {}, target {}, tolerance {})",
                    c.check_name, c.measured, c.target, c.tolerance
                );
            }
            Ok(if report.pass {
                ExitStatus::Ok
            } else {
                ExitStatus::CheckFailed
            })
        }
    }
}
