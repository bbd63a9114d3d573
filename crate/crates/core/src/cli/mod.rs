//! Command-line front end: configuration, experiments and reports.

pub mod config;
pub mod experiments;
pub mod report;

pub use config::{parse_config, DomainShape, Experiment, ExperimentConfig, InitialData};
pub use experiments::run;
pub use report::{Row, SweepReport};

use crate::error::Error;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERIC: i32 = 2;
pub const EXIT_TOLERANCE: i32 = 3;

/// Exit status for an error raised while configuring or running.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Usage(_) | Error::Parse { .. } => EXIT_USAGE,
        _ => EXIT_NUMERIC,
    }
}

/// Parses, runs and prints; returns the process exit status.
pub fn main_with_args(args: &[String]) -> i32 {
    if let Some(text) = config::help_request(args) {
        print!("{text}");
        return EXIT_PASS;
    }
    let cfg = match parse_config(args, None) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("riesz-flow: {e}");
            return exit_code(&e);
        }
    };
    match run(&cfg) {
        Ok(report) => {
            if cfg.out.is_none() {
                print!("{}", report.to_csv());
            }
            for c in report.checks.iter().filter(|c| !c.passed) {
                eprintln!("riesz-flow: check {} failed: {}", c.name, c.detail);
            }
            if report.passed() {
                EXIT_PASS
            } else {
                EXIT_TOLERANCE
            }
        }
        Err(e) => {
            eprintln!("riesz-flow: {e}");
            exit_code(&e)
        }
    }
}
