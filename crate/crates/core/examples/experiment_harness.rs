//! Driving an experiment from code instead of the command line.

use riesz_flow::cli::{run, Experiment, ExperimentConfig};

pub fn main() -> riesz_flow::Result<()> {
    let mut cfg = ExperimentConfig::defaults(Experiment::SweepD, 1)?;
    cfg.n = 256;
    let report = run(&cfg)?;
    print!("{}", report.to_csv());
    println!("all checks passed: {}", report.passed());
    Ok(())
}
