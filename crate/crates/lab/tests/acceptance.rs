//! The acceptance suite at full size. Prints one line per criterion and
//! exits nonzero naming the failures.

use std::process::ExitCode;

use minrays_lab::config::{ExperimentConfig, ExperimentKind, Level};
use minrays_lab::verify_all;

const SEED: u64 = 20_261_015;

fn main() -> ExitCode {
    let mut config = ExperimentConfig::builtin(ExperimentKind::Verify, SEED);
    config.level = Level::Full;
    println!("acceptance suite, seed {SEED}");
    let results = verify_all(&config);
    for r in &results {
        println!("{}", r.line());
    }
    let failed: Vec<String> = results
        .iter()
        .filter(|r| !r.pass)
        .map(|r| format!("{} {}", r.id, r.name))
        .collect();
    println!(
        "acceptance: {} passed, {} failed",
        results.len() - failed.len(),
        failed.len()
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failing criteria: {}", failed.join(", "));
        ExitCode::FAILURE
    }
}
