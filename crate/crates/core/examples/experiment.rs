//! Runs a TOML experiment config through the full pipeline.
//!
//! cargo run --release --example experiment [config.toml]

use macropeaks::harness::{run_experiment, ExperimentConfig};
use std::path::PathBuf;

fn main() -> macropeaks::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| {
            PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/acceptance/counting_d1.toml")
        });
    let cfg = ExperimentConfig::from_path(&path)?;
    let rec = run_experiment(&cfg)?;
    println!(
        "{} ({} replicate rows, {:.2}s)",
        rec.name,
        rec.payload.replicates.len(),
        rec.wall_clock_secs
    );
    for a in &rec.payload.aggregates {
        println!(
            "  gamma = {:<5} {:<16} {:>10.4} +- {:.4} (n = {})",
            a.gamma, a.metric, a.value, a.stderr, a.count
        );
    }
    for t in &rec.payload.targets {
        println!("  {} {}", if t.passed { "PASS" } else { "FAIL" }, t.detail);
    }
    for w in &rec.payload.warnings {
        println!("  warning: {w}");
    }
    std::process::exit(rec.exit_code())
}
