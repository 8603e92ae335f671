//! One benchmark-table cell, programmatically: seeded parallel trials,
//! SR/SP1 aggregation, and the summary CSV row.
//!
//! Run with: `cargo run --release --example benchmark_cell`

use mapcma::config::RunSpec;
use mapcma::harness::run_experiment;
use mapcma::report::{SummaryRow, CSV_HEADER};
use mapcma::{Function, Objective, Radius, Variant};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = RunSpec {
        objective: Objective::new(Function::Ellipsoid, 10)?,
        variant: Variant::MapCma,
        radius: Some(Radius::Dim),
        lambda: None,
        trials: 50,
        seed: 42,
        target: 1e-10,
        max_evals_factor: 1_000_000,
        h_sigma: false,
    };
    let cfg = spec.trial_config()?;
    let summary = run_experiment(&cfg, spec.trials, spec.seed, 0);

    println!(
        "{} N={} {} r={}: SR = {:.2}, SP1 = {}",
        spec.objective.function(),
        spec.objective.dim(),
        spec.variant,
        spec.radius.unwrap(),
        summary.success_rate,
        summary.sp1.map_or("-".into(), |v| format!("{v:.0}")),
    );
    println!("{CSV_HEADER}");
    println!(
        "{}",
        SummaryRow::new(&spec, cfg.params.lambda, &summary).emit()
    );
    Ok(())
}
