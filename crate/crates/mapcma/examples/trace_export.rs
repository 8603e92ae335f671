//! Convergence traces: record per-generation (evaluations, best_f) pairs and
//! export them as JSON for plotting.
//!
//! Run with: `cargo run --release --example trace_export`

use mapcma::harness::{run_experiment, TrialConfig};
use mapcma::report::{trace_file, write_trace_json};
use mapcma::{Function, Objective, Variant};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = TrialConfig::new(
        Objective::new(Function::Cigar, 10)?,
        Variant::MapCma,
        Some(10.0),
    )?
    .with_trace(true);

    let base_seed = 42;
    let summary = run_experiment(&cfg, 3, base_seed, 0);
    let traces = trace_file(&summary, base_seed);

    for trial in &traces.trials {
        let (evals, best) = *trial.trace.last().unwrap();
        println!(
            "seed {:>20}: {} generations recorded, final best {:.3e} at {} evals",
            trial.seed,
            trial.trace.len(),
            best,
            evals
        );
    }

    let path = std::env::temp_dir().join("mapcma_trace.json");
    write_trace_json(&path, &traces)?;
    println!("wrote {}", path.display());
    Ok(())
}
