//! The momentum mean update in practice: CMA-ES vs MAP-CMA on Rosenbrock,
//! where long coordinated mean moves are required and the evolution-path
//! momentum pays off.
//!
//! Run with: `cargo run --release --example momentum`

use mapcma::harness::{run_trial, TrialConfig};
use mapcma::{Function, Objective, Variant};

fn main() -> mapcma::Result<()> {
    let objective = Objective::new(Function::Rosenbrock, 20)?;
    let n = objective.dim();

    println!("rosenbrock N={n}, five seeds, evaluations to f < 1e-10:");
    println!(
        "{:<18} {:>10} {:>10} {:>10} {:>10} {:>10}",
        "variant", "seed 0", "seed 1", "seed 2", "seed 3", "seed 4"
    );

    let cells: [(Variant, Option<f64>, &str); 3] = [
        (Variant::CmaEs, None, "cma-es"),
        (Variant::MapCma, Some((n as f64).sqrt()), "map-cma r=sqrt-n"),
        (Variant::MapCma, Some(n as f64), "map-cma r=n"),
    ];
    for (variant, r, label) in cells {
        let cfg = TrialConfig::new(objective, variant, r)?;
        let mut line = format!("{label:<18}");
        for seed in 0..5u64 {
            let result = run_trial(&cfg.clone().with_seed(seed));
            let entry = if result.success {
                format!("{:>10}", result.evaluations)
            } else {
                format!("{:>10}", result.reason.name())
            };
            line.push_str(&entry);
        }
        println!("{line}");
    }
    Ok(())
}
