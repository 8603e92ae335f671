//! Minimal ask/tell loop: minimize the 10-dimensional sphere with CMA-ES.
//!
//! Run with: `cargo run --release --example quickstart`

use mapcma::{ask, tell, SearchDistribution, StrategyParams, Variant};
use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

fn sphere(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

fn main() -> mapcma::Result<()> {
    let n = 10;
    let params = StrategyParams::new(n, None, Variant::CmaEs, None)?;
    let mut state = SearchDistribution::new(DVector::from_element(n, 3.0), 2.0);
    let mut rng = ChaCha12Rng::seed_from_u64(42);

    let mut evals = 0u64;
    let mut best = f64::INFINITY;
    while best >= 1e-10 {
        let mut pop = ask(&state, &params, &mut rng)?;
        pop.evaluate_with(sphere);
        evals += pop.len() as u64;
        best = best.min(pop.best().value);
        state = tell(&state, &params, &pop)?;
    }

    println!("reached f = {best:.3e} after {evals} evaluations");
    println!(
        "final mean norm: {:.3e}, sigma: {:.3e}",
        state.mean.norm(),
        state.sigma
    );
    Ok(())
}
