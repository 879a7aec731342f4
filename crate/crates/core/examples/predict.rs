//! Step the state-evolution recursion by hand and print the predicted
//! trajectory next to the saddle scalars.
//!
//! Run with `cargo run --release --example predict [-- config.json]`.
//! Without an argument the sparse-regression config in
//! `examples/configs/sparse.json` is used with fewer particles.

use std::path::PathBuf;

use ldnn::commands::{load_config, Overrides};
use ldnn::state_evolution::StateEvolution;
use ldnn::MetricSpec;

fn main() -> ldnn::Result<()> {
    let (path, overrides) = match std::env::args().nth(1) {
        Some(p) => (PathBuf::from(p), Overrides::default()),
        None => (
            PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/configs/sparse.json")),
            Overrides {
                particles: Some(200_000),
                ..Overrides::default()
            },
        ),
    };
    let config = load_config(&path, &overrides)?;
    println!(
        "{}: kappa = {}, lambda = {}, psi = {}, {} particles",
        path.display(),
        config.kappa,
        config.lambda,
        config.psi.name(),
        config.particles
    );

    let mut se = StateEvolution::new(&config)?;
    println!("{:>3} {:>10} {:>10} {:>10} {:>12} {:>10}", "t", "gamma", "beta", "tau", "l1_error", "mc_stderr");
    for _ in 0..config.horizon {
        let step = se.step()?;
        let l1 = step
            .predictions
            .iter()
            .find(|p| p.metric == MetricSpec::L1Error);
        println!(
            "{:>3} {:>10.6} {:>10.6} {:>10.6} {:>12.6} {:>10.1e}",
            step.t,
            step.saddle.gamma,
            step.saddle.beta,
            step.saddle.tau,
            l1.map_or(f64::NAN, |p| p.value),
            l1.map_or(f64::NAN, |p| p.mc_stderr)
        );
    }
    Ok(())
}
