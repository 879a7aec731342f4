//! Sparse regression end to end: tune λ, predict, simulate, compare, and
//! write the overlay plot.
//!
//! Four reweighting rules are run on the `d = 2000`, `n = 250`,
//! Bernoulli(0.01) problem. Outputs land in `target/sparse_regression/`.
//!
//! Run with `cargo run --release --example sparse_regression [-- trials]`.

use std::path::Path;

use ldnn::commands::{cmd_compare, cmd_predict, cmd_simulate, default_lambda_grid, load_config, tune_lambda, Overrides};
use ldnn::compare::Tolerance;
use ldnn::ReweightSpec;

fn main() -> ldnn::Result<()> {
    let trials: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    let base = load_config(
        Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/configs/sparse.json")),
        &Overrides {
            trials: Some(trials),
            particles: Some(300_000),
            ..Overrides::default()
        },
    )?;
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../target/sparse_regression");

    for psi in [
        ReweightSpec::TanhAbs,
        ReweightSpec::Am,
        ReweightSpec::TanhSq,
        ReweightSpec::SqrtAbs,
    ] {
        let mut config = base.clone();
        config.psi = psi;
        config.lambda = tune_lambda(&config, &default_lambda_grid())?.best_lambda;

        let out = root.join(config.psi.name());
        let (prediction, pred_path) = cmd_predict(&config, &out)?;
        let sim = cmd_simulate(&config, &out)?;
        let report = cmd_compare(&sim.aggregate_path, &pred_path, Tolerance::new(0.1, 2e-3), &out, true)?;

        println!("\n{} (lambda = {:.3e}, {trials} trials)", config.psi.name(), config.lambda);
        for (step, row) in prediction.steps.iter().zip(&report.rows) {
            println!(
                "  t={} predicted {:.5}  median {:.5}  IQR [{:.5}, {:.5}]",
                step.t,
                row.predicted.unwrap_or(f64::NAN),
                row.median.unwrap_or(f64::NAN),
                row.p25.unwrap_or(f64::NAN),
                row.p75.unwrap_or(f64::NAN)
            );
        }
        println!("  within tolerance: {}  (plot: {})", report.all_pass(), out.join("compare.svg").display());
    }
    Ok(())
}
