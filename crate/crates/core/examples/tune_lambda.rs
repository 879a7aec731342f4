//! Choose the ridge penalty by minimizing the best predicted ℓ1 error over
//! the horizon, on the default log grid.
//!
//! Run with `cargo run --release --example tune_lambda`.

use ldnn::commands::{default_lambda_grid, tune_lambda};
use ldnn::{ExperimentConfig, InitSpec, MetricSpec, PriorSpec, ReweightSpec, ThetaPrior};

fn main() -> ldnn::Result<()> {
    let config = ExperimentConfig {
        n: 250,
        d: 2000,
        kappa: 8.0,
        sigma: 0.1,
        lambda: 0.01,
        b: 1,
        horizon: 8,
        trials: 1,
        seed: 1,
        psi: ReweightSpec::TanhAbs,
        prior: PriorSpec::new(ThetaPrior::Bernoulli { p: 0.01 }, InitSpec::Ones),
        metrics: vec![MetricSpec::L1Error],
        particles: 100_000,
    };
    let result = tune_lambda(&config, &default_lambda_grid())?;
    for row in &result.rows {
        let mark = if row.lambda == result.best_lambda { "  <-" } else { "" };
        println!(
            "lambda {:>10.3e}  min l1 {:.6} at t = {}{mark}",
            row.lambda, row.min_predicted_l1, row.best_t
        );
    }
    Ok(())
}
