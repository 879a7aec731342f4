//! Block reweighting on group-sparse signals: prediction after four
//! iterations as the block size grows, for the group-aware and the
//! group-blind rule, each at its own tuned λ.
//!
//! Run with `cargo run --release --example group_sparsity [-- --simulate]`.

use std::path::Path;

use ldnn::commands::{default_lambda_grid, load_config, sweep, Overrides, SweepAxis, SweepOptions};
use ldnn::{MetricSpec, ReweightSpec};

fn main() -> ldnn::Result<()> {
    let simulate = std::env::args().any(|a| a == "--simulate");
    let base = load_config(
        Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/configs/group_sparse.json")),
        &Overrides::default(),
    )?;
    let options = SweepOptions {
        axis: SweepAxis::B,
        values: vec![1.0, 2.0, 4.0, 8.0],
        simulate,
        tune_grid: Some(default_lambda_grid()),
    };

    for psi in [ReweightSpec::GroupAwareTanh, ReweightSpec::GroupBlindTanh] {
        let mut config = base.clone();
        config.psi = psi;
        println!("\n{}", config.psi.name());
        for point in sweep(&config, &options)? {
            let last = point.prediction.steps.last().expect("T > 0");
            let median = point
                .simulation
                .as_ref()
                .and_then(|s| s.series(MetricSpec::L1Error))
                .and_then(|s| s.last().map(|x| format!("  median {:.5}", x.median)))
                .unwrap_or_default();
            println!(
                "  b = {:<2} lambda = {:.3e}  predicted l1 at t={}: {:.5}{median}",
                point.value,
                point.config.lambda,
                last.t,
                last.value(MetricSpec::L1Error).unwrap_or(f64::NAN)
            );
        }
    }
    Ok(())
}
