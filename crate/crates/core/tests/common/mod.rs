#![allow(dead_code)]

use std::io::Write;

use ldnn::commands::{default_lambda_grid, tune_lambda};
use ldnn::config::DEFAULT_PARTICLES;
use ldnn::{ExperimentConfig, InitSpec, MetricSpec, PriorSpec, ReweightSpec, ThetaPrior};

/// Particle count used while scanning the λ grid.
pub const TUNING_PARTICLES: usize = 200_000;

pub fn sparse_config(psi: ReweightSpec, trials: usize) -> ExperimentConfig {
    ExperimentConfig {
        n: 250,
        d: 2000,
        kappa: 8.0,
        sigma: 0.1,
        lambda: 0.01,
        b: 1,
        horizon: 8,
        trials,
        seed: 1,
        psi,
        prior: PriorSpec::new(ThetaPrior::Bernoulli { p: 0.01 }, InitSpec::Ones),
        metrics: vec![MetricSpec::L1Error],
        particles: DEFAULT_PARTICLES,
    }
}

pub fn group_config(psi: ReweightSpec, b: usize, trials: usize) -> ExperimentConfig {
    ExperimentConfig {
        n: 500,
        d: 4000,
        kappa: 8.0,
        sigma: 0.1,
        lambda: 0.01,
        b,
        horizon: 4,
        trials,
        seed: 1,
        psi,
        prior: PriorSpec::new(ThetaPrior::GroupBernoulli { p: 0.01 }, InitSpec::Ones),
        metrics: vec![MetricSpec::L1Error],
        particles: DEFAULT_PARTICLES,
    }
}

/// `config` with λ replaced by the tuned value on the default grid.
pub fn tuned(mut config: ExperimentConfig) -> ExperimentConfig {
    let mut scan = config.clone();
    scan.particles = TUNING_PARTICLES;
    config.lambda = tune_lambda(&scan, &default_lambda_grid())
        .expect("tuning succeeds")
        .best_lambda;
    config
}

/// Print past the test harness's output capture.
pub fn verdict(criterion: u32, name: &str, pass: bool, detail: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(
        out,
        "{} criterion {criterion} ({name}): {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}
