//! The per-iteration max-min problem: closed form against brute force.
//!
//! A unit point mass with `λ = κ = σ = 1` has `γ = (√5 − 1)/2`. A sparse
//! prior is then solved both ways.
//!
//! Run with `cargo run --release --example saddle_point`.

use ldnn::rng::{derive_key, stream, Domain};
use ldnn::state_evolution::{gamma_fixed_point, saddle_bruteforce_oracle, saddle_objective, solve_saddle};
use ldnn::{sample_prior_particles, InitSpec, ParticleCloud, PriorSpec, ThetaPrior};

fn main() -> ldnn::Result<()> {
    let unit = ParticleCloud::constant(1, 1, 1.0, 1.0);
    let (gamma, residual) = gamma_fixed_point(&unit, 1.0, 1.0)?;
    println!("unit point mass: gamma = {gamma:.15}  (golden {:.15}), residual {residual:.1e}", (5f64.sqrt() - 1.0) / 2.0);

    let prior = PriorSpec::new(ThetaPrior::Bernoulli { p: 0.05 }, InitSpec::Gaussian { stddev: 1.0 });
    let mut rng = stream(derive_key(3, Domain::StateEvolution, 0), 0);
    let cloud = sample_prior_particles(&prior, 1, 100_000, &mut rng)?;
    let (lambda, kappa, sigma) = (0.05, 4.0, 0.1);

    let closed = solve_saddle(&cloud, lambda, kappa, sigma)?;
    let brute = saddle_bruteforce_oracle(&cloud, lambda, kappa, sigma)?;
    println!("\nbernoulli(0.05) prior, gaussian init, lambda {lambda}, kappa {kappa}, sigma {sigma}");
    println!("            {:>12} {:>12} {:>12}", "gamma", "beta", "tau");
    println!("closed form {:>12.8} {:>12.8} {:>12.8}", closed.gamma, closed.beta, closed.tau);
    println!("brute force {:>12.8} {:>12.8} {:>12.8}", brute.gamma, brute.beta, brute.tau);
    println!(
        "objective at the two points: {:.10} vs {:.10}",
        saddle_objective(&cloud, lambda, kappa, sigma, closed.tau, closed.beta),
        saddle_objective(&cloud, lambda, kappa, sigma, brute.tau, brute.beta)
    );
    Ok(())
}
