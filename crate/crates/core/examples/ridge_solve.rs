//! The weighted ridge `u`-update on one random batch: primal and dual
//! routes agree, and the stationarity residual is at rounding level.
//!
//! Run with `cargo run --release --example ridge_solve`.

use ldnn::linalg::{kkt_residual, solve_dual, solve_primal, weighted_ridge_solve};
use ldnn::rng::{derive_key, stream, Domain};
use ldnn::simulate::generate_batch;
use rand::Rng;

fn main() -> ldnn::Result<()> {
    let (n, d, lambda) = (60, 240, 0.05);
    let mut rng = stream(derive_key(7, Domain::Trial, 0), 0);

    // a sparse target and weights with a few exact zeros
    let theta: Vec<f64> = (0..d).map(|j| if j % 20 == 0 { 1.0 } else { 0.0 }).collect();
    let v: Vec<f64> = (0..d)
        .map(|j| if j % 17 == 0 { 0.0 } else { rng.random_range(0.2..1.5) })
        .collect();
    let batch = generate_batch(n, d, &theta, 0.1, &mut rng);

    let primal = solve_primal(&batch, &v, lambda)?;
    let dual = solve_dual(&batch, &v, lambda)?;
    let auto = weighted_ridge_solve(&batch, &v, lambda)?;

    let gap = primal
        .iter()
        .zip(&dual)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    println!("n = {n}, d = {d}, lambda = {lambda}");
    println!("max |u_primal - u_dual|   = {gap:.3e}");
    println!("KKT residual (dual route) = {:.3e}", kkt_residual(&batch, &v, lambda, &dual));
    println!("automatic route is dual   = {}", auto == dual);

    let zero_weight_mass: f64 = v
        .iter()
        .zip(&auto)
        .filter(|(w, _)| **w == 0.0)
        .map(|(_, u)| u.abs())
        .sum();
    println!("sum |u_j| where v_j = 0   = {zero_weight_mass}");
    Ok(())
}
