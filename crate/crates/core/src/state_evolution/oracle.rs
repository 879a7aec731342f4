//! Brute-force solution of the max-min problem, for validating the closed form.
//!
//! Directly searches
//!
//! ```text
//! max_{τ ≥ 0} min_{β ≥ 0}  τσ²/β + τβ(1 − κ) − τ² + τλ E[(1/b) Σ_j (Θ_j² + β²κ)/(τV_j² + βλ)]
//! ```
//!
//! with a log-spaced scan to bracket each axis followed by golden-section
//! refinement. The objective is convex in `β` and concave in `τ`. Nothing here
//! uses the fixed-point reduction.

use super::saddle::SaddleSolution;
use crate::error::{Error, Result};
use crate::prior::ParticleCloud;

const SCAN_LO: f64 = 1e-8;
const SCAN_HI: f64 = 1e4;
const SCAN_POINTS: usize = 97;
const GOLDEN_REL_TOL: f64 = 1e-11;

/// The cloud collapsed to distinct `(V², Θ²)` atoms with multiplicities.
struct Atoms {
    v2: Vec<f64>,
    t2: Vec<f64>,
    weight: Vec<f64>,
    total: f64,
}

impl Atoms {
    fn from_cloud(cloud: &ParticleCloud) -> Self {
        let mut pairs: Vec<(u64, u64)> = cloud
            .v()
            .iter()
            .zip(cloud.theta())
            .map(|(&v, &t)| ((v * v).to_bits(), (t * t).to_bits()))
            .collect();
        pairs.sort_unstable();
        let mut atoms = Atoms {
            v2: Vec::new(),
            t2: Vec::new(),
            weight: Vec::new(),
            total: pairs.len() as f64,
        };
        let mut last = None;
        for p in pairs {
            if Some(p) == last {
                *atoms.weight.last_mut().unwrap() += 1.0;
            } else {
                atoms.v2.push(f64::from_bits(p.0));
                atoms.t2.push(f64::from_bits(p.1));
                atoms.weight.push(1.0);
                last = Some(p);
            }
        }
        atoms
    }

    fn mean(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        let mut s = 0.0;
        for k in 0..self.v2.len() {
            s += self.weight[k] * f(self.v2[k], self.t2[k]);
        }
        s / self.total
    }
}

struct Objective {
    atoms: Atoms,
    lambda: f64,
    kappa: f64,
    sigma: f64,
}

impl Objective {
    fn eval(&self, tau: f64, beta: f64) -> f64 {
        let (l, k) = (self.lambda, self.kappa);
        let e = self
            .atoms
            .mean(|v2, t2| (t2 + beta * beta * k) / (tau * v2 + beta * l));
        tau * self.sigma * self.sigma / beta + tau * beta * (1.0 - k) - tau * tau + tau * l * e
    }
}

/// Value of the max-min objective at `(τ, β)` with expectations over `cloud`.
pub fn saddle_objective(cloud: &ParticleCloud, lambda: f64, kappa: f64, sigma: f64, tau: f64, beta: f64) -> f64 {
    Objective {
        atoms: Atoms::from_cloud(cloud),
        lambda,
        kappa,
        sigma,
    }
    .eval(tau, beta)
}

fn log_grid() -> Vec<f64> {
    let (a, b) = (SCAN_LO.ln(), SCAN_HI.ln());
    (0..SCAN_POINTS)
        .map(|i| (a + (b - a) * i as f64 / (SCAN_POINTS - 1) as f64).exp())
        .collect()
}

/// Minimize `f` over `(0, ∞)`: bracket on the log grid, then golden section.
fn minimize(axis: &'static str, f: impl Fn(f64) -> f64) -> Result<f64> {
    let grid = log_grid();
    let values: Vec<f64> = grid.iter().map(|&x| f(x)).collect();
    let best = values
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i);
    let i = match best {
        Some(i) if i > 0 && i + 1 < grid.len() => i,
        _ => {
            let trace = grid
                .iter()
                .zip(&values)
                .step_by(8)
                .map(|(x, v)| format!("{x:.2e}:{v:.4e}"))
                .collect::<Vec<_>>()
                .join(" ");
            return Err(Error::Bracket { axis, trace });
        }
    };
    Ok(golden_section(&f, grid[i - 1], grid[i + 1]))
}

fn golden_section(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..400 {
        if b - a <= GOLDEN_REL_TOL * (a + b) * 0.5 {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Saddle by nested scalar search: outer maximization over `τ`, inner minimization over `β`.
pub fn saddle_bruteforce_oracle(cloud: &ParticleCloud, lambda: f64, kappa: f64, sigma: f64) -> Result<SaddleSolution> {
    let obj = Objective {
        atoms: Atoms::from_cloud(cloud),
        lambda,
        kappa,
        sigma,
    };
    let inner = |tau: f64| minimize("beta", |beta| obj.eval(tau, beta));
    // Inner failures surface as NaN here and are re-run below for the error.
    let tau = minimize("tau", |tau| match inner(tau) {
        Ok(beta) => -obj.eval(tau, beta),
        Err(_) => f64::NAN,
    })?;
    let beta = inner(tau)?;
    let gamma = tau / beta;
    let e1 = obj.atoms.mean(|v2, _| 1.0 / (gamma * v2 + lambda));
    let e2 = obj.atoms.mean(|v2, _| 1.0 / ((gamma * v2 + lambda) * (gamma * v2 + lambda)));
    Ok(SaddleSolution {
        gamma,
        beta,
        tau,
        fixed_point_residual: (1.0 - kappa + lambda * kappa * e1 - gamma).abs(),
        denominator: 2.0 * gamma + kappa - 1.0 - lambda * lambda * kappa * e2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_reduced_point_mass() {
        // V ≡ 0, Θ ≡ 0: f = τσ²/β + τβ(1−κ) − τ² + τβκ = τ/β + τβ − τ² at σ=κ=λ=1,
        // minimized at β = 1, then 2τ − τ² is maximized at τ = 1.
        let cloud = ParticleCloud::constant(1, 4, 0.0, 0.0);
        let s = saddle_bruteforce_oracle(&cloud, 1.0, 1.0, 1.0).unwrap();
        assert!((s.tau - 1.0).abs() < 1e-6);
        assert!((s.beta - 1.0).abs() < 1e-6);
    }

    #[test]
    fn returned_tau_is_a_local_maximizer() {
        let cloud = ParticleCloud::new(1, vec![1.0, 0.5, 2.0, 1.0], vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let (lambda, kappa, sigma) = (0.1, 2.0, 0.1);
        let s = saddle_bruteforce_oracle(&cloud, lambda, kappa, sigma).unwrap();
        let f = |tau| saddle_objective(&cloud, lambda, kappa, sigma, tau, s.beta);
        let delta = 1e-4;
        assert!(f(s.tau + delta) <= f(s.tau));
        assert!(f(s.tau - delta) <= f(s.tau));
        let g = |beta| saddle_objective(&cloud, lambda, kappa, sigma, s.tau, beta);
        assert!(g(s.beta + delta) >= g(s.beta));
        assert!(g(s.beta - delta) >= g(s.beta));
    }

    #[test]
    fn unbounded_direction_fails_to_bracket() {
        // σ = 0, Θ ≡ 0, V ≡ 0: f = τβ − τ² is minimized at the β = 0 boundary.
        let cloud = ParticleCloud::constant(1, 2, 0.0, 0.0);
        assert!(matches!(
            saddle_bruteforce_oracle(&cloud, 1.0, 1.0, 0.0),
            Err(Error::Bracket { .. })
        ));
    }
}
