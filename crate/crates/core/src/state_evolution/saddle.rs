//! Closed-form solution of the per-iteration max-min problem.
//!
//! With `γ = τ/β` the saddle conditions reduce to the scalar fixed point
//!
//! ```text
//! γ = 1 − κ + λκ E[(1/b) Σ_j 1/(γ V_j² + λ)]
//! ```
//!
//! after which
//!
//! ```text
//! β² = (σ² + λ² E[(1/b) Σ_j Θ_j²/(γV_j² + λ)²]) / (2γ + κ − 1 − λ²κ E[(1/b) Σ_j 1/(γV_j² + λ)²])
//! τ  = γ β
//! ```

use serde::{Deserialize, Serialize};

use super::reduce::coordinate_sums;
use crate::error::{Error, Result};
use crate::prior::ParticleCloud;

/// Residual target for the γ fixed point.
pub const GAMMA_TOLERANCE: f64 = 1e-12;
/// Iteration cap for the bracketed γ solve.
pub const GAMMA_MAX_ITER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaddleSolution {
    /// `τ / β`, in `(max(0, 1 − κ), 1]`.
    pub gamma: f64,
    pub beta: f64,
    pub tau: f64,
    /// `|γ − RHS(γ)|` at the returned `γ`.
    pub fixed_point_residual: f64,
    /// Denominator of the `β²` expression; positive for a valid saddle.
    pub denominator: f64,
}

/// `RHS(γ) − γ` and its derivative, from one pass over the cloud.
fn fixed_point_gap(cloud: &ParticleCloud, lambda: f64, kappa: f64, gamma: f64) -> (f64, f64) {
    let len = cloud.v().len() as f64;
    let [s1, s2] = coordinate_sums(cloud.v().len(), |range| {
        let mut acc = [0.0; 2];
        for &v in &cloud.v()[range] {
            let v2 = v * v;
            let r = 1.0 / (gamma * v2 + lambda);
            acc[0] += r;
            acc[1] += v2 * r * r;
        }
        acc
    });
    let rhs = 1.0 - kappa + lambda * kappa * s1 / len;
    let drhs = -lambda * kappa * s2 / len;
    (rhs - gamma, drhs - 1.0)
}

/// The right-hand side of the γ fixed point with expectations over `cloud`.
pub fn gamma_rhs(cloud: &ParticleCloud, lambda: f64, kappa: f64, gamma: f64) -> f64 {
    fixed_point_gap(cloud, lambda, kappa, gamma).0 + gamma
}

/// Root of `γ = RHS(γ)` on `[0, 1]`, returned with its residual.
///
/// `RHS(0) = 1`, `RHS ≤ 1` and `RHS` is strictly decreasing, so `RHS(γ) − γ`
/// changes sign exactly once on `[0, 1]`. Newton steps are taken when they stay
/// inside the current bracket; otherwise the bracket is bisected.
///
/// When the bracket shrinks to a few ulps before the residual reaches
/// [`GAMMA_TOLERANCE`], the root is resolved to working precision and the
/// remaining residual is rounding noise in `RHS` (its terms can be of size
/// `κ`). The best iterate is returned in that case.
pub fn gamma_fixed_point(cloud: &ParticleCloud, lambda: f64, kappa: f64) -> Result<(f64, f64)> {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let (h_hi, _) = fixed_point_gap(cloud, lambda, kappa, hi);
    if h_hi >= 0.0 {
        return Ok((hi, h_hi.abs()));
    }
    let mut best = (hi, h_hi.abs());
    let mut x = 0.5;
    let mut collapsed = false;
    for _ in 0..GAMMA_MAX_ITER {
        let (h, dh) = fixed_point_gap(cloud, lambda, kappa, x);
        if h.abs() < best.1 {
            best = (x, h.abs());
        }
        if h.abs() <= GAMMA_TOLERANCE {
            return Ok((x, h.abs()));
        }
        if h > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - h / dh;
        let next = if newton > lo && newton < hi && dh < 0.0 {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if next == x || hi - lo <= 4.0 * f64::EPSILON * hi {
            collapsed = true;
            break;
        }
        x = next;
    }
    if best.1 <= GAMMA_TOLERANCE || collapsed {
        Ok(best)
    } else {
        Err(Error::NoConvergence {
            iterations: GAMMA_MAX_ITER,
            lo,
            hi,
            residual: best.1,
        })
    }
}

/// `(β, τ)` in closed form given the fixed-point `γ`.
pub fn saddle_from_gamma(
    cloud: &ParticleCloud,
    lambda: f64,
    kappa: f64,
    sigma: f64,
    gamma: f64,
) -> Result<SaddleSolution> {
    let len = cloud.v().len() as f64;
    let [a, bsum] = coordinate_sums(cloud.v().len(), |range| {
        let mut acc = [0.0; 2];
        for (&v, &t) in cloud.v()[range.clone()].iter().zip(&cloud.theta()[range]) {
            let r = 1.0 / (gamma * v * v + lambda);
            let r2 = r * r;
            acc[0] += t * t * r2;
            acc[1] += r2;
        }
        acc
    });
    let numerator = sigma * sigma + lambda * lambda * a / len;
    let denominator = 2.0 * gamma + kappa - 1.0 - lambda * lambda * kappa * bsum / len;
    if denominator <= 0.0 || !denominator.is_finite() {
        return Err(Error::DegenerateSaddle { denominator, gamma });
    }
    let beta = (numerator / denominator).sqrt();
    let residual = (gamma_rhs(cloud, lambda, kappa, gamma) - gamma).abs();
    Ok(SaddleSolution {
        gamma,
        beta,
        tau: gamma * beta,
        fixed_point_residual: residual,
        denominator,
    })
}

/// Fixed point followed by the closed forms.
pub fn solve_saddle(cloud: &ParticleCloud, lambda: f64, kappa: f64, sigma: f64) -> Result<SaddleSolution> {
    let (gamma, _) = gamma_fixed_point(cloud, lambda, kappa)?;
    saddle_from_gamma(cloud, lambda, kappa, sigma, gamma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{InitSpec, PriorSpec, ThetaPrior};
    use crate::prior::sample_prior_particles;
    use crate::rng::{derive_key, stream, Domain};

    #[test]
    fn zero_weights_give_unit_gamma() {
        for (kappa, lambda) in [(0.5, 0.1), (8.0, 0.01), (1.0, 3.0)] {
            let cloud = ParticleCloud::constant(1, 10, 0.0, 1.0);
            let (g, r) = gamma_fixed_point(&cloud, lambda, kappa).unwrap();
            assert_eq!(g, 1.0);
            assert!(r <= GAMMA_TOLERANCE);
        }
    }

    #[test]
    fn unit_point_mass_golden_ratio() {
        // γ = λκ/(γ + λ) at λ = κ = 1 gives γ² + γ − 1 = 0.
        let cloud = ParticleCloud::constant(1, 3, 1.0, 0.0);
        let (g, _) = gamma_fixed_point(&cloud, 1.0, 1.0).unwrap();
        assert!((g - (5f64.sqrt() - 1.0) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn bernoulli_root_matches_grid_scan() {
        let prior = PriorSpec::new(ThetaPrior::Bernoulli { p: 0.01 }, InitSpec::Gaussian { stddev: 1.0 });
        let mut rng = stream(derive_key(3, Domain::StateEvolution, 0), 0);
        let cloud = sample_prior_particles(&prior, 1, 20_000, &mut rng).unwrap();
        let (kappa, lambda) = (8.0, 0.01);
        let (g, r) = gamma_fixed_point(&cloud, lambda, kappa).unwrap();
        assert!(r <= GAMMA_TOLERANCE);
        // Grid-scan oracle: locate the sign change of RHS(γ) − γ on a 10⁻⁶ grid
        // within a coarse bracket, then compare.
        let gap = |x: f64| gamma_rhs(&cloud, lambda, kappa, x) - x;
        let coarse: Vec<f64> = (0..=1000).map(|i| i as f64 / 1000.0).collect();
        let k = coarse.windows(2).position(|w| gap(w[0]) > 0.0 && gap(w[1]) <= 0.0).unwrap();
        let mut scan = coarse[k];
        while gap(scan + 1e-6) > 0.0 {
            scan += 1e-6;
        }
        assert!((g - scan).abs() <= 1e-6, "{g} vs {scan}");
        assert!(g > (1.0 - kappa).max(0.0) && g <= 1.0);
    }

    #[test]
    fn hand_computed_point_mass_saddle() {
        let cloud = ParticleCloud::constant(1, 5, 0.0, 0.0);
        let (g, _) = gamma_fixed_point(&cloud, 1.0, 1.0).unwrap();
        let s = saddle_from_gamma(&cloud, 1.0, 1.0, 1.0, g).unwrap();
        assert_eq!((s.gamma, s.beta, s.tau), (1.0, 1.0, 1.0));
        assert_eq!(s.denominator, 1.0);
    }

    #[test]
    fn nonpositive_denominator_is_reported() {
        // γ deliberately off the fixed point makes the denominator negative.
        let cloud = ParticleCloud::constant(1, 5, 1.0, 1.0);
        let err = saddle_from_gamma(&cloud, 1.0, 0.1, 0.1, 0.01).unwrap_err();
        assert!(matches!(err, Error::DegenerateSaddle { denominator, .. } if denominator <= 0.0));
    }
}
