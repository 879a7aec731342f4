//! Particle propagation through one round of the recursion:
//!
//! ```text
//! Q = τ V ⊙ (Θ + β√κ G) / (τ V² + βλ)      (entry-wise, G ~ N(0, I_b))
//! Π' = Law(ψ(Q, V), Θ)
//! ```
//!
//! `Q` is evaluated as `γ V (Θ + β√κ G) / (γ V² + λ)`, the same quantity with
//! `β` cancelled, which stays finite when `β = 0`.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::saddle::SaddleSolution;
use crate::config::MetricSpec;
use crate::prior::ParticleCloud;
use crate::reweight::ReweightSpec;
use crate::rng::{stream, StreamRng};

use super::reduce::coordinate_sums;

/// Particles per Gaussian substream.
pub const NOISE_CHUNK: usize = 4096;

/// Source of the `G` blocks: step `t`, particle chunk `c` reads stream `(t << 32) | c`.
#[derive(Debug, Clone, Copy)]
pub struct GaussianSource {
    key: [u8; 32],
    negate: bool,
}

impl GaussianSource {
    pub fn new(key: [u8; 32]) -> Self {
        GaussianSource { key, negate: false }
    }

    /// The same draws with every sign flipped.
    pub fn negated(self) -> Self {
        GaussianSource {
            negate: !self.negate,
            ..self
        }
    }

    fn chunk_rng(&self, t: u64, chunk: usize) -> StreamRng {
        stream(self.key, (t << 32) | chunk as u64)
    }

    #[inline]
    fn draw(&self, rng: &mut StreamRng) -> f64 {
        let g: f64 = rng.sample(StandardNormal);
        if self.negate {
            -g
        } else {
            g
        }
    }
}

/// Which propagation kernel to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kernel {
    /// Specialized `b = 1` loop.
    Scalar,
    /// General block loop; valid for every `b`.
    Blocked,
}

impl Kernel {
    pub fn for_block_size(b: usize) -> Self {
        if b == 1 {
            Kernel::Scalar
        } else {
            Kernel::Blocked
        }
    }
}

/// Advance the cloud one round. Returns the new cloud and the `Q` blocks
/// (aligned with the input cloud) for metric evaluation.
pub fn se_step(
    cloud: &ParticleCloud,
    saddle: &SaddleSolution,
    psi: &ReweightSpec,
    kappa: f64,
    lambda: f64,
    noise: &GaussianSource,
    t: u64,
) -> (ParticleCloud, Vec<f64>) {
    se_step_with(Kernel::for_block_size(cloud.block_size()), cloud, saddle, psi, kappa, lambda, noise, t)
}

#[allow(clippy::too_many_arguments)]
pub fn se_step_with(
    kernel: Kernel,
    cloud: &ParticleCloud,
    saddle: &SaddleSolution,
    psi: &ReweightSpec,
    kappa: f64,
    lambda: f64,
    noise: &GaussianSource,
    t: u64,
) -> (ParticleCloud, Vec<f64>) {
    let b = cloud.block_size();
    assert!(kernel == Kernel::Blocked || b == 1, "scalar kernel needs b = 1");
    let gamma = saddle.gamma;
    let spread = saddle.beta * kappa.sqrt();
    let len = cloud.v().len();
    let mut q = vec![0.0; len];
    let mut next_v = vec![0.0; len];
    let coords = NOISE_CHUNK * b;
    q.par_chunks_mut(coords)
        .zip(next_v.par_chunks_mut(coords))
        .enumerate()
        .for_each(|(c, (q_chunk, v_chunk))| {
            let start = c * coords;
            let v_in = &cloud.v()[start..start + q_chunk.len()];
            let th_in = &cloud.theta()[start..start + q_chunk.len()];
            let mut rng = noise.chunk_rng(t, c);
            match kernel {
                Kernel::Scalar => {
                    for i in 0..q_chunk.len() {
                        let (v, th) = (v_in[i], th_in[i]);
                        let g = noise.draw(&mut rng);
                        let qi = gamma * v * (th + spread * g) / (gamma * v * v + lambda);
                        q_chunk[i] = qi;
                        v_chunk[i] = psi.apply_scalar(qi, v);
                    }
                }
                Kernel::Blocked => {
                    for ((qb, vb_out), (vb, thb)) in q_chunk
                        .chunks_exact_mut(b)
                        .zip(v_chunk.chunks_exact_mut(b))
                        .zip(v_in.chunks_exact(b).zip(th_in.chunks_exact(b)))
                    {
                        for j in 0..b {
                            let g = noise.draw(&mut rng);
                            qb[j] = gamma * vb[j] * (thb[j] + spread * g) / (gamma * vb[j] * vb[j] + lambda);
                        }
                        psi.apply_into(qb, vb, vb_out);
                    }
                }
            }
        });
    let next = cloud.with_v(next_v).expect("shapes preserved");
    (next, q)
}

/// Cloud average of `(1/b) Σ_j g(Q_j, V_j, Θ_j)` and its Monte Carlo standard error.
pub fn predict_metric(q: &[f64], cloud: &ParticleCloud, metric: MetricSpec) -> (f64, f64) {
    let b = cloud.block_size();
    let count = cloud.count();
    assert_eq!(q.len(), cloud.v().len(), "Q blocks not aligned with cloud");
    let per_particle = |i: usize| -> f64 {
        let s: f64 = q[i * b..(i + 1) * b]
            .iter()
            .zip(cloud.v_block(i))
            .zip(cloud.theta_block(i))
            .map(|((&qj, &vj), &tj)| metric.coordinate(qj, vj, tj))
            .sum();
        s / b as f64
    };
    let [sum] = coordinate_sums(count, |r| [r.map(per_particle).sum::<f64>()]);
    let mean = sum / count as f64;
    if count < 2 {
        return (mean, f64::NAN);
    }
    let [ss] = coordinate_sums(count, |r| {
        [r.map(|i| {
            let dev = per_particle(i) - mean;
            dev * dev
        })
        .sum::<f64>()]
    });
    let stddev = (ss / (count - 1) as f64).sqrt();
    (mean, stddev / (count as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{derive_key, Domain};

    fn saddle(gamma: f64, beta: f64) -> SaddleSolution {
        SaddleSolution {
            gamma,
            beta,
            tau: gamma * beta,
            fixed_point_residual: 0.0,
            denominator: 1.0,
        }
    }

    fn source() -> GaussianSource {
        GaussianSource::new(derive_key(1, Domain::StateEvolution, 0))
    }

    #[test]
    fn zero_weights_give_zero_q() {
        let cloud = ParticleCloud::constant(2, 100, 0.0, 1.0);
        let (_, q) = se_step(&cloud, &saddle(0.7, 2.0), &ReweightSpec::TanhAbs, 8.0, 0.1, &source(), 1);
        assert!(q.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn unit_point_mass_is_half_of_one_plus_g() {
        let cloud = ParticleCloud::constant(1, 50, 1.0, 1.0);
        let (_, q) = se_step(&cloud, &saddle(1.0, 1.0), &ReweightSpec::Am, 1.0, 1.0, &source(), 1);
        let (_, qn) = se_step(&cloud, &saddle(1.0, 1.0), &ReweightSpec::Am, 1.0, 1.0, &source().negated(), 1);
        for (a, b) in q.iter().zip(&qn) {
            // Q = (1+G)/2 and Q' = (1−G)/2 with the same G.
            assert!((a + b - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn am_update_stores_q() {
        let cloud = ParticleCloud::constant(1, 10, 1.0, 0.0);
        let (next, q) = se_step(&cloud, &saddle(0.5, 0.3), &ReweightSpec::Am, 2.0, 0.1, &source(), 3);
        assert_eq!(next.v(), q.as_slice());
        assert_eq!(next.theta(), cloud.theta());
    }

    #[test]
    fn metric_examples() {
        let cloud = ParticleCloud::new(1, vec![2.0, 0.5, 1.0], vec![1.0, 1.0, 0.0]).unwrap();
        let q = vec![0.5, 2.0, 0.0];
        assert_eq!(predict_metric(&q, &cloud, MetricSpec::L1Error).0, 0.0);

        let cloud = ParticleCloud::new(1, vec![0.0; 4], vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let (value, se) = predict_metric(&[3.0; 4], &cloud, MetricSpec::L1Error);
        assert_eq!(value, 0.25);
        // sample stddev of {1,0,0,0} is 1/2, over √4.
        assert!((se - 0.25).abs() < 1e-15);
    }
}
