//! Asymptotic prediction of the algorithm's trajectory.
//!
//! The law of `(v(t), θ*)` blocks is carried by a [`ParticleCloud`]. Each round
//! solves the max-min saddle for the current cloud, pushes every particle
//! through the `Q`-update and `ψ`, and reports metrics of `(Q, V, Θ)`.

mod oracle;
mod reduce;
mod saddle;
mod step;

use serde::{Deserialize, Serialize};

pub use oracle::{saddle_bruteforce_oracle, saddle_objective};
pub use reduce::{coordinate_sums, REDUCE_CHUNK};
pub use saddle::{
    gamma_fixed_point, gamma_rhs, saddle_from_gamma, solve_saddle, SaddleSolution, GAMMA_MAX_ITER,
    GAMMA_TOLERANCE,
};
pub use step::{predict_metric, se_step, se_step_with, GaussianSource, Kernel, NOISE_CHUNK};

use crate::config::{ExperimentConfig, MetricSpec};
use crate::error::Result;
use crate::prior::{sample_prior_particles, ParticleCloud};
use crate::reweight::ReweightSpec;
use crate::rng::{derive_key, stream, Domain};
use crate::simulate::RecordMeta;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricPrediction {
    pub metric: MetricSpec,
    pub value: f64,
    pub mc_stderr: f64,
}

/// One round: the saddle solved on `Π_t` and metrics of `(Q_{t+1}, V, Θ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictedStep {
    /// 1-based, matching the simulator's iteration index.
    pub t: usize,
    pub saddle: SaddleSolution,
    pub predictions: Vec<MetricPrediction>,
}

impl PredictedStep {
    pub fn value(&self, metric: MetricSpec) -> Option<f64> {
        self.predictions.iter().find(|p| p.metric == metric).map(|p| p.value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictedTrajectory {
    pub meta: RecordMeta,
    pub particles: usize,
    pub metrics: Vec<MetricSpec>,
    pub steps: Vec<PredictedStep>,
}

impl PredictedTrajectory {
    pub fn series(&self, metric: MetricSpec) -> Vec<f64> {
        self.steps.iter().filter_map(|s| s.value(metric)).collect()
    }

    /// Smallest predicted value of `metric` over the horizon.
    pub fn best(&self, metric: MetricSpec) -> Option<f64> {
        self.series(metric).into_iter().min_by(f64::total_cmp)
    }
}

/// Scalars that stay fixed across rounds.
#[derive(Debug, Clone, PartialEq)]
pub struct RecursionParams {
    pub kappa: f64,
    pub lambda: f64,
    pub sigma: f64,
    pub psi: ReweightSpec,
    pub metrics: Vec<MetricSpec>,
}

impl RecursionParams {
    pub fn from_config(config: &ExperimentConfig) -> Self {
        RecursionParams {
            kappa: config.kappa,
            lambda: config.lambda,
            sigma: config.sigma,
            psi: config.psi.clone(),
            metrics: config.metrics.clone(),
        }
    }
}

/// The recursion as an explicit stepper over a particle cloud.
#[derive(Debug, Clone)]
pub struct StateEvolution {
    params: RecursionParams,
    cloud: ParticleCloud,
    noise: GaussianSource,
    kernel: Kernel,
    t: usize,
}

impl StateEvolution {
    /// Cloud drawn from the prior (stream 0 of the state-evolution key), `G`
    /// draws from the later streams of the same key.
    pub fn new(config: &ExperimentConfig) -> Result<Self> {
        let key = derive_key(config.seed, Domain::StateEvolution, 0);
        let mut rng = stream(key, 0);
        let cloud = sample_prior_particles(&config.prior, config.b, config.particles, &mut rng)?;
        Ok(StateEvolution::from_cloud(
            RecursionParams::from_config(config),
            cloud,
            GaussianSource::new(key),
        ))
    }

    pub fn from_cloud(params: RecursionParams, cloud: ParticleCloud, noise: GaussianSource) -> Self {
        let kernel = Kernel::for_block_size(cloud.block_size());
        StateEvolution {
            params,
            cloud,
            noise,
            kernel,
            t: 0,
        }
    }

    pub fn with_kernel(mut self, kernel: Kernel) -> Self {
        self.kernel = kernel;
        self
    }

    pub fn with_noise(mut self, noise: GaussianSource) -> Self {
        self.noise = noise;
        self
    }

    /// Current `Π_t`.
    pub fn cloud(&self) -> &ParticleCloud {
        &self.cloud
    }

    pub fn step(&mut self) -> Result<PredictedStep> {
        let p = &self.params;
        let saddle = solve_saddle(&self.cloud, p.lambda, p.kappa, p.sigma)?;
        self.t += 1;
        let (next, q) = se_step_with(
            self.kernel,
            &self.cloud,
            &saddle,
            &p.psi,
            p.kappa,
            p.lambda,
            &self.noise,
            self.t as u64,
        );
        let predictions = p
            .metrics
            .iter()
            .map(|&metric| {
                let (value, mc_stderr) = predict_metric(&q, &self.cloud, metric);
                MetricPrediction {
                    metric,
                    value,
                    mc_stderr,
                }
            })
            .collect();
        self.cloud = next;
        Ok(PredictedStep {
            t: self.t,
            saddle,
            predictions,
        })
    }
}

/// `T` rounds of saddle, propagation and prediction from the configured prior.
pub fn se_trajectory(config: &ExperimentConfig) -> Result<PredictedTrajectory> {
    let mut se = StateEvolution::new(config)?;
    let steps = (0..config.horizon)
        .map(|_| se.step())
        .collect::<Result<Vec<_>>>()?;
    Ok(PredictedTrajectory {
        meta: RecordMeta::from_config(config),
        particles: config.particles,
        metrics: config.metrics.clone(),
        steps,
    })
}
