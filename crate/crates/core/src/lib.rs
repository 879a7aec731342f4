//! Batched reweighted least squares for Hadamard-parameterized (linear
//! diagonal network) regression, and the state-evolution recursion that
//! predicts its test error exactly in the proportional high-dimensional limit.
//!
//! The pieces:
//!
//! * [`config`]: the JSON experiment document and its invariants.
//! * [`prior`]: draws of `(v(0), θ*)` blocks and the [`ParticleCloud`].
//! * [`reweight`]: the catalog of reweighting functions `ψ`.
//! * [`linalg`]: the weighted ridge solve (primal and dual routes).
//! * [`simulate`]: finite-size trials and their aggregation.
//! * [`state_evolution`]: saddle solving, particle propagation, predictions.
//! * [`report`], [`compare`], [`svg`], [`commands`]: CSV/JSON/SVG outputs and
//!   the command-line operations built on them.

pub mod commands;
pub mod compare;
pub mod config;
pub mod error;
pub mod linalg;
pub mod prior;
pub mod report;
pub mod reweight;
pub mod rng;
pub mod simulate;
pub mod state_evolution;
pub mod svg;

pub use config::{parse_config, ExperimentConfig, InitSpec, MetricSpec, PriorSpec, ThetaPrior};
pub use error::{Error, Result};
pub use prior::{materialize_signal, sample_prior_particles, ParticleCloud};
pub use reweight::{apply_psi, guarantee_of, Guarantee, ReweightSpec};
pub use simulate::{aggregate_trials, run_trajectory, TrajectoryRecord};
pub use state_evolution::{se_trajectory, PredictedTrajectory, SaddleSolution};

/// Version string embedded in every output file.
pub const TOOL_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));
