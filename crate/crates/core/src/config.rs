//! Experiment configuration: a single JSON document.
//!
//! ```json
//! {
//!   "n": 250, "d": 2000, "sigma": 0.1, "lambda": 0.01, "b": 1, "T": 8,
//!   "trials": 100, "seed": 1,
//!   "psi":   { "kind": "tanh_abs" },
//!   "prior": { "theta": { "kind": "bernoulli", "p": 0.01 },
//!              "init":  { "kind": "ones" } },
//!   "metrics": ["l1_error"],
//!   "particles": 1000000
//! }
//! ```
//!
//! Every field is required except `metrics` (default `["l1_error"]`) and
//! `particles` (default 10⁶). `kappa` is never read; it is derived as `d / n`.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::reweight::{Guarantee, ReweightSpec};

pub const DEFAULT_PARTICLES: usize = 1_000_000;

/// Distribution of the target entries within one block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ThetaPrior {
    /// Each coordinate independently 1 with probability `p`, else 0.
    Bernoulli { p: f64 },
    /// Whole block equals `Bernoulli(p) * 1_b`.
    GroupBernoulli { p: f64 },
    /// Unbounded coordinates; outside the boundedness guarantee.
    Gaussian { mean: f64, stddev: f64 },
    PointMass { value: f64 },
    /// Empirical distribution of the rows of a headerless CSV with `2b`
    /// columns `V_1..V_b, Theta_1..Theta_b`. Supplies the weights too.
    ParticleFile { path: PathBuf },
}

/// Initial weights `v(0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitSpec {
    Ones,
    /// Centered normal entries; nonzero with probability one.
    Gaussian { stddev: f64 },
    Constant { c: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorSpec {
    pub theta: ThetaPrior,
    /// Required unless `theta` is a particle file, which carries its own weights.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<InitSpec>,
}

impl PriorSpec {
    pub fn new(theta: ThetaPrior, init: InitSpec) -> Self {
        PriorSpec {
            theta,
            init: Some(init),
        }
    }

    pub fn particle_file(path: impl Into<PathBuf>) -> Self {
        PriorSpec {
            theta: ThetaPrior::ParticleFile { path: path.into() },
            init: None,
        }
    }

    /// Bounded targets are covered by the convergence guarantee; gaussian ones are not.
    pub fn guarantee(&self) -> Guarantee {
        match self.theta {
            ThetaPrior::Gaussian { .. } => Guarantee::Outside,
            _ => Guarantee::Within,
        }
    }

    fn validate(&self) -> Result<()> {
        match &self.theta {
            ThetaPrior::Bernoulli { p } | ThetaPrior::GroupBernoulli { p } => {
                if !(0.0..=1.0).contains(p) {
                    return Err(Error::config("prior.theta.p", format!("{p} is not in [0, 1]")));
                }
            }
            ThetaPrior::Gaussian { mean, stddev } => {
                if !mean.is_finite() || !stddev.is_finite() || *stddev < 0.0 {
                    return Err(Error::config(
                        "prior.theta.stddev",
                        "mean must be finite and stddev finite and non-negative",
                    ));
                }
            }
            ThetaPrior::PointMass { value } => {
                if !value.is_finite() {
                    return Err(Error::config("prior.theta.value", "must be finite"));
                }
            }
            ThetaPrior::ParticleFile { .. } => {
                if self.init.is_some() {
                    return Err(Error::config(
                        "prior.init",
                        "must be omitted when theta is a particle file",
                    ));
                }
                return Ok(());
            }
        }
        match &self.init {
            None => Err(Error::config("prior.init", "missing field")),
            Some(InitSpec::Constant { c }) if *c == 0.0 || !c.is_finite() => Err(Error::config(
                "prior.init.c",
                "initial weights must be finite and nonzero",
            )),
            Some(InitSpec::Gaussian { stddev }) if !(*stddev > 0.0 && stddev.is_finite()) => {
                Err(Error::config("prior.init.stddev", "must be positive"))
            }
            Some(_) => Ok(()),
        }
    }
}

/// Test functions evaluated on `(u(t+1), v(t), theta*)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricSpec {
    /// `(1/d) ||u ⊙ v − θ*||₁`
    L1Error,
    /// `(1/d) ||u ⊙ v − θ*||₂²`; not pseudo-Lipschitz of order 2.
    SquaredError,
}

impl MetricSpec {
    pub fn name(self) -> &'static str {
        match self {
            MetricSpec::L1Error => "l1_error",
            MetricSpec::SquaredError => "squared_error",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "l1_error" => Some(MetricSpec::L1Error),
            "squared_error" => Some(MetricSpec::SquaredError),
            _ => None,
        }
    }

    pub fn guarantee(self) -> Guarantee {
        match self {
            MetricSpec::L1Error => Guarantee::Within,
            MetricSpec::SquaredError => Guarantee::Outside,
        }
    }

    /// Per-coordinate test function `g(u, v, θ)`.
    #[inline]
    pub fn coordinate(self, u: f64, v: f64, theta: f64) -> f64 {
        let r = u * v - theta;
        match self {
            MetricSpec::L1Error => r.abs(),
            MetricSpec::SquaredError => r * r,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Samples per batch.
    pub n: usize,
    /// Ambient dimension.
    pub d: usize,
    /// Aspect ratio `d / n`.
    pub kappa: f64,
    pub sigma: f64,
    pub lambda: f64,
    /// Block size; `d` is a multiple of it.
    pub b: usize,
    /// Iteration horizon `T`.
    pub horizon: usize,
    pub trials: usize,
    pub seed: u64,
    pub psi: ReweightSpec,
    pub prior: PriorSpec,
    pub metrics: Vec<MetricSpec>,
    /// Particle count for state evolution.
    pub particles: usize,
}

/// Wire form of [`ExperimentConfig`]; every field optional so that absence
/// is reported by name rather than by serde's generic message.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigDocument {
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    d: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    b: Option<u64>,
    #[serde(rename = "T", skip_serializing_if = "Option::is_none")]
    horizon: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trials: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    psi: Option<ReweightSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    prior: Option<PriorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    metrics: Option<Vec<MetricSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    particles: Option<u64>,
}

fn required<T>(value: Option<T>, path: &str) -> Result<T> {
    value.ok_or_else(|| Error::config(path, "missing field"))
}

fn positive(value: u64, path: &str) -> Result<usize> {
    if value == 0 {
        return Err(Error::config(path, "must be a positive integer"));
    }
    usize::try_from(value).map_err(|_| Error::config(path, "too large"))
}

/// Parse and validate a JSON configuration document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let doc: ConfigDocument = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::config(path, e.into_inner().to_string())
    })?;
    ExperimentConfig::from_document(doc)
}

impl ExperimentConfig {
    fn from_document(doc: ConfigDocument) -> Result<Self> {
        let n = positive(required(doc.n, "n")?, "n")?;
        let d = positive(required(doc.d, "d")?, "d")?;
        let sigma = required(doc.sigma, "sigma")?;
        let lambda = required(doc.lambda, "lambda")?;
        let b = positive(required(doc.b, "b")?, "b")?;
        let horizon = usize::try_from(required(doc.horizon, "T")?)
            .map_err(|_| Error::config("T", "too large"))?;
        let trials = positive(required(doc.trials, "trials")?, "trials")?;
        let seed = required(doc.seed, "seed")?;
        let psi = required(doc.psi, "psi")?;
        let prior = required(doc.prior, "prior")?;
        let metrics = doc.metrics.unwrap_or_else(|| vec![MetricSpec::L1Error]);
        let particles = match doc.particles {
            Some(p) => positive(p, "particles")?,
            None => DEFAULT_PARTICLES,
        };
        let config = ExperimentConfig {
            n,
            d,
            kappa: d as f64 / n as f64,
            sigma,
            lambda,
            b,
            horizon,
            trials,
            seed,
            psi,
            prior,
            metrics,
            particles,
        };
        config.validate()?;
        Ok(config)
    }

    /// Check every invariant; used after parsing and after programmatic edits.
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::config("n", "must be a positive integer"));
        }
        if self.d == 0 {
            return Err(Error::config("d", "must be a positive integer"));
        }
        if self.b == 0 {
            return Err(Error::config("b", "must be a positive integer"));
        }
        if !self.d.is_multiple_of(self.b) {
            return Err(Error::config(
                "b",
                format!("d not divisible by b (d = {}, b = {})", self.d, self.b),
            ));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::config("lambda", format!("must be positive, got {}", self.lambda)));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::config("sigma", format!("must be non-negative, got {}", self.sigma)));
        }
        if self.trials == 0 {
            return Err(Error::config("trials", "must be a positive integer"));
        }
        if self.particles == 0 {
            return Err(Error::config("particles", "must be a positive integer"));
        }
        if self.metrics.is_empty() {
            return Err(Error::config("metrics", "must name at least one metric"));
        }
        self.psi
            .validate()
            .map_err(|message| Error::config("psi", message))?;
        self.prior.validate()
    }

    /// Number of blocks `M = d / b`.
    pub fn blocks(&self) -> usize {
        self.d / self.b
    }

    fn to_document(&self) -> ConfigDocument {
        ConfigDocument {
            n: Some(self.n as u64),
            d: Some(self.d as u64),
            sigma: Some(self.sigma),
            lambda: Some(self.lambda),
            b: Some(self.b as u64),
            horizon: Some(self.horizon as u64),
            trials: Some(self.trials as u64),
            seed: Some(self.seed),
            psi: Some(self.psi.clone()),
            prior: Some(self.prior.clone()),
            metrics: Some(self.metrics.clone()),
            particles: Some(self.particles as u64),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("config serializes")
    }

    /// Hash of the problem definition: `n, d, sigma, lambda, b, T, psi, prior`.
    ///
    /// Trial count, particle count, seed and metric list are excluded so a
    /// simulation and a prediction of the same problem carry the same hash.
    pub fn config_hash(&self) -> String {
        let mut doc = self.to_document();
        doc.trials = None;
        doc.seed = None;
        doc.metrics = None;
        doc.particles = None;
        let canonical = serde_json::to_string(&doc).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// Guarantee flags for the run as `(label, flag)` pairs.
    pub fn guarantee_flags(&self) -> Vec<(String, Guarantee)> {
        let mut flags = vec![
            ("psi".to_string(), self.psi.guarantee()),
            ("prior".to_string(), self.prior.guarantee()),
        ];
        flags.extend(
            self.metrics
                .iter()
                .map(|m| (format!("metric.{}", m.name()), m.guarantee())),
        );
        flags
    }
}
