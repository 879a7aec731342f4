//! Draws from the initial joint law of `(v(0)-block, θ*-block)`.

use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::config::{InitSpec, PriorSpec, ThetaPrior};
use crate::error::{Error, Result};
use crate::rng::StreamRng;

/// Empirical stand-in for a law over `ℝᵇ × ℝᵇ`: `count` paired blocks stored flat.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleCloud {
    b: usize,
    v: Vec<f64>,
    theta: Vec<f64>,
}

impl ParticleCloud {
    pub fn new(b: usize, v: Vec<f64>, theta: Vec<f64>) -> Result<Self> {
        if b == 0 || !v.len().is_multiple_of(b) {
            return Err(Error::LengthMismatch {
                expected: b.max(1) * (v.len() / b.max(1)),
                actual: v.len(),
            });
        }
        if v.len() != theta.len() {
            return Err(Error::LengthMismatch {
                expected: v.len(),
                actual: theta.len(),
            });
        }
        Ok(ParticleCloud { b, v, theta })
    }

    /// Point-mass cloud with every block equal to `(v 1_b, θ 1_b)`.
    pub fn constant(b: usize, count: usize, v: f64, theta: f64) -> Self {
        ParticleCloud {
            b,
            v: vec![v; b * count],
            theta: vec![theta; b * count],
        }
    }

    pub fn count(&self) -> usize {
        self.v.len() / self.b
    }

    pub fn block_size(&self) -> usize {
        self.b
    }

    /// All weight coordinates, particle-major.
    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn v_block(&self, i: usize) -> &[f64] {
        &self.v[i * self.b..(i + 1) * self.b]
    }

    pub fn theta_block(&self, i: usize) -> &[f64] {
        &self.theta[i * self.b..(i + 1) * self.b]
    }

    /// Replace the weights wholesale, keeping the targets.
    pub fn with_v(&self, v: Vec<f64>) -> Result<Self> {
        ParticleCloud::new(self.b, v, self.theta.clone())
    }

    /// The same particles reordered by `order` (a permutation of `0..count`).
    pub fn permuted(&self, order: &[usize]) -> Self {
        let b = self.b;
        let mut v = Vec::with_capacity(self.v.len());
        let mut theta = Vec::with_capacity(self.theta.len());
        for &i in order {
            v.extend_from_slice(&self.v[i * b..(i + 1) * b]);
            theta.extend_from_slice(&self.theta[i * b..(i + 1) * b]);
        }
        ParticleCloud { b, v, theta }
    }
}

/// Prior compiled for a fixed block size, with any particle file loaded.
#[derive(Debug, Clone)]
pub enum BlockSampler {
    Product { theta: ThetaPrior, init: InitSpec, b: usize },
    /// Rows of `2b` values, `V_1..V_b, Θ_1..Θ_b`.
    Empirical { rows: Vec<f64>, b: usize },
}

impl BlockSampler {
    pub fn new(prior: &PriorSpec, b: usize) -> Result<Self> {
        match (&prior.theta, &prior.init) {
            (ThetaPrior::ParticleFile { path }, _) => Ok(BlockSampler::Empirical {
                rows: read_particle_file(path, b)?,
                b,
            }),
            (theta, Some(init)) => Ok(BlockSampler::Product {
                theta: theta.clone(),
                init: init.clone(),
                b,
            }),
            (_, None) => Err(Error::config("prior.init", "missing field")),
        }
    }

    /// Draw one block pair into the output slices (each of length `b`).
    pub fn draw(&self, rng: &mut StreamRng, v: &mut [f64], theta: &mut [f64]) {
        match self {
            BlockSampler::Product { theta: tp, init, .. } => {
                match *tp {
                    ThetaPrior::Bernoulli { p } => {
                        for t in theta.iter_mut() {
                            *t = if rng.random::<f64>() < p { 1.0 } else { 0.0 };
                        }
                    }
                    ThetaPrior::GroupBernoulli { p } => {
                        let on = rng.random::<f64>() < p;
                        theta.fill(if on { 1.0 } else { 0.0 });
                    }
                    ThetaPrior::Gaussian { mean, stddev } => {
                        for t in theta.iter_mut() {
                            let z: f64 = rng.sample(StandardNormal);
                            *t = mean + stddev * z;
                        }
                    }
                    ThetaPrior::PointMass { value } => theta.fill(value),
                    ThetaPrior::ParticleFile { .. } => unreachable!("compiled as Empirical"),
                }
                match *init {
                    InitSpec::Ones => v.fill(1.0),
                    InitSpec::Constant { c } => v.fill(c),
                    InitSpec::Gaussian { stddev } => {
                        for x in v.iter_mut() {
                            let z: f64 = rng.sample(StandardNormal);
                            *x = stddev * z;
                        }
                    }
                }
            }
            BlockSampler::Empirical { rows, b } => {
                let count = rows.len() / (2 * b);
                let row = rng.random_range(0..count);
                let r = &rows[row * 2 * b..(row + 1) * 2 * b];
                v.copy_from_slice(&r[..*b]);
                theta.copy_from_slice(&r[*b..]);
            }
        }
    }
}

fn read_particle_file(path: &Path, b: usize) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::ParticleFile {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let malformed = |message: String| Error::ParticleRow {
            path: path.to_path_buf(),
            row: i + 1,
            message,
        };
        let record = record.map_err(|e| malformed(e.to_string()))?;
        if record.len() != 2 * b {
            return Err(malformed(format!("expected {} columns, found {}", 2 * b, record.len())));
        }
        for field in record.iter() {
            let x: f64 = field
                .parse()
                .map_err(|_| malformed(format!("`{field}` is not a number")))?;
            if !x.is_finite() {
                return Err(malformed(format!("`{field}` is not finite")));
            }
            rows.push(x);
        }
    }
    if rows.is_empty() {
        return Err(Error::ParticleRow {
            path: path.to_path_buf(),
            row: 0,
            message: "file has no rows".into(),
        });
    }
    Ok(rows)
}

/// `count` i.i.d. draws of `(V(0)-block, Θ*-block)`.
pub fn sample_prior_particles(
    prior: &PriorSpec,
    b: usize,
    count: usize,
    rng: &mut StreamRng,
) -> Result<ParticleCloud> {
    let sampler = BlockSampler::new(prior, b)?;
    Ok(sample_with(&sampler, b, count, rng))
}

pub(crate) fn sample_with(
    sampler: &BlockSampler,
    b: usize,
    count: usize,
    rng: &mut StreamRng,
) -> ParticleCloud {
    let mut v = vec![0.0; b * count];
    let mut theta = vec![0.0; b * count];
    for (vb, tb) in v.chunks_exact_mut(b).zip(theta.chunks_exact_mut(b)) {
        sampler.draw(rng, vb, tb);
    }
    ParticleCloud { b, v, theta }
}

/// A finite-dimensional `(θ*, v(0))` of length `d` made of `d / b` i.i.d. blocks.
pub fn materialize_signal(
    prior: &PriorSpec,
    d: usize,
    b: usize,
    rng: &mut StreamRng,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if b == 0 || !d.is_multiple_of(b) {
        return Err(Error::config(
            "b",
            format!("d not divisible by b (d = {d}, b = {b})"),
        ));
    }
    let cloud = sample_prior_particles(prior, b, d / b, rng)?;
    Ok((cloud.theta, cloud.v))
}
