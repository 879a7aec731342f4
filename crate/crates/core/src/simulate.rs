//! Finite-size runs of the batched algorithm
//!
//! ```text
//! u(t+1) = argmin_u (1/n)||y(t) − (1/√d) X(t) (u ⊙ v(t))||² + (λ/d)||u||²
//! v(t+1) = ψ(u(t+1), v(t))            (block-wise)
//! ```
//!
//! with a fresh batch `(X(t), ε(t))` every iteration. Metrics at step `t`
//! are evaluated on `(u(t+1), v(t), θ*)`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, MetricSpec};
use crate::error::{Error, Result};
use crate::linalg::{weighted_ridge_solve, Batch};
use crate::prior::{materialize_signal, BlockSampler};
use crate::reweight::Guarantee;
use crate::rng::{derive_key, stream, Domain, StreamRng};

/// Draw `y = (1/√d) X θ* + ε` with `X` i.i.d. N(0, 1) (column-major order) and `ε` i.i.d. N(0, σ²).
pub fn generate_batch(n: usize, d: usize, theta_star: &[f64], sigma: f64, rng: &mut StreamRng) -> Batch {
    assert_eq!(theta_star.len(), d, "theta_star has the wrong dimension");
    let x = DMatrix::from_fn(n, d, |_, _| rng.sample(StandardNormal));
    let epsilon = DVector::from_fn(n, |_, _| sigma * rng.sample::<f64, _>(StandardNormal));
    let theta = DVector::from_column_slice(theta_star);
    let y = &x * theta / (d as f64).sqrt() + &epsilon;
    Batch { x, y, epsilon }
}

/// `(1/d) Σ |u_i v_i − θ*_i|`
pub fn l1_error(u: &[f64], v: &[f64], theta_star: &[f64]) -> f64 {
    metric_value(MetricSpec::L1Error, u, v, theta_star)
}

/// `(1/d) Σ (u_i v_i − θ*_i)²`. Outside the convergence guarantee.
pub fn sq_error(u: &[f64], v: &[f64], theta_star: &[f64]) -> f64 {
    metric_value(MetricSpec::SquaredError, u, v, theta_star)
}

pub fn metric_value(metric: MetricSpec, u: &[f64], v: &[f64], theta_star: &[f64]) -> f64 {
    assert!(u.len() == v.len() && v.len() == theta_star.len());
    let sum: f64 = u
        .iter()
        .zip(v)
        .zip(theta_star)
        .map(|((&a, &b), &t)| metric.coordinate(a, b, t))
        .sum();
    sum / u.len() as f64
}

/// Median and interquartile bounds of a metric at one iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub median: f64,
    pub p25: f64,
    pub p75: f64,
}

impl Summary {
    pub fn point(value: f64) -> Self {
        Summary {
            median: value,
            p25: value,
            p75: value,
        }
    }
}

/// Linear-interpolation quantile of sorted data (`h = (N − 1) q`).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let w = h - lo as f64;
        sorted[lo] + w * (sorted[hi] - sorted[lo])
    }
}

pub fn summarize(values: &[f64]) -> Summary {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Summary {
        median: quantile_sorted(&sorted, 0.5),
        p25: quantile_sorted(&sorted, 0.25),
        p75: quantile_sorted(&sorted, 0.75),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordMeta {
    pub config_hash: String,
    pub seed: u64,
    pub psi: String,
    pub guarantees: Vec<(String, Guarantee)>,
}

impl RecordMeta {
    pub fn from_config(config: &ExperimentConfig) -> Self {
        RecordMeta {
            config_hash: config.config_hash(),
            seed: config.seed,
            psi: config.psi.name().to_string(),
            guarantees: config.guarantee_flags(),
        }
    }
}

/// Per-iteration metrics of one trial, or their aggregate over trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub meta: RecordMeta,
    pub metrics: Vec<MetricSpec>,
    /// Trial index for a single-trial record; `None` once aggregated.
    pub trial: Option<usize>,
    /// Number of trials summarized.
    pub trials: usize,
    /// `points[t - 1][m]` for `t = 1..=T`.
    pub points: Vec<Vec<Summary>>,
}

impl TrajectoryRecord {
    pub fn horizon(&self) -> usize {
        self.points.len()
    }

    /// Median series of one metric.
    pub fn series(&self, metric: MetricSpec) -> Option<Vec<Summary>> {
        let m = self.metrics.iter().position(|&x| x == metric)?;
        Some(self.points.iter().map(|row| row[m]).collect())
    }
}

/// State visible after each `u`-update.
pub struct IterateView<'a> {
    /// Iteration index, starting at 1.
    pub t: usize,
    pub batch: &'a Batch,
    pub u: &'a [f64],
    pub v: &'a [f64],
    pub theta_star: &'a [f64],
}

/// One trial, observing every iterate. Trial `k` uses key `(seed, k)`;
/// stream 0 draws `(θ*, v(0))` and stream `t` the batch of iteration `t`.
pub fn run_trajectory_with<F>(config: &ExperimentConfig, trial: usize, mut observe: F) -> Result<TrajectoryRecord>
where
    F: FnMut(&IterateView<'_>),
{
    let key = derive_key(config.seed, Domain::Trial, trial as u64);
    let mut prior_rng = stream(key, 0);
    let (theta_star, mut v) = materialize_signal(&config.prior, config.d, config.b, &mut prior_rng)?;
    let mut points = Vec::with_capacity(config.horizon);
    for t in 1..=config.horizon {
        let mut rng = stream(key, t as u64);
        let batch = generate_batch(config.n, config.d, &theta_star, config.sigma, &mut rng);
        let u = weighted_ridge_solve(&batch, &v, config.lambda)?;
        points.push(
            config
                .metrics
                .iter()
                .map(|&m| Summary::point(metric_value(m, &u, &v, &theta_star)))
                .collect(),
        );
        observe(&IterateView {
            t,
            batch: &batch,
            u: &u,
            v: &v,
            theta_star: &theta_star,
        });
        v = config.psi.apply_blockwise(&u, &v, config.b);
    }
    Ok(TrajectoryRecord {
        meta: RecordMeta::from_config(config),
        metrics: config.metrics.clone(),
        trial: Some(trial),
        trials: 1,
        points,
    })
}

pub fn run_trajectory(config: &ExperimentConfig, trial: usize) -> Result<TrajectoryRecord> {
    run_trajectory_with(config, trial, |_| {})
}

/// All `config.trials` trials, in parallel, returned in trial order.
pub fn run_trials(config: &ExperimentConfig) -> Result<Vec<TrajectoryRecord>> {
    // Fail on an unreadable prior once rather than in every trial.
    BlockSampler::new(&config.prior, config.b)?;
    (0..config.trials)
        .into_par_iter()
        .map(|k| run_trajectory(config, k))
        .collect()
}

/// Median, 25th and 75th percentile across records, per iteration and metric.
pub fn aggregate_trials(records: &[TrajectoryRecord]) -> Result<TrajectoryRecord> {
    let first = records
        .first()
        .ok_or_else(|| Error::RecordMismatch("no records to aggregate".into()))?;
    for r in records {
        if r.meta.config_hash != first.meta.config_hash {
            return Err(Error::HashMismatch {
                left: first.meta.config_hash.clone(),
                right: r.meta.config_hash.clone(),
            });
        }
        if r.horizon() != first.horizon() || r.metrics != first.metrics {
            return Err(Error::RecordMismatch(
                "records differ in horizon or metric list".into(),
            ));
        }
    }
    let mut values = Vec::with_capacity(records.len());
    let points = (0..first.horizon())
        .map(|t| {
            (0..first.metrics.len())
                .map(|m| {
                    values.clear();
                    values.extend(records.iter().map(|r| r.points[t][m].median));
                    summarize(&values)
                })
                .collect()
        })
        .collect();
    Ok(TrajectoryRecord {
        meta: first.meta.clone(),
        metrics: first.metrics.clone(),
        trial: None,
        trials: records.iter().map(|r| r.trials).sum(),
        points,
    })
}

/// Run every trial and aggregate.
pub fn simulate(config: &ExperimentConfig) -> Result<(Vec<TrajectoryRecord>, TrajectoryRecord)> {
    let trials = run_trials(config)?;
    let agg = aggregate_trials(&trials)?;
    Ok((trials, agg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{InitSpec, PriorSpec, ThetaPrior};
    use crate::linalg::kkt_residual;
    use crate::reweight::ReweightSpec;
    use proptest::prelude::*;

    fn small_config(psi: ReweightSpec, prior: PriorSpec, sigma: f64) -> ExperimentConfig {
        let cfg = ExperimentConfig {
            n: 40,
            d: 120,
            kappa: 3.0,
            sigma,
            lambda: 0.05,
            b: 1,
            horizon: 4,
            trials: 3,
            seed: 11,
            psi,
            prior,
            metrics: vec![MetricSpec::L1Error, MetricSpec::SquaredError],
            particles: 1000,
        };
        cfg.validate().unwrap();
        cfg
    }

    fn rng() -> StreamRng {
        stream(derive_key(5, Domain::Trial, 0), 1)
    }

    #[test]
    fn noiseless_zero_signal_gives_zero_response() {
        let b = generate_batch(5, 7, &[0.0; 7], 0.0, &mut rng());
        assert!(b.y.iter().all(|&y| y == 0.0));
    }

    #[test]
    fn noiseless_response_is_linear_model() {
        let theta = [1.0, 0.0, -2.0, 0.5];
        let b = generate_batch(6, 4, &theta, 0.0, &mut rng());
        for i in 0..6 {
            let expect: f64 = (0..4).map(|j| b.x[(i, j)] * theta[j]).sum::<f64>() / 2.0;
            assert!((b.y[i] - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn noise_variance() {
        let b = generate_batch(10_000, 1, &[0.0], 1.0, &mut rng());
        let mean = b.y.mean();
        let var = b.y.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / 9_999.0;
        assert!((var - 1.0).abs() < 0.05, "{var}");
    }

    #[test]
    fn metric_examples() {
        assert_eq!(l1_error(&[2.0, 0.5], &[0.5, 2.0], &[1.0, 1.0]), 0.0);
        assert_eq!(l1_error(&[1.0; 4], &[1.0; 4], &[0.0; 4]), 1.0);
        assert_eq!(sq_error(&[2.0, 0.5], &[0.5, 2.0], &[1.0, 1.0]), 0.0);
        assert_eq!(sq_error(&[1.0; 3], &[2.0; 3], &[0.0; 3]), 4.0);
    }

    #[test]
    fn metrics_match_loop_oracle() {
        let u = [0.3, -1.2, 2.0, 0.0, 0.7];
        let v = [1.1, 0.4, -0.5, 3.0, 1.0];
        let th = [0.0, 1.0, -1.0, 0.0, 1.0];
        let (mut a, mut s) = (0.0f64, 0.0f64);
        for i in 0..5 {
            let r: f64 = u[i] * v[i] - th[i];
            a += r.abs();
            s += r * r;
        }
        assert_eq!(l1_error(&u, &v, &th), a / 5.0);
        assert_eq!(sq_error(&u, &v, &th), s / 5.0);
    }

    #[test]
    fn quantile_rule() {
        let s = summarize(&[3.0, 1.0, 2.0]);
        assert_eq!((s.median, s.p25, s.p75), (2.0, 1.5, 2.5));
        assert_eq!(summarize(&[4.0, 1.0, 3.0, 2.0]).median, 2.5);
    }

    #[test]
    fn zero_problem_has_zero_error() {
        let prior = PriorSpec::new(ThetaPrior::PointMass { value: 0.0 }, InitSpec::Ones);
        let cfg = small_config(ReweightSpec::TanhAbs, prior, 0.0);
        let rec = run_trajectory(&cfg, 0).unwrap();
        for row in &rec.points {
            for s in row {
                assert!(s.median.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn am_iterates_are_stationary_and_swap() {
        let prior = PriorSpec::new(ThetaPrior::Bernoulli { p: 0.1 }, InitSpec::Ones);
        let cfg = small_config(ReweightSpec::Am, prior, 0.1);
        let mut prev_u: Option<Vec<f64>> = None;
        run_trajectory_with(&cfg, 0, |view| {
            assert!(kkt_residual(view.batch, view.v, cfg.lambda, view.u) <= 1e-8);
            if let Some(p) = &prev_u {
                assert_eq!(p.as_slice(), view.v);
            }
            prev_u = Some(view.u.to_vec());
        })
        .unwrap();
    }

    #[test]
    fn aggregation_of_one_record_is_identity() {
        let prior = PriorSpec::new(ThetaPrior::Bernoulli { p: 0.1 }, InitSpec::Ones);
        let cfg = small_config(ReweightSpec::TanhAbs, prior, 0.1);
        let rec = run_trajectory(&cfg, 2).unwrap();
        let agg = aggregate_trials(std::slice::from_ref(&rec)).unwrap();
        assert_eq!(agg.points, rec.points);
    }

    #[test]
    fn aggregation_rejects_mixed_hashes() {
        let prior = PriorSpec::new(ThetaPrior::Bernoulli { p: 0.1 }, InitSpec::Ones);
        let cfg = small_config(ReweightSpec::TanhAbs, prior, 0.1);
        let a = run_trajectory(&cfg, 0).unwrap();
        let mut b = a.clone();
        b.meta.config_hash = "ffff".into();
        assert!(matches!(aggregate_trials(&[a, b]), Err(Error::HashMismatch { .. })));
    }

    #[test]
    fn trials_are_deterministic_and_distinct() {
        let prior = PriorSpec::new(ThetaPrior::Bernoulli { p: 0.1 }, InitSpec::Ones);
        let cfg = small_config(ReweightSpec::SqrtAbs, prior, 0.1);
        let a = run_trials(&cfg).unwrap();
        let b = run_trials(&cfg).unwrap();
        assert_eq!(a, b);
        assert_ne!(a[0].points, a[1].points);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn l1_is_permutation_invariant(
            data in prop::collection::vec((-3.0..3.0f64, -3.0..3.0f64, -1.0..1.0f64), 1..40),
            rot in 0usize..40,
        ) {
            let u: Vec<f64> = data.iter().map(|x| x.0).collect();
            let v: Vec<f64> = data.iter().map(|x| x.1).collect();
            let t: Vec<f64> = data.iter().map(|x| x.2).collect();
            let k = rot % data.len();
            let mut order: Vec<usize> = (0..data.len()).collect();
            order.rotate_left(k);
            order.reverse();
            let pu: Vec<f64> = order.iter().map(|&i| u[i]).collect();
            let pv: Vec<f64> = order.iter().map(|&i| v[i]).collect();
            let pt: Vec<f64> = order.iter().map(|&i| t[i]).collect();
            let a = l1_error(&u, &v, &t);
            let b = l1_error(&pu, &pv, &pt);
            prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        }
    }
}
