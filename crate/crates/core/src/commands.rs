//! The batch operations behind the `ldnn` binary, callable from code.
//!
//! Each command takes a validated [`ExperimentConfig`] (see [`load_config`])
//! and an output directory, writes its files atomically and returns the
//! in-memory result.
//!
//! Output files:
//!
//! | command       | files                          |
//! |---------------|--------------------------------|
//! | `simulate`    | `trials.csv`, `agg.csv`        |
//! | `predict`     | `prediction.csv`               |
//! | `compare`     | `report.json`, `compare.svg`   |
//! | `tune-lambda` | `tune.csv`                     |
//! | `sweep`       | `sweep.csv`                    |

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::compare::{compare, ComparisonReport, Tolerance};
use crate::config::{parse_config, ExperimentConfig, MetricSpec, ThetaPrior};
use crate::error::{Error, Result};
use crate::report::{
    aggregate_csv, atomic_write, csv_document, prediction_csv, read_series, trials_csv, FileMeta, SCHEMA_VERSION,
};
use crate::simulate::{simulate, RecordMeta, TrajectoryRecord};
use crate::state_evolution::{se_trajectory, PredictedTrajectory};
use crate::svg::comparison_svg;
use crate::TOOL_VERSION;

/// Environment variable that overrides the configured seed.
pub const SEED_ENV: &str = "LDNN_SEED";

/// Command-line overrides applied on top of a config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub particles: Option<usize>,
}

/// Seed precedence: explicit flag, then `LDNN_SEED`, then the config.
pub fn resolve_seed(flag: Option<u64>, env: Option<&str>, config_seed: u64) -> Result<u64> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match env.map(str::trim).filter(|s| !s.is_empty()) {
        Some(text) => text
            .parse()
            .map_err(|_| Error::config(SEED_ENV, format!("`{text}` is not an unsigned integer"))),
        None => Ok(config_seed),
    }
}

/// Apply overrides to a parsed config; `env_seed` is the raw `LDNN_SEED` value.
pub fn apply_overrides(
    mut config: ExperimentConfig,
    overrides: &Overrides,
    env_seed: Option<&str>,
) -> Result<ExperimentConfig> {
    config.seed = resolve_seed(overrides.seed, env_seed, config.seed)?;
    if let Some(trials) = overrides.trials {
        config.trials = trials;
    }
    if let Some(particles) = overrides.particles {
        config.particles = particles;
    }
    config.validate()?;
    Ok(config)
}

/// Read a config file, resolve a relative particle-file path against the
/// file's directory, and apply overrides together with `LDNN_SEED`.
pub fn load_config(path: &Path, overrides: &Overrides) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::config(path.display().to_string(), e.to_string()))?;
    let mut config = parse_config(&text)?;
    if let ThetaPrior::ParticleFile { path: particles } = &mut config.prior.theta {
        if particles.is_relative() {
            if let Some(dir) = path.parent() {
                *particles = dir.join(&*particles);
            }
        }
    }
    let env = std::env::var(SEED_ENV).ok();
    apply_overrides(config, overrides, env.as_deref())
}

#[derive(Debug, Clone)]
pub struct SimulateOutput {
    pub trials: Vec<TrajectoryRecord>,
    pub aggregate: TrajectoryRecord,
    pub trials_path: PathBuf,
    pub aggregate_path: PathBuf,
}

pub fn cmd_simulate(config: &ExperimentConfig, out_dir: &Path) -> Result<SimulateOutput> {
    let (trials, aggregate) = simulate(config)?;
    let trials_path = out_dir.join("trials.csv");
    let aggregate_path = out_dir.join("agg.csv");
    atomic_write(&trials_path, &trials_csv(&trials)?)?;
    atomic_write(&aggregate_path, &aggregate_csv(&aggregate)?)?;
    Ok(SimulateOutput {
        trials,
        aggregate,
        trials_path,
        aggregate_path,
    })
}

pub fn cmd_predict(config: &ExperimentConfig, out_dir: &Path) -> Result<(PredictedTrajectory, PathBuf)> {
    let prediction = se_trajectory(config)?;
    let path = out_dir.join("prediction.csv");
    atomic_write(&path, &prediction_csv(&prediction)?)?;
    Ok((prediction, path))
}

#[derive(Serialize)]
struct ReportDocument<'a> {
    tool: &'a str,
    schema: u32,
    empirical: String,
    predicted: String,
    all_pass: bool,
    #[serde(flatten)]
    report: &'a ComparisonReport,
}

/// Compare an empirical CSV (aggregate or trials) with a prediction CSV.
/// Writes `report.json`, and `compare.svg` when `svg` is set.
pub fn cmd_compare(
    empirical_csv: &Path,
    predicted_csv: &Path,
    tolerance: Tolerance,
    out_dir: &Path,
    svg: bool,
) -> Result<ComparisonReport> {
    let empirical = read_series(empirical_csv)?;
    let predicted = read_series(predicted_csv)?;
    let report = compare(&empirical, &predicted, tolerance)?;
    let doc = ReportDocument {
        tool: TOOL_VERSION,
        schema: SCHEMA_VERSION,
        empirical: empirical_csv.display().to_string(),
        predicted: predicted_csv.display().to_string(),
        all_pass: report.all_pass(),
        report: &report,
    };
    let mut json = serde_json::to_vec_pretty(&doc)?;
    json.push(b'\n');
    atomic_write(&out_dir.join("report.json"), &json)?;
    if svg {
        let title = predicted.meta.get("psi").unwrap_or("comparison");
        atomic_write(&out_dir.join("compare.svg"), comparison_svg(&report, title).as_bytes())?;
    }
    Ok(report)
}

/// `10^{-4}` to `10^0`, four points per decade.
pub fn default_lambda_grid() -> Vec<f64> {
    (0..=16).map(|i| 10f64.powf(-4.0 + i as f64 / 4.0)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TuneRow {
    pub lambda: f64,
    /// Iteration at which the predicted ℓ1 error is smallest.
    pub best_t: usize,
    pub min_predicted_l1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneResult {
    pub best_lambda: f64,
    pub rows: Vec<TuneRow>,
}

impl TuneResult {
    pub fn best(&self) -> &TuneRow {
        self.rows
            .iter()
            .find(|r| r.lambda == self.best_lambda)
            .expect("best lambda is on the grid")
    }
}

/// Score every `λ` on the grid by its smallest predicted ℓ1 error over
/// `t ≤ T`. No files are written.
pub fn tune_lambda(config: &ExperimentConfig, grid: &[f64]) -> Result<TuneResult> {
    if grid.is_empty() {
        return Err(Error::SweepValue {
            axis: "lambda",
            value: f64::NAN,
            reason: "empty grid".into(),
        });
    }
    if config.horizon == 0 {
        return Err(Error::config("T", "tuning needs at least one iteration"));
    }
    let mut rows = Vec::with_capacity(grid.len());
    for &lambda in grid {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::SweepValue {
                axis: "lambda",
                value: lambda,
                reason: "must be positive and finite".into(),
            });
        }
        let mut c = config.clone();
        c.lambda = lambda;
        c.metrics = vec![MetricSpec::L1Error];
        let pred = se_trajectory(&c)?;
        let (best_t, min_predicted_l1) = pred
            .series(MetricSpec::L1Error)
            .into_iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(i, v)| (i + 1, v))
            .expect("horizon is positive");
        rows.push(TuneRow {
            lambda,
            best_t,
            min_predicted_l1,
        });
    }
    let best = rows
        .iter()
        .fold(None::<&TuneRow>, |acc, r| match acc {
            None => Some(r),
            Some(b) if r.min_predicted_l1 < b.min_predicted_l1 => Some(r),
            Some(b) if r.min_predicted_l1 == b.min_predicted_l1 && r.lambda > b.lambda => Some(r),
            keep => keep,
        })
        .expect("grid is nonempty");
    Ok(TuneResult {
        best_lambda: best.lambda,
        rows,
    })
}

pub fn cmd_tune_lambda(config: &ExperimentConfig, grid: &[f64], out_dir: &Path) -> Result<TuneResult> {
    let result = tune_lambda(config, grid)?;
    let mut meta = FileMeta::new("tune").with_record(&RecordMeta::from_config(config));
    meta.set("particles", config.particles);
    meta.set("best_lambda", result.best_lambda);
    let rows: Vec<Vec<String>> = result
        .rows
        .iter()
        .map(|r| vec![r.lambda.to_string(), r.best_t.to_string(), r.min_predicted_l1.to_string()])
        .collect();
    let bytes = csv_document(&meta, &["lambda", "best_t", "min_predicted_l1"], &rows)?;
    atomic_write(&out_dir.join("tune.csv"), &bytes)?;
    Ok(result)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// Block size; each value must divide `d`.
    B,
    Lambda,
    /// Aspect ratio; `n = d / κ` must be an integer.
    Kappa,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::B => "b",
            SweepAxis::Lambda => "lambda",
            SweepAxis::Kappa => "kappa",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "b" => Some(SweepAxis::B),
            "lambda" => Some(SweepAxis::Lambda),
            "kappa" => Some(SweepAxis::Kappa),
            _ => None,
        }
    }

    /// The base config with this axis set to `value`.
    pub fn apply(self, base: &ExperimentConfig, value: f64) -> Result<ExperimentConfig> {
        let bad = |reason: String| Error::SweepValue {
            axis: self.name(),
            value,
            reason,
        };
        let mut c = base.clone();
        match self {
            SweepAxis::B => {
                if !(value >= 1.0 && value.fract() == 0.0) {
                    return Err(bad("block size must be a positive integer".into()));
                }
                let b = value as usize;
                if !c.d.is_multiple_of(b) {
                    return Err(bad(format!("does not divide d = {}", c.d)));
                }
                c.b = b;
            }
            SweepAxis::Lambda => {
                if !(value > 0.0 && value.is_finite()) {
                    return Err(bad("must be positive and finite".into()));
                }
                c.lambda = value;
            }
            SweepAxis::Kappa => {
                if !(value > 0.0 && value.is_finite()) {
                    return Err(bad("must be positive and finite".into()));
                }
                let n = (c.d as f64 / value).round();
                if n < 1.0 || ((n * value) - c.d as f64).abs() > 1e-9 * c.d as f64 {
                    return Err(bad(format!("d / kappa is not an integer (d = {})", c.d)));
                }
                c.n = n as usize;
                c.kappa = c.d as f64 / c.n as f64;
            }
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    /// Also run the Monte Carlo simulation at each value.
    pub simulate: bool,
    /// Tune `λ` at each value on this grid before predicting. Ignored on the `lambda` axis.
    pub tune_grid: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub config: ExperimentConfig,
    pub prediction: PredictedTrajectory,
    pub simulation: Option<TrajectoryRecord>,
}

/// Run the sweep without writing files.
pub fn sweep(base: &ExperimentConfig, options: &SweepOptions) -> Result<Vec<SweepPoint>> {
    if options.values.is_empty() {
        return Err(Error::SweepValue {
            axis: options.axis.name(),
            value: f64::NAN,
            reason: "no values given".into(),
        });
    }
    let configs = options
        .values
        .iter()
        .map(|&v| options.axis.apply(base, v))
        .collect::<Result<Vec<_>>>()?;
    configs
        .into_iter()
        .zip(&options.values)
        .map(|(mut config, &value)| {
            if let (Some(grid), false) = (&options.tune_grid, options.axis == SweepAxis::Lambda) {
                config.lambda = tune_lambda(&config, grid)?.best_lambda;
            }
            let prediction = se_trajectory(&config)?;
            let simulation = if options.simulate {
                Some(simulate(&config)?.1)
            } else {
                None
            };
            Ok(SweepPoint {
                value,
                config,
                prediction,
                simulation,
            })
        })
        .collect()
}

pub fn sweep_csv(base: &ExperimentConfig, axis: SweepAxis, points: &[SweepPoint]) -> Result<Vec<u8>> {
    let mut meta = FileMeta::new("sweep").with_record(&RecordMeta::from_config(base));
    meta.set("axis", axis.name());
    meta.set("particles", base.particles);
    if points.iter().any(|p| p.simulation.is_some()) {
        meta.set("trials", base.trials);
    }
    let mut rows = Vec::new();
    for p in points {
        for step in &p.prediction.steps {
            for pred in &step.predictions {
                let sim = p
                    .simulation
                    .as_ref()
                    .and_then(|s| s.series(pred.metric))
                    .and_then(|series| series.get(step.t - 1).copied());
                let cell = |f: fn(&crate::simulate::Summary) -> f64| sim.as_ref().map(f).map(|x| x.to_string()).unwrap_or_default();
                rows.push(vec![
                    axis.name().to_string(),
                    p.value.to_string(),
                    p.config.lambda.to_string(),
                    step.t.to_string(),
                    pred.metric.name().to_string(),
                    pred.value.to_string(),
                    pred.mc_stderr.to_string(),
                    cell(|s| s.median),
                    cell(|s| s.p25),
                    cell(|s| s.p75),
                ]);
            }
        }
    }
    csv_document(
        &meta,
        &[
            "axis",
            "value",
            "lambda",
            "t",
            "metric_name",
            "predicted_value",
            "mc_stderr",
            "median",
            "p25",
            "p75",
        ],
        &rows,
    )
}

pub fn cmd_sweep(base: &ExperimentConfig, options: &SweepOptions, out_dir: &Path) -> Result<Vec<SweepPoint>> {
    let points = sweep(base, options)?;
    atomic_write(&out_dir.join("sweep.csv"), &sweep_csv(base, options.axis, &points)?)?;
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_precedence() {
        assert_eq!(resolve_seed(Some(3), Some("5"), 7).unwrap(), 3);
        assert_eq!(resolve_seed(None, Some(" 5 "), 7).unwrap(), 5);
        assert_eq!(resolve_seed(None, Some(""), 7).unwrap(), 7);
        assert_eq!(resolve_seed(None, None, 7).unwrap(), 7);
        assert!(resolve_seed(None, Some("-1"), 7).is_err());
    }

    #[test]
    fn default_grid_spans_four_decades() {
        let g = default_lambda_grid();
        assert_eq!(g.len(), 17);
        assert!((g[0] - 1e-4).abs() < 1e-18);
        assert!((g[16] - 1.0).abs() < 1e-12);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }
}
