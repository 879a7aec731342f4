use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ldnn::commands::{self, Overrides, SweepAxis, SweepOptions};
use ldnn::compare::Tolerance;
use ldnn::MetricSpec;

#[derive(Parser)]
#[command(name = "ldnn", version, about = "Reweighted least squares simulations and state-evolution predictions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON).
    #[arg(short = 'c', long = "config")]
    config: PathBuf,
    /// Output directory.
    #[arg(short = 'o', long = "out", default_value = "out")]
    out: PathBuf,
    /// Override the number of trials.
    #[arg(long)]
    trials: Option<usize>,
    /// Override the number of state-evolution particles.
    #[arg(long)]
    particles: Option<usize>,
    /// Override the seed (takes precedence over LDNN_SEED).
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn load(&self) -> ldnn::Result<ldnn::ExperimentConfig> {
        let overrides = Overrides {
            seed: self.seed,
            trials: self.trials,
            particles: self.particles,
        };
        commands::load_config(&self.config, &overrides)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the Monte Carlo trials; writes trials.csv and agg.csv.
    Simulate(Common),
    /// Run the state-evolution recursion; writes prediction.csv.
    Predict(Common),
    /// Compare an aggregate (or trials) CSV with a prediction CSV.
    Compare {
        #[arg(long)]
        sim: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        #[arg(short = 'o', long = "out", default_value = "out")]
        out: PathBuf,
        /// Relative tolerance on |median - predicted|.
        #[arg(long, default_value_t = 0.1)]
        rel_tol: f64,
        /// Absolute tolerance floor.
        #[arg(long, default_value_t = 0.0)]
        abs_tol: f64,
        /// Also write compare.svg.
        #[arg(long)]
        svg: bool,
    },
    /// Pick lambda minimizing the best predicted l1 error; writes tune.csv.
    TuneLambda {
        #[command(flatten)]
        common: Common,
        /// Comma-separated grid; defaults to 17 log-spaced values in [1e-4, 1].
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<f64>>,
    },
    /// Predict (and optionally simulate) across values of b, lambda or kappa; writes sweep.csv.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = ["b", "lambda", "kappa"])]
        axis: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        /// Also run the simulation at each value.
        #[arg(long)]
        simulate: bool,
        /// Tune lambda at each value (default grid unless --grid is given).
        #[arg(long)]
        tune: bool,
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<f64>>,
    },
}

fn run(cli: Cli) -> ldnn::Result<ExitCode> {
    match cli.command {
        Command::Simulate(common) => {
            let config = common.load()?;
            let out = commands::cmd_simulate(&config, &common.out)?;
            println!("wrote {} and {}", out.trials_path.display(), out.aggregate_path.display());
        }
        Command::Predict(common) => {
            let config = common.load()?;
            let (pred, path) = commands::cmd_predict(&config, &common.out)?;
            if let Some(best) = pred.best(MetricSpec::L1Error) {
                println!("min predicted l1_error over t <= {}: {best:.6}", config.horizon);
            }
            println!("wrote {}", path.display());
        }
        Command::Compare {
            sim,
            pred,
            out,
            rel_tol,
            abs_tol,
            svg,
        } => {
            let report = commands::cmd_compare(&sim, &pred, Tolerance::new(rel_tol, abs_tol), &out, svg)?;
            for row in report.failures() {
                eprintln!(
                    "FAIL t={} {}: predicted {:?}, median {:?}",
                    row.t,
                    row.metric.name(),
                    row.predicted,
                    row.median
                );
            }
            println!(
                "{} of {} rows within tolerance; wrote {}",
                report.rows.iter().filter(|r| r.pass == Some(true)).count(),
                report.rows.len(),
                out.join("report.json").display()
            );
        }
        Command::TuneLambda { common, grid } => {
            let config = common.load()?;
            let grid = grid.unwrap_or_else(commands::default_lambda_grid);
            let result = commands::cmd_tune_lambda(&config, &grid, &common.out)?;
            let best = result.best();
            println!(
                "best lambda {} (min predicted l1 {:.6} at t={})",
                best.lambda, best.min_predicted_l1, best.best_t
            );
        }
        Command::Sweep {
            common,
            axis,
            values,
            simulate,
            tune,
            grid,
        } => {
            let config = common.load()?;
            let options = SweepOptions {
                axis: SweepAxis::from_name(&axis).expect("clap restricts the axis"),
                values,
                simulate,
                tune_grid: (tune || grid.is_some()).then(|| grid.unwrap_or_else(commands::default_lambda_grid)),
            };
            let points = commands::cmd_sweep(&config, &options, &common.out)?;
            for p in &points {
                let last = p.prediction.steps.last().and_then(|s| s.value(MetricSpec::L1Error));
                println!("{}={} lambda={} final l1 {:?}", axis, p.value, p.config.lambda, last);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
