mod common;

use std::path::Path;
use std::process::Command;

use common::sparse_config;
use ldnn::commands::{
    apply_overrides, cmd_compare, cmd_predict, cmd_simulate, cmd_sweep, cmd_tune_lambda, tune_lambda, Overrides,
    SweepAxis, SweepOptions,
};
use ldnn::compare::Tolerance;
use ldnn::report::{parse_series, read_series};
use ldnn::{Error, ExperimentConfig, MetricSpec, ReweightSpec};

fn quick() -> ExperimentConfig {
    let mut c = sparse_config(ReweightSpec::TanhAbs, 5);
    c.n = 50;
    c.d = 400;
    c.horizon = 3;
    c.particles = 20_000;
    c
}

fn write_config(dir: &Path, config: &ExperimentConfig) -> std::path::PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, config.to_json()).unwrap();
    path
}

fn data_lines(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

#[test]
fn simulate_writes_both_files_with_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let config = quick();
    let out = cmd_simulate(&config, dir.path()).unwrap();
    let trials = std::fs::read_to_string(&out.trials_path).unwrap();
    let agg = std::fs::read_to_string(&out.aggregate_path).unwrap();
    for text in [&trials, &agg] {
        assert!(text.contains(&format!("# config_hash={}", config.config_hash())));
        assert!(text.contains(&format!("# tool={}", ldnn::TOOL_VERSION)));
    }
    assert_eq!(data_lines(&out.trials_path).len(), 1 + 5 * 3);
    assert_eq!(data_lines(&out.aggregate_path)[0], "t,metric_name,median,p25,p75");
}

#[test]
fn single_trial_aggregate_equals_the_trial() {
    let dir = tempfile::tempdir().unwrap();
    let config = apply_overrides(quick(), &Overrides { trials: Some(1), ..Default::default() }, None).unwrap();
    let out = cmd_simulate(&config, dir.path()).unwrap();
    let trial = read_series(&out.trials_path).unwrap();
    let agg = read_series(&out.aggregate_path).unwrap();
    assert_eq!(trial.points, agg.points);
    assert!(agg.points.values().all(|s| s.p25 == s.median && s.p75 == s.median));
}

#[test]
fn same_seed_gives_identical_bytes_and_other_seeds_differ() {
    let run = |seed: u64| {
        let dir = tempfile::tempdir().unwrap();
        let config = apply_overrides(quick(), &Overrides { seed: Some(seed), ..Default::default() }, None).unwrap();
        cmd_simulate(&config, dir.path()).unwrap();
        cmd_predict(&config, dir.path()).unwrap();
        ["trials.csv", "agg.csv", "prediction.csv"].map(|f| std::fs::read(dir.path().join(f)).unwrap())
    };
    assert_eq!(run(4), run(4));
    assert_ne!(run(4)[0], run(5)[0]);
}

#[test]
fn predict_has_saddle_columns_and_fewer_particles_widen_stderr() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = quick();
    config.particles = 160_000;
    let (wide, path) = cmd_predict(&config, dir.path()).unwrap();
    assert_eq!(
        data_lines(&path)[0],
        "t,gamma,beta,tau,metric_name,predicted_value,mc_stderr"
    );
    assert_eq!(data_lines(&path).len(), 1 + config.horizon);

    config.particles = 10_000;
    let (narrow, _) = cmd_predict(&config, dir.path()).unwrap();
    for (a, b) in narrow.steps.iter().zip(&wide.steps) {
        assert!(a.predictions[0].mc_stderr > 2.0 * b.predictions[0].mc_stderr);
    }
}

#[test]
fn zero_horizon_prediction_is_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = quick();
    config.horizon = 0;
    let (pred, path) = cmd_predict(&config, dir.path()).unwrap();
    assert!(pred.steps.is_empty());
    assert_eq!(data_lines(&path).len(), 1);
}

#[test]
fn compare_with_itself_passes_and_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let (_, pred) = cmd_predict(&quick(), dir.path()).unwrap();
    let report = cmd_compare(&pred, &pred, Tolerance::new(0.0, 0.0), dir.path(), true).unwrap();
    assert!(report.all_pass());
    assert!(report.rows.iter().all(|r| r.abs_gap == Some(0.0)));
    let json: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(json["all_pass"], true);
    assert_eq!(json["tool"], ldnn::TOOL_VERSION);
    assert_eq!(json["config_hash"], quick().config_hash());
    let svg = std::fs::read_to_string(dir.path().join("compare.svg")).unwrap();
    assert!(svg.contains("<polyline") && !svg.contains("href"));
}

#[test]
fn compare_flags_a_shifted_copy_and_rejects_other_configs() {
    let dir = tempfile::tempdir().unwrap();
    let (_, pred) = cmd_predict(&quick(), dir.path()).unwrap();
    let text = std::fs::read_to_string(&pred).unwrap();
    let mut shifted = parse_series(&text, "pred").unwrap();
    for s in shifted.points.values_mut() {
        s.median *= 1.1;
    }
    let original = parse_series(&text, "pred").unwrap();
    let report = ldnn::compare::compare(&shifted, &original, Tolerance::new(0.05, 0.0)).unwrap();
    assert_eq!(report.failures().count(), report.rows.len());

    let other = tempfile::tempdir().unwrap();
    let mut changed = quick();
    changed.lambda *= 2.0;
    let (_, other_pred) = cmd_predict(&changed, other.path()).unwrap();
    let err = cmd_compare(&pred, &other_pred, Tolerance::new(0.1, 0.0), dir.path(), false).unwrap_err();
    assert!(matches!(err, Error::HashMismatch { .. }));
}

#[test]
fn tuning_picks_the_grid_minimum() {
    let dir = tempfile::tempdir().unwrap();
    let config = quick();
    let single = cmd_tune_lambda(&config, &[0.02], dir.path()).unwrap();
    assert_eq!(single.best_lambda, 0.02);

    let grid = [1e-3, 1e-2, 1e-1, 1.0];
    let result = cmd_tune_lambda(&config, &grid, dir.path()).unwrap();
    let best = result.best();
    assert!(result.rows.iter().all(|r| r.min_predicted_l1 >= best.min_predicted_l1));
    assert_eq!(data_lines(&dir.path().join("tune.csv")).len(), 1 + grid.len());

    // re-verify the chosen value against an independent prediction
    let mut check = config.clone();
    check.lambda = result.best_lambda;
    let direct = ldnn::se_trajectory(&check).unwrap().best(MetricSpec::L1Error).unwrap();
    assert_eq!(direct, best.min_predicted_l1);
    assert!(tune_lambda(&config, &[]).is_err());
    assert!(tune_lambda(&config, &[-1.0]).is_err());
}

#[test]
fn ties_go_to_the_larger_lambda() {
    // with sigma = 0 and a zero signal every lambda predicts zero error
    let mut config = quick();
    config.sigma = 0.0;
    config.prior = ldnn::PriorSpec::new(ldnn::ThetaPrior::PointMass { value: 0.0 }, ldnn::InitSpec::Ones);
    let r = tune_lambda(&config, &[0.3, 0.01, 0.1]).unwrap();
    assert!(r.rows.iter().all(|row| row.min_predicted_l1 == 0.0));
    assert_eq!(r.best_lambda, 0.3);
}

#[test]
fn single_value_sweep_equals_predict() {
    let dir = tempfile::tempdir().unwrap();
    let config = quick();
    let (pred, _) = cmd_predict(&config, dir.path()).unwrap();
    let options = SweepOptions {
        axis: SweepAxis::B,
        values: vec![1.0],
        simulate: false,
        tune_grid: None,
    };
    let points = cmd_sweep(&config, &options, dir.path()).unwrap();
    assert_eq!(points.len(), 1);
    assert_eq!(points[0].prediction, pred);
    let rows = data_lines(&dir.path().join("sweep.csv"));
    assert_eq!(rows.len(), 1 + config.horizon);
    assert!(rows[1].starts_with("b,1,"));
}

#[test]
fn sweep_validates_axis_values() {
    let config = quick();
    let bad = |axis, value| SweepAxis::apply(axis, &config, value).unwrap_err();
    assert!(matches!(bad(SweepAxis::B, 3.0), Error::SweepValue { axis: "b", .. }));
    assert!(matches!(bad(SweepAxis::B, 1.5), Error::SweepValue { .. }));
    assert!(matches!(bad(SweepAxis::Lambda, 0.0), Error::SweepValue { .. }));
    assert!(matches!(bad(SweepAxis::Kappa, 3.0), Error::SweepValue { .. }));
    let c = SweepAxis::Kappa.apply(&config, 4.0).unwrap();
    assert_eq!((c.n, c.kappa), (100, 4.0));
}

#[test]
fn sweep_over_block_size_with_simulation() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = quick();
    config.psi = ReweightSpec::GroupAwareTanh;
    config.trials = 2;
    let options = SweepOptions {
        axis: SweepAxis::B,
        values: vec![1.0, 2.0, 4.0, 8.0],
        simulate: true,
        tune_grid: None,
    };
    let points = cmd_sweep(&config, &options, dir.path()).unwrap();
    assert_eq!(points.iter().map(|p| p.config.b).collect::<Vec<_>>(), [1, 2, 4, 8]);
    let rows = data_lines(&dir.path().join("sweep.csv"));
    assert_eq!(rows.len(), 1 + 4 * config.horizon);
    let t3: Vec<&String> = rows.iter().filter(|r| r.split(',').nth(3) == Some("3")).collect();
    assert_eq!(t3.len(), 4);
    assert!(t3.iter().all(|r| !r.ends_with(",,,")));
}

#[test]
fn seed_precedence_through_overrides() {
    let base = quick();
    let env = apply_overrides(base.clone(), &Overrides::default(), Some("9")).unwrap();
    assert_eq!(env.seed, 9);
    let flag = apply_overrides(base.clone(), &Overrides { seed: Some(2), ..Default::default() }, Some("9")).unwrap();
    assert_eq!(flag.seed, 2);
    assert_eq!(flag.config_hash(), base.config_hash());
}

fn ldnn_bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ldnn"));
    cmd.env_remove(ldnn::commands::SEED_ENV);
    cmd
}

#[test]
fn binary_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &quick());
    let out = dir.path().join("out");

    let run = ldnn_bin()
        .args(["simulate", "-c"])
        .arg(&cfg)
        .arg("-o")
        .arg(&out)
        .args(["--trials", "3"])
        .output()
        .unwrap();
    assert!(run.status.success());
    let run = ldnn_bin()
        .args(["predict", "-c"])
        .arg(&cfg)
        .arg("-o")
        .arg(&out)
        .args(["--particles", "10000"])
        .output()
        .unwrap();
    assert!(run.status.success());
    let output = ldnn_bin()
        .args(["compare", "--sim"])
        .arg(out.join("agg.csv"))
        .arg("--pred")
        .arg(out.join("prediction.csv"))
        .arg("-o")
        .arg(&out)
        .args(["--rel-tol", "10", "--svg"])
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    assert!(out.join("report.json").exists() && out.join("compare.svg").exists());
    let run = ldnn_bin()
        .args(["tune-lambda", "-c"])
        .arg(&cfg)
        .arg("-o")
        .arg(&out)
        .args(["--grid", "0.01,0.1", "--particles", "10000"])
        .output()
        .unwrap();
    assert!(run.status.success());
    let run = ldnn_bin()
        .args(["sweep", "-c"])
        .arg(&cfg)
        .arg("-o")
        .arg(&out)
        .args(["--axis", "b", "--values", "1,2", "--particles", "10000"])
        .output()
        .unwrap();
    assert!(run.status.success());
    assert!(out.join("tune.csv").exists() && out.join("sweep.csv").exists());
}

#[test]
fn binary_seed_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &quick());
    let run = |env: Option<&str>, flag: Option<&str>, sub: &str| {
        let out = dir.path().join(sub);
        let mut cmd = ldnn_bin();
        cmd.args(["predict", "-c"]).arg(&cfg).arg("-o").arg(&out);
        if let Some(v) = env {
            cmd.env(ldnn::commands::SEED_ENV, v);
        }
        if let Some(f) = flag {
            cmd.args(["--seed", f]);
        }
        assert!(cmd.output().unwrap().status.success());
        std::fs::read_to_string(out.join("prediction.csv")).unwrap()
    };
    assert!(run(Some("77"), None, "a").contains("# seed=77"));
    assert!(run(Some("77"), Some("5"), "b").contains("# seed=5"));
    assert!(run(None, None, "c").contains("# seed=1"));
}

#[test]
fn binary_reports_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let mut bad = quick().to_json();
    bad = bad.replace("\"b\": 1", "\"b\": 3");
    let path = dir.path().join("bad.json");
    std::fs::write(&path, bad).unwrap();
    let output = ldnn_bin().args(["simulate", "-c"]).arg(&path).output().unwrap();
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("d not divisible by b"), "{stderr}");
}
