use std::path::{Path, PathBuf};
use std::process::Command;

use airoas_core::{LowerBound, UpperBound};
use airoas_harness::experiment::{read_episodes, read_summary, EPISODES_FILE, SUMMARY_FILE};
use airoas_harness::plot::ablation_svg;
use airoas_harness::{
    discounted_sum, episode_seed, run_ablation_sweep, run_episode, run_experiment, run_target_sweep, summarize,
    DomainConfig, EpisodeResult, ExperimentConfig, Solver,
};

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

/// A small trial-capped LightDark experiment.
fn small_config(episodes: usize) -> ExperimentConfig {
    ExperimentConfig::from_toml(&format!(
        r#"
        name = "small"
        episodes = {episodes}
        max_steps = 8
        master_seed = 11

        [domain]
        kind = "light_dark"

        [planner]
        particles = 40
        time_budget = 60.0
        max_trials = 15
        max_depth = 20
        tempering_steps = 20
        target_inefficiency = 3.0

        [planner.bounds]
        lower = {{ kind = "fixed", value = -11.0 }}
        upper = {{ kind = "fixed", value = 11.0 }}
        "#
    ))
    .unwrap()
}

fn without_wall_time(mut e: EpisodeResult) -> EpisodeResult {
    e.wall_time = 0.0;
    e
}

#[test]
fn checked_in_configs_carry_the_tuned_settings() {
    let expected = [
        ("lightdark_step05", 5.0),
        ("lightdark_step10", 3.0),
        ("tag", 2.0),
        ("lasertag", 2.0),
        ("rocksample_11_11", 10.0),
        ("rocksample_15_15", 2.0),
    ];
    for (name, target) in expected {
        let cfg = ExperimentConfig::load(&repo_root().join(format!("configs/{name}.toml"))).unwrap();
        assert_eq!(cfg.name, name);
        assert_eq!(cfg.planner.target_inefficiency, target, "{name}");
        assert_eq!(cfg.planner.time_budget, 5.0, "{name}");
        assert_eq!(cfg.planner.tempering_steps, 100, "{name}");
        assert_eq!(cfg.planner.target_grid, vec![2.0, 3.0, 5.0, 10.0, 20.0]);
        let b = &cfg.planner.bounds;
        match &cfg.domain {
            DomainConfig::LightDark(p) => {
                assert_eq!(b.lower, LowerBound::Fixed { value: -11.0 });
                assert_eq!(b.upper, UpperBound::Fixed { value: 11.0 });
                assert_eq!(p.step_size, if name.ends_with("05") { 0.5 } else { 1.0 });
            }
            DomainConfig::Tag(_) | DomainConfig::LaserTag(_) => {
                assert_eq!(b.lower, LowerBound::Fixed { value: -20.0 });
                assert_eq!(b.upper, UpperBound::Fixed { value: 0.0 });
            }
            DomainConfig::RockSample(p) => {
                assert!(matches!(b.lower, LowerBound::FixedActionRollout { .. }));
                assert_eq!(b.upper, UpperBound::MdpApprox);
                assert_eq!(p.size as usize, p.rocks);
            }
        }
    }
}

#[test]
fn invalid_configs_are_rejected() {
    let base = r#"
        episodes = 0
        max_steps = 5
        master_seed = 1
        [domain]
        kind = "tag"
        [planner]
        target_inefficiency = 2.0
        [planner.bounds]
        lower = { kind = "fixed", value = -20.0 }
        upper = { kind = "fixed", value = 0.0 }
    "#;
    assert!(ExperimentConfig::from_toml(base).is_err(), "zero episodes");
    let swapped = base
        .replace("episodes = 0", "episodes = 1")
        .replace("value = -20.0", "value = 5.0");
    assert!(ExperimentConfig::from_toml(&swapped).is_err(), "lower above upper");
    let bad_target = base
        .replace("episodes = 0", "episodes = 1")
        .replace("target_inefficiency = 2.0", "target_inefficiency = 0.5");
    assert!(ExperimentConfig::from_toml(&bad_target).is_err(), "target below one");
    let unknown = base.replace("episodes = 0", "episodes = 1\nepisodez = 3");
    assert!(ExperimentConfig::from_toml(&unknown).is_err(), "unknown key");
    assert!(ExperimentConfig::from_toml(&base.replace("episodes = 0", "episodes = 1")).is_ok());
}

#[test]
fn zero_steps_give_an_empty_episode() {
    let mut cfg = small_config(1);
    cfg.max_steps = 0;
    let e = run_episode(&cfg, 0, 5).unwrap();
    assert_eq!(e.discounted_return, 0.0);
    assert_eq!(e.steps, 0);
    assert!(e.log.is_empty());
}

#[test]
fn episodes_are_reproducible_from_their_seed() {
    let cfg = small_config(1);
    for solver in [Solver::Airoas, Solver::NoAir] {
        let mut c = cfg.clone();
        c.solver = solver;
        let a = run_episode(&c, 3, 99).unwrap();
        let b = run_episode(&c, 3, 99).unwrap();
        assert_eq!(without_wall_time(a), without_wall_time(b));
    }
}

#[test]
fn returns_are_recomputable_from_the_log() {
    let cfg = small_config(6);
    let out = run_experiment(&cfg).unwrap();
    let gamma = 0.9;
    let mut declared = 0;
    for e in &out.episodes {
        assert_eq!(e.steps, e.log.len());
        assert_eq!(e.discounted_return, e.recomputed_return());
        assert_eq!(e.discounted_return, discounted_sum(e.log.iter().map(|s| s.reward), gamma));
        for (t, s) in e.log.iter().enumerate() {
            assert!(s.root_lower <= s.root_upper);
            if s.action == "Declare" {
                // declaring ends the episode and its reward is the last term
                assert_eq!(t + 1, e.log.len());
                assert!(s.reward.abs() == 10.0);
                let earlier = discounted_sum(e.log[..t].iter().map(|s| s.reward), gamma);
                let term = s.reward * gamma.powi(t as i32);
                assert!((e.discounted_return - earlier - term).abs() < 1e-12);
                declared += 1;
            }
        }
    }
    assert!(declared > 0, "no episode declared");
}

#[test]
fn single_episode_flags_undefined_sem() {
    let out = run_experiment(&small_config(1)).unwrap();
    let row = &out.summary[0];
    assert_eq!(row.episodes, 1);
    assert_eq!(row.sem, 0.0);
    assert!(!row.sem_defined);
    assert_eq!(row.mean_return, out.episodes[0].discounted_return);
}

#[test]
fn adding_episodes_keeps_earlier_ones() {
    let short = run_experiment(&small_config(2)).unwrap();
    let long = run_experiment(&small_config(4)).unwrap();
    for (a, b) in short.episodes.into_iter().zip(long.episodes) {
        assert_eq!(without_wall_time(a), without_wall_time(b));
    }
    assert_eq!(episode_seed(11, 1), run_episode(&small_config(1), 1, episode_seed(11, 1)).unwrap().seed);
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let mut one = small_config(4);
    one.workers = 1;
    let mut three = one.clone();
    three.workers = 3;
    let a = run_experiment(&one).unwrap();
    let b = run_experiment(&three).unwrap();
    let strip = |v: Vec<EpisodeResult>| v.into_iter().map(without_wall_time).collect::<Vec<_>>();
    assert_eq!(strip(a.episodes), strip(b.episodes));
    assert_eq!(a.summary[0].mean_return, b.summary[0].mean_return);
    assert_eq!(a.summary[0].sem, b.summary[0].sem);
}

#[test]
fn written_summary_matches_recomputation() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(5);
    cfg.output = Some(dir.path().to_path_buf());
    let out = run_experiment(&cfg).unwrap();

    let on_disk = read_episodes(&dir.path().join(EPISODES_FILE)).unwrap();
    assert_eq!(on_disk, out.episodes);
    let file = read_summary(&dir.path().join(SUMMARY_FILE)).unwrap();
    let again = summarize(dir.path()).unwrap();
    assert_eq!(file.len(), 1);
    assert_eq!(again.len(), 1);
    let (f, r) = (&file[0], &again[0]);
    for (x, y) in [
        (f.mean_return, r.mean_return),
        (f.sem, r.sem),
        (f.median_return, r.median_return),
        (f.mean_steps, r.mean_steps),
        (f.wall_time_mean, r.wall_time_mean),
        (f.wall_time_max, r.wall_time_max),
    ] {
        assert!((x - y).abs() <= 1e-9, "{x} vs {y}");
    }
    assert_eq!((f.episodes, f.sem_defined, f.particles), (r.episodes, r.sem_defined, r.particles));

    let returns: Vec<f64> = on_disk.iter().map(|e| e.discounted_return).collect();
    let mean = returns.iter().sum::<f64>() / 5.0;
    let sd = (returns.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 4.0).sqrt();
    assert!((f.mean_return - mean).abs() <= 1e-9);
    assert!((f.sem - sd / 5f64.sqrt()).abs() <= 1e-9);
}

#[test]
fn ablation_rows_cover_each_solver_and_count() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(2);
    cfg.output = Some(dir.path().to_path_buf());
    let out = run_ablation_sweep(&cfg, &[100]).unwrap();
    assert_eq!(out.summary.len(), 2);
    assert_eq!(out.episodes.len(), 4);

    let out = run_ablation_sweep(&cfg, &[20, 30]).unwrap();
    assert_eq!(out.summary.len(), 4);
    let first = &out.summary[0];
    for row in &out.summary {
        assert_eq!(
            (&row.name, &row.domain, row.episodes, row.max_steps, row.master_seed),
            (&first.name, &first.domain, first.episodes, first.max_steps, first.master_seed)
        );
        assert_eq!(
            (row.time_budget, row.max_trials, row.xi, row.tempering_steps, row.target_inefficiency),
            (first.time_budget, first.max_trials, first.xi, first.tempering_steps, first.target_inefficiency)
        );
    }
    let cells: Vec<(Solver, usize)> = out.summary.iter().map(|r| (r.solver, r.particles)).collect();
    assert_eq!(
        cells,
        vec![(Solver::Airoas, 20), (Solver::NoAir, 20), (Solver::Airoas, 30), (Solver::NoAir, 30)]
    );
    // every cell of a sweep is summarized again from the records
    let again = summarize(dir.path()).unwrap();
    assert_eq!(again.len(), 4);
    for (a, b) in again.iter().zip(&out.summary) {
        assert_eq!((a.solver, a.particles), (b.solver, b.particles));
        assert!((a.mean_return - b.mean_return).abs() <= 1e-9);
        assert!((a.sem - b.sem).abs() <= 1e-9);
    }

    let svg = ablation_svg(&out.summary, "small");
    assert!(svg.starts_with("<svg"));
    assert_eq!(svg.matches("<polyline").count(), 2);
}

#[test]
fn target_sweep_has_one_row_per_target() {
    let out = run_target_sweep(&small_config(1), &[2.0, 5.0]).unwrap();
    let targets: Vec<f64> = out.summary.iter().map(|r| r.target_inefficiency).collect();
    assert_eq!(targets, vec![2.0, 5.0]);
    assert!(out.summary.iter().all(|r| r.solver == Solver::Airoas));
}

#[test]
fn every_domain_runs_an_episode() {
    for name in ["tag", "lasertag", "rocksample_11_11", "rocksample_15_15", "lightdark_step05"] {
        let mut cfg = ExperimentConfig::load(&repo_root().join(format!("configs/{name}.toml"))).unwrap();
        cfg.planner.particles = 30;
        cfg.planner.max_trials = Some(5);
        cfg.planner.tempering_steps = 10;
        cfg.max_steps = 3;
        let e = run_episode(&cfg, 0, 1).unwrap();
        assert!(e.steps <= 3, "{name}");
        assert_eq!(e.discounted_return, e.recomputed_return(), "{name}");
    }
}

fn airoas() -> Command {
    Command::new(env!("CARGO_BIN_EXE_airoas"))
}

#[test]
fn cli_runs_summarizes_and_plots() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("small.toml");
    let mut cfg = small_config(2);
    cfg.output = None;
    std::fs::write(&cfg_path, toml::to_string(&cfg).unwrap()).unwrap();
    let out_dir = dir.path().join("out");

    let status = airoas()
        .args(["ablate", "--config"])
        .arg(&cfg_path)
        .args(["--particles", "20,30", "--episodes", "1", "--out"])
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    assert_eq!(read_summary(&out_dir.join(SUMMARY_FILE)).unwrap().len(), 4);

    let status = airoas().args(["summarize", "--in"]).arg(&out_dir).output().unwrap();
    assert!(status.status.success());
    let svg = dir.path().join("ablation.svg");
    let status = airoas().args(["plot", "--in"]).arg(&out_dir).arg("--out").arg(&svg).output().unwrap();
    assert!(status.status.success());
    assert!(std::fs::read_to_string(&svg).unwrap().contains("<polyline"));
}

#[test]
fn cli_failures_emit_an_error_record() {
    let out = airoas()
        .args(["run", "--config", "/nonexistent/config.toml"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let line = String::from_utf8_lossy(&out.stderr);
    let record: serde_json::Value = serde_json::from_str(line.trim()).unwrap();
    assert_eq!(record["error"], "io");
    assert!(record["message"].as_str().unwrap().contains("nonexistent"));

    let out = airoas().args(["run"]).output().unwrap();
    assert!(!out.status.success());
    let record: serde_json::Value = serde_json::from_str(String::from_utf8_lossy(&out.stderr).trim()).unwrap();
    assert_eq!(record["error"], "usage");
}
