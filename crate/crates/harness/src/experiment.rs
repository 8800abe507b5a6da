//! Multi-episode experiments, sweeps and their on-disk records.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, Solver};
use crate::episode::{episode_seed, run_episode, EpisodeResult};
use crate::error::{HarnessError, Result};

pub const EPISODES_FILE: &str = "episodes.jsonl";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const CONFIG_FILE: &str = "config.toml";

/// Mean, standard error of the mean and median of a sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleStats {
    pub mean: f64,
    /// Zero when it is undefined (a single value).
    pub sem: f64,
    pub sem_defined: bool,
    pub median: f64,
}

pub fn sample_stats(values: &[f64]) -> SampleStats {
    assert!(!values.is_empty(), "statistics of an empty sample");
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let (sem, sem_defined) = if values.len() > 1 {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (var.sqrt() / n.sqrt(), true)
    } else {
        (0.0, false)
    };
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    let median = if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        0.5 * (sorted[mid - 1] + sorted[mid])
    };
    SampleStats {
        mean,
        sem,
        sem_defined,
        median,
    }
}

/// One line of the summary table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub name: String,
    pub domain: String,
    pub solver: Solver,
    pub particles: usize,
    pub target_inefficiency: f64,
    pub episodes: usize,
    pub max_steps: usize,
    pub master_seed: u64,
    pub time_budget: f64,
    pub max_trials: Option<usize>,
    pub xi: f64,
    pub tempering_steps: usize,
    pub mean_return: f64,
    pub sem: f64,
    pub sem_defined: bool,
    pub median_return: f64,
    pub mean_steps: f64,
    pub belief_resets: usize,
    pub wall_time_mean: f64,
    pub wall_time_max: f64,
    pub wall_time_total: f64,
}

impl SummaryRow {
    /// Summarizes episodes that all ran under `cfg`.
    pub fn from_episodes(cfg: &ExperimentConfig, episodes: &[EpisodeResult]) -> Self {
        let returns: Vec<f64> = episodes.iter().map(|e| e.discounted_return).collect();
        let stats = sample_stats(&returns);
        let walls: Vec<f64> = episodes.iter().map(|e| e.wall_time).collect();
        let n = episodes.len() as f64;
        let first = &episodes[0];
        SummaryRow {
            name: cfg.name.clone(),
            domain: cfg.domain.name(),
            solver: first.solver,
            particles: first.particles,
            target_inefficiency: first.target_inefficiency,
            episodes: episodes.len(),
            max_steps: cfg.max_steps,
            master_seed: cfg.master_seed,
            time_budget: cfg.planner.time_budget,
            max_trials: cfg.planner.max_trials,
            xi: cfg.planner.xi,
            tempering_steps: cfg.planner.tempering_steps,
            mean_return: stats.mean,
            sem: stats.sem,
            sem_defined: stats.sem_defined,
            median_return: stats.median,
            mean_steps: episodes.iter().map(|e| e.steps as f64).sum::<f64>() / n,
            belief_resets: episodes.iter().map(|e| e.belief_resets).sum(),
            wall_time_mean: walls.iter().sum::<f64>() / n,
            wall_time_max: walls.iter().copied().fold(0.0, f64::max),
            wall_time_total: walls.iter().sum(),
        }
    }
}

/// Episodes and summary rows of a finished experiment or sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub episodes: Vec<EpisodeResult>,
    pub summary: Vec<SummaryRow>,
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| HarnessError::Invalid(format!("cannot start worker pool: {e}")))
}

/// Runs every episode of `cfg`, in parallel across `cfg.workers` threads.
/// Results come back in episode order whatever the worker count.
pub fn run_episodes(cfg: &ExperimentConfig) -> Result<Vec<EpisodeResult>> {
    cfg.validate()?;
    let results: Vec<Result<EpisodeResult>> = pool(cfg.workers)?.install(|| {
        (0..cfg.episodes)
            .into_par_iter()
            .map(|i| run_episode(cfg, i, episode_seed(cfg.master_seed, i)))
            .collect()
    });
    results.into_iter().collect()
}

/// Runs `cfg` and writes its records when `cfg.output` is set.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let episodes = run_episodes(cfg)?;
    let summary = vec![SummaryRow::from_episodes(cfg, &episodes)];
    let out = ExperimentOutput { episodes, summary };
    if let Some(dir) = &cfg.output {
        write_output(dir, cfg, &out)?;
    }
    Ok(out)
}

/// Runs both solvers at every particle count, with the same episode seeds in
/// every cell.
pub fn run_ablation_sweep(cfg: &ExperimentConfig, particle_counts: &[usize]) -> Result<ExperimentOutput> {
    let cells: Vec<ExperimentConfig> = particle_counts
        .iter()
        .flat_map(|&m| {
            [Solver::Airoas, Solver::NoAir].into_iter().map(move |solver| {
                let mut c = cfg.clone();
                c.planner.particles = m;
                c.solver = solver;
                c
            })
        })
        .collect();
    run_cells(cfg, &cells)
}

/// Runs the annealing solver once per target inefficiency in the grid.
pub fn run_target_sweep(cfg: &ExperimentConfig, grid: &[f64]) -> Result<ExperimentOutput> {
    let cells: Vec<ExperimentConfig> = grid
        .iter()
        .map(|&r| {
            let mut c = cfg.clone();
            c.planner.target_inefficiency = r;
            c.solver = Solver::Airoas;
            c
        })
        .collect();
    run_cells(cfg, &cells)
}

fn run_cells(base: &ExperimentConfig, cells: &[ExperimentConfig]) -> Result<ExperimentOutput> {
    if cells.is_empty() {
        return Err(HarnessError::Invalid("sweep has no cells".into()));
    }
    let mut out = ExperimentOutput {
        episodes: Vec::new(),
        summary: Vec::new(),
    };
    for cell in cells {
        let episodes = run_episodes(cell)?;
        out.summary.push(SummaryRow::from_episodes(cell, &episodes));
        out.episodes.extend(episodes);
    }
    if let Some(dir) = &base.output {
        write_output(dir, base, &out)?;
    }
    Ok(out)
}

pub fn write_output(dir: &Path, cfg: &ExperimentConfig, out: &ExperimentOutput) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let cfg_path = dir.join(CONFIG_FILE);
    let text = toml::to_string(cfg).map_err(|e| HarnessError::Invalid(format!("cannot serialize config: {e}")))?;
    fs::write(&cfg_path, text).map_err(|e| HarnessError::io(&cfg_path, e))?;

    let path = dir.join(EPISODES_FILE);
    let file = File::create(&path).map_err(|e| HarnessError::io(&path, e))?;
    let mut w = BufWriter::new(file);
    for e in &out.episodes {
        serde_json::to_writer(&mut w, e)?;
        w.write_all(b"\n").map_err(|e| HarnessError::io(&path, e))?;
    }
    w.flush().map_err(|e| HarnessError::io(&path, e))?;

    write_summary(&dir.join(SUMMARY_FILE), &out.summary)
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))?;
    Ok(())
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(HarnessError::from)).collect()
}

pub fn read_episodes(path: &Path) -> Result<Vec<EpisodeResult>> {
    let file = File::open(path).map_err(|e| HarnessError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| HarnessError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|e| HarnessError::Record {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}

pub fn read_config(dir: &Path) -> Result<ExperimentConfig> {
    ExperimentConfig::load(&dir.join(CONFIG_FILE))
}

/// Recomputes the summary table of an output directory from its episode
/// records, grouping by solver, particle count and target inefficiency.
pub fn summarize(dir: &Path) -> Result<Vec<SummaryRow>> {
    let base = read_config(dir)?;
    let episodes = read_episodes(&dir.join(EPISODES_FILE))?;
    if episodes.is_empty() {
        return Err(HarnessError::Invalid(format!("{} holds no episodes", dir.display())));
    }
    let mut groups: BTreeMap<(Solver, usize, u64), Vec<EpisodeResult>> = BTreeMap::new();
    let mut order = Vec::new();
    for e in episodes {
        let key = (e.solver, e.particles, e.target_inefficiency.to_bits());
        if !groups.contains_key(&key) {
            order.push(key);
        }
        groups.entry(key).or_default().push(e);
    }
    Ok(order
        .into_iter()
        .map(|key| {
            let mut eps = groups.remove(&key).expect("group exists");
            eps.sort_by_key(|e| e.index);
            let mut cfg = base.clone();
            cfg.solver = key.0;
            cfg.planner.particles = key.1;
            cfg.planner.target_inefficiency = f64::from_bits(key.2);
            SummaryRow::from_episodes(&cfg, &eps)
        })
        .collect())
}

/// Default output directory for a config without one.
pub fn default_output(cfg: &ExperimentConfig) -> PathBuf {
    let name = if cfg.name.is_empty() { "experiment" } else { &cfg.name };
    PathBuf::from("results").join(name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stats_examples() {
        let s = sample_stats(&[1.0, 3.0]);
        assert_eq!(s.mean, 2.0);
        assert!((s.sem - 1.0).abs() < 1e-15);
        assert!(s.sem_defined);
        assert_eq!(s.median, 2.0);

        let one = sample_stats(&[4.5]);
        assert_eq!((one.mean, one.sem, one.sem_defined, one.median), (4.5, 0.0, false, 4.5));

        assert_eq!(sample_stats(&[5.0, -1.0, 2.0]).median, 2.0);
    }
}
