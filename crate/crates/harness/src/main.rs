use std::path::{Path, PathBuf};
use std::process::ExitCode;

use airoas_harness::experiment::{self, read_summary, write_summary, SUMMARY_FILE};
use airoas_harness::plot::ablation_svg;
use airoas_harness::{ExperimentConfig, ExperimentOutput, HarnessError, Result, SummaryRow};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "airoas", version, about = "Run and summarize online POMDP planning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run(RunArgs),
    /// Run both solvers at several particle counts.
    Ablate {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated particle counts.
        #[arg(long, value_delimiter = ',', default_value = "100,200,500,1000,2000")]
        particles: Vec<usize>,
    },
    /// Run the annealing solver at several target inefficiencies.
    Tune {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated targets; defaults to the grid in the config.
        #[arg(long, value_delimiter = ',')]
        grid: Vec<f64>,
    },
    /// Recompute the summary table of an output directory from its episodes.
    Summarize {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Draw the ablation curves of an output directory as SVG.
    Plot {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the master seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    episodes: Option<usize>,
    /// Output directory; defaults to the config's, then results/<name>.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Seconds per decision.
    #[arg(long)]
    time_budget: Option<f64>,
    #[arg(long)]
    max_trials: Option<usize>,
}

impl RunArgs {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(s) = self.seed {
            cfg.master_seed = s;
        }
        if let Some(n) = self.episodes {
            cfg.episodes = n;
        }
        if let Some(w) = self.workers {
            cfg.workers = w;
        }
        if let Some(t) = self.time_budget {
            cfg.planner.time_budget = t;
        }
        if self.max_trials.is_some() {
            cfg.planner.max_trials = self.max_trials;
        }
        let out = self
            .out
            .clone()
            .or_else(|| cfg.output.clone())
            .unwrap_or_else(|| experiment::default_output(&cfg));
        cfg.output = Some(out);
        cfg.validate()?;
        Ok(cfg)
    }
}

fn print_summary(rows: &[SummaryRow]) {
    println!("solver,particles,target_inefficiency,episodes,mean_return,sem,median_return");
    for r in rows {
        println!(
            "{},{},{},{},{:.4},{:.4},{:.4}",
            r.solver.as_str(),
            r.particles,
            r.target_inefficiency,
            r.episodes,
            r.mean_return,
            r.sem,
            r.median_return
        );
    }
}

fn finish(cfg: &ExperimentConfig, out: ExperimentOutput) {
    print_summary(&out.summary);
    if let Some(dir) = &cfg.output {
        eprintln!("wrote {}", dir.display());
    }
}

fn plot(input: &Path, out: &Path) -> Result<()> {
    let rows = read_summary(&input.join(SUMMARY_FILE))?;
    let title = rows.first().map(|r| r.domain.clone()).unwrap_or_default();
    std::fs::write(out, ablation_svg(&rows, &title)).map_err(|e| HarnessError::io(out, e))
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => {
            let cfg = args.load()?;
            finish(&cfg, experiment::run_experiment(&cfg)?);
        }
        Command::Ablate { run, particles } => {
            let cfg = run.load()?;
            finish(&cfg, experiment::run_ablation_sweep(&cfg, &particles)?);
        }
        Command::Tune { run, grid } => {
            let cfg = run.load()?;
            let grid = if grid.is_empty() { cfg.planner.target_grid.clone() } else { grid };
            finish(&cfg, experiment::run_target_sweep(&cfg, &grid)?);
        }
        Command::Summarize { input } => {
            let rows = experiment::summarize(&input)?;
            write_summary(&input.join(SUMMARY_FILE), &rows)?;
            print_summary(&rows);
        }
        Command::Plot { input, out } => plot(&input, &out)?,
    }
    Ok(())
}

fn error_record(kind: &str, message: &str) -> String {
    serde_json::json!({ "error": kind, "message": message }).to_string()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("{}", error_record("usage", e.to_string().trim()));
            return ExitCode::from(2);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_record(e.kind(), &e.to_string()));
            ExitCode::FAILURE
        }
    }
}
