//! `bench`: environment sweeps, learning-rate tuning and environment files.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use corrlearn::sweep::{cross_check, run_sweep, tune_beta, write_outputs, SweepResult, SweepSpec};
use corrlearn::{generate_scenario, Environment, GenConfig, GroundTruth, KernelKind, PlannerConfig, Strategy};

#[derive(Parser)]
#[command(name = "bench", version, about = "Simulation sweeps for learning from corrections")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (types, instances, kernel, learning rate, environment) combination.
    Sweep(SweepArgs),
    /// Tune the learning rate of one kernel on a set of generated environments.
    Tune(TuneArgs),
    /// Generate or inspect environment files.
    #[command(subcommand)]
    Env(EnvCommand),
    /// Recompute the aggregate table of a sweep directory from its per-run records.
    Check {
        #[arg(long, default_value = "sweep-out")]
        out_dir: PathBuf,
    },
}

#[derive(Args)]
struct SweepArgs {
    /// JSON sweep specification; omitted fields take their defaults.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, default_value = "sweep-out")]
    out_dir: PathBuf,
    /// Overrides the spec's base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Also write long-format CSVs of the learning curves and deformation profiles.
    #[arg(long)]
    emit_plot_data: bool,
    /// Also write every iteration record to traces.jsonl.
    #[arg(long)]
    traces: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Largest,
    Anywhere,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Largest => Strategy::Largest,
            StrategyArg::Anywhere => Strategy::Anywhere,
        }
    }
}

#[derive(Args)]
struct TuneArgs {
    /// `identity`, `velocity` or `rbf:<sigma>`.
    #[arg(long)]
    kernel: KernelKind,
    /// Comma-separated learning rates.
    #[arg(long, value_delimiter = ',', required = true)]
    grid: Vec<f64>,
    #[arg(long, default_value_t = 1)]
    types: usize,
    #[arg(long, default_value_t = 1)]
    instances: usize,
    #[arg(long, default_value_t = 25)]
    envs: usize,
    #[arg(long, default_value_t = 20)]
    iterations: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = StrategyArg::Largest)]
    strategy: StrategyArg,
}

#[derive(Subcommand)]
enum EnvCommand {
    /// Write a generated environment as JSON.
    Gen {
        #[arg(long, default_value_t = 1)]
        types: usize,
        #[arg(long, default_value_t = 1)]
        instances: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarize an environment file and its ground-truth optimum.
    Show {
        file: PathBuf,
        #[arg(long, default_value_t = PlannerConfig::default().horizon)]
        horizon: usize,
    },
}

fn load_spec(path: Option<&Path>) -> Result<SweepSpec> {
    let Some(path) = path else {
        return Ok(SweepSpec::default());
    };
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn print_summary(result: &SweepResult) {
    println!("{:>5} {:>9} {:<12} {:>8} {:>10} {:>10}", "types", "instances", "kernel", "beta", "iter_1", "final");
    for row in &result.aggregate {
        println!(
            "{:>5} {:>9} {:<12} {:>8} {:>10.4} {:>10.4}",
            row.num_types,
            row.num_instances,
            row.kernel.to_string(),
            row.beta,
            row.medians[0],
            row.medians.last().copied().unwrap_or(f64::NAN)
        );
    }
}

fn sweep(args: SweepArgs) -> Result<ExitCode> {
    let mut spec = load_spec(args.spec.as_deref())?;
    if let Some(seed) = args.seed {
        spec.base_seed = seed;
    }
    spec.emit_traces |= args.traces;
    let result = run_sweep(&spec)?;
    let written = write_outputs(&result, &args.out_dir, args.emit_plot_data)?;
    print_summary(&result);
    for path in written {
        eprintln!("wrote {}", path.display());
    }
    if result.is_complete() {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("{} runs failed; see failures.csv", result.failures.len());
        Ok(ExitCode::from(2))
    }
}

fn tune(args: TuneArgs) -> Result<ExitCode> {
    let cfg = GenConfig::default();
    let scenarios = (0..args.envs as u64)
        .map(|e| generate_scenario(args.types, args.instances, args.seed.wrapping_add(e), &cfg))
        .collect::<corrlearn::Result<Vec<_>>>()?;
    let (best, finals) = tune_beta(
        &scenarios,
        &cfg.planner,
        args.kernel,
        &args.grid,
        args.iterations,
        args.strategy.into(),
    )?;
    println!("beta,final_median");
    for (beta, median) in finals {
        println!("{beta},{median}");
    }
    println!("best {best}");
    Ok(ExitCode::SUCCESS)
}

fn env(cmd: EnvCommand) -> Result<ExitCode> {
    match cmd {
        EnvCommand::Gen {
            types,
            instances,
            seed,
            out,
        } => {
            let s = generate_scenario(types, instances, seed, &GenConfig::default())?;
            let text = s.env.to_json() + "\n";
            match out {
                Some(path) => fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?,
                None => print!("{text}"),
            }
        }
        EnvCommand::Show { file, horizon } => {
            let text = fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?;
            let env = Environment::from_json(&text)?;
            println!("dimension   {}", env.dim());
            println!("start       {:?}", env.start);
            println!("goal        {:?}", env.goal);
            println!("types       {}", env.num_types);
            for k in 0..env.num_types {
                let weight = env.ground_truth_w.as_ref().map(|w| format!("{:+.4}", w[k]));
                println!(
                    "  type {k}: {} obstacles, weight {}",
                    env.instances_of(k),
                    weight.as_deref().unwrap_or("unknown")
                );
            }
            if env.ground_truth_w.is_some() {
                let planner = PlannerConfig {
                    horizon,
                    ..PlannerConfig::default()
                };
                let truth = GroundTruth::compute(&env, &planner)?;
                println!("straight-line objective {:.6}", truth.straight_cost);
                println!("optimal objective       {:.6}", truth.optimal_cost);
                println!("largest deviation       {:.6}", truth.max_deviation());
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn check(out_dir: &Path) -> Result<ExitCode> {
    let report = cross_check(out_dir)?;
    for m in &report.mismatches {
        eprintln!("mismatch: {m}");
    }
    println!("{} aggregate rows checked, {} mismatches", report.rows_checked, report.mismatches.len());
    Ok(if report.mismatches.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::FAILURE;
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .expect("thread pool is configured once");
    }
    let outcome = match cli.command {
        Command::Sweep(args) => sweep(args),
        Command::Tune(args) => tune(args),
        Command::Env(cmd) => env(cmd),
        Command::Check { out_dir } => check(&out_dir),
    };
    outcome.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        ExitCode::FAILURE
    })
}
