//! Command-line front end: `climbing`, `random`, `tune` and `report`.
//!
//! Exit codes: 0 success, 1 runtime failure (including diverged runs),
//! 2 usage or configuration error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::agents::{Algorithm, Bank, FixedRole};
use crate::config::{default_eval_every, AlgorithmEntry, ExperimentFile, GameBlock, GameKind};
use crate::error::Error;
use crate::harness::{run_experiment, write_outputs, Experiment, ExperimentResult};
use crate::report::render_report;
use crate::tuner::{grid_search, write_tuning, GridSpec, TuningProtocol};

pub const OUT_ENV: &str = "INFOMSG_OUT";

#[derive(Debug, Parser)]
#[command(name = "infomsg", version, about = "Signaling-game learning benchmarks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train on the 3x3 climbing game.
    Climbing(RunArgs),
    /// Train on a set of random payoff matrices.
    Random(RandomArgs),
    /// Grid-search hyperparameters on fresh random matrices.
    Tune(TuneArgs),
    /// Render SVG figures from an output directory.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Comma-separated algorithms (default: all ten).
    #[arg(long, value_delimiter = ',')]
    pub algos: Option<Vec<Algorithm>>,
    /// Runs per matrix [default: 1000].
    #[arg(long)]
    pub runs: Option<u64>,
    /// Episodes per run [default: 1000, or 25000 for size 32 and up].
    #[arg(long)]
    pub episodes: Option<u64>,
    /// Master seed [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory [default: out].
    #[arg(long, env = OUT_ENV)]
    pub out: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Evaluation grid spacing in episodes [default: 10, or 250 for size 32 and up].
    #[arg(long)]
    pub eval_every: Option<u64>,
    /// Pin one agent to a fixed optimal policy (debug mode).
    #[arg(long, value_parser = parse_fixed)]
    pub fixed: Option<FixedRole>,
    /// TOML experiment file; explicit flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct RandomArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Matrix size N for N x N games [default: 3].
    #[arg(long)]
    pub size: Option<usize>,
    /// Number of random matrices [default: 1000].
    #[arg(long)]
    pub matrices: Option<usize>,
    /// Seed for the matrices [default: the master seed].
    #[arg(long)]
    pub matrix_seed: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct TuneArgs {
    #[arg(long)]
    pub algo: Algorithm,
    /// `default` for the published grid, or a TOML grid file.
    #[arg(long, default_value = "default")]
    pub grid: String,
    #[arg(long, default_value_t = 3)]
    pub size: usize,
    #[arg(long, default_value_t = 100)]
    pub matrices: usize,
    #[arg(long, default_value_t = 1000)]
    pub runs: u64,
    #[arg(long)]
    pub episodes: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, env = OUT_ENV, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    #[arg(long)]
    pub eval_every: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// Directory holding curves.csv and friends.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Directory for the SVG files [default: the svg folder inside --in].
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

fn parse_fixed(s: &str) -> Result<FixedRole, String> {
    match s {
        "sender" => Ok(FixedRole::Sender),
        "receiver" => Ok(FixedRole::Receiver),
        "none" => Ok(FixedRole::None),
        other => Err(format!("expected sender, receiver or none, got {other:?}")),
    }
}

/// Failure classes that map to exit codes.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::InvalidInput(_) => CliError::Usage(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) => ExitCode::from(2),
            CliError::Runtime(_) => ExitCode::from(1),
        }
    }
}

fn default_episodes(size: usize) -> u64 {
    if size >= 32 {
        25_000
    } else {
        1_000
    }
}

/// Merges an optional config file with explicit flags.
fn resolve_experiment(
    run: &RunArgs,
    kind: GameKind,
    size: Option<usize>,
    matrices: Option<usize>,
    matrix_seed: Option<u64>,
) -> Result<(Experiment, PathBuf), CliError> {
    let mut file = match &run.config {
        Some(path) => {
            let f = ExperimentFile::load(path)?;
            if f.game.kind != kind {
                return Err(CliError::Usage(format!(
                    "{} describes a {:?} game; use the matching subcommand",
                    path.display(),
                    f.game.kind
                )));
            }
            f
        }
        None => {
            let size = if kind == GameKind::Climbing {
                3
            } else {
                size.unwrap_or(3)
            };
            ExperimentFile {
                name: "cli".into(),
                game: GameBlock {
                    kind,
                    size: (kind == GameKind::Random).then_some(size),
                    n_matrices: (kind == GameKind::Random).then_some(1000),
                    matrix_seed: None,
                },
                algorithms: Algorithm::ALL.iter().map(|a| AlgorithmEntry::preset(*a)).collect(),
                episodes: default_episodes(size),
                runs: 1000,
                seed: 0,
                eval_every: None,
                output: None,
                threads: None,
            }
        }
    };
    if kind == GameKind::Random {
        if let Some(s) = size {
            file.game.size = Some(s);
            if run.config.is_none() && run.episodes.is_none() {
                file.episodes = default_episodes(s);
            }
        }
        if let Some(m) = matrices {
            file.game.n_matrices = Some(m);
        }
        if let Some(s) = matrix_seed {
            file.game.matrix_seed = Some(s);
        }
    }
    if let Some(algos) = &run.algos {
        if algos.is_empty() {
            return Err(CliError::Usage("--algos needs at least one algorithm".into()));
        }
        file.algorithms = algos.iter().map(|a| AlgorithmEntry::preset(*a)).collect();
    }
    if let Some(fixed) = run.fixed {
        file.algorithms.iter_mut().for_each(|a| a.fixed = Some(fixed));
    }
    macro_rules! set {
        ($field:ident, $value:expr) => {
            if let Some(v) = $value {
                file.$field = v;
            }
        };
    }
    set!(runs, run.runs);
    set!(episodes, run.episodes);
    set!(seed, run.seed);
    if run.eval_every.is_some() {
        file.eval_every = run.eval_every;
    }
    if run.threads.is_some() {
        file.threads = run.threads;
    }
    let out = run
        .out
        .clone()
        .or_else(|| file.output.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    Ok((file.to_experiment()?, out))
}

fn print_summary(result: &ExperimentResult) {
    println!(
        "{:<14} {:>10} {:>10} {:>10} {:>8}",
        "algorithm", "optimal", "reward", "distinct", "failed"
    );
    for (spec, s) in &result.summaries {
        let distinct = s
            .partitions
            .iter()
            .filter(|(sig, _)| !sig.contains(','))
            .map(|(_, c)| *c)
            .sum::<u64>() as f64
            / s.successful_runs as f64;
        println!(
            "{:<14} {:>9.1}% {:>10.4} {:>9.1}% {:>8}",
            spec.algorithm.name(),
            100.0 * s.pct_optimal(),
            s.final_mean_norm_reward,
            100.0 * distinct,
            s.failures.len()
        );
    }
}

fn run_and_write(exp: &Experiment, out: &Path) -> Result<(), CliError> {
    let result = run_experiment(exp)?;
    write_outputs(out, exp, &result)?;
    print_summary(&result);
    println!("wrote {}", out.display());
    let failed: usize = result.summaries.iter().map(|(_, s)| s.failures.len()).sum();
    if failed > 0 {
        return Err(CliError::Runtime(format!("{failed} runs diverged; see summary.json")));
    }
    Ok(())
}

pub fn cmd_climbing(args: &RunArgs) -> Result<(), CliError> {
    let (exp, out) = resolve_experiment(args, GameKind::Climbing, None, None, None)?;
    run_and_write(&exp, &out)
}

pub fn cmd_random(args: &RandomArgs) -> Result<(), CliError> {
    let (exp, out) = resolve_experiment(&args.run, GameKind::Random, args.size, args.matrices, args.matrix_seed)?;
    run_and_write(&exp, &out)
}

pub fn cmd_tune(args: &TuneArgs) -> Result<(), CliError> {
    let bank = Bank::for_size(args.size);
    let grid = if args.grid == "default" {
        GridSpec::default_for(args.algo, bank)
    } else {
        let path = Path::new(&args.grid);
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let grid = GridSpec::from_toml(&text)?;
        if grid.algorithm != args.algo {
            return Err(CliError::Usage(format!(
                "grid is for {}, not {}",
                grid.algorithm, args.algo
            )));
        }
        grid
    };
    let protocol = TuningProtocol {
        size: args.size,
        n_matrices: args.matrices,
        runs_per_matrix: args.runs,
        episodes: args.episodes.unwrap_or(default_episodes(args.size)),
        eval_every: args.eval_every.unwrap_or(default_eval_every(args.size)),
        seed: args.seed,
        threads: args.threads,
    };
    let result = grid_search(&grid, &protocol)?;
    write_tuning(&args.out, &result)?;
    let best = result.best_row();
    println!(
        "{}: {} grid points, best {:?} with {:.1}% optimal (mean reward {:.4})",
        args.algo,
        result.rows.len(),
        best.params,
        100.0 * best.pct_optimal,
        best.mean_reward
    );
    println!("wrote {}", args.out.display());
    Ok(())
}

pub fn cmd_report(args: &ReportArgs) -> Result<(), CliError> {
    let svg = args.svg.clone().unwrap_or_else(|| args.input.join("svg"));
    let written = render_report(&args.input, &svg).map_err(|e| CliError::Runtime(e.to_string()))?;
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Climbing(a) => cmd_climbing(a),
        Command::Random(a) => cmd_random(a),
        Command::Tune(a) => cmd_tune(a),
        Command::Report(a) => cmd_report(a),
    }
}

/// Parses `std::env::args`, runs the command and maps the outcome to an exit code.
pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                CliError::Usage(m) => eprintln!("error: {m}"),
                CliError::Runtime(m) => eprintln!("error: {m}"),
            }
            e.exit_code()
        }
    }
}
