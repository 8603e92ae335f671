//! Benchmark CLI: single experiments (`run`) and config-driven grids
//! (`sweep`). All logic lives in the library; this binary only parses flags,
//! applies flag-over-file precedence, and writes outputs.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mapcma::config::{self, ConfigError, RunSettings, RunSpec};
use mapcma::harness::run_experiment;
use mapcma::report::{self, SummaryRow};

#[derive(Parser)]
#[command(name = "mapcma", version, about = "CMA-ES / MAP-CMA benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment cell and write a one-row summary CSV (or, with
    /// --trace, a JSON file of per-trial convergence series).
    Run(RunArgs),
    /// Expand a sweep config into experiment cells and write one CSV row per
    /// cell.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Flat TOML config file; flags given here override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// sphere | ellipsoid | cigar | rosenbrock | ackley | rastrigin
    #[arg(long)]
    function: Option<String>,
    #[arg(long)]
    dim: Option<usize>,
    /// cma-es | pure-rank-mu | map-cma
    #[arg(long)]
    variant: Option<String>,
    /// Momentum radius for map-cma: a number, "sqrt-n", or "n".
    #[arg(long)]
    r: Option<String>,
    /// Population size override (default 4 + floor(3 ln N)).
    #[arg(long)]
    lambda: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Success threshold on the best objective value (default 1e-10).
    #[arg(long)]
    target: Option<f64>,
    /// Evaluation budget as a multiple of the dimension (default 1000000).
    #[arg(long)]
    max_evals_factor: Option<u64>,
    /// Gate the p_c update behind the h_sigma stall indicator.
    #[arg(long)]
    h_sigma: bool,
    /// Record per-trial convergence traces and write them as JSON.
    #[arg(long)]
    trace: bool,
    /// Worker threads (0 = all cores). The MAPCMA_THREADS environment
    /// variable takes precedence.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Sweep config file with [[cell]] grids.
    #[arg(long)]
    config: PathBuf,
    /// Override the trial count of every cell.
    #[arg(long)]
    trials: Option<usize>,
    /// Override the base seed of every cell.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores). MAPCMA_THREADS takes precedence.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Output directory (summary.csv is written inside), or a .csv path.
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(CliError::Output(e)) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

enum CliError {
    Config(String),
    Output(String),
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<report::ReportError> for CliError {
    fn from(e: report::ReportError) -> Self {
        CliError::Output(e.to_string())
    }
}

fn threads(flag: usize) -> usize {
    std::env::var("MAPCMA_THREADS")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(flag)
}

fn cmd_run(args: RunArgs) -> Result<(), CliError> {
    let radius = args
        .r
        .as_deref()
        .map(|s| {
            s.parse()
                .map_err(|e: mapcma::Error| CliError::Config(e.to_string()))
        })
        .transpose()?;
    let flags = RunSettings {
        function: args.function,
        dim: args.dim,
        variant: args.variant,
        r: radius,
        lambda: args.lambda,
        trials: args.trials,
        seed: args.seed,
        target: args.target,
        max_evals_factor: args.max_evals_factor,
        h_sigma: args.h_sigma.then_some(true),
    };
    let base = match &args.config {
        Some(path) => RunSettings::from_file(config::load_run_file(path)?)?,
        None => RunSettings::default(),
    };
    let spec = flags.overlay(base).resolve()?;

    let (row, summary) = run_cell(&spec, args.trace, threads(args.threads))?;
    eprintln!("{}", human_line(&row));

    if args.trace {
        let traces = report::trace_file(&summary, spec.seed);
        match &args.out {
            Some(path) => report::write_trace_json(path, &traces)?,
            None => println!(
                "{}",
                serde_json::to_string_pretty(&traces)
                    .map_err(|e| CliError::Output(e.to_string()))?
            ),
        }
    } else {
        let csv = report::to_csv(std::slice::from_ref(&row));
        match &args.out {
            Some(path) => std::fs::write(path, csv).map_err(|e| CliError::Output(e.to_string()))?,
            None => print!("{csv}"),
        }
    }
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<(), CliError> {
    let file = config::load_sweep_file(&args.config)?;
    let mut specs = config::expand_sweep(&file)?;
    for spec in &mut specs {
        if let Some(trials) = args.trials {
            spec.trials = trials;
        }
        if let Some(seed) = args.seed {
            spec.seed = seed;
        }
    }
    let width = threads(args.threads);

    let out_path = if args.out.extension().is_some_and(|e| e == "csv") {
        args.out.clone()
    } else {
        std::fs::create_dir_all(&args.out).map_err(|e| CliError::Output(e.to_string()))?;
        args.out.join("summary.csv")
    };

    let mut rows = Vec::with_capacity(specs.len());
    for (i, spec) in specs.iter().enumerate() {
        let (row, _) = run_cell(spec, false, width)?;
        eprintln!("[{}/{}] {}", i + 1, specs.len(), human_line(&row));
        rows.push(row);
        // Partial results survive an interrupted sweep.
        report::write_csv(&out_path, &rows)?;
    }
    eprintln!("wrote {}", out_path.display());
    Ok(())
}

fn run_cell(
    spec: &RunSpec,
    trace: bool,
    width: usize,
) -> Result<(SummaryRow, mapcma::ExperimentSummary), CliError> {
    let cfg = spec.trial_config()?.with_trace(trace);
    let lambda = cfg.params.lambda;
    let summary = run_experiment(&cfg, spec.trials, spec.seed, width);
    Ok((SummaryRow::new(spec, lambda, &summary), summary))
}

fn human_line(row: &SummaryRow) -> String {
    format!(
        "{} N={} {}{} lambda={} trials={}: SR={:.2} SP1={}",
        row.function,
        row.dim,
        row.variant,
        row.r.map_or_else(String::new, |r| format!(" r={r}")),
        row.lambda,
        row.trials,
        row.sr,
        row.sp1
            .map_or_else(|| "-".to_string(), |v| format!("{v:.0}")),
    )
}
