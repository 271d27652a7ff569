//! `sparsephase` command line: single solver runs, Monte Carlo sweeps, the
//! preset figure experiments, and the fast invariant selftest.
//!
//! Exit codes: 0 success, 1 runtime failure (with a JSON error report on
//! stdout), 2 usage error. All randomness flows from `--seed`; repeated
//! invocations with identical flags produce byte-identical CSV/JSON outputs
//! (trials run in parallel, but each trial is serial and aggregation is
//! position-indexed, so `--threads` does not change the results).

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use sparsephase::{
    figure1_center, figure1_left, figure1_right, figure2_warmup_beta, figure2_warmup_k,
    figure3_curves, holdout_split, holdout_stop, oracle_stop, run, run_selftest, sample_dataset,
    sample_signal, run_sweep, FigureOverrides, RunStatus, SolverConfig, StepSize, StoppingMetric,
    SweepAxis, SweepResult, SweepSpec, Trajectory, Warmup,
};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const SCHEMA_VERSION: u32 = 1;
const SOFTWARE_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(
    name = "sparsephase",
    version,
    about = "Early-stopped mirror descent for noisy sparse phase retrieval"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic instance, run the solver, write trajectory CSV
    /// and JSON summary.
    Solve(SolveArgs),
    /// Run a Monte Carlo sweep over one parameter axis.
    Sweep(SweepArgs),
    /// Run a preset experiment (optionally scaled down).
    Figure(FigureArgs),
    /// Run the fast invariant suite and print one line per check.
    Selftest(SelftestArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Output directory (overridable via SPARSEPHASE_OUT_DIR).
    #[arg(long, env = "SPARSEPHASE_OUT_DIR", default_value = "out")]
    out_dir: PathBuf,
    /// Worker threads for parallel trials; 1 forces fully serial execution.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct SolveArgs {
    /// Ambient dimension.
    #[arg(long)]
    n: usize,
    /// Number of measurements.
    #[arg(long)]
    m: usize,
    /// Signal sparsity.
    #[arg(long)]
    k: usize,
    /// Noise standard deviation (Gaussian).
    #[arg(long)]
    sigma: f64,
    /// Mirror map parameter.
    #[arg(long, default_value_t = 1e-20)]
    beta: f64,
    /// Fixed step size (default: 0.3 * mean(Y)^{-3/2}).
    #[arg(long)]
    eta: Option<f64>,
    /// Iteration budget.
    #[arg(long)]
    iters: usize,
    /// Master seed for signal, data and split.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Record metrics every this many iterations.
    #[arg(long, default_value_t = 1)]
    record_every: usize,
    /// Withhold this fraction's complement for hold-out stopping
    /// (e.g. 0.9 trains on 90% and validates on 10%).
    #[arg(long)]
    holdout_fraction: Option<f64>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum AxisName {
    /// Sample count.
    M,
    /// Sparsity level.
    K,
    /// Noise-to-signal ratio.
    Noise,
    /// Mirror map parameter.
    Beta,
}

#[derive(Args)]
struct SweepArgs {
    /// Swept parameter.
    #[arg(long, value_enum)]
    axis: AxisName,
    /// Axis values, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<f64>,
    #[arg(long, default_value_t = 500)]
    n: usize,
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long, default_value_t = 1000)]
    m: usize,
    /// Noise-to-signal ratio sigma / ||x*||_2^2.
    #[arg(long, default_value_t = 0.1)]
    sigma_ratio: f64,
    #[arg(long, default_value_t = 1e-20)]
    beta: f64,
    /// Fixed step size (default: auto).
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long, default_value_t = 5000)]
    iters: usize,
    #[arg(long, default_value_t = 1)]
    record_every: usize,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Also evaluate the hold-out stopping rule.
    #[arg(long)]
    holdout: bool,
    #[arg(long, default_value_t = 0.9)]
    holdout_fraction: f64,
    /// End each run once warm-up completes (warm-up studies).
    #[arg(long)]
    stop_after_warmup: bool,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum FigureName {
    /// Error vs noise ratio.
    #[value(name = "1-left")]
    OneLeft,
    /// Error vs sample count (log-log).
    #[value(name = "1-center")]
    OneCenter,
    /// Error vs sparsity (log-log).
    #[value(name = "1-right")]
    OneRight,
    /// Warm-up time vs mirror map parameter.
    #[value(name = "2-beta")]
    TwoBeta,
    /// Warm-up time vs sparsity.
    #[value(name = "2-k")]
    TwoK,
    /// Convergence curves across beta.
    #[value(name = "3")]
    Three,
}

impl FigureName {
    fn label(&self) -> &'static str {
        match self {
            FigureName::OneLeft => "1-left",
            FigureName::OneCenter => "1-center",
            FigureName::OneRight => "1-right",
            FigureName::TwoBeta => "2-beta",
            FigureName::TwoK => "2-k",
            FigureName::Three => "3",
        }
    }
}

#[derive(Args)]
struct FigureArgs {
    /// Which preset to run.
    #[arg(long, value_enum)]
    name: FigureName,
    /// Problem-size factor in (0, 1]; 1 is the full published size.
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    /// Trial count override.
    #[arg(long)]
    trials: Option<usize>,
    /// Iteration budget override.
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long, default_value_t = 1)]
    record_every: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct SelftestArgs {
    #[command(flatten)]
    common: CommonArgs,
}

enum CliError {
    Usage(String),
    Runtime(serde_json::Value),
}

impl From<sparsephase::Error> for CliError {
    fn from(e: sparsephase::Error) -> Self {
        CliError::Runtime(json!({
            "schema_version": SCHEMA_VERSION,
            "software_version": SOFTWARE_VERSION,
            "error": e.to_string(),
        }))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Figure(args) => cmd_figure(args),
        Command::Selftest(args) => cmd_selftest(args),
    };
    match outcome {
        Ok(code) => code,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("run with --help for usage");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(report)) => {
            println!("{}", serde_json::to_string_pretty(&report).unwrap());
            ExitCode::from(1)
        }
    }
}

fn init_threads(threads: Option<usize>) -> Result<(), CliError> {
    if let Some(t) = threads {
        if t == 0 {
            return Err(CliError::Usage("--threads must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn ensure_out_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Usage(format!("cannot create output directory {dir:?}: {e}")))
}

fn write_file(dir: &Path, name: &str, contents: &[u8]) -> Result<(), CliError> {
    fs::write(dir.join(name), contents)
        .map_err(|e| CliError::Runtime(json!({ "error": format!("writing {name}: {e}") })))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Runtime(json!({ "error": format!("serializing {name}: {e}") })))?;
    text.push('\n');
    write_file(dir, name, text.as_bytes())
}

/// Stopping summary keys shared by all run reports.
#[derive(Serialize)]
struct StoppingSummary {
    t_stop_oracle: Option<usize>,
    t_stop_holdout: Option<usize>,
    t_warmup: Option<usize>,
    min_rel_error: Option<f64>,
    holdout_rel_error: Option<f64>,
}

fn stopping_summary(
    trajectory: &Trajectory,
    signal: &sparsephase::SparseSignal,
    has_holdout: bool,
) -> StoppingSummary {
    let oracle = oracle_stop(trajectory, signal).ok();
    let holdout = if has_holdout {
        holdout_stop(trajectory).ok()
    } else {
        None
    };
    let holdout_rel_error = holdout.and_then(|h| {
        trajectory
            .records
            .iter()
            .find(|r| r.t == h.t_stop)
            .and_then(|r| r.dist)
            .map(|d| d / signal.norm2())
    });
    StoppingSummary {
        t_stop_oracle: oracle.map(|o| o.t_star),
        t_stop_holdout: holdout.map(|h| h.t_stop),
        t_warmup: match trajectory.warmup {
            Some(Warmup::Reached(t)) => Some(t),
            _ => None,
        },
        min_rel_error: oracle.map(|o| o.min_rel_error),
        holdout_rel_error,
    }
}

fn cmd_solve(args: SolveArgs) -> Result<ExitCode, CliError> {
    if args.k == 0 || args.k > args.n {
        return Err(CliError::Usage(format!(
            "--k {} must satisfy 1 <= k <= n ({})",
            args.k, args.n
        )));
    }
    if args.m == 0 {
        return Err(CliError::Usage("--m must be >= 1".into()));
    }
    if args.sigma < 0.0 {
        return Err(CliError::Usage("--sigma must be >= 0".into()));
    }
    let config = SolverConfig {
        beta: args.beta,
        eta: args.eta.map_or(StepSize::Auto, StepSize::Fixed),
        max_iters: args.iters,
        record_every: args.record_every,
        record_full_iterates: false,
        stop_after_warmup: false,
    };
    config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    if let Some(f) = args.holdout_fraction {
        if !(f > 0.0 && f < 1.0) {
            return Err(CliError::Usage(format!(
                "--holdout-fraction {f} must lie in (0, 1)"
            )));
        }
    }
    init_threads(args.common.threads)?;
    ensure_out_dir(&args.common.out_dir)?;

    let signal = sample_signal(args.n, args.k, args.seed)?;
    let dataset = sample_dataset(&signal, args.m, args.sigma, args.seed)?;
    let (train, validation) = match args.holdout_fraction {
        Some(f) => {
            let (t, v) = holdout_split(&dataset, f, args.seed)?;
            (t, Some(v))
        }
        None => (dataset, None),
    };
    let trajectory = run(&train, &config, Some(&signal), validation.as_ref())?;

    let mut csv = Vec::new();
    trajectory.write_csv(&mut csv)?;
    write_file(&args.common.out_dir, "trajectory.csv", &csv)?;

    let stopping = stopping_summary(&trajectory, &signal, validation.is_some());
    let params = json!({
        "n": args.n,
        "m": args.m,
        "k": args.k,
        "sigma": args.sigma,
        "beta": args.beta,
        "eta_policy": config.eta,
        "eta_resolved": trajectory.config.eta_resolved,
        "iters": args.iters,
        "record_every": args.record_every,
        "holdout_fraction": args.holdout_fraction,
        "seed": args.seed,
        "threads": args.common.threads,
    });
    let summary = json!({
        "schema_version": SCHEMA_VERSION,
        "software_version": SOFTWARE_VERSION,
        "command": "solve",
        "params": params,
        "signal": {
            "norm2": signal.norm2(),
            "sparsity_constant": signal.sparsity_constant(),
        },
        "status": trajectory.status,
        "stopping": stopping,
        "outputs": { "trajectory_csv": "trajectory.csv" },
    });
    write_json(&args.common.out_dir, "summary.json", &summary)?;

    if let RunStatus::Diverged { t, coordinate } = trajectory.status {
        return Err(CliError::Runtime(json!({
            "schema_version": SCHEMA_VERSION,
            "software_version": SOFTWARE_VERSION,
            "error": format!("solver diverged at iteration {t}, coordinate {coordinate}"),
            "status": trajectory.status,
            "params": params,
            "outputs": {
                "trajectory_csv": "trajectory.csv",
                "summary_json": "summary.json",
            },
        })));
    }
    println!(
        "solve: wrote {} records to {}; min relative error {}",
        trajectory.records.len(),
        args.common.out_dir.join("trajectory.csv").display(),
        stopping
            .min_rel_error
            .map(|e| format!("{e:.3e}"))
            .unwrap_or_else(|| "n/a".into())
    );
    Ok(ExitCode::SUCCESS)
}

fn build_axis(name: AxisName, values: &[f64]) -> Result<SweepAxis, CliError> {
    let as_counts = |what: &str| -> Result<Vec<usize>, CliError> {
        values
            .iter()
            .map(|&v| {
                if v >= 1.0 && v.fract() == 0.0 && v <= usize::MAX as f64 {
                    Ok(v as usize)
                } else {
                    Err(CliError::Usage(format!(
                        "axis {what} needs positive integer values, got {v}"
                    )))
                }
            })
            .collect()
    };
    Ok(match name {
        AxisName::M => SweepAxis::SampleCount(as_counts("m")?),
        AxisName::K => SweepAxis::Sparsity(as_counts("k")?),
        AxisName::Noise => SweepAxis::NoiseRatio(values.to_vec()),
        AxisName::Beta => SweepAxis::Beta(values.to_vec()),
    })
}

/// JSON summary around a sweep result; the raw per-trial table lives in the
/// CSV next to it.
#[derive(Serialize)]
struct SweepSummary<'a> {
    schema_version: u32,
    software_version: &'static str,
    command: &'a str,
    seed: u64,
    threads: Option<usize>,
    spec: &'a SweepSpec,
    axes: &'a [sparsephase::AxisSummary],
    error_fit: &'a Option<sparsephase::FitSummary>,
    warmup_fit: &'a Option<sparsephase::FitSummary>,
    warmup_spearman: &'a Option<f64>,
    warnings: &'a [String],
    outputs: serde_json::Value,
}

fn write_sweep_outputs(
    dir: &Path,
    command: &str,
    csv_name: &str,
    json_name: &str,
    result: &SweepResult,
    threads: Option<usize>,
) -> Result<(), CliError> {
    let mut csv = Vec::new();
    result.write_csv(&mut csv)?;
    write_file(dir, csv_name, &csv)?;
    let summary = SweepSummary {
        schema_version: SCHEMA_VERSION,
        software_version: SOFTWARE_VERSION,
        command,
        seed: result.spec.master_seed,
        threads,
        spec: &result.spec,
        axes: &result.axes,
        error_fit: &result.error_fit,
        warmup_fit: &result.warmup_fit,
        warmup_spearman: &result.warmup_spearman,
        warnings: &result.warnings,
        outputs: json!({ "trials_csv": csv_name }),
    };
    write_json(dir, json_name, &summary)
}

fn cmd_sweep(args: SweepArgs) -> Result<ExitCode, CliError> {
    if args.values.is_empty() {
        return Err(CliError::Usage("--values must not be empty".into()));
    }
    if args.iters == 0 || args.record_every == 0 || args.trials == 0 {
        return Err(CliError::Usage(
            "--iters, --record-every and --trials must be >= 1".into(),
        ));
    }
    let axis = build_axis(args.axis, &args.values)?;
    let spec = SweepSpec {
        n: args.n,
        k: args.k,
        m: args.m,
        sigma_over_norm_sq: args.sigma_ratio,
        beta: args.beta,
        eta: args.eta.map_or(StepSize::Auto, StepSize::Fixed),
        t_max: args.iters,
        record_every: args.record_every,
        trials: args.trials,
        master_seed: args.seed,
        metric: if args.holdout {
            StoppingMetric::OracleAndHoldout
        } else {
            StoppingMetric::Oracle
        },
        holdout_fraction: args.holdout_fraction,
        stop_after_warmup: args.stop_after_warmup,
        axis,
    };
    spec.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    init_threads(args.common.threads)?;
    ensure_out_dir(&args.common.out_dir)?;
    let result = run_sweep(&spec)?;
    write_sweep_outputs(
        &args.common.out_dir,
        "sweep",
        "sweep.csv",
        "summary.json",
        &result,
        args.common.threads,
    )?;
    print_sweep_line("sweep", &result);
    Ok(ExitCode::SUCCESS)
}

fn print_sweep_line(label: &str, result: &SweepResult) {
    let fit = result
        .error_fit
        .as_ref()
        .or(result.warmup_fit.as_ref())
        .map(|f| {
            format!(
                " {} slope {:.4} (R^2 {:.3})",
                f.kind, f.line.slope, f.line.r_squared
            )
        })
        .unwrap_or_default();
    println!(
        "{label}: {} axis values x {} trials;{fit}",
        result.axes.len(),
        result.spec.trials
    );
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
}

fn cmd_figure(args: FigureArgs) -> Result<ExitCode, CliError> {
    if !(args.scale > 0.0 && args.scale <= 1.0) {
        return Err(CliError::Usage(format!(
            "--scale {} must lie in (0, 1]",
            args.scale
        )));
    }
    if args.record_every == 0 {
        return Err(CliError::Usage("--record-every must be >= 1".into()));
    }
    init_threads(args.common.threads)?;
    ensure_out_dir(&args.common.out_dir)?;
    let overrides = FigureOverrides {
        scale: args.scale,
        trials: args.trials,
        seed: args.seed,
        t_max: args.iters,
        record_every: args.record_every,
    };
    let label = args.name.label();
    match args.name {
        FigureName::Three => {
            let study = figure3_curves(&overrides)?;
            let mut outputs = Vec::new();
            for curve in &study.curves {
                let mut csv = Vec::new();
                curve.trajectory.write_csv(&mut csv)?;
                let name = format!(
                    "figure_3_beta{:e}_sigma{}.csv",
                    curve.beta, curve.sigma_over_norm_sq
                );
                write_file(&args.common.out_dir, &name, &csv)?;
                outputs.push(json!({
                    "beta": curve.beta,
                    "sigma_over_norm_sq": curve.sigma_over_norm_sq,
                    "seed": curve.seed,
                    "signal_norm2": curve.signal_norm2,
                    "csv": name,
                }));
            }
            let summary = json!({
                "schema_version": SCHEMA_VERSION,
                "software_version": SOFTWARE_VERSION,
                "command": "figure",
                "figure": label,
                "params": {
                    "n": study.n,
                    "m": study.m,
                    "k": study.k,
                    "t_max": study.t_max,
                    "scale": args.scale,
                    "seed": args.seed,
                    "record_every": args.record_every,
                    "threads": args.common.threads,
                },
                "curves": outputs,
            });
            write_json(&args.common.out_dir, "figure_3.json", &summary)?;
            println!(
                "figure 3: wrote {} convergence curves (n={})",
                study.curves.len(),
                study.n
            );
        }
        _ => {
            let result = match args.name {
                FigureName::OneLeft => figure1_left(&overrides)?,
                FigureName::OneCenter => figure1_center(&overrides)?,
                FigureName::OneRight => figure1_right(&overrides)?,
                FigureName::TwoBeta => figure2_warmup_beta(&overrides)?,
                FigureName::TwoK => figure2_warmup_k(&overrides)?,
                FigureName::Three => unreachable!(),
            };
            let csv_name = format!("figure_{label}.csv");
            let json_name = format!("figure_{label}.json");
            write_sweep_outputs(
                &args.common.out_dir,
                "figure",
                &csv_name,
                &json_name,
                &result,
                args.common.threads,
            )?;
            print_sweep_line(&format!("figure {label}"), &result);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_selftest(args: SelftestArgs) -> Result<ExitCode, CliError> {
    init_threads(args.common.threads)?;
    ensure_out_dir(&args.common.out_dir)?;
    let checks = run_selftest();
    let mut all_passed = true;
    for check in &checks {
        let verdict = if check.passed { "PASS" } else { "FAIL" };
        println!("[{verdict}] {}: {}", check.name, check.detail);
        all_passed &= check.passed;
    }
    let summary = json!({
        "schema_version": SCHEMA_VERSION,
        "software_version": SOFTWARE_VERSION,
        "command": "selftest",
        "passed": all_passed,
        "checks": checks.iter().map(|c| json!({
            "name": c.name,
            "passed": c.passed,
            "detail": c.detail,
        })).collect::<Vec<_>>(),
    });
    write_json(&args.common.out_dir, "selftest.json", &summary)?;
    Ok(if all_passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}
