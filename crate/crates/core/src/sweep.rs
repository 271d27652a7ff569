//! Monte Carlo parameter sweeps: per-trial seeding, parallel execution,
//! aggregation, and the slope fits used to verify scaling laws.

use crate::error::{Error, Result};
use crate::rng::derive_seed;
use crate::signal::{sample_dataset, sample_signal};
use crate::solver::{run, SolverConfig, StepSize};
use crate::stopping::{holdout_split, holdout_stop, oracle_stop, Warmup};
use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;

/// The one parameter varied across a sweep.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Vary the number of measurements m.
    SampleCount(Vec<usize>),
    /// Vary the sparsity level k.
    Sparsity(Vec<usize>),
    /// Vary the noise-to-signal ratio `sigma / ||x*||_2^2`.
    NoiseRatio(Vec<f64>),
    /// Vary the mirror map parameter beta.
    Beta(Vec<f64>),
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::SampleCount(_) => "m",
            SweepAxis::Sparsity(_) => "k",
            SweepAxis::NoiseRatio(_) => "sigma_ratio",
            SweepAxis::Beta(_) => "beta",
        }
    }

    pub fn values(&self) -> Vec<f64> {
        match self {
            SweepAxis::SampleCount(v) => v.iter().map(|&x| x as f64).collect(),
            SweepAxis::Sparsity(v) => v.iter().map(|&x| x as f64).collect(),
            SweepAxis::NoiseRatio(v) => v.clone(),
            SweepAxis::Beta(v) => v.clone(),
        }
    }

    fn len(&self) -> usize {
        match self {
            SweepAxis::SampleCount(v) => v.len(),
            SweepAxis::Sparsity(v) => v.len(),
            SweepAxis::NoiseRatio(v) => v.len(),
            SweepAxis::Beta(v) => v.len(),
        }
    }
}

/// Which stopping rules each trial evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StoppingMetric {
    /// Oracle rule only; the run uses the full dataset.
    Oracle,
    /// Oracle and hold-out rules on the same trajectory; the run uses the
    /// training split and scores the rest.
    OracleAndHoldout,
}

/// Full description of a Monte Carlo sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepSpec {
    pub n: usize,
    pub k: usize,
    pub m: usize,
    /// Noise-to-signal ratio `sigma / ||x*||_2^2`; sigma is resolved per
    /// trial against the drawn signal.
    pub sigma_over_norm_sq: f64,
    pub beta: f64,
    pub eta: StepSize,
    pub t_max: usize,
    pub record_every: usize,
    pub trials: usize,
    pub master_seed: u64,
    pub axis: SweepAxis,
    pub metric: StoppingMetric,
    pub holdout_fraction: f64,
    /// End runs at the warm-up time (warm-up sweeps only need T1).
    pub stop_after_warmup: bool,
}

impl SweepSpec {
    /// A single-axis spec with library defaults; callers override fields.
    pub fn new(axis: SweepAxis) -> Self {
        Self {
            n: 500,
            k: 5,
            m: 1000,
            sigma_over_norm_sq: 0.1,
            beta: 1e-12,
            eta: StepSize::Auto,
            t_max: 2000,
            record_every: 1,
            trials: 20,
            master_seed: 1,
            axis,
            metric: StoppingMetric::Oracle,
            holdout_fraction: 0.9,
            stop_after_warmup: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be >= 1".into()));
        }
        if self.axis.len() == 0 {
            return Err(Error::InvalidParameter("axis value list is empty".into()));
        }
        if !(self.sigma_over_norm_sq >= 0.0) {
            return Err(Error::InvalidParameter(
                "noise ratio must be >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// Per-trial result row.
#[derive(Debug, Clone, Serialize)]
pub struct TrialOutcome {
    pub axis_index: usize,
    pub axis_value: f64,
    pub trial: usize,
    pub seed: u64,
    /// Oracle-stopped relative error (absent for diverged trials).
    pub metric_oracle: Option<f64>,
    /// Hold-out-stopped relative error (absent unless requested).
    pub metric_holdout: Option<f64>,
    pub t_warmup: Option<usize>,
    /// Oracle stopping iteration.
    pub t_stop: Option<usize>,
    pub status: TrialStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrialStatus {
    Ok,
    /// The iterate left the representable range.
    Diverged { t: usize },
    /// Warm-up never completed within the iteration budget, so the run
    /// never entered its convergence phase (typically the spectral pick
    /// landed off the support). Metrics are still reported in the raw
    /// table but the trial counts as a failure for aggregation.
    NoWarmup,
}

impl TrialStatus {
    fn label(&self) -> String {
        match self {
            TrialStatus::Ok => "ok".to_string(),
            TrialStatus::Diverged { t } => format!("diverged@{t}"),
            TrialStatus::NoWarmup => "no_warmup".to_string(),
        }
    }
}

/// Aggregates over the successful trials of one axis value.
#[derive(Debug, Clone, Serialize)]
pub struct AxisSummary {
    pub axis_value: f64,
    pub successes: usize,
    pub failures: usize,
    pub mean_oracle: Option<f64>,
    pub std_oracle: Option<f64>,
    pub mean_holdout: Option<f64>,
    pub std_holdout: Option<f64>,
    pub mean_warmup: Option<f64>,
    pub std_warmup: Option<f64>,
}

/// Ordinary least squares line.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// A fit annotated with the transform that produced it.
#[derive(Debug, Clone, Serialize)]
pub struct FitSummary {
    /// "log-log" or "linear"; for warm-up/beta fits the x variable is
    /// `ln(1/beta)`.
    pub kind: String,
    pub x_label: String,
    pub y_label: String,
    #[serde(flatten)]
    pub line: LineFit,
}

/// Everything a sweep produced.
#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub spec: SweepSpec,
    pub axes: Vec<AxisSummary>,
    pub trials: Vec<TrialOutcome>,
    /// Scaling fit of the mean oracle error against the axis.
    pub error_fit: Option<FitSummary>,
    /// Fit of the mean warm-up time against the axis.
    pub warmup_fit: Option<FitSummary>,
    /// Rank correlation of mean warm-up time with the axis.
    pub warmup_spearman: Option<f64>,
    pub warnings: Vec<String>,
}

impl SweepResult {
    /// Per-trial CSV with the fixed column set
    /// `axis_value,trial,seed,metric_oracle,metric_holdout,t_warmup,t_stop,status`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        fn fcell(v: Option<f64>) -> String {
            v.map(|x| x.to_string()).unwrap_or_default()
        }
        fn ucell(v: Option<usize>) -> String {
            v.map(|x| x.to_string()).unwrap_or_default()
        }
        writeln!(
            w,
            "axis_value,trial,seed,metric_oracle,metric_holdout,t_warmup,t_stop,status"
        )?;
        for t in &self.trials {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                t.axis_value,
                t.trial,
                t.seed,
                fcell(t.metric_oracle),
                fcell(t.metric_holdout),
                ucell(t.t_warmup),
                ucell(t.t_stop),
                t.status.label()
            )?;
        }
        Ok(())
    }
}

fn mean_std(values: &[f64]) -> (Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (Some(mean), Some(0.0));
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (Some(mean), Some(var.sqrt()))
}

/// Least squares on `(log x, log y)`. Requires >= 3 strictly positive points.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} xs vs {} ys",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 3 {
        return Err(Error::InvalidParameter(
            "log-log fit needs at least 3 points".into(),
        ));
    }
    if xs.iter().chain(ys).any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidParameter(
            "log-log fit needs strictly positive finite inputs".into(),
        ));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    linear_fit(&lx, &ly)
}

/// Least squares on the raw coordinates.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} xs vs {} ys",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 2 {
        return Err(Error::InvalidParameter(
            "linear fit needs at least 2 points".into(),
        ));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter(
            "linear fit needs at least two distinct x values".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let e = y - (intercept + slope * x);
            e * e
        })
        .sum();
    let r_squared = if ss_tot == 0.0 {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    };
    Ok(LineFit {
        slope,
        intercept,
        r_squared,
    })
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman_rho(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InvalidParameter(
            "rank correlation needs two equally long series".into(),
        ));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::NumericDomain("non-finite rank input".into()));
    }
    let rx = ranks(xs);
    let ry = ranks(ys);
    let n = rx.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx) * (a - mx)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my) * (b - my)).sum();
    if vx == 0.0 || vy == 0.0 {
        return Err(Error::InvalidParameter(
            "rank correlation undefined for constant series".into(),
        ));
    }
    Ok(cov / (vx * vy).sqrt())
}

fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            out[idx] = rank;
        }
        i = j + 1;
    }
    out
}

/// Resolved per-trial parameters after applying one axis value.
#[derive(Debug, Clone, Copy)]
struct TrialParams {
    n: usize,
    k: usize,
    m: usize,
    sigma_ratio: f64,
    beta: f64,
}

fn resolve_params(spec: &SweepSpec, axis_index: usize) -> TrialParams {
    let mut p = TrialParams {
        n: spec.n,
        k: spec.k,
        m: spec.m,
        sigma_ratio: spec.sigma_over_norm_sq,
        beta: spec.beta,
    };
    match &spec.axis {
        SweepAxis::SampleCount(v) => p.m = v[axis_index],
        SweepAxis::Sparsity(v) => p.k = v[axis_index],
        SweepAxis::NoiseRatio(v) => p.sigma_ratio = v[axis_index],
        SweepAxis::Beta(v) => p.beta = v[axis_index],
    }
    p
}

fn run_trial(spec: &SweepSpec, axis_index: usize, trial: usize) -> Result<TrialOutcome> {
    let seed = derive_seed(spec.master_seed, axis_index as u64, trial as u64);
    let p = resolve_params(spec, axis_index);
    let axis_value = spec.axis.values()[axis_index];
    let signal = sample_signal(p.n, p.k, seed)?;
    let sigma = p.sigma_ratio * signal.norm2() * signal.norm2();
    let dataset = sample_dataset(&signal, p.m, sigma, seed)?;
    let config = SolverConfig {
        beta: p.beta,
        eta: spec.eta,
        max_iters: spec.t_max,
        record_every: spec.record_every,
        record_full_iterates: false,
        stop_after_warmup: spec.stop_after_warmup,
    };
    let trajectory = match spec.metric {
        StoppingMetric::Oracle => run(&dataset, &config, Some(&signal), None)?,
        StoppingMetric::OracleAndHoldout => {
            let (train, validation) = holdout_split(&dataset, spec.holdout_fraction, seed)?;
            run(&train, &config, Some(&signal), Some(&validation))?
        }
    };
    let t_warmup = match trajectory.warmup {
        Some(Warmup::Reached(t)) => Some(t),
        _ => None,
    };
    let mut outcome = TrialOutcome {
        axis_index,
        axis_value,
        trial,
        seed,
        metric_oracle: None,
        metric_holdout: None,
        t_warmup,
        t_stop: None,
        status: TrialStatus::Ok,
    };
    if let crate::stopping::RunStatus::Diverged { t, .. } = trajectory.status {
        outcome.status = TrialStatus::Diverged { t };
        return Ok(outcome);
    }
    if trajectory.warmup == Some(Warmup::NotReached) {
        outcome.status = TrialStatus::NoWarmup;
    }
    let oracle = oracle_stop(&trajectory, &signal)?;
    outcome.metric_oracle = Some(oracle.min_rel_error);
    outcome.t_stop = Some(oracle.t_star);
    if spec.metric == StoppingMetric::OracleAndHoldout {
        let stop = holdout_stop(&trajectory)?;
        let record = trajectory
            .records
            .iter()
            .find(|r| r.t == stop.t_stop)
            .expect("stopping iteration is recorded");
        outcome.metric_holdout =
            Some(record.dist.expect("oracle fields recorded") / signal.norm2());
    }
    Ok(outcome)
}

/// Runs all `trials x axis values` jobs (in parallel), aggregates, and fits
/// the scaling law appropriate for the axis. The outcome is independent of
/// scheduling: each trial is seeded by `(master_seed, axis_index, trial)`
/// and results are collected positionally.
///
/// Failed trials (diverged, or never warmed up within the budget) appear in
/// the raw table but are excluded from means and fits; axis values where
/// more than 20% of trials failed are dropped from the fits entirely, with
/// a warning. An axis value where every trial failed aborts the sweep.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let axis_values = spec.axis.values();
    let jobs: Vec<(usize, usize)> = (0..axis_values.len())
        .flat_map(|j| (0..spec.trials).map(move |i| (j, i)))
        .collect();
    let trials: Vec<TrialOutcome> = jobs
        .par_iter()
        .map(|&(j, i)| run_trial(spec, j, i))
        .collect::<Result<Vec<_>>>()?;

    let mut axes = Vec::with_capacity(axis_values.len());
    let mut warnings = Vec::new();
    let mut fit_axis = Vec::new();
    let mut fit_oracle = Vec::new();
    let mut fit_warmup_axis = Vec::new();
    let mut fit_warmup = Vec::new();
    for (j, &axis_value) in axis_values.iter().enumerate() {
        let rows: Vec<&TrialOutcome> = trials.iter().filter(|t| t.axis_index == j).collect();
        let failures = rows
            .iter()
            .filter(|t| !matches!(t.status, TrialStatus::Ok))
            .count();
        let successes = rows.len() - failures;
        if successes == 0 {
            return Err(Error::SweepFailure {
                axis_value,
                trials: spec.trials,
            });
        }
        let ok_rows: Vec<&&TrialOutcome> = rows
            .iter()
            .filter(|t| matches!(t.status, TrialStatus::Ok))
            .collect();
        let oracle: Vec<f64> = ok_rows.iter().filter_map(|t| t.metric_oracle).collect();
        let holdout: Vec<f64> = ok_rows.iter().filter_map(|t| t.metric_holdout).collect();
        let warmup: Vec<f64> = ok_rows
            .iter()
            .filter_map(|t| t.t_warmup.map(|w| w as f64))
            .collect();
        let (mean_oracle, std_oracle) = mean_std(&oracle);
        let (mean_holdout, std_holdout) = mean_std(&holdout);
        let (mean_warmup, std_warmup) = mean_std(&warmup);
        if failures * 5 > rows.len() {
            warnings.push(format!(
                "axis value {axis_value}: {failures}/{} trials failed; excluded from fits",
                rows.len()
            ));
        } else {
            if let Some(mo) = mean_oracle {
                fit_axis.push(axis_value);
                fit_oracle.push(mo);
            }
            if let Some(mw) = mean_warmup {
                fit_warmup_axis.push(axis_value);
                fit_warmup.push(mw);
            }
        }
        axes.push(AxisSummary {
            axis_value,
            successes,
            failures,
            mean_oracle,
            std_oracle,
            mean_holdout,
            std_holdout,
            mean_warmup,
            std_warmup,
        });
    }

    let error_fit = if spec.stop_after_warmup {
        None
    } else {
        match &spec.axis {
            SweepAxis::SampleCount(_) | SweepAxis::Sparsity(_) => {
                loglog_slope(&fit_axis, &fit_oracle).ok().map(|line| FitSummary {
                    kind: "log-log".into(),
                    x_label: format!("ln({})", spec.axis.name()),
                    y_label: "ln(mean oracle relative error)".into(),
                    line,
                })
            }
            SweepAxis::NoiseRatio(_) => {
                linear_fit(&fit_axis, &fit_oracle).ok().map(|line| FitSummary {
                    kind: "linear".into(),
                    x_label: spec.axis.name().into(),
                    y_label: "mean oracle relative error".into(),
                    line,
                })
            }
            SweepAxis::Beta(_) => None,
        }
    };
    let warmup_fit = match &spec.axis {
        SweepAxis::Beta(_) => {
            let xs: Vec<f64> = fit_warmup_axis.iter().map(|b| (1.0 / b).ln()).collect();
            linear_fit(&xs, &fit_warmup).ok().map(|line| FitSummary {
                kind: "linear".into(),
                x_label: "ln(1/beta)".into(),
                y_label: "mean warm-up time".into(),
                line,
            })
        }
        SweepAxis::Sparsity(_) => {
            linear_fit(&fit_warmup_axis, &fit_warmup).ok().map(|line| FitSummary {
                kind: "linear".into(),
                x_label: "k".into(),
                y_label: "mean warm-up time".into(),
                line,
            })
        }
        _ => None,
    };
    let warmup_spearman = match &spec.axis {
        SweepAxis::Sparsity(_) if fit_warmup.len() >= 2 => {
            spearman_rho(&fit_warmup_axis, &fit_warmup).ok()
        }
        _ => None,
    };

    Ok(SweepResult {
        spec: spec.clone(),
        axes,
        trials,
        error_fit,
        warmup_fit,
        warmup_spearman,
        warnings,
    })
}
