//! Trajectory records, stopping rules (oracle and hold-out), warm-up
//! detection, and the off-support mass diagnostic.

use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};
use crate::signal::{PhaselessDataset, SparseSignal};
use crate::solver::ResolvedConfig;
use ndarray::Array1;
use serde::Serialize;
use std::io::Write;

/// Metrics captured at one recorded iteration. Oracle fields are present
/// only when the run was given the ground-truth signal; `holdout_risk` only
/// when a validation set was supplied.
#[derive(Debug, Clone, Serialize)]
pub struct TrajectoryRecord {
    pub t: usize,
    pub risk: f64,
    pub dist: Option<f64>,
    pub dist_phi: Option<f64>,
    pub off_support_l1: Option<f64>,
    pub coherence: Option<f64>,
    /// Sign of `x*` the coherence was measured against (+1/-1).
    pub coherence_sign: Option<f64>,
    pub holdout_risk: Option<f64>,
}

/// Terminal state of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind")]
pub enum RunStatus {
    Completed,
    Diverged { t: usize, coordinate: usize },
}

impl RunStatus {
    pub fn is_completed(&self) -> bool {
        matches!(self, RunStatus::Completed)
    }
}

/// Warm-up outcome for a run that tracked the oracle signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum Warmup {
    Reached(usize),
    NotReached,
}

/// Recorded metrics of one solver run.
#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub records: Vec<TrajectoryRecord>,
    pub config: ResolvedConfig,
    pub status: RunStatus,
    /// First iteration at which every support coordinate exceeded half its
    /// target magnitude (checked online at every step). `None` when the run
    /// had no oracle signal.
    pub warmup: Option<Warmup>,
    /// Primal iterates at recorded steps, kept only when
    /// `record_full_iterates` was set.
    #[serde(skip)]
    pub iterates: Option<Vec<Array1<f64>>>,
}

impl Trajectory {
    /// Writes records as CSV with the fixed column set
    /// `t,risk,dist,dist_phi,off_support_l1,coherence,holdout_risk`.
    /// Missing optional fields are emitted as empty cells.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        fn cell(v: Option<f64>) -> String {
            v.map(|x| x.to_string()).unwrap_or_default()
        }
        writeln!(w, "t,risk,dist,dist_phi,off_support_l1,coherence,holdout_risk")?;
        for r in &self.records {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                r.t,
                r.risk,
                cell(r.dist),
                cell(r.dist_phi),
                cell(r.off_support_l1),
                cell(r.coherence),
                cell(r.holdout_risk)
            )?;
        }
        Ok(())
    }
}

/// First recorded iteration at which `min_{i in S} |X_i| / |x*_i| > 1/2`.
///
/// Works on stored iterates, so the trajectory must have been run with
/// `record_full_iterates`; runs themselves track the same condition online
/// at every step (see [`Trajectory::warmup`]) with bounded memory.
pub fn warmup_time(trajectory: &Trajectory, xstar: &SparseSignal) -> Result<Option<usize>> {
    if xstar.support().is_empty() {
        return Err(Error::InvalidParameter(
            "warm-up detection needs a signal with nonempty support".into(),
        ));
    }
    let iterates = trajectory.iterates.as_ref().ok_or_else(|| {
        Error::MissingData("trajectory has no stored iterates; run with record_full_iterates".into())
    })?;
    for (record, x) in trajectory.records.iter().zip(iterates) {
        if support_ratio_exceeds_half(x, xstar) {
            return Ok(Some(record.t));
        }
    }
    Ok(None)
}

pub(crate) fn support_ratio_exceeds_half(x: &Array1<f64>, xstar: &SparseSignal) -> bool {
    xstar
        .support()
        .iter()
        .all(|&i| x[i].abs() / xstar.values()[i].abs() > 0.5)
}

/// Oracle stopping summary: the recorded iteration minimizing the relative
/// estimation error `dist(x*, X^t) / ||x*||_2`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct OracleStop {
    pub t_star: usize,
    pub min_rel_error: f64,
}

/// Scans recorded `dist` values; ties break to the earliest iteration.
pub fn oracle_stop(trajectory: &Trajectory, xstar: &SparseSignal) -> Result<OracleStop> {
    let norm = xstar.norm2();
    if norm == 0.0 {
        return Err(Error::InvalidParameter("oracle signal has zero norm".into()));
    }
    let mut best: Option<(usize, f64)> = None;
    for r in &trajectory.records {
        if let Some(d) = r.dist {
            if best.map_or(true, |(_, bd)| d < bd) {
                best = Some((r.t, d));
            }
        }
    }
    let (t_star, d) = best.ok_or_else(|| {
        Error::MissingData("no recorded dist values; run with an oracle signal".into())
    })?;
    Ok(OracleStop {
        t_star,
        min_rel_error: d / norm,
    })
}

/// Hold-out stopping summary: the recorded iteration minimizing the risk on
/// the validation split.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct HoldoutStop {
    pub t_stop: usize,
    pub holdout_risk: f64,
}

/// Scans recorded hold-out risks; ties break to the earliest iteration.
pub fn holdout_stop(trajectory: &Trajectory) -> Result<HoldoutStop> {
    let mut best: Option<(usize, f64)> = None;
    for r in &trajectory.records {
        if let Some(h) = r.holdout_risk {
            if best.map_or(true, |(_, bh)| h < bh) {
                best = Some((r.t, h));
            }
        }
    }
    let (t_stop, holdout_risk) = best.ok_or_else(|| {
        Error::MissingData("no recorded hold-out risks; run with a validation set".into())
    })?;
    Ok(HoldoutStop {
        t_stop,
        holdout_risk,
    })
}

/// Randomly partitions the rows of `data` into a training part with
/// `ceil(fraction * m)` rows and a validation part with the rest.
/// Deterministic in `seed` (stream 3); each part preserves row order.
pub fn holdout_split(
    data: &PhaselessDataset,
    fraction: f64,
    seed: u64,
) -> Result<(PhaselessDataset, PhaselessDataset)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "hold-out fraction {fraction} must lie in (0, 1)"
        )));
    }
    let m = data.len();
    let train_len = (fraction * m as f64).ceil() as usize;
    if train_len == 0 || train_len >= m {
        return Err(Error::InvalidParameter(format!(
            "fraction {fraction} leaves an empty part for m={m}"
        )));
    }
    let mut rng = stream_rng(seed, Stream::Split);
    let mut train_rows = rand::seq::index::sample(&mut rng, m, train_len).into_vec();
    train_rows.sort_unstable();
    let mut in_train = vec![false; m];
    for &j in &train_rows {
        in_train[j] = true;
    }
    let validation_rows: Vec<usize> = (0..m).filter(|&j| !in_train[j]).collect();
    Ok((data.subset(&train_rows)?, data.subset(&validation_rows)?))
}

/// l1 mass of `x` outside `support`. Errors on out-of-range indices.
pub fn off_support_mass(x: &Array1<f64>, support: &[usize]) -> Result<f64> {
    let mut on = vec![false; x.len()];
    for &i in support {
        if i >= x.len() {
            return Err(Error::InvalidParameter(format!(
                "support index {i} out of range for dimension {}",
                x.len()
            )));
        }
        on[i] = true;
    }
    Ok(x.iter()
        .zip(&on)
        .filter(|(_, &s)| !s)
        .map(|(v, _)| v.abs())
        .sum())
}
