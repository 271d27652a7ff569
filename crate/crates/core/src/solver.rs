//! Mirror descent iteration for the phaseless risk: initialization,
//! step-size rule, dual-domain update, the equivalent EG± form, and
//! trajectory recording.
//!
//! The canonical iterate is the dual vector `s = grad Phi(X)`, updated
//! additively (`s <- s - eta * grad F(X)`) and mapped back through
//! `X = beta * sinh(s)`. This form stays finite for any representable
//! primal even at `beta = 1e-20`, where both the naive primal update and the
//! multiplicative EG± weights run out of float range.

use crate::error::{Error, Result};
use crate::mirror::{dist_phi_signset, dist_signset, HyperbolicMirrorMap};
use crate::num::{asinh_ratio, beta_sinh};
use crate::risk::{coherence_from_grad, risk, risk_with_grad};
use crate::signal::{PhaselessDataset, SparseSignal};
use crate::stopping::{
    off_support_mass, support_ratio_exceeds_half, RunStatus, Trajectory, TrajectoryRecord, Warmup,
};
use ndarray::Array1;
use serde::Serialize;

/// Dual magnitude beyond which the run is declared diverged
/// (`sinh` overflows f64 just above 710).
pub const DIVERGENCE_DUAL_BOUND: f64 = 700.0;

/// Step-size policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StepSize {
    /// `0.3 * mean(Y)^{-3/2}`, resolved against the training data.
    Auto,
    Fixed(f64),
}

/// Solver parameters.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SolverConfig {
    /// Mirror map parameter.
    pub beta: f64,
    pub eta: StepSize,
    pub max_iters: usize,
    /// Metrics are recorded every this many iterations (plus the final one).
    pub record_every: usize,
    /// Keep the primal iterate of every recorded step.
    pub record_full_iterates: bool,
    /// Terminate once the warm-up condition is first met (needs an oracle
    /// signal). Used by warm-up sweeps to avoid paying for the full run.
    pub stop_after_warmup: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            beta: 1e-20,
            eta: StepSize::Auto,
            max_iters: 5000,
            record_every: 1,
            record_full_iterates: false,
            stop_after_warmup: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        HyperbolicMirrorMap::new(self.beta)?;
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be >= 1".into()));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidParameter("record_every must be >= 1".into()));
        }
        if let StepSize::Fixed(eta) = self.eta {
            if !(eta > 0.0 && eta.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "step size eta={eta} must be finite and > 0"
                )));
            }
        }
        Ok(())
    }
}

/// Config echo with the step size actually used.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ResolvedConfig {
    pub beta: f64,
    pub eta: StepSize,
    pub eta_resolved: f64,
    pub max_iters: usize,
    pub record_every: usize,
    pub record_full_iterates: bool,
    pub stop_after_warmup: bool,
}

/// Solver iterate held in both representations; `primal = beta * sinh(dual)`.
#[derive(Debug, Clone)]
pub struct MirrorState {
    pub dual: Array1<f64>,
    pub primal: Array1<f64>,
    pub iteration: usize,
}

/// EG± iterate: positive weight pairs with `X = u - v`.
/// The componentwise product `u_i * v_i` stays at its initial `beta^2 / 4`
/// because each update multiplies `u` and `v` by reciprocal factors.
#[derive(Debug, Clone)]
pub struct EgState {
    pub u: Array1<f64>,
    pub v: Array1<f64>,
    pub iteration: usize,
}

impl EgState {
    pub fn primal(&self) -> Array1<f64> {
        &self.u - &self.v
    }
}

/// Paper step-size rule `eta = 0.3 * mean(Y)^{-3/2}`.
pub fn default_step_size(data: &PhaselessDataset) -> Result<f64> {
    let mean = data.mean_observation();
    if mean <= 0.0 {
        return Err(Error::DegenerateData(format!(
            "mean observation {mean} must be positive to set the step size"
        )));
    }
    Ok(0.3 * mean.powf(-1.5))
}

/// Index of the largest initialization score `1/m sum_j Y_j A_ji^2`,
/// ties broken toward the smallest index.
fn spectral_coordinate(data: &PhaselessDataset) -> usize {
    let m = data.len() as f64;
    let mut scores = vec![0.0f64; data.dim()];
    for (row, &y) in data.sensing().outer_iter().zip(data.observations()) {
        let a = row.as_slice().expect("contiguous row");
        for (s, &aji) in scores.iter_mut().zip(a) {
            *s += y * aji * aji / m;
        }
    }
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// One-coordinate initialization: puts `magnitude_estimate / sqrt(3)` on the
/// highest-scoring coordinate, zero elsewhere.
pub fn initialize(data: &PhaselessDataset, beta: f64) -> Result<MirrorState> {
    let map = HyperbolicMirrorMap::new(beta)?;
    if data.is_empty() {
        return Err(Error::InvalidParameter("dataset is empty".into()));
    }
    let theta = data.magnitude_estimate();
    if theta == 0.0 {
        return Err(Error::DegenerateData(
            "magnitude estimate is zero; cannot scale the initial iterate".into(),
        ));
    }
    let i0 = spectral_coordinate(data);
    let mut primal = Array1::zeros(data.dim());
    primal[i0] = theta / 3.0f64.sqrt();
    let mut dual = Array1::zeros(data.dim());
    dual[i0] = asinh_ratio(primal[i0], map.beta());
    Ok(MirrorState {
        dual,
        primal,
        iteration: 0,
    })
}

/// EG± translation of [`initialize`]: on the chosen coordinate
/// `u = a + sqrt(a^2 + (beta/2)^2)` with `a = theta / (2 sqrt(3))`, `v` its
/// conjugate root, `beta/2` elsewhere. Satisfies `u - v = initialize` primal
/// and `u v = beta^2 / 4` componentwise.
pub fn eg_initialize(data: &PhaselessDataset, beta: f64) -> Result<EgState> {
    let state = initialize(data, beta)?;
    let n = data.dim();
    let half = beta / 2.0;
    let mut u = Array1::from_elem(n, half);
    let mut v = Array1::from_elem(n, half);
    for i in 0..n {
        let x = state.primal[i];
        if x != 0.0 {
            let a = x / 2.0;
            let root = a.hypot(half);
            // Conjugate form for the small root avoids cancellation.
            if x > 0.0 {
                u[i] = a + root;
                v[i] = half * half / u[i];
            } else {
                v[i] = root - a;
                u[i] = half * half / v[i];
            }
        }
    }
    Ok(EgState {
        u,
        v,
        iteration: 0,
    })
}

/// One dual-domain update `s' = s - eta * g`, `X' = beta * sinh(s')`.
pub fn md_step(
    state: &MirrorState,
    grad: &Array1<f64>,
    eta: f64,
    beta: f64,
) -> Result<MirrorState> {
    if grad.len() != state.dual.len() {
        return Err(Error::DimensionMismatch(format!(
            "gradient has {} components, state has {}",
            grad.len(),
            state.dual.len()
        )));
    }
    if !(eta > 0.0) {
        return Err(Error::InvalidParameter(format!("eta={eta} must be > 0")));
    }
    let iteration = state.iteration + 1;
    let mut dual = Array1::zeros(state.dual.len());
    let mut primal = Array1::zeros(state.dual.len());
    for i in 0..state.dual.len() {
        let s = state.dual[i] - eta * grad[i];
        if !(s.abs() <= DIVERGENCE_DUAL_BOUND) {
            return Err(Error::Diverged {
                iteration,
                coordinate: i,
            });
        }
        dual[i] = s;
        primal[i] = beta_sinh(beta, s);
    }
    Ok(MirrorState {
        dual,
        primal,
        iteration,
    })
}

/// One EG± update `u' = u .* exp(-eta g)`, `v' = v .* exp(eta g)`.
pub fn eg_step(state: &EgState, grad: &Array1<f64>, eta: f64) -> Result<EgState> {
    if grad.len() != state.u.len() {
        return Err(Error::DimensionMismatch(format!(
            "gradient has {} components, state has {}",
            grad.len(),
            state.u.len()
        )));
    }
    if !(eta > 0.0) {
        return Err(Error::InvalidParameter(format!("eta={eta} must be > 0")));
    }
    let iteration = state.iteration + 1;
    let mut u = Array1::zeros(state.u.len());
    let mut v = Array1::zeros(state.u.len());
    for i in 0..state.u.len() {
        let f = (-eta * grad[i]).exp();
        let (ui, vi) = (state.u[i] * f, state.v[i] / f);
        // Zero or infinite weights break the multiplicative invariant.
        if !(ui.is_finite() && vi.is_finite() && ui > 0.0 && vi > 0.0) {
            return Err(Error::Diverged {
                iteration,
                coordinate: i,
            });
        }
        u[i] = ui;
        v[i] = vi;
    }
    Ok(EgState { u, v, iteration })
}

/// Runs mirror descent from the paper initialization, recording metrics
/// every `record_every` iterations (and always at the last one).
///
/// Oracle metrics (`dist`, `dist_phi`, `off_support_l1`, `coherence`) are
/// filled only when `xstar` is given; `holdout_risk` only when `holdout` is.
/// Divergence terminates the run early and is reported through
/// [`Trajectory::status`] together with the records gathered so far.
pub fn run(
    data: &PhaselessDataset,
    config: &SolverConfig,
    xstar: Option<&SparseSignal>,
    holdout: Option<&PhaselessDataset>,
) -> Result<Trajectory> {
    config.validate()?;
    if let Some(s) = xstar {
        if s.dim() != data.dim() {
            return Err(Error::DimensionMismatch(format!(
                "signal dimension {} vs dataset dimension {}",
                s.dim(),
                data.dim()
            )));
        }
    }
    if let Some(h) = holdout {
        if h.dim() != data.dim() {
            return Err(Error::DimensionMismatch(format!(
                "hold-out dimension {} vs dataset dimension {}",
                h.dim(),
                data.dim()
            )));
        }
    }
    if config.stop_after_warmup && xstar.is_none() {
        return Err(Error::InvalidParameter(
            "stop_after_warmup requires the oracle signal".into(),
        ));
    }

    let map = HyperbolicMirrorMap::new(config.beta)?;
    let eta = match config.eta {
        StepSize::Auto => default_step_size(data)?,
        StepSize::Fixed(v) => v,
    };
    let mut state = initialize(data, config.beta)?;
    let mut records = Vec::new();
    let mut iterates = config.record_full_iterates.then(Vec::new);
    let mut warmup = xstar.map(|_| Warmup::NotReached);
    let mut status = RunStatus::Completed;

    for t in 0..=config.max_iters {
        let eval = risk_with_grad(&state.primal, data)?;
        let grad = eval.gradient.expect("gradient requested");

        if warmup == Some(Warmup::NotReached) {
            let xs = xstar.expect("warmup tracked only with oracle");
            if support_ratio_exceeds_half(&state.primal, xs) {
                warmup = Some(Warmup::Reached(t));
            }
        }
        let warmup_reached = matches!(warmup, Some(Warmup::Reached(_)));
        let stopping_now =
            t == config.max_iters || (config.stop_after_warmup && warmup_reached);

        if t % config.record_every == 0 || stopping_now {
            let mut record = TrajectoryRecord {
                t,
                risk: eval.value,
                dist: None,
                dist_phi: None,
                off_support_l1: None,
                coherence: None,
                coherence_sign: None,
                holdout_risk: None,
            };
            if let Some(xs) = xstar {
                record.dist = Some(dist_signset(xs, &state.primal)?);
                record.dist_phi = Some(dist_phi_signset(xs, &state.primal, &map)?);
                record.off_support_l1 =
                    Some(off_support_mass(&state.primal, xs.support())?);
                let coherence = coherence_from_grad(&grad, &state.primal, xs)?;
                record.coherence = Some(coherence.value);
                record.coherence_sign = Some(coherence.sign);
            }
            if let Some(h) = holdout {
                record.holdout_risk = Some(risk(&state.primal, h)?);
            }
            records.push(record);
            if let Some(iters) = iterates.as_mut() {
                iters.push(state.primal.clone());
            }
        }
        if stopping_now {
            break;
        }
        match md_step(&state, &grad, eta, config.beta) {
            Ok(next) => state = next,
            Err(Error::Diverged {
                iteration,
                coordinate,
            }) => {
                status = RunStatus::Diverged {
                    t: iteration,
                    coordinate,
                };
                break;
            }
            Err(e) => return Err(e),
        }
    }

    Ok(Trajectory {
        records,
        config: ResolvedConfig {
            beta: config.beta,
            eta: config.eta,
            eta_resolved: eta,
            max_iters: config.max_iters,
            record_every: config.record_every,
            record_full_iterates: config.record_full_iterates,
            stop_after_warmup: config.stop_after_warmup,
        },
        status,
        warmup,
        iterates,
    })
}
