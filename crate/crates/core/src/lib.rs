//! Early-stopped mirror descent for noisy sparse phase retrieval.
//!
//! Recovers a k-sparse signal `x*` from quadratic Gaussian measurements
//! `Y_j = (A_j . x*)^2 + eps_j` by running unconstrained mirror descent with
//! the hyperbolic entropy mirror map on the unregularized empirical risk.
//! No explicit regularization or thresholding is involved: with a
//! one-coordinate spectral initialization and a small map parameter `beta`,
//! iterates stay nearly k-sparse on their own, and stopping early (at the
//! oracle optimum or by hold-out validation) delivers the statistical rate.
//!
//! The crate is organized around the experiment pipeline:
//!
//! - [`signal`]: synthetic signals, Gaussian sensing, noisy observations;
//! - [`mirror`]: the mirror map, Bregman divergence, sign-invariant metrics;
//! - [`risk`]: empirical/population risk, gradients, coherence diagnostic;
//! - [`solver`]: initialization, dual-domain and EG± updates, full runs;
//! - [`stopping`]: trajectory records, warm-up time, oracle/hold-out rules;
//! - [`sweep`] and [`figures`]: Monte Carlo sweeps and preset experiments;
//! - [`selftest`]: the fast invariant suite behind `selftest`.
//!
//! # Example
//!
//! ```
//! use sparsephase::{sample_signal, sample_dataset, SolverConfig, run, oracle_stop};
//!
//! let signal = sample_signal(200, 4, 7).unwrap();
//! let data = sample_dataset(&signal, 400, 0.0, 7).unwrap();
//! let config = SolverConfig { beta: 1e-10, max_iters: 800, record_every: 10, ..Default::default() };
//! let trajectory = run(&data, &config, Some(&signal), None).unwrap();
//! let stop = oracle_stop(&trajectory, &signal).unwrap();
//! assert!(stop.min_rel_error < 1e-3);
//! ```

pub mod error;
pub mod figures;
pub mod mirror;
pub mod num;
pub mod risk;
pub mod rng;
pub mod selftest;
pub mod signal;
pub mod solver;
pub mod stopping;
pub mod sweep;

pub use error::{Error, Result};
pub use figures::{
    figure1_center, figure1_left, figure1_right, figure2_warmup_beta, figure2_warmup_k,
    figure3_curves, ConvergenceCurve, ConvergenceStudy, FigureOverrides,
};
pub use mirror::{
    bregman_l2_bounds, dist_phi_signset, dist_signset, nearest_sign, BregmanL2Bounds,
    HyperbolicMirrorMap,
};
pub use risk::{
    coherence_inner_product, grad_risk, population_grad, risk, risk_with_grad, Coherence,
    RiskEvaluation,
};
pub use rng::{derive_seed, stream_rng, Stream};
pub use selftest::{run_all as run_selftest, CheckResult};
pub use signal::{
    sample_dataset, sample_signal, sample_signal_in_range, PhaselessDataset, SensingStorage,
    SparseSignal,
};
pub use solver::{
    default_step_size, eg_initialize, eg_step, initialize, md_step, run, EgState, MirrorState,
    ResolvedConfig, SolverConfig, StepSize,
};
pub use stopping::{
    holdout_split, holdout_stop, off_support_mass, oracle_stop, warmup_time, HoldoutStop,
    OracleStop, RunStatus, Trajectory, TrajectoryRecord, Warmup,
};
pub use sweep::{
    linear_fit, loglog_slope, run_sweep, spearman_rho, AxisSummary, FitSummary, LineFit,
    StoppingMetric, SweepAxis, SweepResult, SweepSpec, TrialOutcome, TrialStatus,
};
