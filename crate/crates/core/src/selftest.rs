//! Fast invariant suite behind the `selftest` CLI subcommand: gradient
//! checks, update-form equivalence, the per-step Bregman identity, and the
//! divergence/l2 comparison bounds. Designed to finish in seconds.

use crate::mirror::{bregman_l2_bounds, HyperbolicMirrorMap};
use crate::risk::{grad_risk, risk, risk_with_grad};
use crate::rng::{stream_rng, Stream};
use crate::signal::{sample_dataset, sample_signal, PhaselessDataset};
use crate::solver::{default_step_size, eg_initialize, eg_step, initialize, md_step};
use ndarray::Array1;
use rand::Rng;

/// Outcome of one named check.
#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Self {
            name,
            passed,
            detail,
        }
    }
}

/// Runs every check and returns their results; the suite never panics.
pub fn run_all() -> Vec<CheckResult> {
    vec![
        risk_gradient_check(grad_risk),
        mirror_gradient_check(),
        dual_primal_round_trip(),
        update_equivalence(),
        bregman_identity(),
        bregman_bounds_sample(),
        generation_determinism(),
    ]
}

fn risk_gradient_check(
    grad_fn: impl Fn(&Array1<f64>, &PhaselessDataset) -> crate::error::Result<Array1<f64>>,
) -> CheckResult {
    let name = "risk gradient vs finite differences";
    let mut rng = stream_rng(101, Stream::Signal);
    let mut worst = 0.0f64;
    for seed in 0..3u64 {
        let signal = sample_signal(12, 4, seed).unwrap();
        let data = sample_dataset(&signal, 40, 0.2, seed).unwrap();
        for _ in 0..8 {
            let x = Array1::from_iter((0..12).map(|_| rng.random_range(-1.0..=1.0)));
            let g = match grad_fn(&x, &data) {
                Ok(g) => g,
                Err(e) => return CheckResult::new(name, false, e.to_string()),
            };
            let scale = g.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            for i in 0..x.len() {
                let h = 1e-6 * x[i].abs().max(0.1);
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[i] += h;
                xm[i] -= h;
                let fd =
                    (risk(&xp, &data).unwrap() - risk(&xm, &data).unwrap()) / (2.0 * h);
                // Relative to the gradient's scale: componentwise ratios are
                // ill-conditioned where a component crosses zero.
                let rel = (g[i] - fd).abs() / scale.max(fd.abs());
                worst = worst.max(rel);
            }
        }
    }
    CheckResult::new(name, worst <= 1e-6, format!("max relative error {worst:.3e}"))
}

fn mirror_gradient_check() -> CheckResult {
    let name = "mirror map gradient vs finite differences";
    let mut rng = stream_rng(102, Stream::Signal);
    let mut worst = 0.0f64;
    for &beta in &[1e-2, 1e-6] {
        let map = HyperbolicMirrorMap::new(beta).unwrap();
        for _ in 0..100 {
            // Kept away from the arcsinh kink at 0 where central
            // differences are invalid for small beta.
            let x = Array1::from_iter((0..5).map(|_| {
                let mag = rng.random_range(0.05..=2.0f64);
                if rng.random::<bool>() {
                    mag
                } else {
                    -mag
                }
            }));
            let g = map.grad(&x);
            for i in 0..x.len() {
                let h = 1e-5 * x[i].abs();
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[i] += h;
                xm[i] -= h;
                let fd = (map.phi(&xp).unwrap() - map.phi(&xm).unwrap()) / (2.0 * h);
                let rel = (g[i] - fd).abs() / g[i].abs().max(fd.abs()).max(1e-9);
                worst = worst.max(rel);
            }
        }
    }
    CheckResult::new(name, worst <= 1e-6, format!("max relative error {worst:.3e}"))
}

fn dual_primal_round_trip() -> CheckResult {
    let name = "dual/primal round trip";
    let mut rng = stream_rng(103, Stream::Signal);
    let mut worst = 0.0f64;
    for &beta in &[1e-2, 1e-8, 1e-20] {
        let map = HyperbolicMirrorMap::new(beta).unwrap();
        let x = Array1::from_iter((0..64).map(|_| rng.random_range(-2.0..=2.0)));
        let back = match map.grad_inverse(&map.grad(&x)) {
            Ok(b) => b,
            Err(e) => return CheckResult::new(name, false, e.to_string()),
        };
        for (a, b) in x.iter().zip(back.iter()) {
            worst = worst.max((a - b).abs() / a.abs().max(beta));
        }
    }
    CheckResult::new(name, worst <= 1e-9, format!("max relative error {worst:.3e}"))
}

fn update_equivalence() -> CheckResult {
    let name = "dual-domain update vs EG form";
    let beta = 1e-6;
    let signal = sample_signal(30, 4, 7).unwrap();
    let data = sample_dataset(&signal, 90, 0.1, 7).unwrap();
    let eta = default_step_size(&data).unwrap();
    let mut md = initialize(&data, beta).unwrap();
    let mut eg = eg_initialize(&data, beta).unwrap();
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let grad = grad_risk(&md.primal, &data).unwrap();
        md = match md_step(&md, &grad, eta, beta) {
            Ok(s) => s,
            Err(e) => return CheckResult::new(name, false, e.to_string()),
        };
        eg = match eg_step(&eg, &grad, eta) {
            Ok(s) => s,
            Err(e) => return CheckResult::new(name, false, e.to_string()),
        };
        let x = eg.primal();
        for i in 0..x.len() {
            worst = worst.max((x[i] - md.primal[i]).abs() / (md.primal[i].abs() + beta));
        }
    }
    CheckResult::new(
        name,
        worst <= 1e-9,
        format!("max relative deviation {worst:.3e} over 200 steps"),
    )
}

fn bregman_identity() -> CheckResult {
    let name = "per-step Bregman decrease identity";
    let beta = 1e-10;
    let signal = sample_signal(40, 4, 9).unwrap();
    let data = sample_dataset(&signal, 140, 0.0, 9).unwrap();
    let map = HyperbolicMirrorMap::new(beta).unwrap();
    let eta = default_step_size(&data).unwrap();
    let reference = signal.values();
    let mut state = initialize(&data, beta).unwrap();
    let mut worst = 0.0f64;
    for _ in 0..150 {
        let eval = risk_with_grad(&state.primal, &data).unwrap();
        let grad = eval.gradient.unwrap();
        let next = match md_step(&state, &grad, eta, beta) {
            Ok(s) => s,
            Err(e) => return CheckResult::new(name, false, e.to_string()),
        };
        let d_before = map.bregman(reference, &state.primal).unwrap();
        let d_after = map.bregman(reference, &next.primal).unwrap();
        let inner: f64 = grad
            .iter()
            .zip(state.primal.iter().zip(reference.iter()))
            .map(|(g, (x, r))| g * (x - r))
            .sum();
        let step_div = map.bregman(&state.primal, &next.primal).unwrap();
        let lhs = d_after - d_before;
        let rhs = -eta * inner + step_div;
        let err = (lhs - rhs).abs();
        let tol = 1e-8 * lhs.abs().max(rhs.abs()) + 1e-12 * (1.0 + d_before);
        worst = worst.max(err / tol);
        state = next;
    }
    CheckResult::new(
        name,
        worst <= 1.0,
        format!("max violation {worst:.3} in tolerance units"),
    )
}

fn bregman_bounds_sample() -> CheckResult {
    let name = "divergence/l2 comparison bounds";
    let mut rng = stream_rng(104, Stream::Signal);
    let mut lower_failures = 0usize;
    let mut upper_failures = 0usize;
    for trial in 0..1000u64 {
        let signal = sample_signal(12, 4, trial).unwrap();
        let map = HyperbolicMirrorMap::new(if trial % 2 == 0 { 1e-2 } else { 1e-6 }).unwrap();
        let x = if trial % 3 == 0 {
            Array1::from_iter((0..12).map(|_| rng.random_range(-1.5..=1.5)))
        } else {
            let mut x = signal.values().clone();
            for v in x.iter_mut() {
                if *v != 0.0 {
                    *v *= rng.random_range(0.5..=1.8);
                } else {
                    *v = rng.random_range(-0.01..=0.01);
                }
            }
            x
        };
        let bounds = bregman_l2_bounds(&signal, &x, &map).unwrap();
        if !bounds.lower_ok {
            lower_failures += 1;
        }
        if !bounds.upper_ok {
            upper_failures += 1;
        }
    }
    CheckResult::new(
        name,
        lower_failures == 0 && upper_failures == 0,
        format!("{lower_failures} lower / {upper_failures} upper failures in 1000 samples"),
    )
}

fn generation_determinism() -> CheckResult {
    let name = "seeded generation determinism";
    let s1 = sample_signal(100, 8, 42).unwrap();
    let s2 = sample_signal(100, 8, 42).unwrap();
    let d1 = sample_dataset(&s1, 50, 0.3, 42).unwrap();
    let d2 = sample_dataset(&s2, 50, 0.3, 42).unwrap();
    let same = s1.values() == s2.values()
        && d1.sensing() == d2.sensing()
        && d1.observations() == d2.observations();
    CheckResult::new(name, same, "regenerated signal and dataset bit-equal".into())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_checks_pass() {
        for check in run_all() {
            assert!(check.passed, "{} failed: {}", check.name, check.detail);
        }
    }

    #[test]
    fn gradient_check_catches_sign_bug() {
        // Mutation sensitivity: a sign-flipped gradient must be rejected.
        let broken =
            |x: &Array1<f64>, d: &PhaselessDataset| grad_risk(x, d).map(|g| g.mapv(|v| -v));
        let result = risk_gradient_check(broken);
        assert!(!result.passed);
    }
}
