//! Empirical risk `F(x) = 1/(4m) sum_j ((A_j . x)^2 - Y_j)^2`, its gradient,
//! the population gradient, and the coherence inner product used as a
//! descent diagnostic.

use crate::error::{Error, Result};
use crate::mirror::nearest_sign;
use crate::num::{axpy, dot};
use crate::signal::{PhaselessDataset, SparseSignal};
use ndarray::Array1;

/// Risk value together with its gradient when requested.
#[derive(Debug, Clone)]
pub struct RiskEvaluation {
    /// `F(x) >= 0`.
    pub value: f64,
    pub gradient: Option<Array1<f64>>,
}

fn check_dims(x: &Array1<f64>, data: &PhaselessDataset) -> Result<()> {
    if x.len() != data.dim() {
        return Err(Error::DimensionMismatch(format!(
            "iterate has {} coordinates, dataset dimension is {}",
            x.len(),
            data.dim()
        )));
    }
    Ok(())
}

/// `F(x)`; one pass over the rows.
pub fn risk(x: &Array1<f64>, data: &PhaselessDataset) -> Result<f64> {
    check_dims(x, data)?;
    let xs = x.as_slice().expect("contiguous");
    let mut sum = 0.0;
    for (row, &y) in data.sensing().outer_iter().zip(data.observations()) {
        let z = dot(row.as_slice().expect("contiguous row"), xs);
        let r = z * z - y;
        sum += r * r;
    }
    Ok(sum / (4.0 * data.len() as f64))
}

/// `grad F(x) = 1/m sum_j ((A_j . x)^2 - Y_j)(A_j . x) A_j`.
///
/// Rows are accumulated in order, so single-threaded results are
/// bit-reproducible. (Trial-level parallelism in the harness never splits a
/// gradient across threads.)
pub fn grad_risk(x: &Array1<f64>, data: &PhaselessDataset) -> Result<Array1<f64>> {
    Ok(risk_with_grad(x, data)?
        .gradient
        .expect("gradient requested"))
}

/// Risk and gradient in a single sweep; the residuals are shared.
pub fn risk_with_grad(x: &Array1<f64>, data: &PhaselessDataset) -> Result<RiskEvaluation> {
    check_dims(x, data)?;
    let m = data.len() as f64;
    let xs = x.as_slice().expect("contiguous");
    let mut grad = vec![0.0f64; x.len()];
    let mut sum = 0.0;
    for (row, &y) in data.sensing().outer_iter().zip(data.observations()) {
        let a = row.as_slice().expect("contiguous row");
        let z = dot(a, xs);
        let r = z * z - y;
        sum += r * r;
        axpy(r * z / m, a, &mut grad);
    }
    Ok(RiskEvaluation {
        value: sum / (4.0 * m),
        gradient: Some(Array1::from_vec(grad)),
    })
}

/// Expected gradient under the Gaussian sensing model:
/// `(3||x||^2 - ||x*||^2) x - 2 (x . x*) x*`.
pub fn population_grad(x: &Array1<f64>, xstar: &SparseSignal) -> Result<Array1<f64>> {
    if x.len() != xstar.dim() {
        return Err(Error::DimensionMismatch(format!(
            "population_grad: {} vs {}",
            x.len(),
            xstar.dim()
        )));
    }
    let x_sq = x.iter().map(|v| v * v).sum::<f64>();
    let star_sq = xstar.norm2() * xstar.norm2();
    let ip: f64 = x.iter().zip(xstar.values()).map(|(a, b)| a * b).sum();
    let mut out = x.mapv(|v| (3.0 * x_sq - star_sq) * v);
    out.zip_mut_with(xstar.values(), |o, &s| *o -= 2.0 * ip * s);
    Ok(out)
}

/// Coherence reading: the inner product `<grad F(x), x - sign * x*>` and the
/// sign of `x*` it was measured against.
#[derive(Debug, Clone, Copy)]
pub struct Coherence {
    pub value: f64,
    /// `+1.0` or `-1.0`; the sign of `x*` nearest to `x` (ties toward `+`).
    pub sign: f64,
}

/// `<grad F(x), x - x_ref>` where `x_ref` is the nearer of `{x*, -x*}`.
/// Positivity certifies descent toward the signal for the non-convex risk.
pub fn coherence_inner_product(
    x: &Array1<f64>,
    data: &PhaselessDataset,
    xstar: &SparseSignal,
) -> Result<Coherence> {
    let grad = grad_risk(x, data)?;
    coherence_from_grad(&grad, x, xstar)
}

/// Same as [`coherence_inner_product`] but reusing an already computed
/// gradient.
pub fn coherence_from_grad(
    grad: &Array1<f64>,
    x: &Array1<f64>,
    xstar: &SparseSignal,
) -> Result<Coherence> {
    let sign = nearest_sign(xstar, x)?;
    let value = grad
        .iter()
        .zip(x.iter().zip(xstar.values()))
        .map(|(g, (xi, si))| g * (xi - sign * si))
        .sum();
    Ok(Coherence { value, sign })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{derive_seed, stream_rng, Stream};
    use crate::signal::{sample_dataset, sample_signal};
    use ndarray::Array1;
    use rand::Rng;

    #[test]
    fn risk_zero_at_signal_and_its_negation() {
        let s = sample_signal(12, 3, 1).unwrap();
        let d = sample_dataset(&s, 30, 0.0, 1).unwrap();
        assert_eq!(risk(s.values(), &d).unwrap(), 0.0);
        assert_eq!(risk(&s.values().mapv(|v| -v), &d).unwrap(), 0.0);
    }

    #[test]
    fn risk_hand_example() {
        // m=1, A=(1,0), Y=0, x=(1,0): ((1)^2 - 0)^2 / 4 = 1/4.
        let d = PhaselessDataset::from_parts(
            ndarray::array![[1.0, 0.0]],
            Array1::from_vec(vec![0.0]),
            0.0,
            0,
        )
        .unwrap();
        let x = Array1::from_vec(vec![1.0, 0.0]);
        assert_eq!(risk(&x, &d).unwrap(), 0.25);
    }

    #[test]
    fn risk_sign_invariant_on_random_data() {
        let s = sample_signal(10, 3, 4).unwrap();
        let d = sample_dataset(&s, 20, 0.5, 4).unwrap();
        let mut rng = stream_rng(6, Stream::Signal);
        let x = Array1::from_iter((0..10).map(|_| rng.random_range(-1.0..=1.0)));
        assert_eq!(
            risk(&x, &d).unwrap(),
            risk(&x.mapv(|v| -v), &d).unwrap()
        );
    }

    #[test]
    fn grad_zero_at_origin() {
        let s = sample_signal(8, 2, 9).unwrap();
        let d = sample_dataset(&s, 15, 0.1, 9).unwrap();
        let g = grad_risk(&Array1::zeros(8), &d).unwrap();
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn grad_hand_example() {
        // m=1, A=(1), Y=0, x=(1): (1 - 0) * 1 * 1 = 1.
        let d = PhaselessDataset::from_parts(
            ndarray::array![[1.0]],
            Array1::from_vec(vec![0.0]),
            0.0,
            0,
        )
        .unwrap();
        let g = grad_risk(&Array1::from_vec(vec![1.0]), &d).unwrap();
        assert!((g[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn grad_matches_finite_differences() {
        let mut rng = stream_rng(11, Stream::Signal);
        for seed in 0..5u64 {
            let s = sample_signal(12, 4, seed).unwrap();
            let d = sample_dataset(&s, 40, 0.2, seed).unwrap();
            for _ in 0..10 {
                let x = Array1::from_iter((0..12).map(|_| rng.random_range(-1.0..=1.0)));
                let g = grad_risk(&x, &d).unwrap();
                for i in 0..12 {
                    let h = 1e-6 * x[i].abs().max(0.1);
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[i] += h;
                    xm[i] -= h;
                    let fd = (risk(&xp, &d).unwrap() - risk(&xm, &d).unwrap()) / (2.0 * h);
                    let scale = g[i].abs().max(fd.abs()).max(1e-4);
                    assert!(
                        (g[i] - fd).abs() <= 1e-6 * scale,
                        "seed {seed} coordinate {i}: {} vs {fd}",
                        g[i]
                    );
                }
            }
        }
    }

    #[test]
    fn risk_with_grad_is_consistent() {
        let s = sample_signal(10, 3, 13).unwrap();
        let d = sample_dataset(&s, 25, 0.3, 13).unwrap();
        let mut rng = stream_rng(14, Stream::Signal);
        let x = Array1::from_iter((0..10).map(|_| rng.random_range(-1.0..=1.0)));
        let eval = risk_with_grad(&x, &d).unwrap();
        assert_eq!(eval.value, risk(&x, &d).unwrap());
        assert_eq!(eval.gradient.unwrap(), grad_risk(&x, &d).unwrap());
    }

    #[test]
    fn population_grad_vanishes_at_stationary_points() {
        let s = sample_signal(9, 3, 17).unwrap();
        for x in [
            s.values().clone(),
            s.values().mapv(|v| -v),
            Array1::zeros(9),
        ] {
            let g = population_grad(&x, &s).unwrap();
            assert!(g.iter().all(|&v| v.abs() < 1e-14), "nonzero at {x:?}");
        }
    }

    #[test]
    fn grad_is_unbiased_for_population_grad() {
        // Average over independent single-measurement datasets.
        let s = sample_signal(10, 3, 19).unwrap();
        let mut rng = stream_rng(20, Stream::Signal);
        let x = Array1::from_iter((0..10).map(|_| rng.random_range(-0.8..=0.8)));
        let pop = population_grad(&x, &s).unwrap();
        let trials = 100_000;
        let mut mean = Array1::<f64>::zeros(10);
        let mut m2 = Array1::<f64>::zeros(10);
        for t in 0..trials {
            let d = sample_dataset(&s, 1, 0.0, derive_seed(555, 0, t as u64)).unwrap();
            let g = grad_risk(&x, &d).unwrap();
            let count = (t + 1) as f64;
            for i in 0..10 {
                let delta = g[i] - mean[i];
                mean[i] += delta / count;
                m2[i] += delta * (g[i] - mean[i]);
            }
        }
        for i in 0..10 {
            let se = (m2[i] / (trials as f64 - 1.0) / trials as f64).sqrt();
            assert!(
                (mean[i] - pop[i]).abs() <= 5.0 * se,
                "component {i}: {} vs {} (se {se})",
                mean[i],
                pop[i]
            );
        }
    }

    #[test]
    fn coherence_zero_cases() {
        let s = sample_signal(10, 3, 23).unwrap();
        let d = sample_dataset(&s, 30, 0.0, 23).unwrap();
        let at_signal = coherence_inner_product(s.values(), &d, &s).unwrap();
        assert_eq!(at_signal.value, 0.0);
        assert_eq!(at_signal.sign, 1.0);
        let at_neg = coherence_inner_product(&s.values().mapv(|v| -v), &d, &s).unwrap();
        assert_eq!(at_neg.value, 0.0);
        assert_eq!(at_neg.sign, -1.0);
    }

    #[test]
    fn coherence_positive_far_from_signal() {
        // Population regime check: small iterates aligned with the signal
        // should see a positive inner product with high probability.
        let mut positives = 0;
        for seed in 0..20u64 {
            let s = sample_signal(20, 4, seed).unwrap();
            let d = sample_dataset(&s, 4000, 0.0, seed).unwrap();
            // ||x||^2 = 0.3 ||x*||^2 <= 0.4 ||x*||^2, aligned with +x*.
            let x = s.values().mapv(|v| v * 0.3f64.sqrt());
            let c = coherence_inner_product(&x, &d, &s).unwrap();
            if c.value > 0.0 {
                positives += 1;
            }
        }
        assert!(positives >= 19, "only {positives}/20 positive");
    }
}
