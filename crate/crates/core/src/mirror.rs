//! Hyperbolic entropy mirror map, its Bregman divergence, and the
//! sign-invariant distances used to score phase retrieval iterates.
//!
//! The map is `Phi(x) = sum_i [x_i * arcsinh(x_i/beta) - sqrt(x_i^2 + beta^2)]`
//! with gradient `arcsinh(x_i/beta)` and inverse gradient `beta * sinh(u_i)`.
//! Small `beta` gives an l1-like geometry, large `beta` an l2-like one.

use crate::error::{Error, Result};
use crate::num::{asinh_ratio, beta_sinh};
use crate::signal::SparseSignal;
use ndarray::Array1;

/// Minimum admissible mirror map parameter.
pub const MIN_BETA: f64 = 1e-300;

/// The hyperbolic entropy mirror map with shape parameter `beta > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperbolicMirrorMap {
    beta: f64,
}

impl HyperbolicMirrorMap {
    pub fn new(beta: f64) -> Result<Self> {
        if !(beta.is_finite() && beta >= MIN_BETA) {
            return Err(Error::InvalidParameter(format!(
                "beta={beta} must be finite and >= {MIN_BETA}"
            )));
        }
        Ok(Self { beta })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Potential value `Phi(x)`.
    pub fn phi(&self, x: &Array1<f64>) -> Result<f64> {
        if let Some(bad) = x.iter().find(|v| !v.is_finite()) {
            return Err(Error::NumericDomain(format!("non-finite input {bad}")));
        }
        Ok(x.iter()
            .map(|&v| v * asinh_ratio(v, self.beta) - v.hypot(self.beta))
            .sum())
    }

    /// Gradient `(arcsinh(x_i/beta))_i`, the primal-to-dual map.
    pub fn grad(&self, x: &Array1<f64>) -> Array1<f64> {
        x.mapv(|v| asinh_ratio(v, self.beta))
    }

    /// Inverse gradient `(beta * sinh(u_i))_i`, the dual-to-primal map.
    /// Errors when a component overflows the float range.
    pub fn grad_inverse(&self, u: &Array1<f64>) -> Result<Array1<f64>> {
        let mut out = Array1::zeros(u.len());
        for (i, &ui) in u.iter().enumerate() {
            let v = beta_sinh(self.beta, ui);
            if !v.is_finite() {
                return Err(Error::NumericOverflow {
                    coordinate: i,
                    detail: format!("beta*sinh({ui}) overflows with beta={}", self.beta),
                });
            }
            out[i] = v;
        }
        Ok(out)
    }

    /// Bregman divergence `D(x, y) = Phi(x) - Phi(y) - grad(y) . (x - y)`,
    /// with the reference point first.
    ///
    /// Evaluated per coordinate as
    /// `sqrt(y^2+b^2) - sqrt(x^2+b^2) - x*(arcsinh(y/b) - arcsinh(x/b))`,
    /// which agrees with the definition but avoids the cancellation of
    /// differencing two large potentials when x and y are close.
    pub fn bregman(&self, x: &Array1<f64>, y: &Array1<f64>) -> Result<f64> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch(format!(
                "bregman: {} vs {}",
                x.len(),
                y.len()
            )));
        }
        let b = self.beta;
        Ok(x.iter()
            .zip(y.iter())
            .map(|(&xi, &yi)| {
                yi.hypot(b) - xi.hypot(b) - xi * (asinh_ratio(yi, b) - asinh_ratio(xi, b))
            })
            .sum())
    }
}

/// Euclidean distance to the sign set `{x*, -x*}`:
/// `min(||x - x*||_2, ||x + x*||_2)`.
pub fn dist_signset(xstar: &SparseSignal, x: &Array1<f64>) -> Result<f64> {
    if xstar.dim() != x.len() {
        return Err(Error::DimensionMismatch(format!(
            "dist: {} vs {}",
            xstar.dim(),
            x.len()
        )));
    }
    let (mut plus, mut minus) = (0.0, 0.0);
    for (&s, &v) in xstar.values().iter().zip(x.iter()) {
        plus += (v - s) * (v - s);
        minus += (v + s) * (v + s);
    }
    Ok(plus.min(minus).sqrt())
}

/// Sign of `x*` nearest to `x` in l2, ties broken toward `+x*`.
/// Returns `+1.0` or `-1.0`.
pub fn nearest_sign(xstar: &SparseSignal, x: &Array1<f64>) -> Result<f64> {
    if xstar.dim() != x.len() {
        return Err(Error::DimensionMismatch(format!(
            "nearest_sign: {} vs {}",
            xstar.dim(),
            x.len()
        )));
    }
    // ||x - x*||^2 <= ||x + x*||^2  <=>  x . x* >= 0.
    let ip: f64 = xstar
        .values()
        .iter()
        .zip(x.iter())
        .map(|(&s, &v)| s * v)
        .sum();
    Ok(if ip >= 0.0 { 1.0 } else { -1.0 })
}

/// Bregman distance to the sign set: `min(D(x*, x), D(-x*, x))`.
pub fn dist_phi_signset(
    xstar: &SparseSignal,
    x: &Array1<f64>,
    map: &HyperbolicMirrorMap,
) -> Result<f64> {
    let plus = map.bregman(xstar.values(), x)?;
    let minus = map.bregman(&xstar.values().mapv(|v| -v), x)?;
    Ok(plus.min(minus))
}

/// Outcome of the two-sided comparison between the squared l2 error and the
/// Bregman divergence `D(x*, x)`.
///
/// The lower bound `||x - x*||^2 <= 2 sqrt(max(||x||_inf^2, ||x*||_inf^2) + b^2) D(x*, x)`
/// holds for every x. The upper bound
/// `D(x*, x) <= sqrt(k)/(c* ||x*||_2) ||x_S - x*_S||^2 + ||x_{S^c}||_1`
/// applies when x has no mismatched sign and `|x_i| >= |x*_i| / 2`
/// everywhere; `c*` is instantiated from the signal itself
/// (`c* = sqrt(k) min_S |x*_i| / ||x*||_2`, the largest valid constant).
#[derive(Debug, Clone, Copy)]
pub struct BregmanL2Bounds {
    /// Lower bound holds.
    pub lower_ok: bool,
    /// The sign/magnitude conditions of the upper bound hold.
    pub upper_applicable: bool,
    /// Upper bound holds (vacuously true when not applicable).
    pub upper_ok: bool,
    /// Lower-bound slack: RHS minus LHS.
    pub slack_lower: f64,
    /// Upper-bound slack: RHS minus LHS (NaN when not applicable).
    pub slack_upper: f64,
}

/// Checks both comparison bounds for a concrete `(x*, x)` pair.
pub fn bregman_l2_bounds(
    xstar: &SparseSignal,
    x: &Array1<f64>,
    map: &HyperbolicMirrorMap,
) -> Result<BregmanL2Bounds> {
    if xstar.dim() != x.len() {
        return Err(Error::DimensionMismatch(format!(
            "bregman_l2_bounds: {} vs {}",
            xstar.dim(),
            x.len()
        )));
    }
    let divergence = map.bregman(xstar.values(), x)?;
    let sq_err: f64 = xstar
        .values()
        .iter()
        .zip(x.iter())
        .map(|(&s, &v)| (v - s) * (v - s))
        .sum();
    let inf_sq = x
        .iter()
        .fold(0.0f64, |a, v| a.max(v * v))
        .max(xstar.max_magnitude().powi(2));
    let rhs_lower = 2.0 * (inf_sq + map.beta() * map.beta()).sqrt() * divergence;
    // 1e-9 headroom absorbs rounding right at the boundary (x = x*).
    let lower_ok = sq_err <= rhs_lower * (1.0 + 1e-9) + 1e-300;

    let upper_applicable = xstar
        .values()
        .iter()
        .zip(x.iter())
        .all(|(&s, &v)| v * s >= 0.0 && v.abs() >= 0.5 * s.abs());
    let (upper_ok, slack_upper) = if upper_applicable {
        let on_support_sq: f64 = xstar
            .support()
            .iter()
            .map(|&i| (x[i] - xstar.values()[i]) * (x[i] - xstar.values()[i]))
            .sum();
        let off_support_l1: f64 = x
            .iter()
            .enumerate()
            .filter(|(i, _)| xstar.values()[*i] == 0.0)
            .map(|(_, v)| v.abs())
            .sum();
        let k = xstar.sparsity() as f64;
        let rhs_upper = if xstar.support().is_empty() {
            off_support_l1
        } else {
            k.sqrt() / (xstar.sparsity_constant() * xstar.norm2()) * on_support_sq
                + off_support_l1
        };
        (
            divergence <= rhs_upper * (1.0 + 1e-9) + 1e-300,
            rhs_upper - divergence,
        )
    } else {
        (true, f64::NAN)
    };

    Ok(BregmanL2Bounds {
        lower_ok,
        upper_applicable,
        upper_ok,
        slack_lower: rhs_lower - sq_err,
        slack_upper,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream_rng, Stream};
    use crate::signal::sample_signal;
    use ndarray::Array1;
    use rand::Rng;

    fn map(beta: f64) -> HyperbolicMirrorMap {
        HyperbolicMirrorMap::new(beta).unwrap()
    }

    fn random_vec(n: usize, scale: f64, rng: &mut impl Rng) -> Array1<f64> {
        Array1::from_iter((0..n).map(|_| rng.random_range(-scale..=scale)))
    }

    #[test]
    fn phi_at_zero_is_minus_n_beta() {
        let m = map(0.25);
        let x = Array1::zeros(7);
        assert!((m.phi(&x).unwrap() + 7.0 * 0.25).abs() < 1e-15);
    }

    #[test]
    fn phi_is_even() {
        let m = map(1e-3);
        let mut rng = stream_rng(3, Stream::Signal);
        let x = random_vec(20, 2.0, &mut rng);
        let a = m.phi(&x).unwrap();
        let b = m.phi(&x.mapv(|v| -v)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn phi_scalar_value() {
        // x = beta = 0.5: 0.5*arcsinh(1) - 0.5*sqrt(2) = -0.2664199877.
        let m = map(0.5);
        let x = Array1::from_vec(vec![0.5]);
        let expected = 0.5 * 1.0f64.asinh() - 0.5 * 2.0f64.sqrt();
        let got = m.phi(&x).unwrap();
        assert!((got - expected).abs() < 1e-15, "{got} vs {expected}");
        assert!((got + 0.26642).abs() < 5e-6);
    }

    #[test]
    fn phi_rejects_non_finite() {
        let m = map(1.0);
        assert!(m.phi(&Array1::from_vec(vec![f64::NAN])).is_err());
        assert!(m.phi(&Array1::from_vec(vec![f64::INFINITY])).is_err());
    }

    #[test]
    fn grad_zero_and_oddness() {
        let m = map(1e-6);
        assert!(m.grad(&Array1::zeros(4)).iter().all(|&v| v == 0.0));
        let mut rng = stream_rng(5, Stream::Signal);
        let x = random_vec(30, 3.0, &mut rng);
        let g = m.grad(&x);
        let gneg = m.grad(&x.mapv(|v| -v));
        for (a, b) in g.iter().zip(gneg.iter()) {
            assert_eq!(*a, -*b);
        }
    }

    #[test]
    fn grad_matches_finite_differences() {
        // Points are kept away from 0, where the arcsinh kink (curvature
        // ~1/beta^2) makes central differences themselves meaningless.
        for beta in [1e-2, 1e-6] {
            let m = map(beta);
            let mut rng = stream_rng(8, Stream::Signal);
            for _ in 0..100 {
                let x: Array1<f64> = Array1::from_iter((0..5).map(|_| {
                    let mag = rng.random_range(0.05..=2.0);
                    if rng.random::<bool>() {
                        mag
                    } else {
                        -mag
                    }
                }));
                let g = m.grad(&x);
                for i in 0..x.len() {
                    let h = 1e-5 * x[i].abs();
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[i] += h;
                    xm[i] -= h;
                    let fd = (m.phi(&xp).unwrap() - m.phi(&xm).unwrap()) / (2.0 * h);
                    assert!(
                        (g[i] - fd).abs() <= 1e-6 * g[i].abs().max(fd.abs()),
                        "beta {beta} coordinate {i}: {} vs {fd}",
                        g[i]
                    );
                }
            }
        }
    }

    #[test]
    fn grad_inverse_round_trip_tiny_beta() {
        let beta = 1e-8;
        let m = map(beta);
        let mut rng = stream_rng(13, Stream::Signal);
        // |x| up to 1e10 * beta = 100.
        let x = random_vec(50, 100.0, &mut rng);
        let back = m.grad_inverse(&m.grad(&x)).unwrap();
        for (a, b) in x.iter().zip(back.iter()) {
            assert!(
                (a - b).abs() <= 1e-9 * a.abs().max(beta),
                "round trip {a} -> {b}"
            );
        }
    }

    #[test]
    fn grad_inverse_basics() {
        let m = map(2.0);
        assert!(m
            .grad_inverse(&Array1::zeros(3))
            .unwrap()
            .iter()
            .all(|&v| v == 0.0));
        let u = Array1::from_vec(vec![1.0f64.asinh()]);
        let x = m.grad_inverse(&u).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn grad_inverse_overflow_names_coordinate() {
        let m = map(1.0);
        let u = Array1::from_vec(vec![0.0, 800.0, 0.0]);
        match m.grad_inverse(&u) {
            Err(Error::NumericOverflow { coordinate, .. }) => assert_eq!(coordinate, 1),
            other => panic!("expected overflow error, got {other:?}"),
        }
    }

    #[test]
    fn bregman_identity_and_nonnegativity() {
        let m = map(1e-2);
        let mut rng = stream_rng(17, Stream::Signal);
        for _ in 0..10_000 {
            let x = random_vec(4, 2.0, &mut rng);
            let y = random_vec(4, 2.0, &mut rng);
            assert_eq!(m.bregman(&x, &x).unwrap(), 0.0);
            assert!(m.bregman(&x, &y).unwrap() >= 0.0);
        }
    }

    #[test]
    fn bregman_agrees_with_definition() {
        // Cross-check the per-coordinate form against Phi/grad directly.
        let m = map(1e-2);
        let mut rng = stream_rng(19, Stream::Signal);
        for _ in 0..200 {
            let x = random_vec(8, 2.0, &mut rng);
            let y = random_vec(8, 2.0, &mut rng);
            let stable = m.bregman(&x, &y).unwrap();
            let direct = m.phi(&x).unwrap()
                - m.phi(&y).unwrap()
                - m.grad(&y)
                    .iter()
                    .zip(x.iter().zip(y.iter()))
                    .map(|(g, (xi, yi))| g * (xi - yi))
                    .sum::<f64>();
            assert!(
                (stable - direct).abs() <= 1e-8 * stable.abs().max(1e-12),
                "{stable} vs {direct}"
            );
        }
    }

    #[test]
    fn bregman_strictly_positive_off_reference() {
        let m = map(1e-2);
        let mut rng = stream_rng(23, Stream::Signal);
        let x = random_vec(6, 1.0, &mut rng);
        for _ in 0..1000 {
            let mut y = x.clone();
            let i = rng.random_range(0..y.len());
            y[i] += rng.random_range(0.01..=0.5) * if rng.random::<bool>() { 1.0 } else { -1.0 };
            assert!(m.bregman(&x, &y).unwrap() > 0.0);
        }
    }

    #[test]
    fn bregman_length_mismatch() {
        let m = map(1.0);
        assert!(m.bregman(&Array1::zeros(3), &Array1::zeros(4)).is_err());
    }

    #[test]
    fn dist_signset_cases() {
        let s = sample_signal(10, 3, 1).unwrap();
        let x = s.values().mapv(|v| -v);
        assert_eq!(dist_signset(&s, &x).unwrap(), 0.0);
        let zero = Array1::zeros(10);
        assert!((dist_signset(&s, &zero).unwrap() - s.norm2()).abs() <= 1e-12 * s.norm2());
        // Sign invariance in the second argument.
        let mut rng = stream_rng(2, Stream::Signal);
        let y = random_vec(10, 1.0, &mut rng);
        assert_eq!(
            dist_signset(&s, &y).unwrap(),
            dist_signset(&s, &y.mapv(|v| -v)).unwrap()
        );
    }

    #[test]
    fn dist_signset_matches_two_case_oracle() {
        let mut values = Array1::zeros(8);
        values[1] = 0.8;
        values[5] = -0.6;
        let s = SparseSignal::from_dense(values.clone());
        let mut x = values.clone();
        x[0] += 0.1;
        let plus = (&x - &values).mapv(|v| v * v).sum().sqrt();
        let minus = (&x + &values).mapv(|v| v * v).sum().sqrt();
        assert_eq!(dist_signset(&s, &x).unwrap(), plus.min(minus));
    }

    #[test]
    fn dist_phi_signset_zero_on_both_signs() {
        let m = map(1e-4);
        let s = sample_signal(12, 4, 3).unwrap();
        assert_eq!(dist_phi_signset(&s, s.values(), &m).unwrap(), 0.0);
        let neg = s.values().mapv(|v| -v);
        assert_eq!(dist_phi_signset(&s, &neg, &m).unwrap(), 0.0);
    }

    #[test]
    fn dist_phi_signset_is_min_of_two_bregman_calls() {
        let m = map(1e-3);
        let s = sample_signal(12, 4, 7).unwrap();
        let mut rng = stream_rng(29, Stream::Signal);
        let x = random_vec(12, 1.0, &mut rng);
        let plus = m.bregman(s.values(), &x).unwrap();
        let minus = m.bregman(&s.values().mapv(|v| -v), &x).unwrap();
        assert_eq!(dist_phi_signset(&s, &x, &m).unwrap(), plus.min(minus));
    }

    #[test]
    fn bounds_at_reference_and_zero() {
        let m = map(1e-2);
        let s = sample_signal(10, 3, 5).unwrap();
        let at_ref = bregman_l2_bounds(&s, s.values(), &m).unwrap();
        assert!(at_ref.lower_ok && at_ref.upper_applicable && at_ref.upper_ok);
        let at_zero = bregman_l2_bounds(&s, &Array1::zeros(10), &m).unwrap();
        assert!(at_zero.lower_ok);
        assert!(!at_zero.upper_applicable);
    }

    #[test]
    fn bounds_hold_on_random_pairs() {
        let mut rng = stream_rng(31, Stream::Signal);
        for trial in 0..2000 {
            let s = sample_signal(12, 4, trial).unwrap();
            let m = map(if trial % 2 == 0 { 1e-2 } else { 1e-6 });
            // Alternate arbitrary and applicability-respecting perturbations.
            let x = if trial % 3 == 0 {
                random_vec(12, 1.5, &mut rng)
            } else {
                let mut x = s.values().clone();
                for v in x.iter_mut() {
                    if *v != 0.0 {
                        *v *= rng.random_range(0.5..=1.8);
                    } else {
                        *v = rng.random_range(-0.01..=0.01);
                    }
                }
                x
            };
            let b = bregman_l2_bounds(&s, &x, &m).unwrap();
            assert!(b.lower_ok, "lower bound failed at trial {trial}");
            assert!(b.upper_ok, "upper bound failed at trial {trial}");
        }
    }
}
