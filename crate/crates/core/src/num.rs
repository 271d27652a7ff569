//! Scalar and vector numeric kernels.
//!
//! The scalar helpers keep `arcsinh`/`sinh` usable across the extreme
//! argument ranges the mirror map produces (`beta` down to 1e-300, duals up
//! to ~700). The vector kernels fix the accumulation order so single-threaded
//! results are bit-reproducible.

use std::f64::consts::LN_2;

/// arcsinh with guarded evaluation: `log1p` form for moderate arguments,
/// `ln(2) + ln|z|` once `z*z` would overflow.
pub fn stable_asinh(z: f64) -> f64 {
    let a = z.abs();
    let r = if a > 1e150 {
        LN_2 + a.ln()
    } else {
        // ln(a + sqrt(a^2+1)) = log1p(a + a^2 / (1 + sqrt(a^2+1)))
        (a + a * a / (1.0 + (a * a + 1.0).sqrt())).ln_1p()
    };
    if z < 0.0 {
        -r
    } else {
        r
    }
}

/// arcsinh(x / beta) without forming the ratio when it would overflow.
pub fn asinh_ratio(x: f64, beta: f64) -> f64 {
    let z = x / beta;
    if z.is_finite() {
        stable_asinh(z)
    } else {
        (LN_2 + x.abs().ln() - beta.ln()).copysign(x)
    }
}

/// `beta * sinh(u)`, rewritten as `exp(|u| - ln 2 + ln beta)` once `sinh`
/// alone would overflow even though the product is representable.
pub fn beta_sinh(beta: f64, u: f64) -> f64 {
    let a = u.abs();
    if a <= 709.0 {
        beta * u.sinh()
    } else {
        ((a - LN_2) + beta.ln()).exp().copysign(u)
    }
}

/// Dot product with eight running sums. The fixed split keeps results
/// deterministic while letting the compiler vectorize the inner loop.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let n8 = a.len() - a.len() % 8;
    let mut acc = [0.0f64; 8];
    for (ca, cb) in a[..n8].chunks_exact(8).zip(b[..n8].chunks_exact(8)) {
        for l in 0..8 {
            acc[l] += ca[l] * cb[l];
        }
    }
    let mut tail = 0.0;
    for (x, y) in a[n8..].iter().zip(&b[n8..]) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail
}

/// `y += alpha * x` componentwise.
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn asinh_matches_std_in_moderate_range() {
        for &z in &[0.0, 1e-12, 1e-3, 0.5, 1.0, 10.0, 1e6, -2.5, -1e10] {
            let got = stable_asinh(z);
            let want = z.asinh();
            assert!(
                (got - want).abs() <= 1e-15 * want.abs().max(1e-300),
                "z={z}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn asinh_huge_argument() {
        // asinh(z) ~ ln(2z) for large z; std overflows z*z near 1e154.
        let z = 1e200;
        assert!((stable_asinh(z) - (LN_2 + z.ln())).abs() < 1e-12);
        assert_eq!(stable_asinh(-z), -stable_asinh(z));
    }

    #[test]
    fn asinh_ratio_survives_ratio_overflow() {
        // x/beta = 1e310 overflows f64; the log form must still work.
        let v = asinh_ratio(1e10, 1e-300);
        assert!((v - (LN_2 + (1e10f64).ln() + 300.0 * std::f64::consts::LN_10)).abs() < 1e-9);
    }

    #[test]
    fn beta_sinh_round_trip() {
        let beta = 1e-8;
        for &x in &[0.0, 1e-9, 1e-3, 1.0, 5.0e7, -3.2] {
            let u = asinh_ratio(x, beta);
            let back = beta_sinh(beta, u);
            assert!(
                (back - x).abs() <= 1e-12 * x.abs().max(beta),
                "x={x} back={back}"
            );
        }
    }

    #[test]
    fn beta_sinh_large_dual_stays_finite() {
        // sinh(720) overflows but 1e-20 * sinh(720) is representable.
        let v = beta_sinh(1e-20, 720.0);
        assert!(v.is_finite() && v > 0.0);
        let direct = (720.0 - LN_2 + (1e-20f64).ln()).exp();
        assert!((v - direct).abs() <= 1e-12 * direct);
    }

    #[test]
    fn dot_matches_naive() {
        let a: Vec<f64> = (0..103).map(|i| (i as f64).sin()).collect();
        let b: Vec<f64> = (0..103).map(|i| (i as f64 * 0.7).cos()).collect();
        let naive: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        assert!((dot(&a, &b) - naive).abs() < 1e-12);
    }

    #[test]
    fn axpy_accumulates() {
        let x = vec![1.0, 2.0, 3.0];
        let mut y = vec![0.5, 0.5, 0.5];
        axpy(2.0, &x, &mut y);
        assert_eq!(y, vec![2.5, 4.5, 6.5]);
    }
}
