//! Shared oracles for the test suite. Everything here is deliberately
//! independent of the chart-based quadrature machinery it cross-checks.

/// tanh-sinh (double-exponential) quadrature on (0, 1); handles endpoint
/// singularities like `t^{-s}` and `(1-t)^{s-1}`.
///
/// The integrand receives `(x, 1-x)` with both arguments computed stably,
/// so endpoint behavior at either end keeps full precision.
pub fn tanh_sinh_01(f: impl Fn(f64, f64) -> f64, levels: u32) -> f64 {
    let h = 2.0_f64.powi(-(levels as i32));
    let kmax = (4.5 / h) as i64;
    let mut sum = 0.0;
    for k in -kmax..=kmax {
        let t = k as f64 * h;
        let arg = 0.5 * std::f64::consts::PI * t.sinh();
        let x = 1.0 / (1.0 + (-2.0 * arg).exp());
        let xc = 1.0 / (1.0 + (2.0 * arg).exp());
        let du = 0.5 * std::f64::consts::PI * t.cosh() / arg.cosh().powi(2);
        let w = 0.5 * du * h;
        if x > 0.0 && xc > 0.0 && w.is_finite() && w > 0.0 {
            sum += w * f(x, xc);
        }
    }
    sum
}

/// Pearson chi-square statistic for observed counts against expected counts.
pub fn chi_square_statistic(observed: &[u64], expected: &[f64]) -> f64 {
    observed
        .iter()
        .zip(expected)
        .map(|(&o, &e)| {
            let d = o as f64 - e;
            d * d / e
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tanh_sinh_handles_beta_integrand() {
        // B(1/2, 1/2) = pi
        let v = tanh_sinh_01(|x, xc| x.powf(-0.5) * xc.powf(-0.5), 7);
        assert!(
            (v - std::f64::consts::PI).abs() < 1e-12,
            "got {v}, err {}",
            (v - std::f64::consts::PI).abs()
        );
    }

    #[test]
    fn tanh_sinh_handles_smooth_integrand() {
        let v = tanh_sinh_01(|x, _| (std::f64::consts::PI * x).sin(), 6);
        assert!((v - 2.0 / std::f64::consts::PI).abs() < 1e-13);
    }
}
