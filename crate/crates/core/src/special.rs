//! Bessel function of the first kind, order zero.

use std::f64::consts::PI;

/// `J0(x) = (1/pi) * integral_0^pi cos(x sin t) dt`, evaluated with the
/// trapezoid rule. The integrand is smooth and periodic, so the rule
/// converges geometrically once the node count exceeds `|x|`.
pub fn j0(x: f64) -> f64 {
    let n = 64 + 2 * x.abs().ceil() as usize;
    let h = PI / n as f64;
    let mut s = 0.5 * (1.0 + (x * PI.sin()).cos());
    for k in 1..n {
        s += (x * (k as f64 * h).sin()).cos();
    }
    s * h / PI
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Power series `sum (-1)^m (x/2)^(2m) / (m!)^2`.
    fn series(x: f64) -> f64 {
        let q = -(x * x) / 4.0;
        let mut term = 1.0;
        let mut sum = 1.0;
        for m in 1..200 {
            term *= q / (m as f64 * m as f64);
            sum += term;
            if term.abs() < 1e-18 {
                break;
            }
        }
        sum
    }

    #[test]
    fn matches_power_series() {
        for i in 0..=120 {
            let x = i as f64 * 0.1;
            assert!((j0(x) - series(x)).abs() < 1e-12, "x = {x}");
        }
    }

    #[test]
    fn known_values() {
        assert!((j0(0.0) - 1.0).abs() < 1e-15);
        // First zero.
        assert!(j0(2.404_825_557_695_773).abs() < 1e-13);
        assert!((j0(-1.5) - j0(1.5)).abs() < 1e-15);
    }
}
