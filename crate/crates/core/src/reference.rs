//! Slow, independent reference evaluations used to cross-check the fast paths.
//!
//! Nothing here shares code with [`crate::specfun`]: the Bessel functions are
//! summed from their ascending series with compensated summation, which is
//! accurate for moderate arguments (roughly `x <= 8`).

use std::f64::consts::PI;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Neumaier-compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

fn digamma_int(n: u32) -> f64 {
    // psi(n) = -gamma + H_{n-1}
    -EULER_GAMMA + (1..n).map(|k| 1.0 / k as f64).sum::<f64>()
}

/// `J_n(x)` from `(x/2)^n Σ (-x²/4)^k / (k! (n+k)!)`.
pub fn series_bessel_j(n: u32, x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = (0.5 * x).powi(n as i32) / factorial(n);
    let mut acc = CompensatedSum::default();
    for k in 0..200u32 {
        if k > 0 {
            term *= q / (k as f64 * (n + k) as f64);
        }
        acc.add(term);
        if term.abs() < 1e-20 * acc.value().abs() && k > 4 {
            break;
        }
    }
    acc.value()
}

/// `Y_n(x)` from the ascending series with digamma coefficients.
pub fn series_bessel_y(n: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut head = CompensatedSum::default();
    for k in 0..n {
        head.add(factorial(n - k - 1) / factorial(k) * (0.25 * x * x).powi(k as i32));
    }
    let q = -0.25 * x * x;
    let mut tail = CompensatedSum::default();
    let mut power = 1.0 / factorial(n);
    for k in 0..200u32 {
        if k > 0 {
            power *= q / (k as f64 * (n + k) as f64);
        }
        let t = (digamma_int(k + 1) + digamma_int(n + k + 1)) * power;
        tail.add(t);
        if power.abs() < 1e-22 && k > 4 {
            break;
        }
    }
    -half.powi(-(n as i32)) * head.value() / PI + 2.0 / PI * half.ln() * series_bessel_j(n, x)
        - half.powi(n as i32) * tail.value() / PI
}

/// Central difference of `f` at `x` with step `h`.
pub fn central_difference(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Second central difference of `f` at `x` with step `h`.
pub fn second_difference(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_values() {
        // Tabulated to 16 digits.
        assert!((series_bessel_j(0, 1.0) - 0.765_197_686_557_966_6).abs() < 1e-16);
        assert!((series_bessel_y(0, 1.0) - 0.088_256_964_215_676_96).abs() < 1e-16);
        assert!((series_bessel_y(1, 1.0) + 0.781_212_821_300_288_7).abs() < 1e-15);
    }
}
