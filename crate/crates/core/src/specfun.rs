//! Bessel functions of integer order and real argument, Hankel functions of the
//! first kind, and the DtN symbol `h_n(z) = z H_n'(z) / H_n(z)`.
//!
//! `J_n` comes from Miller's backward recurrence normalised with
//! `J_0 + 2 Σ J_2k = 1`, which is stable for every order and argument we use.
//! `Y_0` and `Y_1` come from Neumann series in the `J_2k` for moderate
//! arguments and from Hankel's asymptotic expansion beyond
//! [`ASYMPTOTIC_CROSSOVER`]; higher `Y_n` follow by forward recurrence, which is
//! the stable direction for the second kind.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest order accepted by the public evaluators.
pub const MAX_ORDER: usize = 128;

/// Above this argument `Y_0`, `Y_1` use the asymptotic expansion.
pub const ASYMPTOTIC_CROSSOVER: f64 = 25.0;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const RESCALE_LIMIT: f64 = 1e250;

fn check_order(n: i64) -> Result<()> {
    if n.unsigned_abs() as usize > MAX_ORDER {
        return Err(Error::OrderOverflow { order: n, max: MAX_ORDER });
    }
    Ok(())
}

fn check_positive(x: f64) -> Result<()> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain { what: "x", value: x });
    }
    Ok(())
}

/// `J_0(x), ..., J_{n_max}(x)` for `x >= 0`.
pub fn bessel_j_table(n_max: usize, x: f64) -> Result<Vec<f64>> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::Domain { what: "x", value: x });
    }
    let mut out = vec![0.0; n_max + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return Ok(out);
    }
    miller(&mut out, x);
    Ok(out)
}

fn miller(out: &mut [f64], x: f64) {
    let n_max = out.len() - 1;
    let top = n_max.max(x.ceil() as usize);
    let mut start = top + 20 + (40.0 * top as f64).sqrt().ceil() as usize;
    if start % 2 == 1 {
        start += 1;
    }
    let two_over_x = 2.0 / x;
    let mut above = 0.0;
    let mut current = 1e-30;
    let mut even_sum = 0.0;
    for k in (1..=start).rev() {
        let below = k as f64 * two_over_x * current - above;
        above = current;
        current = below;
        let order = k - 1;
        if order <= n_max {
            out[order] = current;
        }
        if order % 2 == 0 && order > 0 {
            even_sum += current;
        }
        if current.abs() > RESCALE_LIMIT {
            let scale = 1.0 / RESCALE_LIMIT;
            current *= scale;
            above *= scale;
            even_sum *= scale;
            if order <= n_max {
                for v in &mut out[order..] {
                    *v *= scale;
                }
            }
        }
    }
    let norm = current + 2.0 * even_sum;
    for v in out.iter_mut() {
        *v /= norm;
    }
}

/// Hankel's expansion for orders 0 and 1; returns `((J0, Y0), (J1, Y1))`.
fn asymptotic_01(x: f64) -> ((f64, f64), (f64, f64)) {
    let (sin_x, cos_x) = x.sin_cos();
    let amp = (2.0 / (PI * x)).sqrt();
    let pq = |mu: f64| {
        let mut p = 0.0;
        let mut q = 0.0;
        let mut term = 1.0f64;
        let mut last = f64::INFINITY;
        for k in 0..200 {
            if k > 0 {
                let odd = (2 * k - 1) as f64;
                term *= (mu - odd * odd) / (k as f64 * 8.0 * x);
            }
            let mag = term.abs();
            if mag > last {
                break;
            }
            last = mag;
            let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
            if k % 2 == 0 {
                p += sign * term;
            } else {
                q += sign * term;
            }
            if mag < 1e-18 * p.abs().max(1e-300) {
                break;
            }
        }
        (p, q)
    };
    // chi_0 = x - pi/4, chi_1 = x - 3pi/4, expanded so the phase is never rounded.
    let cos0 = (cos_x + sin_x) * FRAC_1_SQRT_2;
    let sin0 = (sin_x - cos_x) * FRAC_1_SQRT_2;
    let cos1 = (sin_x - cos_x) * FRAC_1_SQRT_2;
    let sin1 = -(sin_x + cos_x) * FRAC_1_SQRT_2;
    let (p0, q0) = pq(0.0);
    let (p1, q1) = pq(4.0);
    (
        (amp * (p0 * cos0 - q0 * sin0), amp * (p0 * sin0 + q0 * cos0)),
        (amp * (p1 * cos1 - q1 * sin1), amp * (p1 * sin1 + q1 * cos1)),
    )
}

/// `Y_0`, `Y_1` from the Neumann series given a normalised `J` table long
/// enough for the tail to vanish.
fn neumann_y01(x: f64, j: &[f64]) -> (f64, f64) {
    let log_term = (0.5 * x).ln() + EULER_GAMMA;
    let mut sum0 = 0.0;
    let mut sum1 = 0.0;
    let mut k = 1;
    while 2 * k + 1 < j.len() {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let kf = k as f64;
        sum0 += sign * j[2 * k] / kf;
        sum1 += sign * (j[2 * k - 1] - j[2 * k + 1]) / kf;
        k += 1;
    }
    let y0 = 2.0 / PI * log_term * j[0] - 4.0 / PI * sum0;
    let y1 = -2.0 / (PI * x) * j[0] + 2.0 / PI * log_term * j[1] + 2.0 / PI * sum1;
    (y0, y1)
}

/// Tables `J_0..J_{n_max}` and `Y_0..Y_{n_max}` at `x > 0`.
pub fn bessel_jy_table(n_max: usize, x: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    check_positive(x)?;
    let len = n_max.max(1) + 1;
    let (j, y0, y1) = if x > ASYMPTOTIC_CROSSOVER {
        let mut j = bessel_j_table(len - 1, x)?;
        let ((_, y0), (_, y1)) = asymptotic_01(x);
        j.truncate(n_max + 1);
        (j, y0, y1)
    } else {
        let series_len = len.max(x.ceil() as usize + 40);
        let mut j = bessel_j_table(series_len, x)?;
        let (y0, y1) = neumann_y01(x, &j);
        j.truncate(n_max + 1);
        (j, y0, y1)
    };
    let mut y = Vec::with_capacity(n_max + 1);
    y.push(y0);
    if n_max >= 1 {
        y.push(y1);
    }
    for n in 1..n_max {
        let next = 2.0 * n as f64 / x * y[n] - y[n - 1];
        if !next.is_finite() {
            return Err(Error::Overflow { function: "Y", order: n as i64 + 1, x });
        }
        y.push(next);
    }
    Ok((j, y))
}

/// Bessel function of the first kind `J_n(x)`, `x >= 0`.
pub fn bessel_j(n: u32, x: f64) -> Result<f64> {
    check_order(n as i64)?;
    Ok(bessel_j_table(n as usize, x)?[n as usize])
}

/// Bessel function of the second kind `Y_n(x)`, `x > 0`.
pub fn bessel_y(n: u32, x: f64) -> Result<f64> {
    check_order(n as i64)?;
    Ok(bessel_jy_table(n as usize, x)?.1[n as usize])
}

/// `H_0^{(1)}(x), ..., H_{n_max}^{(1)}(x)`.
pub fn hankel1_table(n_max: usize, x: f64) -> Result<Vec<Complex64>> {
    let (j, y) = bessel_jy_table(n_max, x)?;
    Ok(j.into_iter().zip(y).map(|(re, im)| Complex64::new(re, im)).collect())
}

/// Derivatives `H_n^{(1)'}(x)` matching a value table `H_0..H_{n_max}`, via
/// `H_n' = H_{n-1} - (n/x) H_n` and `H_0' = -H_1`.
pub fn hankel1_deriv_table(values: &[Complex64], x: f64) -> Vec<Complex64> {
    (0..values.len())
        .map(|n| {
            if n == 0 {
                -values.get(1).copied().unwrap_or_else(|| hankel1(1, x).unwrap_or_default())
            } else {
                values[n - 1] - values[n] * (n as f64 / x)
            }
        })
        .collect()
}

fn reflect(n: i32, value: Complex64) -> Complex64 {
    if n < 0 && n % 2 != 0 {
        -value
    } else {
        value
    }
}

/// Hankel function of the first kind `H_n^{(1)}(x) = J_n(x) + i Y_n(x)` for any
/// integer order; negative orders use `H_{-n} = (-1)^n H_n`.
pub fn hankel1(n: i32, x: f64) -> Result<Complex64> {
    check_order(n as i64)?;
    check_positive(x)?;
    let m = n.unsigned_abs() as usize;
    let (j, y) = bessel_jy_table(m, x)?;
    Ok(reflect(n, Complex64::new(j[m], y[m])))
}

/// `H_n^{(1)'}(x)` via the recurrence `H_n' = H_{n-1} - (n/x) H_n`.
pub fn hankel1_deriv(n: i32, x: f64) -> Result<Complex64> {
    check_order(n as i64)?;
    check_positive(x)?;
    let m = n.unsigned_abs() as usize;
    let (j, y) = bessel_jy_table(m.max(1), x)?;
    let h = |k: usize| Complex64::new(j[k], y[k]);
    let d = if m == 0 { -h(1) } else { h(m - 1) - h(m) * (m as f64 / x) };
    Ok(reflect(n, d))
}

/// `h_n(z) = z H_n'(z) / H_n(z)` evaluated without forming `|H_n|^2`, which
/// overflows for high orders at small arguments.
fn symbol_from_parts(z: f64, h: Complex64, dh: Complex64) -> Complex64 {
    let scale = h.re.abs().max(h.im.abs());
    let (hr, hi) = (h.re / scale, h.im / scale);
    let (dr, di) = (dh.re / scale, dh.im / scale);
    let denom = hr * hr + hi * hi;
    Complex64::new(z * (dr * hr + di * hi) / denom, z * (hr * di - dr * hi) / denom)
}

/// The DtN symbol `h_n(z) = z H_n^{(1)'}(z) / H_n^{(1)}(z)`; even in `n`.
pub fn dtn_symbol(n: i32, z: f64) -> Result<Complex64> {
    check_order(n as i64)?;
    check_positive(z)?;
    let m = n.unsigned_abs() as i32;
    Ok(symbol_from_parts(z, hankel1(m, z)?, hankel1_deriv(m, z)?))
}

/// `h_0(z), ..., h_{n_max}(z)` from a single table evaluation.
pub fn dtn_symbol_table(n_max: usize, z: f64) -> Result<Vec<Complex64>> {
    let values = hankel1_table(n_max + 1, z)?;
    let derivs = hankel1_deriv_table(&values, z);
    Ok((0..=n_max).map(|n| symbol_from_parts(z, values[n], derivs[n])).collect())
}
