//! Truncated Dirichlet-to-Neumann operator on the circle `|x| = R`.
//!
//! A trace sampled at the `n_quad` uniform angles `2πj/n_quad` is analysed with
//! the periodic trapezoid rule, each mode `|n| <= N` is multiplied by
//! `h_n(κR)/R`, and the result is synthesised at the same angles.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::specfun::{dtn_symbol_table, MAX_ORDER};

#[derive(Debug, Clone)]
pub struct DtnOperator {
    kappa: f64,
    radius: f64,
    order: usize,
    n_quad: usize,
    /// `h_n(κR)` for `n = -N..=N`, stored at index `n + N`.
    symbols: Vec<Complex64>,
    /// `e^{2πi m / n_quad}` for `m = 0..n_quad`.
    roots: Vec<Complex64>,
}

impl DtnOperator {
    pub fn new(kappa: f64, radius: f64, order: usize, n_quad: usize) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::Domain { what: "kappa", value: kappa });
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Domain { what: "R", value: radius });
        }
        if order > MAX_ORDER - 1 {
            return Err(Error::OrderOverflow { order: order as i64, max: MAX_ORDER - 1 });
        }
        if n_quad < 2 * order + 2 {
            return Err(Error::InvalidCount { what: "n_quad", value: n_quad, min: 2 * order + 2 });
        }
        let half = dtn_symbol_table(order, kappa * radius)?;
        let symbols = (-(order as i64)..=order as i64)
            .map(|n| half[n.unsigned_abs() as usize])
            .collect();
        let roots = (0..n_quad)
            .map(|m| Complex64::from_polar(1.0, TAU * m as f64 / n_quad as f64))
            .collect();
        Ok(Self { kappa, radius, order, n_quad, symbols, roots })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn n_quad(&self) -> usize {
        self.n_quad
    }

    /// Cached `h_n(κR)`; zero outside `|n| <= N`.
    pub fn symbol(&self, n: i64) -> Complex64 {
        if n.unsigned_abs() as usize > self.order {
            return Complex64::default();
        }
        self.symbols[(n + self.order as i64) as usize]
    }

    /// Replaces one cached symbol. Only meant for exercising the self-checks
    /// with a deliberately broken operator.
    #[doc(hidden)]
    pub fn with_symbol_override(mut self, n: i64, value: Complex64) -> Self {
        if n.unsigned_abs() as usize <= self.order {
            self.symbols[(n + self.order as i64) as usize] = value;
        }
        self
    }

    /// `e^{i n θ_j}` with exact periodic index reduction.
    fn mode(&self, n: i64, j: usize) -> Complex64 {
        let q = self.n_quad as i64;
        self.roots[(n * j as i64).rem_euclid(q) as usize]
    }

    fn check_len(&self, trace: &[Complex64]) -> Result<()> {
        if trace.len() != self.n_quad {
            return Err(Error::LengthMismatch { what: "TBC trace", expected: self.n_quad, found: trace.len() });
        }
        Ok(())
    }

    /// Trapezoid-rule Fourier coefficients `û_n`, `n = -N..=N` (index `n + N`).
    pub fn fourier_coefficients(&self, trace: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_len(trace)?;
        let scale = 1.0 / self.n_quad as f64;
        let n_max = self.order as i64;
        Ok((-n_max..=n_max)
            .map(|n| {
                trace
                    .iter()
                    .enumerate()
                    .map(|(j, &u)| u * self.mode(-n, j))
                    .sum::<Complex64>()
                    * scale
            })
            .collect())
    }

    fn synthesise(&self, weighted: impl Fn(i64) -> Complex64, coeffs: &[Complex64]) -> Vec<Complex64> {
        let n_max = self.order as i64;
        let inv_r = 1.0 / self.radius;
        (0..self.n_quad)
            .map(|j| {
                (-n_max..=n_max)
                    .map(|n| weighted(n) * coeffs[(n + n_max) as usize] * self.mode(n, j))
                    .sum::<Complex64>()
                    * inv_r
            })
            .collect()
    }

    /// `F_N[u]` at the quadrature angles.
    pub fn apply(&self, trace: &[Complex64]) -> Result<Vec<Complex64>> {
        let coeffs = self.fourier_coefficients(trace)?;
        Ok(self.synthesise(|n| self.symbol(n), &coeffs))
    }

    /// Adjoint of [`apply`](Self::apply) in the discrete `l²` inner product.
    pub fn apply_adjoint(&self, trace: &[Complex64]) -> Result<Vec<Complex64>> {
        let coeffs = self.fourier_coefficients(trace)?;
        Ok(self.synthesise(|n| self.symbol(n).conj(), &coeffs))
    }

    /// `F_N` applied to a real trace.
    pub fn apply_real(&self, trace: &[f64]) -> Result<Vec<Complex64>> {
        let complex: Vec<Complex64> = trace.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.apply(&complex)
    }
}
