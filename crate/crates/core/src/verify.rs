//! Self-checks run by `aosnn verify`.
//!
//! Every check uses fixed inputs, so two reports from the same build are
//! identical.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dtn::DtnOperator;
use crate::error::Result;
use crate::geometry::{uniform_angles, Point};
use crate::lsq::{solve, AssemblyOptions, DesignSystem};
use crate::net::{Jet2, JetField, NetworkShape, SubspaceNetwork, DX, DY, DXX, DYY, JET_LEN, VALUE};
use crate::oracle::ExactField;
use crate::reference::{central_difference, series_bessel_j, series_bessel_y};
use crate::specfun::{bessel_j, bessel_jy_table, bessel_y, dtn_symbol, hankel1, hankel1_deriv};

#[derive(Debug, Clone, Default)]
pub struct VerifyOptions {
    /// Replace the cached DtN symbol of this mode with a wrong value before
    /// the spectral check; the check must then fail and name the mode.
    pub corrupt_dtn_mode: Option<i64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub checks: Vec<CheckOutcome>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail)?;
        }
        let failed = self.failures().count();
        write!(f, "{} checks, {} failed", self.checks.len(), failed)
    }
}

type Check = fn(&VerifyOptions) -> Result<(bool, String)>;

const CHECKS: &[(&str, Check)] = &[
    ("specfun.series", check_series),
    ("specfun.wronskian", check_wronskian),
    ("specfun.recurrence", check_recurrence),
    ("specfun.reflection", check_reflection),
    ("specfun.hankel-derivative", check_hankel_derivative),
    ("dtn.eigenfunctions", check_dtn_eigenfunctions),
    ("dtn.monopole", check_dtn_monopole),
    ("dtn.truncation", check_dtn_truncation),
    ("net.jets", check_net_jets),
    ("net.param-gradient", check_net_param_gradient),
    ("lsq.recovery", check_lsq_recovery),
    ("lsq.optimality", check_lsq_optimality),
    ("oracle.helmholtz", check_oracle_helmholtz),
    ("oracle.mie-cancellation", check_mie_cancellation),
];

pub fn verify(options: &VerifyOptions) -> VerifyReport {
    let checks = CHECKS
        .iter()
        .map(|&(name, check)| match check(options) {
            Ok((passed, detail)) => CheckOutcome { name, passed, detail },
            Err(e) => CheckOutcome { name, passed: false, detail: format!("error: {e}") },
        })
        .collect();
    VerifyReport { checks }
}

fn verdict(worst: f64, tol: f64, what: &str) -> (bool, String) {
    (worst <= tol, format!("worst {what} {worst:.2e} (tolerance {tol:.0e})"))
}

fn geometric_grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
}

fn check_series(_: &VerifyOptions) -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for &(n, x) in &[(0, 1.0), (1, 2.5), (5, 3.0), (2, 0.3)] {
        let j = bessel_j(n, x)?;
        worst = worst.max((j - series_bessel_j(n, x)).abs() / j.abs());
        let y = bessel_y(n, x)?;
        worst = worst.max((y - series_bessel_y(n, x)).abs() / y.abs());
    }
    Ok(verdict(worst, 1e-12, "relative error"))
}

fn check_wronskian(_: &VerifyOptions) -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for x in geometric_grid(0.5, 100.0, 41) {
        let (j, y) = bessel_jy_table(65, x)?;
        let expect = 2.0 / (PI * x);
        for n in 0..=64usize {
            // J_n Y_n' - J_n' Y_n with the derivatives from the recurrence.
            let w = if n == 0 { j[1] * y[0] - j[0] * y[1] } else { j[n] * y[n - 1] - j[n - 1] * y[n] };
            worst = worst.max((w - expect).abs() / expect);
        }
    }
    Ok(verdict(worst, 1e-12, "relative defect"))
}

fn check_recurrence(_: &VerifyOptions) -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for x in geometric_grid(0.5, 100.0, 41) {
        let (j, y) = bessel_jy_table(64, x)?;
        for c in [&j, &y] {
            for n in 1..64 {
                let scale = c[n - 1].abs().max(c[n].abs()).max(c[n + 1].abs());
                let r = c[n - 1] + c[n + 1] - 2.0 * n as f64 / x * c[n];
                worst = worst.max(r.abs() / scale);
            }
        }
    }
    Ok(verdict(worst, 1e-11, "scaled residual"))
}

fn check_reflection(_: &VerifyOptions) -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for x in [0.7, 3.0, 12.5] {
        for n in 1..=30 {
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            let h = hankel1(n, x)?;
            worst = worst.max((hankel1(-n, x)? - sign * h).norm() / h.norm());
            let s = dtn_symbol(n, x)?;
            worst = worst.max((dtn_symbol(-n, x)? - s).norm() / s.norm());
        }
    }
    Ok(verdict(worst, 1e-15, "relative defect"))
}

fn check_hankel_derivative(_: &VerifyOptions) -> Result<(bool, String)> {
    let d = hankel1_deriv(2, 5.0)?;
    let fd_re = central_difference(|x| hankel1(2, x).map_or(f64::NAN, |h| h.re), 5.0, 1e-6);
    let fd_im = central_difference(|x| hankel1(2, x).map_or(f64::NAN, |h| h.im), 5.0, 1e-6);
    let err = (d - Complex64::new(fd_re, fd_im)).norm() / d.norm();
    Ok(verdict(err, 1e-8, "relative difference"))
}

fn operator(options: &VerifyOptions, kappa: f64, radius: f64, order: usize, q: usize) -> Result<DtnOperator> {
    let op = DtnOperator::new(kappa, radius, order, q)?;
    Ok(match options.corrupt_dtn_mode {
        Some(n) => {
            let bad = op.symbol(n) * 1.5 + Complex64::new(0.0, 1.0);
            op.with_symbol_override(n, bad)
        }
        None => op,
    })
}

fn check_dtn_eigenfunctions(options: &VerifyOptions) -> Result<(bool, String)> {
    let (kappa, radius, order, q) = (5.0, 1.0, 20usize, 64usize);
    let op = operator(options, kappa, radius, order, q)?;
    let angles: Vec<f64> = uniform_angles(q).collect();
    let tol = 1e-13;
    let mut worst = 0.0f64;
    let mut bad_modes = Vec::new();
    for n in -(order as i32)..=order as i32 {
        let lambda = kappa * hankel1_deriv(n, kappa * radius)? / hankel1(n, kappa * radius)?;
        let trace: Vec<Complex64> = angles.iter().map(|&t| Complex64::from_polar(1.0, n as f64 * t)).collect();
        let out = op.apply(&trace)?;
        let err = out.iter().zip(&trace).map(|(o, t)| (o - lambda * t).norm()).fold(0.0, f64::max) / lambda.norm().max(1.0);
        worst = worst.max(err);
        if err > tol {
            bad_modes.push(n);
        }
    }
    if bad_modes.is_empty() {
        Ok(verdict(worst, tol, "relative eigen-defect"))
    } else {
        let modes: Vec<String> = bad_modes.iter().map(i32::to_string).collect();
        Ok((false, format!("eigenfunction property fails for mode n = {} (worst {worst:.2e})", modes.join(", "))))
    }
}

fn check_dtn_monopole(options: &VerifyOptions) -> Result<(bool, String)> {
    let (kappa, radius) = (5.0, 1.0);
    let op = operator(options, kappa, radius, 20, 64)?;
    let u = hankel1(0, kappa * radius)?;
    let du = kappa * hankel1_deriv(0, kappa * radius)?;
    let out = op.apply(&vec![u; 64])?;
    let worst = out.iter().map(|v| (v - du).norm()).fold(0.0, f64::max);
    Ok(verdict(worst, 1e-10, "residual"))
}

fn check_dtn_truncation(options: &VerifyOptions) -> Result<(bool, String)> {
    let op = operator(options, 5.0, 1.0, 20, 64)?;
    let trace: Vec<Complex64> = uniform_angles(64).map(|t| Complex64::from_polar(1.0, 21.0 * t)).collect();
    let worst = op.apply(&trace)?.iter().map(|v| v.norm()).fold(0.0, f64::max);
    Ok(verdict(worst, 1e-12, "image of mode N+1"))
}

fn probe_points() -> [Point; 3] {
    [[0.61, -0.2], [-0.35, 0.72], [0.1, 0.93]]
}

fn small_net(depth: usize, seed: u64) -> Result<SubspaceNetwork> {
    SubspaceNetwork::init(seed, &NetworkShape::new(vec![8; depth], 5))
}

fn check_net_jets(_: &VerifyOptions) -> Result<(bool, String)> {
    let h = 1e-5;
    let (mut worst_g, mut worst_h) = (0.0f64, 0.0f64);
    for depth in 0..=5 {
        let net = small_net(depth, 11 + depth as u64)?;
        for p in probe_points() {
            let at = |dx: f64, dy: f64| net.eval_jets([p[0] + dx, p[1] + dy]);
            let jets = at(0.0, 0.0);
            let (xp, xm, yp, ym) = (at(h, 0.0), at(-h, 0.0), at(0.0, h), at(0.0, -h));
            let (mut num_g, mut den_g, mut num_h, mut den_h) = (0.0, 0.0, 0.0, 0.0);
            for (j, jet) in jets.iter().enumerate() {
                let c = jet.components();
                let fd = |a: &[Jet2], b: &[Jet2], k: usize| (a[j].components()[k] - b[j].components()[k]) / (2.0 * h);
                let g = [fd(&xp, &xm, VALUE), fd(&yp, &ym, VALUE)];
                num_g += (g[0] - c[DX]).powi(2) + (g[1] - c[DY]).powi(2);
                den_g += c[DX].powi(2) + c[DY].powi(2);
                let hxx = fd(&xp, &xm, DX);
                let hyy = fd(&yp, &ym, DY);
                let hxy = fd(&yp, &ym, DX);
                num_h += (hxx - c[DXX]).powi(2) + (hyy - c[DYY]).powi(2) + (hxy - jet.hess[0][1]).powi(2);
                den_h += c[DXX].powi(2) + c[DYY].powi(2) + jet.hess[0][1].powi(2);
            }
            worst_g = worst_g.max((num_g / den_g).sqrt());
            worst_h = worst_h.max((num_h / den_h).sqrt());
        }
    }
    let ok = worst_g <= 1e-6 && worst_h <= 1e-4;
    Ok((ok, format!("gradient {worst_g:.2e} (tolerance 1e-6), Hessian {worst_h:.2e} (tolerance 1e-4), depths 0-5")))
}

#[derive(Clone, Copy)]
enum Probe {
    Value,
    Gradient,
    Laplacian,
}

/// Mean of `q(N)^2` over the points, with `q` the value, `|∇N|^2` or `ΔN`,
/// and its jet adjoint.
fn probe_loss(kind: Probe, field: &JetField) -> (f64, JetField) {
    let n = field.len();
    let mut adj = JetField::zeros(n);
    let mut total = 0.0;
    for p in 0..n {
        let c = field.jet(p).components();
        let mut a = [0.0; JET_LEN];
        let q = match kind {
            Probe::Value => c[VALUE],
            Probe::Gradient => c[DX] * c[DX] + c[DY] * c[DY],
            Probe::Laplacian => c[DXX] + c[DYY],
        };
        total += q * q / n as f64;
        let s = 2.0 * q / n as f64;
        match kind {
            Probe::Value => a[VALUE] = s,
            Probe::Gradient => {
                a[DX] = 2.0 * c[DX] * s;
                a[DY] = 2.0 * c[DY] * s;
            }
            Probe::Laplacian => {
                a[DXX] = s;
                a[DYY] = s;
            }
        }
        adj.set(p, &Jet2::from_components(a));
    }
    (total, adj)
}

fn check_net_param_gradient(_: &VerifyOptions) -> Result<(bool, String)> {
    let points = probe_points();
    let mut rng = ChaCha8Rng::seed_from_u64(91);
    let mut probed = 0;
    let mut worst = 0.0f64;
    for depth in 0..=5 {
        let net = small_net(depth, 40 + depth as u64)?;
        let omega: Vec<f64> = (0..net.subspace_width()).map(|_| rng.random_range(-1.0..1.0)).collect();
        for kind in [Probe::Value, Probe::Gradient, Probe::Laplacian] {
            let (_, grad) = net.param_gradient(&points, &omega, |f| probe_loss(kind, f));
            let scale = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
            for _ in 0..4 {
                let i = rng.random_range(0..net.n_params());
                let theta = net.params()[i];
                let h = 1e-6 * theta.abs().max(1.0);
                let eval = |v: f64| {
                    let mut m = net.clone();
                    m.params_mut()[i] = v;
                    probe_loss(kind, &m.forward(&points).combine(&omega)).0
                };
                let fd = (eval(theta + h) - eval(theta - h)) / (2.0 * h);
                worst = worst.max((fd - grad[i]).abs() / (grad[i].abs() + 1e-3 * scale));
                probed += 1;
            }
        }
    }
    let (ok, detail) = verdict(worst, 1e-4, "relative difference");
    Ok((ok, format!("{detail} over {probed} parameters")))
}

fn planted_system(rows: usize, cols: usize, seed: u64) -> (DesignSystem, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let matrix = (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect();
    let star: Vec<f64> = (0..cols).map(|_| rng.random_range(-2.0..2.0)).collect();
    let mut sys = DesignSystem { rows, cols, matrix, rhs: vec![0.0; rows], blocks: vec![], options: AssemblyOptions::default() };
    sys.rhs = sys.residual(&star).expect("dimensions agree");
    (sys, star)
}

fn check_lsq_recovery(_: &VerifyOptions) -> Result<(bool, String)> {
    let (sys, star) = planted_system(80, 24, 5);
    let sol = solve(&sys)?;
    let norm = star.iter().map(|w| w * w).sum::<f64>().sqrt();
    let err = sol.omega.iter().zip(&star).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt() / norm;
    Ok(verdict(err, 1e-10, "relative error"))
}

fn check_lsq_optimality(_: &VerifyOptions) -> Result<(bool, String)> {
    let (mut sys, _) = planted_system(50, 12, 8);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for b in &mut sys.rhs {
        *b += rng.random_range(-0.5..0.5);
    }
    let sol = solve(&sys)?;
    let best = sys.objective(&sol.omega)?;
    let mut worst_gain = f64::INFINITY;
    for _ in 0..20 {
        let trial: Vec<f64> = sol.omega.iter().map(|w| w + 1e-4 * rng.random_range(-1.0..1.0)).collect();
        worst_gain = worst_gain.min(sys.objective(&trial)? - best);
    }
    Ok((worst_gain > 0.0, format!("smallest objective increase under perturbation {worst_gain:.2e}")))
}

fn check_oracle_helmholtz(_: &VerifyOptions) -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for field in [ExactField::monopole(5.0)?, ExactField::mie_scattered(5.0, 0.5)?] {
        let kappa = field.kappa();
        for p in probe_points() {
            let j = field.jet(p)?;
            let r = j.laplacian() + kappa * kappa * j.value();
            worst = worst.max(r.norm() / (kappa * kappa * j.value().norm()));
        }
    }
    Ok(verdict(worst, 1e-10, "relative Helmholtz residual"))
}

fn check_mie_cancellation(_: &VerifyOptions) -> Result<(bool, String)> {
    let (kappa, a) = (5.0, 0.5);
    let field = ExactField::mie_scattered(kappa, a)?;
    let mut worst = 0.0f64;
    for t in uniform_angles(97) {
        let us = field.value([a * t.cos(), a * t.sin()])?;
        let ui = Complex64::from_polar(1.0, kappa * a * t.cos());
        worst = worst.max((us + ui).norm());
    }
    Ok(verdict(worst, 1e-12, "total field on the obstacle"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clean_build_passes_and_is_repeatable() {
        let a = verify(&VerifyOptions::default());
        assert!(a.passed(), "{a}");
        assert_eq!(a, verify(&VerifyOptions::default()));
    }

    #[test]
    fn corrupted_symbol_is_named() {
        let report = verify(&VerifyOptions { corrupt_dtn_mode: Some(-7) });
        assert!(!report.passed());
        let eig = report.checks.iter().find(|c| c.name == "dtn.eigenfunctions").unwrap();
        assert!(!eig.passed);
        assert!(eig.detail.contains("n = -7"), "{}", eig.detail);
    }
}
