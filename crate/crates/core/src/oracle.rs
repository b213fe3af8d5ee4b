//! Exact solutions, manufactured boundary data and error metrics.
//!
//! Both exact fields are finite modal sums `u = Σ c_n H_n(κr) e^{inθ}`; value,
//! gradient and Hessian come from the radial derivatives of `H_n` and the polar
//! chain rule.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BoundaryPoint, Point};
use crate::net::{Jet2, JetField};
use crate::specfun::{bessel_j_table, hankel1_deriv_table, hankel1_table, MAX_ORDER};

/// Tail bound used when the Mie term count is chosen automatically.
pub const MIE_TAIL_TOLERANCE: f64 = 1e-13;

/// Obstacle boundary operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum BoundaryCondition {
    /// `u = g`.
    SoundSoft,
    /// `∂u/∂n = g`.
    SoundHard,
    /// `∂u/∂n + iλu = g`.
    Impedance { lambda: f64 },
}

impl BoundaryCondition {
    pub fn label(&self) -> &'static str {
        match self {
            BoundaryCondition::SoundSoft => "sound-soft",
            BoundaryCondition::SoundHard => "sound-hard",
            BoundaryCondition::Impedance { .. } => "impedance",
        }
    }
}

/// Real and imaginary jets of a complex field at one point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FieldJet {
    pub re: Jet2,
    pub im: Jet2,
}

impl FieldJet {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value, self.im.value)
    }

    pub fn grad(&self) -> [Complex64; 2] {
        [0, 1].map(|i| Complex64::new(self.re.grad[i], self.im.grad[i]))
    }

    pub fn laplacian(&self) -> Complex64 {
        Complex64::new(self.re.laplacian(), self.im.laplacian())
    }
}

/// Splits complex jets into real and imaginary [`JetField`]s.
pub fn split_fields(jets: &[FieldJet]) -> (JetField, JetField) {
    let re: Vec<Jet2> = jets.iter().map(|j| j.re).collect();
    let im: Vec<Jet2> = jets.iter().map(|j| j.im).collect();
    (JetField::from_jets(&re), JetField::from_jets(&im))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldKind {
    /// `H_0(κ|x|)`.
    Monopole,
    /// Field scattered by a sound-soft circle under the plane wave `e^{iκx}`.
    MieSeries,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactField {
    kind: FieldKind,
    kappa: f64,
    obstacle_radius: Option<f64>,
    /// `c_n` for `n = -T..=T`, stored at index `n + T`.
    coeffs: Vec<Complex64>,
}

impl ExactField {
    pub fn monopole(kappa: f64) -> Result<Self> {
        check_kappa(kappa)?;
        Ok(Self { kind: FieldKind::Monopole, kappa, obstacle_radius: None, coeffs: vec![Complex64::new(1.0, 0.0)] })
    }

    /// Mie series with the smallest `T` whose tail bound `2 Σ_{n>T} |J_n(κa)|`
    /// is at most [`MIE_TAIL_TOLERANCE`].
    pub fn mie_scattered(kappa: f64, obstacle_radius: f64) -> Result<Self> {
        check_kappa(kappa)?;
        if !(obstacle_radius > 0.0 && obstacle_radius.is_finite()) {
            return Err(Error::Domain { what: "a", value: obstacle_radius });
        }
        let ka = kappa * obstacle_radius;
        let j = bessel_j_table(MAX_ORDER + 40, ka)?;
        let mut tail: f64 = j[MAX_ORDER + 1..].iter().map(|v| v.abs()).sum();
        let mut terms = None;
        for t in (0..=MAX_ORDER).rev() {
            if 2.0 * tail > MIE_TAIL_TOLERANCE {
                break;
            }
            terms = Some(t);
            tail += j[t].abs();
        }
        let terms = terms.ok_or(Error::InsufficientTerms { max: MAX_ORDER, tolerance: MIE_TAIL_TOLERANCE })?;
        Self::mie_with_terms(kappa, obstacle_radius, terms)
    }

    /// Mie series truncated at `|n| <= terms`.
    pub fn mie_with_terms(kappa: f64, obstacle_radius: f64, terms: usize) -> Result<Self> {
        check_kappa(kappa)?;
        if terms > MAX_ORDER {
            return Err(Error::InsufficientTerms { max: MAX_ORDER, tolerance: MIE_TAIL_TOLERANCE });
        }
        let ka = kappa * obstacle_radius;
        let j = bessel_j_table(terms, ka)?;
        let h = hankel1_table(terms, ka)?;
        let i = Complex64::i();
        // c_n = -i^n J_n(κa) / H_n(κa); the ratio is even in n, i^n is not.
        let coeffs = (-(terms as i64)..=terms as i64)
            .map(|n| {
                let m = n.unsigned_abs() as usize;
                -i.powi(n as i32) * j[m] / h[m]
            })
            .collect();
        Ok(Self { kind: FieldKind::MieSeries, kappa, obstacle_radius: Some(obstacle_radius), coeffs })
    }

    pub fn new(kind: FieldKind, kappa: f64, obstacle_radius: f64) -> Result<Self> {
        match kind {
            FieldKind::Monopole => Self::monopole(kappa),
            FieldKind::MieSeries => Self::mie_scattered(kappa, obstacle_radius),
        }
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// `T`, the largest mode index kept.
    pub fn terms(&self) -> usize {
        self.coeffs.len() / 2
    }

    pub fn value(&self, x: Point) -> Result<Complex64> {
        Ok(self.jet(x)?.value())
    }

    /// Complex value, gradient and Hessian at `x`.
    pub fn jet(&self, x: Point) -> Result<FieldJet> {
        let r = x[0].hypot(x[1]);
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::Domain { what: "|x|", value: r });
        }
        let t = self.terms();
        let z = self.kappa * r;
        let h = hankel1_table(t, z)?;
        let dh = hankel1_deriv_table(&h, z);
        let theta = x[1].atan2(x[0]);
        let k = self.kappa;

        // Polar derivatives u, u_r, u_rr, u_θ, u_θθ, u_rθ.
        let mut p = [Complex64::default(); 6];
        for n in -(t as i64)..=t as i64 {
            let m = n.unsigned_abs() as usize;
            let sign = if n < 0 && m % 2 == 1 { -1.0 } else { 1.0 };
            let hn = h[m] * sign;
            let dhn = dh[m] * sign;
            let nf = n as f64;
            // H_n'' from Bessel's equation.
            let ddhn = -dhn / z - hn * (1.0 - nf * nf / (z * z));
            let c = self.coeffs[(n + t as i64) as usize] * Complex64::from_polar(1.0, nf * theta);
            let inn = Complex64::new(0.0, nf);
            p[0] += c * hn;
            p[1] += c * k * dhn;
            p[2] += c * k * k * ddhn;
            p[3] += c * inn * hn;
            p[4] -= c * nf * nf * hn;
            p[5] += c * inn * k * dhn;
        }
        let [u, ur, urr, ut, utt, urt] = p;
        let (s, c) = theta.sin_cos();
        let (r2, cs, c2s2) = (r * r, c * s, c * c - s * s);
        let ux = c * ur - s / r * ut;
        let uy = s * ur + c / r * ut;
        let uxx = c * c * urr + s * s / r * ur + s * s / r2 * utt - 2.0 * cs / r * urt + 2.0 * cs / r2 * ut;
        let uyy = s * s * urr + c * c / r * ur + c * c / r2 * utt + 2.0 * cs / r * urt - 2.0 * cs / r2 * ut;
        let uxy = cs * urr - cs / r * ur - cs / r2 * utt + c2s2 / r * urt - c2s2 / r2 * ut;
        let part = |f: fn(Complex64) -> f64| Jet2 {
            value: f(u),
            grad: [f(ux), f(uy)],
            hess: [[f(uxx), f(uxy)], [f(uxy), f(uyy)]],
        };
        Ok(FieldJet { re: part(|z| z.re), im: part(|z| z.im) })
    }

    pub fn jets(&self, points: &[Point]) -> Result<Vec<FieldJet>> {
        points.iter().map(|&x| self.jet(x)).collect()
    }
}

fn check_kappa(kappa: f64) -> Result<()> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::Domain { what: "kappa", value: kappa });
    }
    Ok(())
}

/// Boundary data `g` that makes `field` satisfy `bc` on the obstacle points.
pub fn boundary_data(field: &ExactField, bc: BoundaryCondition, points: &[BoundaryPoint]) -> Result<Vec<Complex64>> {
    points
        .iter()
        .map(|b| {
            let jet = field.jet(b.point)?;
            let [gx, gy] = jet.grad();
            let dn = gx * b.normal[0] + gy * b.normal[1];
            Ok(match bc {
                BoundaryCondition::SoundSoft => jet.value(),
                BoundaryCondition::SoundHard => dn,
                BoundaryCondition::Impedance { lambda } => dn + Complex64::new(0.0, lambda) * jet.value(),
            })
        })
        .collect()
}

/// `sqrt(Σ|N − u|²) / sqrt(Σ|u|²)`.
pub fn relative_l2(numeric: &[Complex64], exact: &[Complex64]) -> Result<f64> {
    if numeric.len() != exact.len() {
        return Err(Error::LengthMismatch { what: "numeric field", expected: exact.len(), found: numeric.len() });
    }
    let den: f64 = exact.iter().map(|u| u.norm_sqr()).sum();
    if den == 0.0 {
        return Err(Error::ZeroReference);
    }
    let num: f64 = numeric.iter().zip(exact).map(|(n, u)| (n - u).norm_sqr()).sum();
    Ok((num / den).sqrt())
}

/// Jet components of total order exactly `beta`, each multi-index once.
pub(crate) fn components_of_order(beta: usize) -> &'static [usize] {
    use crate::net::{DX, DXX, DXY, DY, DYY, VALUE};
    match beta {
        0 => &[VALUE],
        1 => &[DX, DY],
        _ => &[DXX, DXY, DYY],
    }
}

/// Unnormalised `sqrt(Σ_x Σ_{|α|=β} |∂^α N − ∂^α u|²)`, real and imaginary
/// parts together.
pub fn sobolev_error(numeric: &[FieldJet], exact: &[FieldJet], beta: usize) -> Result<f64> {
    if beta > 2 {
        return Err(Error::InvalidParameter { what: "beta", detail: format!("{beta} > 2") });
    }
    if numeric.len() != exact.len() {
        return Err(Error::LengthMismatch { what: "numeric jets", expected: exact.len(), found: numeric.len() });
    }
    let comps = components_of_order(beta);
    let mut acc = 0.0;
    for (n, u) in numeric.iter().zip(exact) {
        for (a, b) in [(n.re, u.re), (n.im, u.im)] {
            let (a, b) = (a.components(), b.components());
            acc += comps.iter().map(|&c| (a[c] - b[c]).powi(2)).sum::<f64>();
        }
    }
    Ok(acc.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{generate_collocation, AnnulusDomain, CollocationCounts};
    use crate::reference::{central_difference, second_difference};
    use crate::specfun::{hankel1, hankel1_deriv};

    fn annulus_points() -> Vec<Point> {
        let d = AnnulusDomain::new(0.5, 1.0).unwrap();
        let c = CollocationCounts { n_radial: 10, n_angular: 20, n_obstacle: 8, n_tbc: 8 };
        generate_collocation(d, c).unwrap().interior
    }

    #[test]
    fn monopole_definition_and_symmetry() {
        let f = ExactField::monopole(5.0).unwrap();
        assert_eq!(f.value([1.0, 0.0]).unwrap(), hankel1(0, 5.0).unwrap());
        let a = f.value([0.6, 0.0]).unwrap();
        let b = f.value([0.6 * 0.3f64.cos(), 0.6 * 0.3f64.sin()]).unwrap();
        assert!((a - b).norm() < 1e-14);
        assert!(matches!(f.jet([0.0, 0.0]), Err(Error::Domain { .. })));
    }

    #[test]
    fn helmholtz_residual() {
        for f in [ExactField::monopole(5.0).unwrap(), ExactField::mie_scattered(5.0, 0.5).unwrap()] {
            for x in annulus_points() {
                let j = f.jet(x).unwrap();
                let res = j.laplacian() + 25.0 * j.value();
                assert!(res.norm() <= 1e-10 * j.value().norm().max(1.0), "{:?} at {x:?}: {res}", f.kind());
            }
        }
    }

    #[test]
    fn jets_match_finite_differences() {
        let f = ExactField::mie_scattered(5.0, 0.5).unwrap();
        let h = 1e-5;
        for x in [[0.7, 0.2], [-0.4, 0.55], [0.1, -0.8]] {
            let j = f.jet(x).unwrap();
            for (axis, gc, hc) in [(0, 0, 0), (1, 1, 1)] {
                let along = |t: f64| {
                    let mut p = x;
                    p[axis] += t;
                    f.value(p).unwrap()
                };
                let g = central_difference(|t| along(t).re, 0.0, h);
                let hh = second_difference(|t| along(t).re, 0.0, 1e-4);
                assert!((g - j.re.grad[gc]).abs() < 1e-7 * (1.0 + g.abs()));
                assert!((hh - j.re.hess[hc][hc]).abs() < 1e-4 * (1.0 + hh.abs()));
            }
            let mixed = |s: f64, t: f64| f.value([x[0] + s, x[1] + t]).unwrap().im;
            let d = 1e-4;
            let fd = (mixed(d, d) - mixed(d, -d) - mixed(-d, d) + mixed(-d, -d)) / (4.0 * d * d);
            assert!((fd - j.im.hess[0][1]).abs() < 1e-4 * (1.0 + fd.abs()));
        }
    }

    #[test]
    fn mie_cancels_incident_wave_on_obstacle() {
        let (k, a) = (5.0, 0.5);
        let f = ExactField::mie_scattered(k, a).unwrap();
        for i in 0..64 {
            let t = std::f64::consts::TAU * i as f64 / 64.0;
            let us = f.value([a * t.cos(), a * t.sin()]).unwrap();
            let inc = Complex64::from_polar(1.0, k * a * t.cos());
            assert!((us + inc).norm() <= 1e-12, "θ = {t}");
        }
    }

    #[test]
    fn mie_tail_is_converged() {
        let f = ExactField::mie_scattered(5.0, 0.5).unwrap();
        let g = ExactField::mie_with_terms(5.0, 0.5, f.terms() + 10).unwrap();
        for x in [[0.55, 0.0], [0.0, 0.9], [-0.7, -0.3]] {
            assert!((f.value(x).unwrap() - g.value(x).unwrap()).norm() <= 1e-12);
        }
    }

    #[test]
    fn boundary_data_for_monopole() {
        let f = ExactField::monopole(5.0).unwrap();
        let d = AnnulusDomain::new(0.5, 1.0).unwrap();
        let c = CollocationCounts { n_radial: 4, n_angular: 4, n_obstacle: 12, n_tbc: 8 };
        let set = generate_collocation(d, c).unwrap();
        let soft = boundary_data(&f, BoundaryCondition::SoundSoft, &set.obstacle).unwrap();
        let h0 = hankel1(0, 2.5).unwrap();
        assert!(soft.iter().all(|g| (g - h0).norm() < 1e-14));
        // The normal points out of the obstacle, i.e. along +r.
        let hard = boundary_data(&f, BoundaryCondition::SoundHard, &set.obstacle).unwrap();
        let dr = hankel1_deriv(0, 2.5).unwrap() * 5.0;
        assert!(hard.iter().all(|g| (g - dr).norm() < 1e-13));
        let b = set.obstacle[3];
        let step = 1e-6;
        let along = |s: f64| f.value([b.point[0] + s * b.normal[0], b.point[1] + s * b.normal[1]]).unwrap();
        let fd = (along(step) - along(-step)) / (2.0 * step);
        assert!((fd - hard[3]).norm() < 1e-7);
        let imp0 = boundary_data(&f, BoundaryCondition::Impedance { lambda: 0.0 }, &set.obstacle).unwrap();
        assert_eq!(imp0, hard);
    }

    #[test]
    fn relative_l2_cases() {
        let u: Vec<Complex64> = (0..10).map(|i| Complex64::from_polar(1.0, i as f64)).collect();
        assert_eq!(relative_l2(&u, &u).unwrap(), 0.0);
        let twice: Vec<Complex64> = u.iter().map(|v| v * 2.0).collect();
        assert!((relative_l2(&twice, &u).unwrap() - 1.0).abs() < 1e-15);
        let eps = 1e-3;
        let shifted: Vec<Complex64> = u.iter().map(|v| v + eps).collect();
        assert!((relative_l2(&shifted, &u).unwrap() - eps).abs() <= 1e-12);
        assert!(matches!(relative_l2(&u, &[Complex64::default(); 10]), Err(Error::ZeroReference)));
    }

    #[test]
    fn sobolev_cases() {
        let f = ExactField::monopole(5.0).unwrap();
        let pts = annulus_points();
        let exact = f.jets(&pts).unwrap();
        for beta in 0..=2 {
            assert_eq!(sobolev_error(&exact, &exact, beta).unwrap(), 0.0);
        }
        let c = 0.25;
        let shifted: Vec<FieldJet> = exact.iter().map(|j| FieldJet { re: Jet2 { value: j.re.value + c, ..j.re }, im: j.im }).collect();
        let n = (pts.len() as f64).sqrt();
        assert!((sobolev_error(&shifted, &exact, 0).unwrap() - c * n).abs() < 1e-12);
        assert!(sobolev_error(&shifted, &exact, 1).unwrap() < 1e-12);
        let eps = 1e-3;
        let linear: Vec<FieldJet> = exact
            .iter()
            .zip(&pts)
            .map(|(j, x)| {
                let mut re = j.re;
                re.value += eps * x[0];
                re.grad[0] += eps;
                FieldJet { re, im: j.im }
            })
            .collect();
        assert!((sobolev_error(&linear, &exact, 1).unwrap() - eps * n).abs() < 1e-12);
        assert!(sobolev_error(&linear, &exact, 2).unwrap() < 1e-12);
        assert!(matches!(sobolev_error(&exact, &exact, 3), Err(Error::InvalidParameter { .. })));
    }
}
