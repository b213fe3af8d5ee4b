//! Loss functionals on jets: strong-form residual losses, the metric loss
//! between two fields and their mixture. Every loss that drives training also
//! returns its adjoint, `∂L/∂(jet components)`, for the network reverse pass.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dtn::DtnOperator;
use crate::error::{Error, Result};
use crate::geometry::{CollocationSet, Point};
use crate::net::{Jet2, JetField, DX, DXX, DY, DYY, VALUE};
use crate::oracle::{components_of_order, BoundaryCondition};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub eta: f64,
    pub sigma: f64,
    /// Boundary penalty of the PINN loss.
    pub lambda: f64,
    pub gamma: usize,
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        for (what, v) in [("eta", self.eta), ("sigma", self.sigma), ("lambda", self.lambda)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter { what, detail: format!("{v} must be finite and non-negative") });
            }
        }
        if self.gamma > 2 {
            return Err(Error::InvalidParameter { what: "gamma", detail: format!("{} > 2", self.gamma) });
        }
        Ok(())
    }
}

/// Mean squared residual of `Δu + κ²u = f` plus `λ` times the mean squared
/// Dirichlet residual `u − g`, for one real field.
pub fn pinn_loss(kappa: f64, interior: &[Jet2], f: &[f64], boundary: &[Jet2], g: &[f64], lambda: f64) -> Result<f64> {
    if interior.is_empty() {
        return Err(Error::EmptySet("interior point set"));
    }
    if boundary.is_empty() {
        return Err(Error::EmptySet("boundary point set"));
    }
    if f.len() != interior.len() {
        return Err(Error::LengthMismatch { what: "f", expected: interior.len(), found: f.len() });
    }
    if g.len() != boundary.len() {
        return Err(Error::LengthMismatch { what: "g", expected: boundary.len(), found: g.len() });
    }
    let k2 = kappa * kappa;
    let pde = interior.iter().zip(f).map(|(j, f)| (j.laplacian() + k2 * j.value - f).powi(2)).sum::<f64>()
        / interior.len() as f64;
    let bc = boundary.iter().zip(g).map(|(j, g)| (j.value - g).powi(2)).sum::<f64>() / boundary.len() as f64;
    Ok(pde + lambda * bc)
}

/// Everything the scattering residual needs besides the field itself. Fields
/// passed to the loss are sampled at [`CollocationSet::all_points`].
#[derive(Debug, Clone)]
pub struct ScatterProblem {
    pub kappa: f64,
    pub bc: BoundaryCondition,
    pub set: CollocationSet,
    /// Boundary data at the obstacle points.
    pub g: Vec<Complex64>,
    pub dtn: DtnOperator,
}

impl ScatterProblem {
    pub fn new(kappa: f64, bc: BoundaryCondition, set: CollocationSet, g: Vec<Complex64>, dtn: DtnOperator) -> Result<Self> {
        if g.len() != set.n_obstacle() {
            return Err(Error::LengthMismatch { what: "g", expected: set.n_obstacle(), found: g.len() });
        }
        if dtn.n_quad() != set.n_tbc() {
            return Err(Error::LengthMismatch { what: "DtN quadrature", expected: set.n_tbc(), found: dtn.n_quad() });
        }
        if (dtn.kappa() - kappa).abs() > 0.0 || (dtn.radius() - set.domain.tbc_radius()).abs() > 0.0 {
            return Err(Error::InvalidParameter {
                what: "dtn",
                detail: "operator was built for a different wavenumber or radius".into(),
            });
        }
        Ok(Self { kappa, bc, set, g, dtn })
    }

    fn check(&self, re: &JetField, im: &JetField) -> Result<()> {
        for f in [re, im] {
            if f.len() != self.set.len() {
                return Err(Error::LengthMismatch { what: "field jets", expected: self.set.len(), found: f.len() });
            }
        }
        Ok(())
    }
}

/// Per-block values of the scattering loss.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ScatterBreakdown {
    pub interior: f64,
    pub obstacle: f64,
    pub tbc: f64,
}

impl ScatterBreakdown {
    pub fn total(&self) -> f64 {
        self.interior + self.obstacle + self.tbc
    }
}

fn radial(x: Point) -> [f64; 2] {
    let r = x[0].hypot(x[1]);
    [x[0] / r, x[1] / r]
}

/// Scattering loss `L*` of the complex field `re + i·im`: mean squared
/// Helmholtz residual, obstacle residual and TBC residual `∂_r u − F_N[u]`.
pub fn scatter_loss(re: &JetField, im: &JetField, problem: &ScatterProblem) -> Result<f64> {
    Ok(scatter_terms(re, im, problem, None)?.total())
}

pub fn scatter_breakdown(re: &JetField, im: &JetField, problem: &ScatterProblem) -> Result<ScatterBreakdown> {
    scatter_terms(re, im, problem, None)
}

/// [`scatter_loss`] and its adjoints with respect to the jets of `re` and `im`.
pub fn scatter_loss_adjoint(re: &JetField, im: &JetField, problem: &ScatterProblem) -> Result<(f64, JetField, JetField)> {
    let mut adj = (JetField::zeros(re.len()), JetField::zeros(im.len()));
    let value = scatter_terms(re, im, problem, Some(&mut adj))?.total();
    Ok((value, adj.0, adj.1))
}

fn scatter_terms(
    re: &JetField,
    im: &JetField,
    problem: &ScatterProblem,
    mut adj: Option<&mut (JetField, JetField)>,
) -> Result<ScatterBreakdown> {
    problem.check(re, im)?;
    let set = &problem.set;
    let (n_int, n_obs, n_tbc) = (set.n_interior(), set.n_obstacle(), set.n_tbc());
    let k2 = problem.kappa * problem.kappa;
    let mut out = ScatterBreakdown::default();

    let scale = 1.0 / n_int as f64;
    for (f, a) in [(re, 0), (im, 1)] {
        let (v, xx, yy) = (f.component(VALUE), f.component(DXX), f.component(DYY));
        for p in 0..n_int {
            let r = xx[p] + yy[p] + k2 * v[p];
            out.interior += scale * r * r;
            if let Some(adj) = adj.as_deref_mut() {
                let field = if a == 0 { &mut adj.0 } else { &mut adj.1 };
                let d = 2.0 * scale * r;
                field.component_mut(VALUE)[p] += d * k2;
                field.component_mut(DXX)[p] += d;
                field.component_mut(DYY)[p] += d;
            }
        }
    }

    let scale = 1.0 / n_obs as f64;
    for (i, b) in set.obstacle.iter().enumerate() {
        let p = n_int + i;
        let (jr, ji) = (re.jet(p), im.jet(p));
        let (dr, di) = (jr.directional_derivative(b.normal), ji.directional_derivative(b.normal));
        let g = problem.g[i];
        let (rr, ri) = match problem.bc {
            BoundaryCondition::SoundSoft => (jr.value - g.re, ji.value - g.im),
            BoundaryCondition::SoundHard => (dr - g.re, di - g.im),
            BoundaryCondition::Impedance { lambda } => (dr - lambda * ji.value - g.re, di + lambda * jr.value - g.im),
        };
        out.obstacle += scale * (rr * rr + ri * ri);
        if let Some(adj) = adj.as_deref_mut() {
            let (ar, ai) = (2.0 * scale * rr, 2.0 * scale * ri);
            let (fr, fi) = (&mut adj.0, &mut adj.1);
            match problem.bc {
                BoundaryCondition::SoundSoft => {
                    fr.component_mut(VALUE)[p] += ar;
                    fi.component_mut(VALUE)[p] += ai;
                }
                BoundaryCondition::SoundHard | BoundaryCondition::Impedance { .. } => {
                    for (c, n) in [(DX, b.normal[0]), (DY, b.normal[1])] {
                        fr.component_mut(c)[p] += ar * n;
                        fi.component_mut(c)[p] += ai * n;
                    }
                    if let BoundaryCondition::Impedance { lambda } = problem.bc {
                        fr.component_mut(VALUE)[p] += ai * lambda;
                        fi.component_mut(VALUE)[p] -= ar * lambda;
                    }
                }
            }
        }
    }

    let offset = n_int + n_obs;
    let scale = 1.0 / n_tbc as f64;
    let trace: Vec<Complex64> =
        (0..n_tbc).map(|i| Complex64::new(re.values()[offset + i], im.values()[offset + i])).collect();
    let ft = problem.dtn.apply(&trace)?;
    let mut resid = Vec::with_capacity(n_tbc);
    for (i, t) in set.tbc.iter().enumerate() {
        let p = offset + i;
        let d = Complex64::new(re.jet(p).radial_derivative(t.point), im.jet(p).radial_derivative(t.point));
        let r = d - ft[i];
        out.tbc += scale * r.norm_sqr();
        resid.push(r);
    }
    if let Some(adj) = adj {
        let back = problem.dtn.apply_adjoint(&resid)?;
        for (i, t) in set.tbc.iter().enumerate() {
            let p = offset + i;
            let [ux, uy] = radial(t.point);
            let (ar, ai) = (2.0 * scale * resid[i].re, 2.0 * scale * resid[i].im);
            adj.0.component_mut(DX)[p] += ar * ux;
            adj.0.component_mut(DY)[p] += ar * uy;
            adj.1.component_mut(DX)[p] += ai * ux;
            adj.1.component_mut(DY)[p] += ai * uy;
            adj.0.component_mut(VALUE)[p] -= 2.0 * scale * back[i].re;
            adj.1.component_mut(VALUE)[p] -= 2.0 * scale * back[i].im;
        }
    }
    Ok(out)
}

/// Frozen jets of the previous approximate solution, taken at the first
/// `len()` training points (the interior points unless boundary matching is on).
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotField {
    pub re: JetField,
    pub im: JetField,
}

impl SnapshotField {
    pub fn len(&self) -> usize {
        self.re.len()
    }

    pub fn is_empty(&self) -> bool {
        self.re.is_empty()
    }
}

fn metric_components(gamma: usize) -> Result<Vec<usize>> {
    if gamma > 2 {
        return Err(Error::InvalidParameter { what: "gamma", detail: format!("{gamma} > 2") });
    }
    Ok((0..=gamma).flat_map(|b| components_of_order(b).iter().copied()).collect())
}

/// Mean over points of the squared jet differences of total order `<= gamma`,
/// for one real field. `live` may extend past the snapshot; only its first
/// `target.len()` points are compared.
pub fn metric_loss(live: &JetField, target: &JetField, gamma: usize) -> Result<f64> {
    metric_terms(live, target, gamma, None)
}

pub fn metric_loss_adjoint(live: &JetField, target: &JetField, gamma: usize, adj: &mut JetField, weight: f64) -> Result<f64> {
    metric_terms(live, target, gamma, Some((adj, weight)))
}

fn metric_terms(live: &JetField, target: &JetField, gamma: usize, adj: Option<(&mut JetField, f64)>) -> Result<f64> {
    let comps = metric_components(gamma)?;
    let n = target.len();
    if live.len() < n || n == 0 {
        return Err(Error::LengthMismatch { what: "metric point set", expected: n, found: live.len() });
    }
    let scale = 1.0 / n as f64;
    let mut value = 0.0;
    match adj {
        None => {
            for &c in &comps {
                let (a, b) = (&live.component(c)[..n], target.component(c));
                value += a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
            }
        }
        Some((adj, weight)) => {
            for &c in &comps {
                let (a, b) = (&live.component(c)[..n], target.component(c));
                let out = &mut adj.component_mut(c)[..n];
                for ((x, y), o) in a.iter().zip(b).zip(out) {
                    let d = x - y;
                    value += d * d;
                    *o += weight * 2.0 * scale * d;
                }
            }
        }
    }
    Ok(value * scale)
}

/// Complex metric loss: the real-part and imaginary-part losses summed.
pub fn complex_metric_loss(re: &JetField, im: &JetField, snapshot: &SnapshotField, gamma: usize) -> Result<f64> {
    Ok(metric_loss(re, &snapshot.re, gamma)? + metric_loss(im, &snapshot.im, gamma)?)
}

/// Value of `η·L_metric + σ·L*`. `problem` may be omitted when `σ = 0`, in
/// which case `re`/`im` need only cover the snapshot points.
pub fn mixed_loss(
    re: &JetField,
    im: &JetField,
    snapshot: &SnapshotField,
    weights: &LossWeights,
    problem: Option<&ScatterProblem>,
) -> Result<f64> {
    mixed_loss_adjoint_inner(re, im, snapshot, weights, problem, None)
}

/// [`mixed_loss`] and its adjoints.
pub fn mixed_loss_adjoint(
    re: &JetField,
    im: &JetField,
    snapshot: &SnapshotField,
    weights: &LossWeights,
    problem: Option<&ScatterProblem>,
) -> Result<(f64, JetField, JetField)> {
    let mut adj = (JetField::zeros(re.len()), JetField::zeros(im.len()));
    let v = mixed_loss_adjoint_inner(re, im, snapshot, weights, problem, Some(&mut adj))?;
    Ok((v, adj.0, adj.1))
}

fn mixed_loss_adjoint_inner(
    re: &JetField,
    im: &JetField,
    snapshot: &SnapshotField,
    weights: &LossWeights,
    problem: Option<&ScatterProblem>,
    adj: Option<&mut (JetField, JetField)>,
) -> Result<f64> {
    weights.validate()?;
    let mut total = 0.0;
    let mut adj = adj;
    if weights.eta != 0.0 {
        let m = match adj.as_deref_mut() {
            Some((ar, ai)) => {
                metric_loss_adjoint(re, &snapshot.re, weights.gamma, ar, weights.eta)?
                    + metric_loss_adjoint(im, &snapshot.im, weights.gamma, ai, weights.eta)?
            }
            None => complex_metric_loss(re, im, snapshot, weights.gamma)?,
        };
        total += weights.eta * m;
    }
    if weights.sigma != 0.0 {
        let problem = problem.ok_or(Error::InvalidParameter {
            what: "sigma",
            detail: "a scattering term needs the scattering problem".into(),
        })?;
        match adj {
            Some(acc) => {
                let (s, ar, ai) = scatter_loss_adjoint(re, im, problem)?;
                total += weights.sigma * s;
                axpy(&mut acc.0, weights.sigma, &ar);
                axpy(&mut acc.1, weights.sigma, &ai);
            }
            None => total += weights.sigma * scatter_loss(re, im, problem)?,
        }
    }
    Ok(total)
}

fn axpy(y: &mut JetField, a: f64, x: &JetField) {
    for c in 0..crate::net::JET_LEN {
        for (yi, xi) in y.component_mut(c).iter_mut().zip(x.component(c)) {
            *yi += a * xi;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{generate_collocation, AnnulusDomain, CollocationCounts};
    use crate::oracle::{boundary_data, split_fields, ExactField};

    fn problem(bc: BoundaryCondition, order: usize, field: &ExactField) -> ScatterProblem {
        let d = AnnulusDomain::new(0.5, 1.0).unwrap();
        let c = CollocationCounts { n_radial: 6, n_angular: 24, n_obstacle: 32, n_tbc: 64 };
        let set = generate_collocation(d, c).unwrap();
        let g = boundary_data(field, bc, &set.obstacle).unwrap();
        let dtn = DtnOperator::new(5.0, 1.0, order, 64).unwrap();
        ScatterProblem::new(5.0, bc, set, g, dtn).unwrap()
    }

    fn exact_fields(p: &ScatterProblem, field: &ExactField) -> (JetField, JetField) {
        split_fields(&field.jets(&p.set.all_points()).unwrap())
    }

    #[test]
    fn pinn_loss_cases() {
        let f = ExactField::monopole(5.0).unwrap();
        let pts = [[0.6, 0.1], [0.2, -0.8], [-0.7, 0.3]];
        let interior: Vec<Jet2> = pts.iter().map(|&x| f.jet(x).unwrap().re).collect();
        let bpts = [[0.5, 0.0], [0.0, -0.5]];
        let boundary: Vec<Jet2> = bpts.iter().map(|&x| f.jet(x).unwrap().re).collect();
        let g: Vec<f64> = boundary.iter().map(|j| j.value).collect();
        assert!(pinn_loss(5.0, &interior, &[0.0; 3], &boundary, &g, 1.0).unwrap() <= 1e-18);
        let zero = [Jet2::default(); 2];
        assert_eq!(pinn_loss(5.0, &zero, &[0.0; 2], &zero, &[0.0; 2], 1.0).unwrap(), 0.0);
        let bumped = [Jet2::default(), Jet2 { value: 0.5, ..Default::default() }];
        let one = pinn_loss(5.0, &zero, &[0.0; 2], &bumped, &[0.0; 2], 1.0).unwrap();
        let l1 = pinn_loss(5.0, &zero, &[0.0; 2], &bumped, &[0.0; 2], 0.0).unwrap();
        let two = pinn_loss(5.0, &zero, &[0.0; 2], &bumped, &[0.0; 2], 2.0).unwrap();
        assert_eq!(two - l1, 2.0 * (one - l1));
        assert!(matches!(pinn_loss(5.0, &[], &[], &zero, &[0.0; 2], 1.0), Err(Error::EmptySet(_))));
    }

    #[test]
    fn exact_fields_have_tiny_scatter_loss() {
        let mono = ExactField::monopole(5.0).unwrap();
        let p = problem(BoundaryCondition::SoundSoft, 20, &mono);
        let (re, im) = exact_fields(&p, &mono);
        assert!(scatter_loss(&re, &im, &p).unwrap() <= 1e-16);
        let mie = ExactField::mie_scattered(5.0, 0.5).unwrap();
        let p = problem(BoundaryCondition::SoundSoft, 25, &mie);
        let (re, im) = exact_fields(&p, &mie);
        assert!(scatter_loss(&re, &im, &p).unwrap() <= 1e-16);
    }

    #[test]
    fn mie_scatter_loss_shrinks_with_order() {
        let mie = ExactField::mie_scattered(5.0, 0.5).unwrap();
        let mut last = f64::INFINITY;
        for order in [5, 10, 15, 20] {
            let p = problem(BoundaryCondition::SoundSoft, order, &mie);
            let (re, im) = exact_fields(&p, &mie);
            let v = scatter_loss(&re, &im, &p).unwrap();
            assert!(v <= last || v <= 1e-16, "order {order}: {v} > {last}");
            last = v;
        }
    }

    #[test]
    fn zero_field_and_impedance_degeneration() {
        let mono = ExactField::monopole(5.0).unwrap();
        let mut p = problem(BoundaryCondition::SoundSoft, 10, &mono);
        p.g.iter_mut().for_each(|g| *g = Complex64::default());
        let z = JetField::zeros(p.set.len());
        assert_eq!(scatter_loss(&z, &z, &p).unwrap(), 0.0);

        let hard = problem(BoundaryCondition::SoundHard, 10, &mono);
        let imp = problem(BoundaryCondition::Impedance { lambda: 0.0 }, 10, &mono);
        let pts = hard.set.all_points();
        let re = JetField::from_jets(&pts.iter().map(|x| Jet2 { value: x[0] * x[1], grad: [x[1], x[0]], ..Default::default() }).collect::<Vec<_>>());
        let im = JetField::from_jets(&pts.iter().map(|x| Jet2 { value: x[0], grad: [1.0, 0.0], ..Default::default() }).collect::<Vec<_>>());
        assert_eq!(scatter_loss(&re, &im, &hard).unwrap(), scatter_loss(&re, &im, &imp).unwrap());
    }

    fn wiggle(pts: &[Point], s: f64) -> JetField {
        let jets: Vec<Jet2> = pts
            .iter()
            .map(|x| {
                let v = (s * x[0] + 0.3 * x[1]).sin();
                let c = (s * x[0] + 0.3 * x[1]).cos();
                Jet2 {
                    value: v + 0.1 * x[1] * x[1],
                    grad: [s * c, 0.3 * c + 0.2 * x[1]],
                    hess: [[-s * s * v, -0.3 * s * v], [-0.3 * s * v, -0.09 * v + 0.2]],
                }
            })
            .collect();
        JetField::from_jets(&jets)
    }

    #[test]
    fn scatter_adjoint_matches_finite_differences() {
        let mono = ExactField::monopole(5.0).unwrap();
        for bc in [BoundaryCondition::SoundSoft, BoundaryCondition::SoundHard, BoundaryCondition::Impedance { lambda: 1.3 }] {
            let p = problem(bc, 8, &mono);
            let pts = p.set.all_points();
            let (re, im) = (wiggle(&pts, 2.0), wiggle(&pts, -1.5));
            let (_, ar, ai) = scatter_loss_adjoint(&re, &im, &p).unwrap();
            let n_int = p.set.n_interior();
            let probes = [(0, VALUE), (3, DXX), (n_int + 2, VALUE), (n_int + 5, DX), (pts.len() - 1, VALUE), (pts.len() - 7, DY)];
            for &(pt, c) in &probes {
                for which in 0..2 {
                    let h = 1e-6;
                    let eval = |d: f64| {
                        let (mut r, mut i) = (re.clone(), im.clone());
                        let f = if which == 0 { &mut r } else { &mut i };
                        f.component_mut(c)[pt] += d;
                        scatter_loss(&r, &i, &p).unwrap()
                    };
                    let fd = (eval(h) - eval(-h)) / (2.0 * h);
                    let an = if which == 0 { ar.component(c)[pt] } else { ai.component(c)[pt] };
                    assert!((fd - an).abs() <= 1e-6 * (1.0 + an.abs()), "{bc:?} point {pt} comp {c}: fd {fd} vs {an}");
                }
            }
        }
    }

    #[test]
    fn metric_loss_cases() {
        let pts: Vec<Point> = (0..20).map(|i| [0.5 + 0.02 * i as f64, 0.1 * i as f64 - 1.0]).collect();
        let u = wiggle(&pts, 1.0);
        for gamma in 0..=2 {
            assert_eq!(metric_loss(&u, &u, gamma).unwrap(), 0.0);
        }
        let c = 0.3;
        let mut shifted = u.clone();
        shifted.component_mut(VALUE).iter_mut().for_each(|v| *v += c);
        assert!((metric_loss(&shifted, &u, 0).unwrap() - c * c).abs() < 1e-15);

        let eps = 1e-3;
        let mut lin = u.clone();
        for (p, x) in pts.iter().enumerate() {
            lin.component_mut(VALUE)[p] += eps * x[0];
            lin.component_mut(DX)[p] += eps;
        }
        let mean_x2 = pts.iter().map(|x| x[0] * x[0]).sum::<f64>() / pts.len() as f64;
        let expect = eps * eps * (mean_x2 + 1.0);
        assert!((metric_loss(&lin, &u, 2).unwrap() - expect).abs() < 1e-18);
        assert_eq!(metric_loss(&lin, &u, 2).unwrap(), metric_loss(&u, &lin, 2).unwrap());
        assert!(matches!(metric_loss(&u, &u, 3), Err(Error::InvalidParameter { .. })));
        let short = u.slice(0, 5);
        assert!(matches!(metric_loss(&short, &u, 1), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn mixed_loss_is_the_weighted_sum() {
        let mono = ExactField::monopole(5.0).unwrap();
        let p = problem(BoundaryCondition::SoundSoft, 8, &mono);
        let pts = p.set.all_points();
        let (re, im) = (wiggle(&pts, 2.0), wiggle(&pts, 1.0));
        let n = p.set.n_interior();
        let snap = SnapshotField { re: wiggle(&pts[..n], 1.7), im: wiggle(&pts[..n], 0.4) };
        let w = |eta, sigma| LossWeights { eta, sigma, lambda: 1.0, gamma: 2 };
        let s = scatter_loss(&re, &im, &p).unwrap();
        let m = complex_metric_loss(&re, &im, &snap, 2).unwrap();
        assert_eq!(mixed_loss(&re, &im, &snap, &w(0.0, 1.0), Some(&p)).unwrap(), s);
        assert_eq!(mixed_loss(&re, &im, &snap, &w(1.0, 0.0), None).unwrap(), m);
        assert!((mixed_loss(&re, &im, &snap, &w(1.0, 1.0), Some(&p)).unwrap() - (m + s)).abs() <= 1e-15 * (m + s));
        let (v, _, _) = mixed_loss_adjoint(&re, &im, &snap, &w(1.0, 1.0), Some(&p)).unwrap();
        assert_eq!(v, mixed_loss(&re, &im, &snap, &w(1.0, 1.0), Some(&p)).unwrap());
    }
}
