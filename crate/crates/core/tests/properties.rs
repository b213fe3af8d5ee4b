//! Property tests for the documented invariants of each module.

use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use aosnn::dtn::DtnOperator;
use aosnn::geometry::{generate_collocation, AnnulusDomain, CollocationCounts, Point};
use aosnn::loss::{metric_loss, mixed_loss, scatter_loss, LossWeights, SnapshotField};
use aosnn::lsq::{solve, AssemblyOptions, DesignSystem};
use aosnn::net::{JetField, NetworkShape, SubspaceNetwork};
use aosnn::oracle::{relative_l2, BoundaryCondition, FieldKind};
use aosnn::solver::{ProblemConfig, Setup};
use aosnn::specfun::{bessel_j, bessel_jy_table, bessel_y, hankel1, hankel1_deriv};

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn wronskian(x in 0.5f64..100.0, n in 0usize..=64) {
        let (j, y) = bessel_jy_table(n + 1, x).unwrap();
        let w = if n == 0 { j[1] * y[0] - j[0] * y[1] } else { j[n] * y[n - 1] - j[n - 1] * y[n] };
        let expect = 2.0 / (std::f64::consts::PI * x);
        prop_assert!((w - expect).abs() <= 1e-12 * expect);
    }

    #[test]
    fn three_term_recurrence(x in 0.5f64..100.0, n in 1usize..64) {
        let (j, y) = bessel_jy_table(n + 1, x).unwrap();
        for c in [&j, &y] {
            let scale = c[n - 1].abs().max(c[n].abs()).max(c[n + 1].abs());
            let r = c[n - 1] + c[n + 1] - 2.0 * n as f64 / x * c[n];
            prop_assert!(r.abs() <= 1e-11 * scale);
        }
    }

    #[test]
    fn reflection_is_exact(x in 0.1f64..200.0, n in 0i32..=100) {
        let h = hankel1(n, x).unwrap();
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        prop_assert_eq!(hankel1(-n, x).unwrap(), h * sign);
    }

    #[test]
    fn outputs_are_finite(x in 0.1f64..200.0, n in 0u32..=20) {
        prop_assert!(bessel_j(n, x).unwrap().is_finite());
        prop_assert!(bessel_y(n, x).unwrap().is_finite());
        let d = hankel1_deriv(n as i32, x).unwrap();
        prop_assert!(d.re.is_finite() && d.im.is_finite());
    }

    #[test]
    fn collocation_is_reproducible_and_separated(
        a in 0.1f64..0.9, gap in 0.1f64..2.0,
        nr in 1usize..8, na in 4usize..40, nb in 4usize..40, nt in 4usize..40,
    ) {
        let domain = AnnulusDomain::new(a, a + gap).unwrap();
        let counts = CollocationCounts { n_radial: nr, n_angular: na, n_obstacle: nb, n_tbc: nt };
        let s1 = generate_collocation(domain, counts).unwrap();
        let s2 = generate_collocation(domain, counts).unwrap();
        prop_assert_eq!(s1.all_points(), s2.all_points());
        for p in &s1.interior {
            let r = p[0].hypot(p[1]);
            prop_assert!(r > a && r < a + gap);
        }
    }
}

fn random_trace(rng: &mut ChaCha8Rng, q: usize) -> Vec<Complex64> {
    (0..q).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
}

fn max_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(config(48))]

    #[test]
    fn dtn_is_linear(kappa in 0.5f64..20.0, order in 1usize..30, extra in 2usize..20, seed in any::<u64>()) {
        let q = 2 * order + extra;
        let op = DtnOperator::new(kappa, 1.0, order, q).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (u, v) = (random_trace(&mut rng, q), random_trace(&mut rng, q));
        let (alpha, beta) = (Complex64::new(0.3, -1.1), Complex64::new(-2.0, 0.4));
        let mix: Vec<Complex64> = u.iter().zip(&v).map(|(a, b)| alpha * a + beta * b).collect();
        let lhs = op.apply(&mix).unwrap();
        let (fu, fv) = (op.apply(&u).unwrap(), op.apply(&v).unwrap());
        let rhs: Vec<Complex64> = fu.iter().zip(&fv).map(|(a, b)| alpha * a + beta * b).collect();
        let diff: Vec<Complex64> = lhs.iter().zip(&rhs).map(|(a, b)| a - b).collect();
        prop_assert!(max_norm(&diff) <= 1e-13 * max_norm(&rhs).max(1.0));
    }

    #[test]
    fn dtn_annihilates_high_modes(order in 1usize..30, extra in 3usize..20, shift in 1usize..3) {
        let q = 2 * order + extra;
        let n = (order + shift) as f64;
        prop_assume!(q > 2 * order + shift);
        let op = DtnOperator::new(5.0, 1.0, order, q).unwrap();
        let trace: Vec<Complex64> = aosnn::geometry::uniform_angles(q).map(|t| Complex64::from_polar(1.0, n * t)).collect();
        prop_assert!(max_norm(&op.apply(&trace).unwrap()) <= 1e-13 * (order as f64 + 5.0));
    }

    #[test]
    fn monopole_residual_is_order_independent(order in 5usize..40) {
        let (kappa, radius) = (5.0, 1.0);
        let op = DtnOperator::new(kappa, radius, order, 2 * order + 4).unwrap();
        let u = hankel1(0, kappa * radius).unwrap();
        let du = kappa * hankel1_deriv(0, kappa * radius).unwrap();
        let out = op.apply(&vec![u; op.n_quad()]).unwrap();
        prop_assert!(out.iter().all(|v| (v - du).norm() <= 1e-10));
    }
}

fn net_strategy() -> impl Strategy<Value = SubspaceNetwork> {
    (0usize..=5, prop::sample::select(vec![1usize, 8, 40]), 1usize..6, any::<u64>())
        .prop_map(|(depth, width, m, seed)| SubspaceNetwork::init(seed, &NetworkShape::new(vec![width; depth], m)).unwrap())
}

fn point_strategy() -> impl Strategy<Value = Point> {
    (0.5f64..1.0, 0.0f64..std::f64::consts::TAU).prop_map(|(r, t)| [r * t.cos(), r * t.sin()])
}

/// Relative difference of two vectors with an absolute floor `floor`.
fn rel(a: &[f64], b: &[f64], floor: f64) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    num / den.max(floor)
}

proptest! {
    #![proptest_config(config(40))]

    #[test]
    fn jets_match_finite_differences(net in net_strategy(), p in point_strategy()) {
        let h = 1e-5;
        let jets = net.eval_jets(p);
        let at = |dx: f64, dy: f64| net.eval_jets([p[0] + dx, p[1] + dy]);
        let (xp, xm, yp, ym) = (at(h, 0.0), at(-h, 0.0), at(0.0, h), at(0.0, -h));
        let (mut g_fd, mut g_an, mut h_fd, mut h_an) = (vec![], vec![], vec![], vec![]);
        for j in 0..jets.len() {
            g_fd.push((xp[j].value - xm[j].value) / (2.0 * h));
            g_fd.push((yp[j].value - ym[j].value) / (2.0 * h));
            g_an.extend(jets[j].grad);
            h_fd.push((xp[j].grad[0] - xm[j].grad[0]) / (2.0 * h));
            h_fd.push((yp[j].grad[0] - ym[j].grad[0]) / (2.0 * h));
            h_fd.push((yp[j].grad[1] - ym[j].grad[1]) / (2.0 * h));
            h_an.extend([jets[j].hess[0][0], jets[j].hess[0][1], jets[j].hess[1][1]]);
        }
        prop_assert!(rel(&g_fd, &g_an, 1e-6) <= 1e-6, "gradient {}", rel(&g_fd, &g_an, 1e-6));
        prop_assert!(rel(&h_fd, &h_an, 1e-4) <= 1e-4, "hessian {}", rel(&h_fd, &h_an, 1e-4));
    }

    #[test]
    fn eval_jets_is_pure(net in net_strategy(), p in point_strategy()) {
        let before = net.params().to_vec();
        prop_assert_eq!(net.eval_jets(p), net.eval_jets(p));
        prop_assert_eq!(net.params(), before.as_slice());
    }

    #[test]
    fn param_gradient_is_additive(net in net_strategy(), p in point_strategy(), q in point_strategy()) {
        let omega: Vec<f64> = (0..net.subspace_width()).map(|j| 0.5 - 0.1 * j as f64).collect();
        // Per-point loss: value^2 + laplacian^2.
        let loss = |f: &JetField| {
            let mut adj = JetField::zeros(f.len());
            let mut total = 0.0;
            for i in 0..f.len() {
                let jet = f.jet(i);
                let lap = jet.laplacian();
                total += jet.value * jet.value + lap * lap;
                let a = aosnn::net::Jet2 { value: 2.0 * jet.value, grad: [0.0; 2], hess: [[2.0 * lap, 0.0], [0.0, 2.0 * lap]] };
                adj.set(i, &a);
            }
            (total, adj)
        };
        let (_, both) = net.param_gradient(&[p, q], &omega, loss);
        let (_, gp) = net.param_gradient(&[p], &omega, loss);
        let (_, gq) = net.param_gradient(&[q], &omega, loss);
        let sum: Vec<f64> = gp.iter().zip(&gq).map(|(a, b)| a + b).collect();
        let scale = sum.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for (a, b) in both.iter().zip(&sum) {
            prop_assert!((a - b).abs() <= 1e-12 * scale);
        }
    }
}

fn small_setup(bc: BoundaryCondition) -> Setup {
    let problem = ProblemConfig {
        kappa: 3.0,
        obstacle_radius: 0.5,
        tbc_radius: 1.0,
        bc,
        field: FieldKind::Monopole,
        dtn_order: 6,
    };
    Setup::new(&problem, CollocationCounts { n_radial: 3, n_angular: 8, n_obstacle: 8, n_tbc: 16 }).unwrap()
}

fn bc_strategy() -> impl Strategy<Value = BoundaryCondition> {
    prop_oneof![
        Just(BoundaryCondition::SoundSoft),
        Just(BoundaryCondition::SoundHard),
        (0.1f64..3.0).prop_map(|lambda| BoundaryCondition::Impedance { lambda }),
    ]
}

fn fields(setup: &Setup, seed: u64) -> (JetField, JetField) {
    let shape = NetworkShape::new(vec![6], 4);
    let re = SubspaceNetwork::init(seed, &shape).unwrap();
    let im = SubspaceNetwork::init(seed ^ 0x5555, &shape).unwrap();
    let omega = [0.4, -0.7, 1.3, 0.2];
    (re.forward(&setup.points).combine(&omega), im.forward(&setup.points).combine(&omega))
}

proptest! {
    #![proptest_config(config(24))]

    #[test]
    fn losses_are_nonnegative(bc in bc_strategy(), seed in any::<u64>(), gamma in 0usize..=2) {
        let setup = small_setup(bc);
        let (re, im) = fields(&setup, seed);
        prop_assert!(scatter_loss(&re, &im, &setup.problem).unwrap() >= 0.0);
        let (re2, _) = fields(&setup, seed.wrapping_add(1));
        prop_assert!(metric_loss(&re, &re2, gamma).unwrap() >= 0.0);
        prop_assert_eq!(metric_loss(&re, &re, gamma).unwrap(), 0.0);
    }

    #[test]
    fn metric_is_symmetric(seed in any::<u64>(), gamma in 0usize..=2) {
        let setup = small_setup(BoundaryCondition::SoundSoft);
        let (a, b) = fields(&setup, seed);
        prop_assert_eq!(metric_loss(&a, &b, gamma).unwrap(), metric_loss(&b, &a, gamma).unwrap());
    }

    #[test]
    fn pure_physics_mixed_loss_is_scatter_loss(bc in bc_strategy(), seed in any::<u64>()) {
        let setup = small_setup(bc);
        let (re, im) = fields(&setup, seed);
        let (sre, sim) = fields(&setup, seed.wrapping_add(7));
        let snapshot = SnapshotField { re: sre, im: sim };
        let weights = LossWeights { eta: 0.0, sigma: 1.0, lambda: 1.0, gamma: 2 };
        prop_assert_eq!(
            mixed_loss(&re, &im, &snapshot, &weights, Some(&setup.problem)).unwrap(),
            scatter_loss(&re, &im, &setup.problem).unwrap()
        );
    }

    #[test]
    fn relative_l2_of_scaled_field(c in -3.0f64..3.0, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = random_trace(&mut rng, 17);
        let cu: Vec<Complex64> = u.iter().map(|z| z * c).collect();
        prop_assert!((relative_l2(&cu, &u).unwrap() - (c - 1.0).abs()).abs() <= 1e-14);
    }

    #[test]
    fn lsq_is_optimal(seed in any::<u64>(), rows in 20usize..60, cols in 2usize..15) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let matrix = (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect();
        let rhs = (0..rows).map(|_| rng.random_range(-1.0..1.0)).collect();
        let sys = DesignSystem { rows, cols, matrix, rhs, blocks: vec![], options: AssemblyOptions::default() };
        let sol = solve(&sys).unwrap();
        let best = sys.objective(&sol.omega).unwrap().sqrt();
        let norm = sol.omega.iter().map(|w| w * w).sum::<f64>().sqrt();
        let delta = 1e-6 * norm;
        for _ in 0..20 {
            let dir: Vec<f64> = (0..cols).map(|_| rng.random_range(-1.0..1.0)).collect();
            let dn = dir.iter().map(|d| d * d).sum::<f64>().sqrt();
            for s in [delta, -delta] {
                let trial: Vec<f64> = sol.omega.iter().zip(&dir).map(|(w, d)| w + s * d / dn).collect();
                let r = sys.objective(&trial).unwrap().sqrt();
                prop_assert!(r >= best * (1.0 - 1e-12));
            }
        }
    }
}
