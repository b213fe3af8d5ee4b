//! Training orchestration: Adam, the SNN bootstrap, the AO-SNN alternation
//! and a jointly trained PINN baseline.

use std::time::Instant;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dtn::DtnOperator;
use crate::error::{Error, Result};
use crate::geometry::{generate_collocation, AnnulusDomain, CollocationCounts, Point};
use crate::loss::{mixed_loss_adjoint, scatter_loss_adjoint, LossWeights, ScatterProblem, SnapshotField};
use crate::lsq::{assemble, solve_split, AssemblyOptions};
use crate::net::{ForwardTape, JetField, NetworkShape, SubspaceNetwork};
use crate::oracle::{boundary_data, relative_l2, sobolev_error, BoundaryCondition, ExactField, FieldJet, FieldKind};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(len: usize, lr: f64) -> Self {
        Self { m: vec![0.0; len], v: vec![0.0; len], step: 0, lr, beta1: ADAM_BETA1, beta2: ADAM_BETA2, eps: ADAM_EPSILON }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// One bias-corrected Adam update of `theta`.
    pub fn step(&mut self, theta: &mut [f64], grad: &[f64]) -> Result<()> {
        if theta.len() != self.m.len() {
            return Err(Error::LengthMismatch { what: "θ", expected: self.m.len(), found: theta.len() });
        }
        if grad.len() != self.m.len() {
            return Err(Error::LengthMismatch { what: "gradient", expected: self.m.len(), found: grad.len() });
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for (((x, g), m), v) in theta.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            *x -= self.lr * (*m / c1) / ((*v / c2).sqrt() + self.eps);
        }
        Ok(())
    }
}

/// A per-iteration weight: one value for every iteration, or a list indexed
/// by iteration (1-based) whose last entry repeats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Schedule {
    Constant(f64),
    PerIteration(Vec<f64>),
}

impl Schedule {
    pub fn at(&self, k: usize) -> f64 {
        match self {
            Schedule::Constant(v) => *v,
            Schedule::PerIteration(vs) => vs[(k.max(1) - 1).min(vs.len() - 1)],
        }
    }

    fn validate(&self, what: &'static str) -> Result<()> {
        let values: &[f64] = match self {
            Schedule::Constant(v) => std::slice::from_ref(v),
            Schedule::PerIteration(vs) => vs,
        };
        if values.is_empty() || values.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidParameter { what, detail: "needs finite non-negative values".into() });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Pinn,
    Snn,
    AoSnn,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Pinn => "pinn",
            Method::Snn => "snn",
            Method::AoSnn => "ao-snn",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemConfig {
    pub kappa: f64,
    pub obstacle_radius: f64,
    pub tbc_radius: f64,
    pub bc: BoundaryCondition,
    pub field: FieldKind,
    pub dtn_order: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AoSnnConfig {
    pub problem: ProblemConfig,
    pub counts: CollocationCounts,
    pub shape: NetworkShape,
    pub seed: u64,
    /// Number of alternations after the bootstrap.
    pub k: usize,
    pub eta: Schedule,
    pub sigma: Schedule,
    pub gamma: usize,
    pub bootstrap_epochs: usize,
    pub iteration_epochs: usize,
    pub stop_factor: f64,
    pub learning_rate: f64,
    /// Match the snapshot on boundary points too, not only in the interior.
    pub metric_on_boundary: bool,
    pub assembly: AssemblyOptions,
    pub pinn_shape: NetworkShape,
    pub pinn_epochs: usize,
}

impl AoSnnConfig {
    /// The Example-1 setup at the given collocation and budgets.
    pub fn example1(kappa: f64) -> Self {
        Self {
            problem: ProblemConfig {
                kappa,
                obstacle_radius: 0.5,
                tbc_radius: 1.0,
                bc: BoundaryCondition::SoundSoft,
                field: FieldKind::Monopole,
                dtn_order: 20,
            },
            counts: CollocationCounts { n_radial: 24, n_angular: 64, n_obstacle: 64, n_tbc: 64 },
            shape: NetworkShape::new(vec![40, 40, 40], 600),
            seed: 0,
            k: 2,
            eta: Schedule::Constant(1.0),
            sigma: Schedule::Constant(0.0),
            gamma: 2,
            bootstrap_epochs: 1000,
            iteration_epochs: 50_000,
            stop_factor: 0.1,
            learning_rate: 1e-3,
            metric_on_boundary: false,
            assembly: AssemblyOptions::default(),
            pinn_shape: NetworkShape::new(vec![100, 100, 100], 100),
            pinn_epochs: 1000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.problem;
        if !(p.kappa > 0.0 && p.kappa.is_finite()) {
            return Err(Error::InvalidParameter { what: "kappa", detail: format!("{} must be positive", p.kappa) });
        }
        AnnulusDomain::new(p.obstacle_radius, p.tbc_radius)?;
        if let BoundaryCondition::Impedance { lambda } = p.bc {
            if !lambda.is_finite() {
                return Err(Error::InvalidParameter { what: "impedance", detail: "must be finite".into() });
            }
        }
        if self.counts.n_tbc < 2 * p.dtn_order + 2 {
            return Err(Error::InvalidCount { what: "n_tbc", value: self.counts.n_tbc, min: 2 * p.dtn_order + 2 });
        }
        if !(self.stop_factor > 0.0 && self.stop_factor < 1.0) {
            return Err(Error::InvalidParameter { what: "stop_factor", detail: format!("{} not in (0, 1)", self.stop_factor) });
        }
        if self.iteration_epochs == 0 {
            return Err(Error::InvalidCount { what: "iteration_epochs", value: 0, min: 1 });
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidParameter { what: "learning_rate", detail: format!("{}", self.learning_rate) });
        }
        if self.gamma > 2 {
            return Err(Error::InvalidParameter { what: "gamma", detail: format!("{} > 2", self.gamma) });
        }
        self.eta.validate("eta")?;
        self.sigma.validate("sigma")?;
        Ok(())
    }

    pub fn weights(&self, k: usize) -> LossWeights {
        LossWeights { eta: self.eta.at(k), sigma: self.sigma.at(k), lambda: 1.0, gamma: self.gamma }
    }
}

/// Seed of the `index`-th independent stream derived from `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index + 1);
    rng.next_u64()
}

/// The discrete problem together with its exact solution.
#[derive(Debug, Clone)]
pub struct Setup {
    pub problem: ScatterProblem,
    pub exact: ExactField,
    pub points: Vec<Point>,
    pub exact_jets: Vec<FieldJet>,
}

impl Setup {
    pub fn new(problem: &ProblemConfig, counts: CollocationCounts) -> Result<Self> {
        let domain = AnnulusDomain::new(problem.obstacle_radius, problem.tbc_radius)?;
        let set = generate_collocation(domain, counts)?;
        let exact = ExactField::new(problem.field, problem.kappa, problem.obstacle_radius)?;
        let g = boundary_data(&exact, problem.bc, &set.obstacle)?;
        let dtn = DtnOperator::new(problem.kappa, problem.tbc_radius, problem.dtn_order, counts.n_tbc)?;
        let points = set.all_points();
        let exact_jets = exact.jets(&points)?;
        let problem = ScatterProblem::new(problem.kappa, problem.bc, set, g, dtn)?;
        Ok(Self { problem, exact, points, exact_jets })
    }

    /// Errors of `re + i·im` (jets at all collocation points).
    pub fn errors(&self, re: &JetField, im: &JetField) -> Result<ErrorReport> {
        let numeric: Vec<FieldJet> = (0..re.len()).map(|p| FieldJet { re: re.jet(p), im: im.jet(p) }).collect();
        let values: Vec<_> = numeric.iter().map(FieldJet::value).collect();
        let exact: Vec<_> = self.exact_jets.iter().map(FieldJet::value).collect();
        Ok(ErrorReport {
            relative_l2: relative_l2(&values, &exact)?,
            h0: sobolev_error(&numeric, &self.exact_jets, 0)?,
            h1: sobolev_error(&numeric, &self.exact_jets, 1)?,
            h2: sobolev_error(&numeric, &self.exact_jets, 2)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub relative_l2: f64,
    pub h0: f64,
    pub h1: f64,
    pub h2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LsqDiagnostics {
    pub residual_norm: f64,
    pub cond_estimate: f64,
    pub omega_norm: f64,
    pub rank: usize,
    /// `‖Aω − b‖²` at the solution and at `ω = 1`.
    pub objective: f64,
    pub objective_at_ones: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StageKind {
    Bootstrap,
    Alternation,
    Joint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: usize,
    pub kind: StageKind,
    pub epochs: usize,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub eta: f64,
    pub sigma: f64,
    pub lsq: Option<LsqDiagnostics>,
    pub errors: ErrorReport,
    /// Training loss before every epoch, plus the final value.
    #[serde(skip)]
    pub loss_curve: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub method: Method,
    pub net_re: SubspaceNetwork,
    pub net_im: SubspaceNetwork,
    pub omega_re: Vec<f64>,
    pub omega_im: Vec<f64>,
    pub history: Vec<StageRecord>,
    /// Wall-clock seconds per stage; kept apart from the reproducible numerics.
    pub wall_seconds: Vec<f64>,
}

impl Solution {
    pub fn final_record(&self) -> &StageRecord {
        self.history.last().expect("a solution always has at least one stage")
    }

    /// Jets of the solution at `points`.
    pub fn fields(&self, points: &[Point]) -> (JetField, JetField) {
        (self.net_re.forward(points).combine(&self.omega_re), self.net_im.forward(points).combine(&self.omega_im))
    }
}

/// What a stage observer sees after each completed stage.
pub struct StageView<'a> {
    pub record: &'a StageRecord,
    pub net_re: &'a SubspaceNetwork,
    pub net_im: &'a SubspaceNetwork,
    pub omega_re: &'a [f64],
    pub omega_im: &'a [f64],
}

pub type Observer<'o> = dyn FnMut(StageView<'_>) -> Result<()> + 'o;

struct TrainOutcome {
    epochs: usize,
    curve: Vec<f64>,
}

/// Trainable state of one real part during a training stage.
struct Part<'a> {
    net: &'a mut SubspaceNetwork,
    omega: &'a mut Vec<f64>,
    tape: ForwardTape,
    grad: Vec<f64>,
    grad_omega: Vec<f64>,
    adam: AdamState,
    adam_omega: Option<AdamState>,
}

impl<'a> Part<'a> {
    fn new(net: &'a mut SubspaceNetwork, omega: &'a mut Vec<f64>, lr: f64, train_omega: bool) -> Self {
        let n = net.n_params();
        let m = omega.len();
        Self {
            net,
            omega,
            tape: ForwardTape::default(),
            grad: vec![0.0; n],
            grad_omega: vec![0.0; m],
            adam: AdamState::new(n, lr),
            adam_omega: train_omega.then(|| AdamState::new(m, lr)),
        }
    }

    fn forward(&mut self, points: &[Point]) -> JetField {
        self.net.forward_into(points, &mut self.tape);
        self.tape.combine(self.omega)
    }

    fn step(&mut self, adjoint: &JetField) -> Result<()> {
        self.grad.fill(0.0);
        self.grad_omega.fill(0.0);
        let go = self.adam_omega.is_some().then_some(self.grad_omega.as_mut_slice());
        self.net.backward(&mut self.tape, self.omega, adjoint, &mut self.grad, go);
        self.adam.step(self.net.params_mut(), &self.grad)?;
        if let Some(adam) = &mut self.adam_omega {
            adam.step(self.omega, &self.grad_omega)?;
        }
        Ok(())
    }
}

/// Full-batch Adam on both parts. Before every update the loss `L_e` is
/// evaluated; training stops once `L_e <= factor·L_0` or after `cap` updates.
fn train<F>(
    re: &mut Part<'_>,
    im: &mut Part<'_>,
    points: &[Point],
    cap: usize,
    stop_factor: Option<f64>,
    mut loss: F,
) -> Result<TrainOutcome>
where
    F: FnMut(&JetField, &JetField) -> Result<(f64, JetField, JetField)>,
{
    let mut curve = Vec::new();
    let mut epochs = 0;
    loop {
        let f_re = re.forward(points);
        let f_im = im.forward(points);
        let (value, a_re, a_im) = loss(&f_re, &f_im)?;
        if !value.is_finite() {
            return Err(Error::NonFinite("training loss"));
        }
        curve.push(value);
        let reached = stop_factor.is_some_and(|f| value <= f * curve[0]);
        if reached || epochs == cap {
            break;
        }
        re.step(&a_re)?;
        im.step(&a_im)?;
        epochs += 1;
    }
    Ok(TrainOutcome { epochs, curve })
}

struct LsqOutcome {
    diagnostics: LsqDiagnostics,
    omega_re: Vec<f64>,
    omega_im: Vec<f64>,
}

fn least_squares(setup: &Setup, re: &SubspaceNetwork, im: &SubspaceNetwork, options: AssemblyOptions) -> Result<LsqOutcome> {
    let tape_re = re.forward(&setup.points);
    let tape_im = im.forward(&setup.points);
    let sys = assemble(tape_re.basis(), tape_im.basis(), &setup.problem, options)?;
    let sol = solve_split(&sys, re.subspace_width())?;
    let diagnostics = LsqDiagnostics {
        residual_norm: sol.residual_norm,
        cond_estimate: sol.cond_estimate,
        omega_norm: sol.omega_norm,
        rank: sol.rank,
        objective: sol.residual_norm * sol.residual_norm,
        objective_at_ones: sys.objective(&vec![1.0; sys.cols])?,
    };
    Ok(LsqOutcome { diagnostics, omega_re: sol.omega_re().to_vec(), omega_im: sol.omega_im().to_vec() })
}

fn evaluate(setup: &Setup, re: &SubspaceNetwork, im: &SubspaceNetwork, w_re: &[f64], w_im: &[f64]) -> Result<(JetField, JetField, ErrorReport)> {
    let f_re = re.forward(&setup.points).combine(w_re);
    let f_im = im.forward(&setup.points).combine(w_im);
    let errors = setup.errors(&f_re, &f_im)?;
    Ok((f_re, f_im, errors))
}

fn init_pair(seed: u64, shape: &NetworkShape, first_stream: u64) -> Result<(SubspaceNetwork, SubspaceNetwork)> {
    Ok((
        SubspaceNetwork::init(derive_seed(seed, first_stream), shape)?,
        SubspaceNetwork::init(derive_seed(seed, first_stream + 1), shape)?,
    ))
}

/// SNN: train θ with `ω = 1` on the scattering loss, then one least-squares solve.
pub fn run_snn(config: &AoSnnConfig) -> Result<Solution> {
    let mut cfg = config.clone();
    cfg.k = 0;
    let mut sol = run_ao_snn(&cfg)?;
    sol.method = Method::Snn;
    Ok(sol)
}

pub fn run_ao_snn(config: &AoSnnConfig) -> Result<Solution> {
    run_ao_snn_observed(config, &mut |_| Ok(()))
}

/// AO-SNN with a callback after every completed stage.
pub fn run_ao_snn_observed(config: &AoSnnConfig, observer: &mut Observer<'_>) -> Result<Solution> {
    config.validate()?;
    let setup = Setup::new(&config.problem, config.counts).map_err(|e| e.in_stage("setup"))?;
    let (mut net_re, mut net_im) = init_pair(config.seed, &config.shape, 0)?;
    let m = config.shape.subspace;
    let mut history = Vec::with_capacity(config.k + 1);
    let mut wall_seconds = Vec::with_capacity(config.k + 1);

    let start = Instant::now();
    let (mut ones_re, mut ones_im) = (vec![1.0; m], vec![1.0; m]);
    let outcome = {
        let mut re = Part::new(&mut net_re, &mut ones_re, config.learning_rate, false);
        let mut im = Part::new(&mut net_im, &mut ones_im, config.learning_rate, false);
        train(&mut re, &mut im, &setup.points, config.bootstrap_epochs, None, |a, b| {
            scatter_loss_adjoint(a, b, &setup.problem)
        })
        .map_err(|e| e.in_stage("bootstrap training"))?
    };
    let lsq = least_squares(&setup, &net_re, &net_im, config.assembly).map_err(|e| e.in_stage("bootstrap least squares"))?;
    let (mut omega_re, mut omega_im) = (lsq.omega_re, lsq.omega_im);
    let (mut f_re, mut f_im, errors) = evaluate(&setup, &net_re, &net_im, &omega_re, &omega_im)?;
    history.push(StageRecord {
        stage: 0,
        kind: StageKind::Bootstrap,
        epochs: outcome.epochs,
        initial_loss: outcome.curve[0],
        final_loss: *outcome.curve.last().expect("curve is never empty"),
        eta: 0.0,
        sigma: 1.0,
        lsq: Some(lsq.diagnostics),
        errors,
        loss_curve: outcome.curve,
    });
    wall_seconds.push(start.elapsed().as_secs_f64());
    observer(StageView { record: &history[0], net_re: &net_re, net_im: &net_im, omega_re: &omega_re, omega_im: &omega_im })?;

    let n_metric = if config.metric_on_boundary { setup.points.len() } else { setup.problem.set.n_interior() };
    for k in 1..=config.k {
        let start = Instant::now();
        let stage = format!("alternation {k}");
        let weights = config.weights(k);
        let snapshot = SnapshotField { re: f_re.slice(0, n_metric), im: f_im.slice(0, n_metric) };
        let points = if weights.sigma > 0.0 { &setup.points[..] } else { &setup.points[..n_metric] };
        let problem = (weights.sigma > 0.0).then_some(&setup.problem);
        let (mut ones_re, mut ones_im) = (vec![1.0; m], vec![1.0; m]);
        let outcome = {
            let mut re = Part::new(&mut net_re, &mut ones_re, config.learning_rate, false);
            let mut im = Part::new(&mut net_im, &mut ones_im, config.learning_rate, false);
            train(&mut re, &mut im, points, config.iteration_epochs, Some(config.stop_factor), |a, b| {
                mixed_loss_adjoint(a, b, &snapshot, &weights, problem)
            })
            .map_err(|e| e.in_stage(format!("{stage} training")))?
        };
        let lsq = least_squares(&setup, &net_re, &net_im, config.assembly).map_err(|e| e.in_stage(format!("{stage} least squares")))?;
        omega_re = lsq.omega_re;
        omega_im = lsq.omega_im;
        let (a, b, errors) = evaluate(&setup, &net_re, &net_im, &omega_re, &omega_im)?;
        f_re = a;
        f_im = b;
        history.push(StageRecord {
            stage: k,
            kind: StageKind::Alternation,
            epochs: outcome.epochs,
            initial_loss: outcome.curve[0],
            final_loss: *outcome.curve.last().expect("curve is never empty"),
            eta: weights.eta,
            sigma: weights.sigma,
            lsq: Some(lsq.diagnostics),
            errors,
            loss_curve: outcome.curve,
        });
        wall_seconds.push(start.elapsed().as_secs_f64());
        observer(StageView { record: &history[k], net_re: &net_re, net_im: &net_im, omega_re: &omega_re, omega_im: &omega_im })?;
    }
    Ok(Solution { method: Method::AoSnn, net_re, net_im, omega_re, omega_im, history, wall_seconds })
}

/// PINN baseline: θ and ω of both parts trained jointly by Adam on the
/// scattering loss for `pinn_epochs` epochs; no least squares.
pub fn run_pinn(config: &AoSnnConfig) -> Result<Solution> {
    run_pinn_observed(config, &mut |_| Ok(()))
}

pub fn run_pinn_observed(config: &AoSnnConfig, observer: &mut Observer<'_>) -> Result<Solution> {
    config.validate()?;
    let setup = Setup::new(&config.problem, config.counts).map_err(|e| e.in_stage("setup"))?;
    let (mut net_re, mut net_im) = init_pair(config.seed, &config.pinn_shape, 2)?;
    let m = config.pinn_shape.subspace;
    let limit = (6.0 / (m + 1) as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, 4));
    let mut omega_re: Vec<f64> = (0..m).map(|_| rng.random_range(-limit..limit)).collect();
    let mut omega_im: Vec<f64> = (0..m).map(|_| rng.random_range(-limit..limit)).collect();

    let start = Instant::now();
    let outcome = {
        let mut re = Part::new(&mut net_re, &mut omega_re, config.learning_rate, true);
        let mut im = Part::new(&mut net_im, &mut omega_im, config.learning_rate, true);
        train(&mut re, &mut im, &setup.points, config.pinn_epochs, None, |a, b| scatter_loss_adjoint(a, b, &setup.problem))
            .map_err(|e| e.in_stage("joint training"))?
    };
    let (_, _, errors) = evaluate(&setup, &net_re, &net_im, &omega_re, &omega_im)?;
    let record = StageRecord {
        stage: 0,
        kind: StageKind::Joint,
        epochs: outcome.epochs,
        initial_loss: outcome.curve[0],
        final_loss: *outcome.curve.last().expect("curve is never empty"),
        eta: 0.0,
        sigma: 1.0,
        lsq: None,
        errors,
        loss_curve: outcome.curve,
    };
    observer(StageView { record: &record, net_re: &net_re, net_im: &net_im, omega_re: &omega_re, omega_im: &omega_im })?;
    Ok(Solution {
        method: Method::Pinn,
        net_re,
        net_im,
        omega_re,
        omega_im,
        history: vec![record],
        wall_seconds: vec![start.elapsed().as_secs_f64()],
    })
}

pub fn run_method(config: &AoSnnConfig, method: Method, observer: &mut Observer<'_>) -> Result<Solution> {
    match method {
        Method::Pinn => run_pinn_observed(config, observer),
        Method::Snn => {
            let mut cfg = config.clone();
            cfg.k = 0;
            let mut sol = run_ao_snn_observed(&cfg, observer)?;
            sol.method = Method::Snn;
            Ok(sol)
        }
        Method::AoSnn => run_ao_snn_observed(config, observer),
    }
}
