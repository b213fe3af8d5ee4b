//! Running configured experiments and writing their results.
//!
//! A run directory holds `summary.json`, `history.csv`, `loss.csv` and
//! `final.ckpt`, plus `stage-<k>.ckpt`, `system.bin` and `field.csv` when the
//! corresponding export flags are set.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::{parse_grid, parse_value, resolve_axis, with_override, RunConfig};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::lsq::assemble;
use crate::net::SubspaceNetwork;
use crate::oracle::ExactField;
use crate::solver::{
    derive_seed, run_method, Method, Setup, Solution, StageKind, StageRecord, StageView, ADAM_BETA1, ADAM_BETA2,
    ADAM_EPSILON,
};

pub const OUTPUT_ROOT_ENV: &str = "AOSNN_OUTPUT_ROOT";
pub const SUMMARY_SCHEMA: &str = "aosnn.summary.v1";
pub const HISTORY_SCHEMA: &str = "aosnn.history.v1";
pub const LOSS_SCHEMA: &str = "aosnn.loss.v1";
pub const SWEEP_SCHEMA: &str = "aosnn.sweep.v1";
pub const FIELD_SCHEMA: &str = "aosnn.field.v1";

/// Output root: `$AOSNN_OUTPUT_ROOT`, or `./runs`.
pub fn output_root() -> PathBuf {
    std::env::var_os(OUTPUT_ROOT_ENV).map_or_else(|| PathBuf::from("runs"), PathBuf::from)
}

/// Directory of a run under `root`.
pub fn run_dir(config: &RunConfig, root: &Path) -> PathBuf {
    match &config.experiment.output_dir {
        Some(dir) if Path::new(dir).is_absolute() => PathBuf::from(dir),
        Some(dir) => root.join(dir),
        None => root.join(&config.experiment.id),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConstants {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub stage: usize,
    pub kind: StageKind,
    pub epochs: usize,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub eta: f64,
    pub sigma: f64,
    pub relative_l2: f64,
    pub h0: f64,
    pub h1: f64,
    pub h2: f64,
    pub omega_norm: f64,
    pub cond_estimate: Option<f64>,
    pub residual_norm: Option<f64>,
    pub rank: Option<usize>,
    pub wall_seconds: f64,
}

impl IterationRecord {
    fn new(record: &StageRecord, omega_norm: f64, wall_seconds: f64) -> Self {
        Self {
            stage: record.stage,
            kind: record.kind,
            epochs: record.epochs,
            initial_loss: record.initial_loss,
            final_loss: record.final_loss,
            eta: record.eta,
            sigma: record.sigma,
            relative_l2: record.errors.relative_l2,
            h0: record.errors.h0,
            h1: record.errors.h1,
            h2: record.errors.h2,
            omega_norm: record.lsq.map_or(omega_norm, |l| l.omega_norm),
            cond_estimate: record.lsq.map(|l| l.cond_estimate),
            residual_norm: record.lsq.map(|l| l.residual_norm),
            rank: record.lsq.map(|l| l.rank),
            wall_seconds,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub schema: String,
    pub library_version: String,
    pub experiment_id: String,
    pub method: Method,
    pub seed: u64,
    /// Seeds of the derived streams used by the selected method.
    pub derived_seeds: Vec<u64>,
    pub adam: AdamConstants,
    pub warnings: Vec<String>,
    pub config: RunConfig,
    pub records: Vec<IterationRecord>,
}

impl RunSummary {
    pub fn final_record(&self) -> Option<&IterationRecord> {
        self.records.last()
    }

    pub fn total_epochs(&self) -> usize {
        self.records.iter().map(|r| r.epochs).sum()
    }

    /// The summary with wall-clock times zeroed; everything left is
    /// reproducible from the configuration.
    pub fn numerics(&self) -> RunSummary {
        let mut out = self.clone();
        for r in &mut out.records {
            r.wall_seconds = 0.0;
        }
        out
    }

    pub fn history_csv(&self) -> String {
        let mut s = format!("# {HISTORY_SCHEMA}\n");
        s.push_str("stage,kind,epochs,initial_loss,final_loss,eta,sigma,relative_l2,h0,h1,h2,omega_norm,cond_estimate,residual_norm,rank\n");
        for r in &self.records {
            let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:e}"));
            let _ = writeln!(
                s,
                "{},{},{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{},{},{}",
                r.stage,
                kind_label(r.kind),
                r.epochs,
                r.initial_loss,
                r.final_loss,
                r.eta,
                r.sigma,
                r.relative_l2,
                r.h0,
                r.h1,
                r.h2,
                r.omega_norm,
                opt(r.cond_estimate),
                opt(r.residual_norm),
                r.rank.map_or(String::new(), |v| v.to_string()),
            );
        }
        s
    }
}

fn kind_label(kind: StageKind) -> &'static str {
    match kind {
        StageKind::Bootstrap => "bootstrap",
        StageKind::Alternation => "alternation",
        StageKind::Joint => "joint",
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(io_err(path))
}

fn derived_seeds(method: Method, seed: u64) -> Vec<u64> {
    let streams: &[u64] = match method {
        Method::Pinn => &[2, 3, 4],
        Method::Snn | Method::AoSnn => &[0, 1],
    };
    streams.iter().map(|&s| derive_seed(seed, s)).collect()
}

fn omega_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter().chain(b).map(|x| x * x).sum::<f64>().sqrt()
}

/// Runs `config` and writes its outputs into `dir`. `log` receives
/// progress and warning lines.
pub fn run(config: &RunConfig, dir: &Path, log: &mut dyn FnMut(&str)) -> Result<RunSummary> {
    config.validate()?;
    let warnings = config.warnings();
    for w in &warnings {
        log(&format!("warning: {w}"));
    }
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let solver_cfg = config.solver_config();
    let method = config.experiment.method;
    let stage_checkpoints = config.export.stage_checkpoints;

    let mut observer = |view: StageView<'_>| -> Result<()> {
        let r = view.record;
        log(&format!(
            "stage {} ({}): epochs {} loss {:.3e} -> {:.3e}, relative l2 {:.3e}",
            r.stage,
            kind_label(r.kind),
            r.epochs,
            r.initial_loss,
            r.final_loss,
            r.errors.relative_l2
        ));
        if stage_checkpoints {
            let ckpt = Checkpoint {
                config: config.clone(),
                body: CheckpointBody::Solution {
                    method,
                    net_re: view.net_re.clone(),
                    net_im: view.net_im.clone(),
                    omega_re: view.omega_re.to_vec(),
                    omega_im: view.omega_im.to_vec(),
                },
            };
            ckpt.write_file(&dir.join(format!("stage-{}.ckpt", r.stage)))?;
        }
        Ok(())
    };
    let solution = run_method(&solver_cfg, method, &mut observer)?;

    let norm = omega_norm(&solution.omega_re, &solution.omega_im);
    let records = solution
        .history
        .iter()
        .zip(&solution.wall_seconds)
        .map(|(r, &t)| IterationRecord::new(r, norm, t))
        .collect();
    let summary = RunSummary {
        schema: SUMMARY_SCHEMA.into(),
        library_version: env!("CARGO_PKG_VERSION").into(),
        experiment_id: config.experiment.id.clone(),
        method,
        seed: config.experiment.seed,
        derived_seeds: derived_seeds(method, config.experiment.seed),
        adam: AdamConstants { beta1: ADAM_BETA1, beta2: ADAM_BETA2, epsilon: ADAM_EPSILON },
        warnings,
        config: config.clone(),
        records,
    };

    let json = serde_json::to_string_pretty(&summary).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    write_file(&dir.join("summary.json"), json.as_bytes())?;
    write_file(&dir.join("history.csv"), summary.history_csv().as_bytes())?;
    write_file(&dir.join("loss.csv"), loss_csv(&solution.history).as_bytes())?;

    let ckpt = Checkpoint::from_solution(config.clone(), &solution);
    let ckpt_path = dir.join("final.ckpt");
    ckpt.write_file(&ckpt_path)?;

    if config.export.matrix_dump {
        let setup = Setup::new(&solver_cfg.problem, solver_cfg.counts)?;
        let tape_re = solution.net_re.forward(&setup.points);
        let tape_im = solution.net_im.forward(&setup.points);
        let sys = assemble(tape_re.basis(), tape_im.basis(), &setup.problem, solver_cfg.assembly)?;
        let path = dir.join("system.bin");
        let file = File::create(&path).map_err(io_err(&path))?;
        sys.write_binary(BufWriter::new(file))?;
    }
    if let Some(grid) = &config.export.field_grid {
        let (n_r, n_t) = parse_grid(grid)?;
        write_file(&dir.join("field.csv"), export_field(&ckpt, n_r, n_t)?.as_bytes())?;
    }
    log(&format!("wrote {}", dir.display()));
    Ok(summary)
}

fn loss_csv(history: &[StageRecord]) -> String {
    let mut s = format!("# {LOSS_SCHEMA}\nstage,epoch,loss\n");
    for r in history {
        for (e, v) in r.loss_curve.iter().enumerate() {
            let _ = writeln!(s, "{},{},{:e}", r.stage, e, v);
        }
    }
    s
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub summaries: Vec<RunSummary>,
    pub aggregate_csv: String,
}

/// Runs one configuration per value of the dotted `axis` key. Run `i` uses
/// seed `base + i` unless the axis is the seed itself.
pub fn sweep(config_text: &str, axis: &str, values: &[String], root: &Path, log: &mut dyn FnMut(&str)) -> Result<SweepOutcome> {
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    let key = resolve_axis(axis);
    let base = RunConfig::from_toml_str(config_text)?;
    let configs = values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let mut cfg = with_override(config_text, &key, parse_value(v))?;
            if key != "experiment.seed" {
                cfg.experiment.seed = base.experiment.seed + i as u64;
            }
            cfg.experiment.output_dir = None;
            Ok(cfg)
        })
        .collect::<Result<Vec<_>>>()?;

    let sweep_dir = run_dir(&base, root).join(format!("sweep-{key}"));
    let mut summaries = Vec::with_capacity(configs.len());
    let mut csv = format!("# {SWEEP_SCHEMA}\n");
    csv.push_str("index,axis,value,seed,method,k,total_epochs,relative_l2,h0,h1,h2,omega_norm,cond_estimate\n");
    for (i, (cfg, value)) in configs.iter().zip(values).enumerate() {
        log(&format!("sweep {key} = {value} ({}/{})", i + 1, configs.len()));
        let summary = run(cfg, &sweep_dir.join(format!("{i:03}")), log)?;
        let last = summary.final_record().expect("runs record at least one stage");
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{:e},{:e},{:e},{:e},{:e},{}",
            i,
            key,
            csv_field(value),
            cfg.experiment.seed,
            cfg.experiment.method.label(),
            cfg.k(),
            summary.total_epochs(),
            last.relative_l2,
            last.h0,
            last.h1,
            last.h2,
            last.omega_norm,
            last.cond_estimate.map_or(String::new(), |c| format!("{c:e}")),
        );
        summaries.push(summary);
    }
    fs::create_dir_all(&sweep_dir).map_err(io_err(&sweep_dir))?;
    write_file(&sweep_dir.join("sweep.csv"), csv.as_bytes())?;
    Ok(SweepOutcome { summaries, aggregate_csv: csv })
}

fn csv_field(v: &str) -> String {
    if v.contains([',', '"', '\n']) {
        format!("\"{}\"", v.replace('"', "\"\""))
    } else {
        v.to_string()
    }
}

const CKPT_MAGIC: &[u8; 4] = b"AOCK";
const CKPT_VERSION: u32 = 1;

#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum CheckpointBody {
    Solution { method: Method, net_re: SubspaceNetwork, net_im: SubspaceNetwork, omega_re: Vec<f64>, omega_im: Vec<f64> },
    /// Evaluates the exact field; used to check the export path itself.
    ExactOracle,
}

/// A trained (or exact) solution together with the configuration that
/// produced it.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub config: RunConfig,
    pub body: CheckpointBody,
}

fn method_id(m: Method) -> u8 {
    match m {
        Method::Pinn => 0,
        Method::Snn => 1,
        Method::AoSnn => 2,
    }
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(|e| Error::Snapshot(e.to_string()))?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(|e| Error::Snapshot(e.to_string()))?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64s(r: &mut impl Read) -> Result<Vec<f64>> {
    let n = read_u64(r)? as usize;
    if n > 1 << 28 {
        return Err(Error::Snapshot(format!("implausible vector length {n}")));
    }
    (0..n).map(|_| read_u64(r).map(f64::from_bits)).collect()
}

fn write_f64s(w: &mut impl Write, v: &[f64]) -> std::io::Result<()> {
    w.write_all(&(v.len() as u64).to_le_bytes())?;
    for x in v {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

impl Checkpoint {
    pub fn from_solution(config: RunConfig, solution: &Solution) -> Self {
        Self {
            config,
            body: CheckpointBody::Solution {
                method: solution.method,
                net_re: solution.net_re.clone(),
                net_im: solution.net_im.clone(),
                omega_re: solution.omega_re.clone(),
                omega_im: solution.omega_im.clone(),
            },
        }
    }

    pub fn exact(config: RunConfig) -> Self {
        Self { config, body: CheckpointBody::ExactOracle }
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        let io = Error::Io;
        let text = self.config.to_toml_string();
        w.write_all(CKPT_MAGIC).map_err(io)?;
        w.write_all(&CKPT_VERSION.to_le_bytes()).map_err(io)?;
        w.write_all(&(text.len() as u64).to_le_bytes()).map_err(io)?;
        w.write_all(text.as_bytes()).map_err(io)?;
        match &self.body {
            CheckpointBody::ExactOracle => w.write_all(&[0xff]).map_err(io)?,
            CheckpointBody::Solution { method, net_re, net_im, omega_re, omega_im } => {
                w.write_all(&[method_id(*method)]).map_err(io)?;
                net_re.write_snapshot(&mut w)?;
                net_im.write_snapshot(&mut w)?;
                write_f64s(&mut w, omega_re).map_err(io)?;
                write_f64s(&mut w, omega_im).map_err(io)?;
            }
        }
        w.flush().map_err(io)
    }

    pub fn read<R: Read>(mut r: R) -> Result<Self> {
        let snap = |e: std::io::Error| Error::Snapshot(e.to_string());
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(snap)?;
        if &magic != CKPT_MAGIC {
            return Err(Error::Snapshot("not a checkpoint file".into()));
        }
        let version = read_u32(&mut r)?;
        if version != CKPT_VERSION {
            return Err(Error::Snapshot(format!("unsupported checkpoint version {version}")));
        }
        let len = read_u64(&mut r)? as usize;
        if len > 1 << 24 {
            return Err(Error::Snapshot(format!("implausible configuration length {len}")));
        }
        let mut text = vec![0u8; len];
        r.read_exact(&mut text).map_err(snap)?;
        let text = String::from_utf8(text).map_err(|_| Error::Snapshot("configuration is not UTF-8".into()))?;
        let config = RunConfig::from_toml_str(&text).map_err(|e| Error::Snapshot(format!("embedded configuration: {e}")))?;
        let mut tag = [0u8; 1];
        r.read_exact(&mut tag).map_err(snap)?;
        let body = match tag[0] {
            0xff => CheckpointBody::ExactOracle,
            id @ 0..=2 => {
                let method = [Method::Pinn, Method::Snn, Method::AoSnn][id as usize];
                let net_re = SubspaceNetwork::read_snapshot(&mut r)?;
                let net_im = SubspaceNetwork::read_snapshot(&mut r)?;
                let omega_re = read_f64s(&mut r)?;
                let omega_im = read_f64s(&mut r)?;
                if omega_re.len() != net_re.subspace_width() || omega_im.len() != net_im.subspace_width() {
                    return Err(Error::Snapshot("coefficient length does not match the network".into()));
                }
                CheckpointBody::Solution { method, net_re, net_im, omega_re, omega_im }
            }
            other => return Err(Error::Snapshot(format!("unknown checkpoint body {other}"))),
        };
        Ok(Self { config, body })
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(io_err(path))?;
        self.write(BufWriter::new(file))
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::Snapshot(format!("{}: {e}", path.display())))?;
        Self::read(BufReader::new(file))
    }

    pub fn exact_field(&self) -> Result<ExactField> {
        let p = &self.config.problem;
        ExactField::new(p.field, p.kappa, p.obstacle_radius)
    }

    /// Values of the stored solution at `points`.
    pub fn values(&self, points: &[Point]) -> Result<Vec<Complex64>> {
        match &self.body {
            CheckpointBody::ExactOracle => {
                let exact = self.exact_field()?;
                points.iter().map(|&p| exact.value(p)).collect()
            }
            CheckpointBody::Solution { net_re, net_im, omega_re, omega_im, .. } => {
                let re = net_re.forward(points).combine(omega_re);
                let im = net_im.forward(points).combine(omega_im);
                Ok(re.values().iter().zip(im.values()).map(|(&a, &b)| Complex64::new(a, b)).collect())
            }
        }
    }
}

/// Polar grid over the annulus: `n_r` cell-centred radii times `n_θ`
/// equispaced angles, radius-major.
pub fn polar_grid(a: f64, r: f64, n_r: usize, n_t: usize) -> Vec<Point> {
    let mut pts = Vec::with_capacity(n_r * n_t);
    for i in 0..n_r {
        let rad = a + (i as f64 + 0.5) * (r - a) / n_r as f64;
        for j in 0..n_t {
            let t = 2.0 * PI * j as f64 / n_t as f64;
            pts.push([rad * t.cos(), rad * t.sin()]);
        }
    }
    pts
}

/// Grid file of the stored solution against the exact field.
pub fn export_field(ckpt: &Checkpoint, n_r: usize, n_t: usize) -> Result<String> {
    if n_r == 0 || n_t == 0 {
        return Err(Error::InvalidCount { what: "grid resolution", value: n_r.min(n_t), min: 1 });
    }
    let p = &ckpt.config.problem;
    let pts = polar_grid(p.obstacle_radius, p.tbc_radius, n_r, n_t);
    let numeric = ckpt.values(&pts)?;
    let exact = ckpt.exact_field()?;
    let mut s = format!("# {FIELD_SCHEMA}\nx,y,N_re,N_im,u_re,u_im,abs_error\n");
    for (pt, n) in pts.iter().zip(&numeric) {
        let u = exact.value(*pt)?;
        let _ = writeln!(s, "{:e},{:e},{:e},{:e},{:e},{:e},{:e}", pt[0], pt[1], n.re, n.im, u.re, u.im, (n - u).norm());
    }
    Ok(s)
}
