//! Run configuration files (TOML).
//!
//! ```toml
//! [experiment]
//! id = "example1"
//! method = "ao-snn"      # pinn | snn | ao-snn
//! seed = 1
//!
//! [problem]
//! kappa = 5.0            # required
//! bc = "sound-soft"      # sound-soft | sound-hard | impedance
//! ```
//!
//! Every other key has a default; unknown keys are rejected.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::CollocationCounts;
use crate::lsq::{AssemblyOptions, Cutoff};
use crate::net::NetworkShape;
use crate::oracle::{BoundaryCondition, FieldKind};
use crate::solver::{AoSnnConfig, Method, ProblemConfig, Schedule};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub experiment: ExperimentSection,
    pub problem: ProblemSection,
    #[serde(default)]
    pub collocation: CollocationSection,
    #[serde(default)]
    pub network: NetworkSection,
    #[serde(default)]
    pub training: TrainingSection,
    #[serde(default)]
    pub lsq: LsqSection,
    #[serde(default)]
    pub export: ExportSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSection {
    pub id: String,
    pub method: Method,
    pub seed: u64,
    /// Output directory, relative to the output root unless absolute.
    pub output_dir: Option<String>,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self { id: "run".into(), method: Method::AoSnn, seed: 0, output_dir: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BcName {
    SoundSoft,
    SoundHard,
    Impedance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub kappa: f64,
    #[serde(default = "default_obstacle_radius")]
    pub obstacle_radius: f64,
    #[serde(default = "default_tbc_radius")]
    pub tbc_radius: f64,
    #[serde(default = "default_bc")]
    pub bc: BcName,
    /// Impedance coefficient `λ`; only read when `bc = "impedance"`.
    #[serde(default = "default_impedance")]
    pub impedance: f64,
    #[serde(default = "default_field")]
    pub field: FieldKind,
    #[serde(default = "default_dtn_order")]
    pub dtn_order: usize,
}

fn default_obstacle_radius() -> f64 {
    0.5
}
fn default_tbc_radius() -> f64 {
    1.0
}
fn default_bc() -> BcName {
    BcName::SoundSoft
}
fn default_impedance() -> f64 {
    1.0
}
fn default_field() -> FieldKind {
    FieldKind::Monopole
}
fn default_dtn_order() -> usize {
    20
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CollocationSection {
    pub n_radial: usize,
    pub n_angular: usize,
    pub n_obstacle: usize,
    pub n_tbc: usize,
}

impl Default for CollocationSection {
    fn default() -> Self {
        Self { n_radial: 16, n_angular: 64, n_obstacle: 64, n_tbc: 64 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkSection {
    pub hidden: Vec<usize>,
    pub subspace: usize,
    pub pinn_hidden: Vec<usize>,
    pub pinn_subspace: usize,
}

impl Default for NetworkSection {
    fn default() -> Self {
        Self { hidden: vec![40, 40, 40], subspace: 600, pinn_hidden: vec![100, 100, 100], pinn_subspace: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingSection {
    /// Alternation count; ignored by `snn` and `pinn`.
    pub k: Option<usize>,
    pub eta: Schedule,
    pub sigma: Schedule,
    pub gamma: usize,
    pub bootstrap_epochs: usize,
    pub iteration_epochs: usize,
    pub stop_factor: f64,
    pub learning_rate: f64,
    pub pinn_epochs: usize,
    pub metric_on_boundary: bool,
}

impl Default for TrainingSection {
    fn default() -> Self {
        Self {
            k: None,
            eta: Schedule::Constant(1.0),
            sigma: Schedule::Constant(0.0),
            gamma: 2,
            bootstrap_epochs: 1000,
            iteration_epochs: 50_000,
            stop_factor: 0.1,
            learning_rate: 1e-3,
            pinn_epochs: 10_000,
            metric_on_boundary: false,
        }
    }
}

pub const DEFAULT_K: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LsqSection {
    pub row_scaling: bool,
    pub column_equilibration: bool,
    pub cutoff: Cutoff,
}

impl Default for LsqSection {
    fn default() -> Self {
        let d = AssemblyOptions::default();
        Self { row_scaling: d.row_scaling, column_equilibration: d.column_equilibration, cutoff: d.cutoff }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ExportSection {
    /// Field grid `"<n_r>x<n_θ>"` written next to the summary.
    pub field_grid: Option<String>,
    /// Write the final least-squares system.
    pub matrix_dump: bool,
    /// Write a checkpoint after every stage, not only the last.
    pub stage_checkpoints: bool,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("run configurations always serialise")
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(grid) = &self.export.field_grid {
            parse_grid(grid)?;
        }
        if self.experiment.id.is_empty() || self.experiment.id.contains(['/', '\\']) {
            return Err(Error::Config(format!("experiment.id {:?} must be a plain name", self.experiment.id)));
        }
        self.solver_config().validate().map_err(|e| Error::Config(e.to_string()))
    }

    pub fn k(&self) -> usize {
        match self.experiment.method {
            Method::AoSnn => self.training.k.unwrap_or(DEFAULT_K),
            Method::Snn | Method::Pinn => 0,
        }
    }

    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.experiment.method != Method::AoSnn && self.training.k.is_some() {
            out.push(format!("training.k is ignored for method {}", self.experiment.method.label()));
        }
        out
    }

    pub fn bc(&self) -> BoundaryCondition {
        match self.problem.bc {
            BcName::SoundSoft => BoundaryCondition::SoundSoft,
            BcName::SoundHard => BoundaryCondition::SoundHard,
            BcName::Impedance => BoundaryCondition::Impedance { lambda: self.problem.impedance },
        }
    }

    pub fn solver_config(&self) -> AoSnnConfig {
        let p = &self.problem;
        let c = &self.collocation;
        let t = &self.training;
        AoSnnConfig {
            problem: ProblemConfig {
                kappa: p.kappa,
                obstacle_radius: p.obstacle_radius,
                tbc_radius: p.tbc_radius,
                bc: self.bc(),
                field: p.field,
                dtn_order: p.dtn_order,
            },
            counts: CollocationCounts { n_radial: c.n_radial, n_angular: c.n_angular, n_obstacle: c.n_obstacle, n_tbc: c.n_tbc },
            shape: NetworkShape::new(self.network.hidden.clone(), self.network.subspace),
            seed: self.experiment.seed,
            k: self.k(),
            eta: t.eta.clone(),
            sigma: t.sigma.clone(),
            gamma: t.gamma,
            bootstrap_epochs: t.bootstrap_epochs,
            iteration_epochs: t.iteration_epochs,
            stop_factor: t.stop_factor,
            learning_rate: t.learning_rate,
            metric_on_boundary: t.metric_on_boundary,
            assembly: AssemblyOptions {
                row_scaling: self.lsq.row_scaling,
                column_equilibration: self.lsq.column_equilibration,
                cutoff: self.lsq.cutoff,
            },
            pinn_shape: NetworkShape::new(self.network.pinn_hidden.clone(), self.network.pinn_subspace),
            pinn_epochs: t.pinn_epochs,
        }
    }
}

/// Parses `"<n_r>x<n_θ>"`.
pub fn parse_grid(text: &str) -> Result<(usize, usize)> {
    let bad = || Error::Config(format!("grid {text:?} is not of the form <n_r>x<n_theta>"));
    let (a, b) = text.split_once(['x', 'X']).ok_or_else(bad)?;
    let n_r: usize = a.trim().parse().map_err(|_| bad())?;
    let n_t: usize = b.trim().parse().map_err(|_| bad())?;
    if n_r == 0 || n_t == 0 {
        return Err(bad());
    }
    Ok((n_r, n_t))
}

/// Short axis names accepted by sweeps, mapped to their dotted keys.
const AXIS_ALIASES: &[(&str, &str)] = &[
    ("K", "training.k"),
    ("k", "training.k"),
    ("gamma", "training.gamma"),
    ("eta", "training.eta"),
    ("sigma", "training.sigma"),
    ("bc", "problem.bc"),
    ("kappa", "problem.kappa"),
    ("M", "network.subspace"),
    ("method", "experiment.method"),
    ("seed", "experiment.seed"),
];

pub fn resolve_axis(key: &str) -> String {
    AXIS_ALIASES.iter().find(|(a, _)| *a == key).map_or_else(|| key.to_string(), |(_, full)| full.to_string())
}

/// Parses a sweep value as a TOML literal, falling back to a bare string.
pub fn parse_value(text: &str) -> toml::Value {
    let doc = format!("v = {text}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key was just written"),
        Err(_) => toml::Value::String(text.to_string()),
    }
}

/// Returns `text` with the dotted `key` set to `value`; the key must name a
/// configuration field.
pub fn with_override(text: &str, key: &str, value: toml::Value) -> Result<RunConfig> {
    let mut doc: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
    let path: Vec<&str> = key.split('.').collect();
    if path.len() != 2 {
        return Err(Error::Config(format!("axis key {key:?} must look like section.field")));
    }
    let known = toml::Table::try_from(RunConfig::template()).expect("template serialises");
    let section_known = known.get(path[0]).and_then(|v| v.as_table());
    let field_known = section_known.is_some_and(|s| s.contains_key(path[1]) || optional_field(path[0], path[1]));
    if !field_known {
        return Err(Error::Config(format!("unknown axis key {key:?}")));
    }
    let section = doc
        .entry(path[0].to_string())
        .or_insert_with(|| toml::Value::Table(toml::Table::new()))
        .as_table_mut()
        .ok_or_else(|| Error::Config(format!("{} is not a section", path[0])))?;
    section.insert(path[1].to_string(), value);
    let cfg: RunConfig = toml::Value::Table(doc).try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Fields that are `None` by default and therefore absent from the template.
fn optional_field(section: &str, field: &str) -> bool {
    matches!((section, field), ("training", "k") | ("experiment", "output_dir") | ("export", "field_grid"))
}

impl RunConfig {
    fn template() -> Self {
        Self {
            experiment: ExperimentSection::default(),
            problem: ProblemSection {
                kappa: 1.0,
                obstacle_radius: default_obstacle_radius(),
                tbc_radius: default_tbc_radius(),
                bc: default_bc(),
                impedance: default_impedance(),
                field: default_field(),
                dtn_order: default_dtn_order(),
            },
            collocation: CollocationSection::default(),
            network: NetworkSection::default(),
            training: TrainingSection::default(),
            lsq: LsqSection::default(),
            export: ExportSection::default(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[problem]\nkappa = 5.0\n";

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = RunConfig::from_toml_str(MINIMAL).unwrap();
        assert_eq!(cfg.k(), DEFAULT_K);
        assert_eq!(cfg.solver_config().shape, NetworkShape::new(vec![40, 40, 40], 600));
        assert!(cfg.warnings().is_empty());
        let back = RunConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn missing_kappa_names_the_key() {
        let err = RunConfig::from_toml_str("[problem]\nbc = \"sound-hard\"\n").unwrap_err();
        assert!(err.is_config());
        assert!(err.to_string().contains("kappa"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected_with_a_line() {
        let err = RunConfig::from_toml_str("[problem]\nkappa = 5.0\n\n[training]\nepocs = 3\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("epocs") && msg.contains("line 5"), "{msg}");
    }

    #[test]
    fn k_is_ignored_for_snn() {
        let cfg = RunConfig::from_toml_str("[experiment]\nmethod = \"snn\"\n[problem]\nkappa = 5.0\n[training]\nk = 3\n").unwrap();
        assert_eq!(cfg.k(), 0);
        assert_eq!(cfg.warnings().len(), 1);
    }

    #[test]
    fn schedules_parse_as_scalar_or_list() {
        let cfg = RunConfig::from_toml_str("[problem]\nkappa = 5.0\n[training]\neta = [1.0, 0.5]\nsigma = 1\n").unwrap();
        assert_eq!(cfg.training.eta, Schedule::PerIteration(vec![1.0, 0.5]));
        assert_eq!(cfg.training.sigma.at(4), 1.0);
    }

    #[test]
    fn invalid_values_are_config_errors() {
        let err = RunConfig::from_toml_str("[problem]\nkappa = -1.0\n").unwrap_err();
        assert!(err.is_config());
        let err = RunConfig::from_toml_str("[problem]\nkappa = 5.0\n[export]\nfield_grid = \"4by8\"\n").unwrap_err();
        assert!(err.is_config());
    }

    #[test]
    fn overrides() {
        let cfg = with_override(MINIMAL, &resolve_axis("K"), parse_value("3")).unwrap();
        assert_eq!(cfg.k(), 3);
        let cfg = with_override(MINIMAL, &resolve_axis("bc"), parse_value("impedance")).unwrap();
        assert_eq!(cfg.bc(), BoundaryCondition::Impedance { lambda: 1.0 });
        assert!(with_override(MINIMAL, "training.nope", parse_value("1")).unwrap_err().is_config());
        assert!(with_override(MINIMAL, "gamma", parse_value("1")).unwrap_err().is_config());
        assert_eq!(parse_grid("2x4").unwrap(), (2, 4));
    }
}
