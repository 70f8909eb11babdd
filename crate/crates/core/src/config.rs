//! Experiment configuration files (TOML). Unknown keys are errors.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ansatz::AnsatzConfig;
use crate::error::{DvqeError, Result};
use crate::lindblad::{
    cqed_model, current_observable, magnetization_observable, mean_current_observable, tfim_model, Axis,
    Boundary, CqedParams, Jump, LindbladModel, Observable,
};
use crate::measure::EigenMethod;
use crate::mitigate::MitigationSchedule;
use crate::optimize::OptimizerConfig;
use crate::oracle::{ScatterConfig, WidthScale};
use crate::pauli::PauliSum;
use crate::sim::NoiseConfig;

fn open() -> Boundary {
    Boundary::Open
}
fn periodic() -> Boundary {
    Boundary::Periodic
}
fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpSpec {
    /// Operator in the textual Pauli format.
    pub op: String,
    pub rate: f64,
    #[serde(default)]
    pub tag: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ModelSpec {
    Tfim {
        n_sites: usize,
        g: f64,
        gamma1: f64,
        gamma2: f64,
        #[serde(default = "open")]
        boundary: Boundary,
    },
    Cqed {
        n_sites: usize,
        mu: f64,
        gamma1: f64,
        gamma2: f64,
        theta: f64,
        #[serde(default = "one")]
        gamma3: f64,
        #[serde(default = "periodic")]
        boundary: Boundary,
    },
    Custom {
        n_sites: usize,
        hamiltonian: String,
        #[serde(default)]
        jumps: Vec<JumpSpec>,
    },
}

impl ModelSpec {
    pub fn n_sites(&self) -> usize {
        match *self {
            ModelSpec::Tfim { n_sites, .. }
            | ModelSpec::Cqed { n_sites, .. }
            | ModelSpec::Custom { n_sites, .. } => n_sites,
        }
    }

    pub fn build(&self) -> Result<LindbladModel> {
        match self {
            &ModelSpec::Tfim {
                n_sites,
                g,
                gamma1,
                gamma2,
                boundary,
            } => tfim_model(n_sites, g, gamma1, gamma2, boundary),
            &ModelSpec::Cqed {
                n_sites,
                mu,
                gamma1,
                gamma2,
                theta,
                gamma3,
                boundary,
            } => cqed_model(
                n_sites,
                &CqedParams {
                    mu,
                    gamma1,
                    gamma2,
                    theta,
                    gamma3,
                    boundary,
                },
            ),
            ModelSpec::Custom {
                n_sites,
                hamiltonian,
                jumps,
            } => {
                let h = PauliSum::from_text(hamiltonian)?;
                let jumps = jumps
                    .iter()
                    .map(|j| {
                        Ok(Jump {
                            op: PauliSum::from_text(&j.op)?,
                            rate: j.rate,
                            tag: j.tag.clone(),
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                LindbladModel::new(*n_sites, h, jumps)
            }
        }
    }

    /// Names accepted by [`ModelSpec::set_param`].
    pub fn param_names(&self) -> &'static [&'static str] {
        match self {
            ModelSpec::Tfim { .. } => &["g", "gamma1", "gamma2"],
            ModelSpec::Cqed { .. } => &["mu", "gamma1", "gamma2", "gamma3", "theta"],
            ModelSpec::Custom { .. } => &[],
        }
    }

    pub fn set_param(&mut self, name: &str, value: f64) -> Result<()> {
        let slot = match (self, name) {
            (ModelSpec::Tfim { g, .. }, "g") => g,
            (ModelSpec::Tfim { gamma1, .. } | ModelSpec::Cqed { gamma1, .. }, "gamma1") => gamma1,
            (ModelSpec::Tfim { gamma2, .. } | ModelSpec::Cqed { gamma2, .. }, "gamma2") => gamma2,
            (ModelSpec::Cqed { mu, .. }, "mu") => mu,
            (ModelSpec::Cqed { gamma3, .. }, "gamma3") => gamma3,
            (ModelSpec::Cqed { theta, .. }, "theta") => theta,
            (m, _) => {
                return Err(DvqeError::Config(format!(
                    "model has no parameter {name:?} (expected one of {:?})",
                    m.param_names()
                )))
            }
        };
        *slot = value;
        Ok(())
    }
}

/// Observable entry: a builtin name (`mx`, `my`, `mz`, `current`,
/// `current:<site>`) or a named Pauli sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ObservableSpec {
    Builtin(String),
    Custom { name: String, op: String },
}

impl ObservableSpec {
    pub fn build(&self, model: &ModelSpec) -> Result<Observable> {
        let n = model.n_sites();
        match self {
            ObservableSpec::Custom { name, op } => Observable::new(name.clone(), PauliSum::from_text(op)?),
            ObservableSpec::Builtin(name) => {
                let cqed = match model {
                    &ModelSpec::Cqed { theta, boundary, .. } => Some((theta, boundary)),
                    _ => None,
                };
                match name.as_str() {
                    "mx" => magnetization_observable(Axis::X, n),
                    "my" => magnetization_observable(Axis::Y, n),
                    "mz" => magnetization_observable(Axis::Z, n),
                    "current" => {
                        let (theta, b) = cqed.ok_or_else(|| {
                            DvqeError::Config("the current observable needs a cqed model".into())
                        })?;
                        mean_current_observable(n, theta, b)
                    }
                    other => {
                        let site = other
                            .strip_prefix("current:")
                            .and_then(|s| s.parse::<usize>().ok())
                            .ok_or_else(|| DvqeError::Config(format!("unknown observable {other:?}")))?;
                        let (theta, _) = cqed.ok_or_else(|| {
                            DvqeError::Config("the current observable needs a cqed model".into())
                        })?;
                        let o = current_observable(n, site, theta)?;
                        Observable::new(other, o.op().clone())
                    }
                }
            }
        }
    }
}

fn default_measure_shots() -> u64 {
    400
}
fn default_eigen_shots() -> u64 {
    100_000
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureConfig {
    /// Exact `Σ λ_q ⟨q|V†OV|q⟩` instead of sampling.
    #[serde(default = "default_true")]
    pub exact: bool,
    #[serde(default = "default_measure_shots")]
    pub shots: u64,
    #[serde(default = "default_eigen")]
    pub eigen: EigenMethod,
    #[serde(default = "default_eigen_shots")]
    pub eigen_shots: u64,
}

fn default_eigen() -> EigenMethod {
    EigenMethod::Statevector
}

impl Default for MeasureConfig {
    fn default() -> Self {
        Self {
            exact: true,
            shots: default_measure_shots(),
            eigen: default_eigen(),
            eigen_shots: default_eigen_shots(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub param: String,
    pub values: Vec<f64>,
}

/// Parameters held fixed while one angle is scanned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LandscapeBase {
    Zeros,
    Random,
    Optimized,
}

fn default_landscape_points() -> usize {
    41
}
fn default_landscape_base() -> LandscapeBase {
    LandscapeBase::Random
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LandscapeConfig {
    /// Index of the scanned parameter.
    #[serde(default)]
    pub param: usize,
    #[serde(default = "default_landscape_points")]
    pub points: usize,
    #[serde(default = "default_measure_shots")]
    pub shots: u64,
    #[serde(default = "default_landscape_base")]
    pub base: LandscapeBase,
}

impl Default for LandscapeConfig {
    fn default() -> Self {
        Self {
            param: 0,
            points: default_landscape_points(),
            shots: default_measure_shots(),
            base: default_landscape_base(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScatterSection {
    #[serde(default = "default_scatter_n")]
    pub n_list: Vec<usize>,
    #[serde(default = "default_scatter_samples")]
    pub samples: usize,
    #[serde(default = "default_width_lo")]
    pub width_lo: f64,
    #[serde(default = "default_width_hi")]
    pub width_hi: f64,
    #[serde(default = "default_scale")]
    pub scale: WidthScale,
}

fn default_scatter_n() -> Vec<usize> {
    ScatterConfig::default().n_list
}
fn default_scatter_samples() -> usize {
    ScatterConfig::default().samples
}
fn default_width_lo() -> f64 {
    ScatterConfig::default().width_range.0
}
fn default_width_hi() -> f64 {
    ScatterConfig::default().width_range.1
}
fn default_scale() -> WidthScale {
    ScatterConfig::default().scale
}

impl Default for ScatterSection {
    fn default() -> Self {
        Self {
            n_list: default_scatter_n(),
            samples: default_scatter_samples(),
            width_lo: default_width_lo(),
            width_hi: default_width_hi(),
            scale: default_scale(),
        }
    }
}

impl ScatterSection {
    pub fn to_config(&self) -> ScatterConfig {
        ScatterConfig {
            n_list: self.n_list.clone(),
            samples: self.samples,
            width_range: (self.width_lo, self.width_hi),
            scale: self.scale,
        }
    }
}

/// Optimizer keys as they appear in the file; noise and mitigation come from
/// their own sections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSection {
    #[serde(default)]
    pub n_points: Option<usize>,
    #[serde(default)]
    pub sweeps_max: Option<usize>,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub stderr_mult: Option<f64>,
    #[serde(default)]
    pub shots_per_term: Option<u64>,
    #[serde(default)]
    pub exact: Option<bool>,
    #[serde(default)]
    pub restarts: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Master seed; every random stream is derived from it.
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    pub model: ModelSpec,
    pub ansatz: Option<AnsatzConfig>,
    #[serde(default)]
    pub optimizer: Option<OptimizerSection>,
    #[serde(default)]
    pub noise: Option<NoiseConfig>,
    #[serde(default)]
    pub mitigation: Option<MitigationSchedule>,
    #[serde(default)]
    pub measure: MeasureConfig,
    #[serde(default)]
    pub observables: Vec<ObservableSpec>,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub landscape: LandscapeConfig,
    #[serde(default)]
    pub scatter: ScatterSection,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg: Self = toml::from_str(text).map_err(|e| DvqeError::Config(e.to_string()))?;
        let n = cfg.model.n_sites();
        if let Some(a) = cfg.ansatz.as_mut().filter(|a| a.n_sites == 0) {
            a.n_sites = n;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<(Self, String)> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| DvqeError::Config(format!("{}: {e}", path.display())))?;
        let cfg = Self::parse(&text).map_err(|e| match e {
            DvqeError::Config(m) => DvqeError::Config(format!("{}: {m}", path.display())),
            other => DvqeError::Config(format!("{}: {other}", path.display())),
        })?;
        Ok((cfg, text))
    }

    pub fn validate(&self) -> Result<()> {
        let cfg_err = |e: DvqeError| DvqeError::Config(e.to_string());
        let model = self.model.build().map_err(cfg_err)?;
        if let Some(a) = &self.ansatz {
            if a.n_sites != model.n_sites() {
                return Err(DvqeError::Config(format!(
                    "ansatz has {} sites but the model has {}",
                    a.n_sites,
                    model.n_sites()
                )));
            }
            let layout = a.layout().map_err(cfg_err)?;
            self.optimizer_config().validate(&layout).map_err(cfg_err)?;
            if self.landscape.param >= layout.len() {
                return Err(DvqeError::Config(format!(
                    "landscape parameter {} out of range (ansatz has {})",
                    self.landscape.param,
                    layout.len()
                )));
            }
        }
        if let Some(n) = &self.noise {
            n.validate().map_err(cfg_err)?;
        }
        if let Some(m) = &self.mitigation {
            m.validate().map_err(cfg_err)?;
        }
        if let Some(s) = &self.sweep {
            let mut m = self.model.clone();
            if s.values.is_empty() {
                return Err(DvqeError::Config("sweep needs at least one value".into()));
            }
            for &v in &s.values {
                m.set_param(&s.param, v)?;
                m.build().map_err(cfg_err)?;
            }
        }
        for o in &self.observables {
            o.build(&self.model).map_err(|e| match e {
                DvqeError::Config(_) => e,
                other => cfg_err(other),
            })?;
        }
        if self.measure.shots == 0 || self.landscape.shots == 0 || self.measure.eigen_shots == 0 {
            return Err(DvqeError::Config("shot counts must be at least 1".into()));
        }
        if self.landscape.points < 2 {
            return Err(DvqeError::Config("landscape needs at least 2 points".into()));
        }
        Ok(())
    }

    pub fn ansatz(&self) -> Result<&AnsatzConfig> {
        self.ansatz
            .as_ref()
            .ok_or_else(|| DvqeError::Config("this command needs an [ansatz] section".into()))
    }

    /// Effective optimizer settings, with noise and mitigation merged in.
    pub fn optimizer_config(&self) -> OptimizerConfig {
        let d = OptimizerConfig::default();
        let s = self.optimizer.clone().unwrap_or(OptimizerSection {
            n_points: None,
            sweeps_max: None,
            tol: None,
            stderr_mult: None,
            shots_per_term: None,
            exact: None,
            restarts: None,
        });
        OptimizerConfig {
            n_points: s.n_points.or(d.n_points),
            sweeps_max: s.sweeps_max.unwrap_or(d.sweeps_max),
            tol: s.tol.unwrap_or(d.tol),
            stderr_mult: s.stderr_mult.unwrap_or(d.stderr_mult),
            shots_per_term: s.shots_per_term.unwrap_or(d.shots_per_term),
            exact: s.exact.unwrap_or(d.exact),
            noise: self.noise,
            mitigation: self.mitigation.clone(),
            restarts: s.restarts.unwrap_or(d.restarts),
        }
    }

    pub fn observables(&self, model: &ModelSpec) -> Result<Vec<Observable>> {
        self.observables.iter().map(|o| o.build(model)).collect()
    }
}

/// Hex SHA-256 of the raw configuration text.
pub fn config_hash(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const TFIM: &str = r#"
seed = 7
observables = ["mx", "mz"]

[model]
kind = "tfim"
n_sites = 1
g = 0.5
gamma1 = 1.0
gamma2 = 0.5

[ansatz]
type = "decoupled"
d2 = 0

[optimizer]
restarts = 2
"#;

    #[test]
    fn parses_minimal_tfim() {
        let cfg = ExperimentConfig::parse(TFIM).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.model.n_sites(), 1);
        assert_eq!(cfg.ansatz().unwrap().n_sites, 1);
        assert_eq!(cfg.optimizer_config().restarts, 2);
        assert_eq!(cfg.observables.len(), 2);
        assert!(cfg.optimizer_config().exact);
    }

    #[test]
    fn unknown_keys_are_errors() {
        let bad = TFIM.replace("g = 0.5", "g = 0.5\ngg = 1.0");
        assert!(matches!(ExperimentConfig::parse(&bad), Err(DvqeError::Config(_))));
        let bad = TFIM.replace("restarts = 2", "restart = 2");
        assert!(ExperimentConfig::parse(&bad).is_err());
        let bad = TFIM.replace("seed = 7", "");
        assert!(ExperimentConfig::parse(&bad).is_err());
    }

    #[test]
    fn sweep_param_must_exist() {
        let good = format!("{TFIM}\n[sweep]\nparam = \"g\"\nvalues = [0.5, 1.0]\n");
        assert!(ExperimentConfig::parse(&good).is_ok());
        let bad = good.replace("param = \"g\"", "param = \"mu\"");
        assert!(ExperimentConfig::parse(&bad).is_err());
    }

    #[test]
    fn cqed_and_custom_models() {
        let cqed = r#"
seed = 1
observables = ["current", "current:0", "mz"]
[model]
kind = "cqed"
n_sites = 2
mu = 1.0
gamma1 = 0.3
gamma2 = 0.5
theta = 0.2
"#;
        let cfg = ExperimentConfig::parse(cqed).unwrap();
        assert_eq!(cfg.observables(&cfg.model).unwrap()[0].name(), "current");
        let custom = r#"
seed = 1
observables = [{ name = "zz", op = "(1,0) ZZ" }]
[model]
kind = "custom"
n_sites = 2
hamiltonian = """
(0.5,0) ZZ
(1,0) XI
"""
jumps = [{ op = "(0.5,0) XI\n(0,0.5) YI", rate = 1.0, tag = "damp" }]
"#;
        let cfg = ExperimentConfig::parse(custom).unwrap();
        let m = cfg.model.build().unwrap();
        assert_eq!(m.jumps().len(), 1);
        let tfim_current = TFIM.replace("\"mx\", \"mz\"", "\"current\"");
        assert!(ExperimentConfig::parse(&tfim_current).is_err());
    }

    #[test]
    fn noise_and_mitigation_sections() {
        let text = format!(
            "{}\n[noise]\np1 = 1e-3\np2 = 1e-2\n\n[mitigation]\nmode = \"rates\"\nfactors = [1, 2, 3]\n",
            TFIM
        );
        let cfg = ExperimentConfig::parse(&text).unwrap();
        let opt = cfg.optimizer_config();
        assert_eq!(opt.noise.unwrap().p2, 1e-2);
        assert_eq!(opt.mitigation.unwrap().factors, vec![1.0, 2.0, 3.0]);
        let bad = text.replace("factors = [1, 2, 3]", "factors = [1, 1]");
        assert!(ExperimentConfig::parse(&bad).is_err());
    }

    #[test]
    fn hash_is_stable() {
        assert_eq!(config_hash("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
