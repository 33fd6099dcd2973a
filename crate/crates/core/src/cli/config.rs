//! TOML run configuration.
//!
//! ```toml
//! seed = 7                       # master seed (default 1)
//!
//! [chain]
//! q = [[-5, 1, 5], [2, -2, 5], [3, 1, -10]]
//! convention = "column"          # or "row"
//!
//! [process]
//! n = 1000
//! lambda = [0.1, 1, 3]
//! mu = [0, 0, 0]                 # optional recovery rates
//! speed = 100                    # chain speed α; or `beta` for n^β
//! gamma = 0                      # intensity scaled by n^-γ
//! horizon = 3
//! initial = "stationary"         # or a 1-based state index
//!
//! [experiment]                   # used by `clt` and `curves`
//! regime = "joint_beta"          # see `Regime`
//! beta = 1                       # defaults to process.beta
//! replicates = 2000
//! grid = [0.5, 1, 2, 3]          # or { start = 0, end = 10, points = 101 }
//! centering = "deterministic"    # or "pathwise"
//! engine = "auto"                # "ssa", "grid"
//! paths = 20                     # sample paths drawn in the SVG
//! tolerance = { ks_alpha = 0.01, mean_se = 4 }
//!
//! [sweep]                        # optional: one run per value
//! parameter = "speed"            # or "n"
//! values = [1, 10]
//! ```
//!
//! Unknown keys are rejected. A `[manifest]` table written by a previous
//! run is accepted and ignored.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::chain::{Convention, Generator, InitialState};
use crate::counting::ProcessSpec;
use crate::limits::{Centering, Regime};
use crate::numerics::DenseMatrix;
use crate::stats::{Engine, ExperimentConfig, TolerancePolicy};

use super::CliError;

pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunFile {
    #[serde(default, with = "seed_repr", skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub chain: ChainSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub process: Option<ProcessSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<ExperimentSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<ManifestSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSection {
    pub q: Vec<Vec<f64>>,
    #[serde(default)]
    pub convention: Convention,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessSection {
    pub n: u64,
    pub lambda: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default)]
    pub gamma: f64,
    pub horizon: f64,
    #[serde(default)]
    pub initial: InitialSpec,
}

/// `"stationary"` or a one-based state index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialSpec {
    Index(u64),
    Name(String),
}

impl Default for InitialSpec {
    fn default() -> Self {
        Self::Name("stationary".into())
    }
}

impl InitialSpec {
    pub fn resolve(&self) -> Result<InitialState, CliError> {
        match self {
            Self::Name(s) if s == "stationary" => Ok(InitialState::Stationary),
            Self::Index(i) if *i >= 1 => Ok(InitialState::Fixed(*i as usize - 1)),
            other => Err(CliError::Validation(format!(
                "initial must be \"stationary\" or a state index >= 1, got {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub regime: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    pub replicates: usize,
    pub grid: GridSpec,
    #[serde(default)]
    pub centering: Centering,
    #[serde(default)]
    pub engine: Engine,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paths: Option<usize>,
    #[serde(default)]
    pub tolerance: TolerancePolicy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    List(Vec<f64>),
    Uniform { start: f64, end: f64, points: usize },
}

impl GridSpec {
    pub fn times(&self) -> Result<Vec<f64>, CliError> {
        match *self {
            Self::List(ref v) => Ok(v.clone()),
            Self::Uniform { start, end, points } => {
                if points < 2 || !(end > start) {
                    return Err(CliError::Validation(
                        "uniform grid needs end > start and at least 2 points".into(),
                    ));
                }
                let last = (points - 1) as f64;
                Ok((0..points).map(|i| start + (end - start) * i as f64 / last).collect())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParameter {
    Speed,
    N,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

/// Provenance written next to every output; ignored when read back.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestSection {
    pub version: String,
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
}

/// Seeds above `i64::MAX` do not fit a TOML integer and are written as
/// decimal strings.
mod seed_repr {
    use super::*;

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Int(i64),
        Str(String),
    }

    pub fn serialize<S: Serializer>(seed: &Option<u64>, s: S) -> Result<S::Ok, S::Error> {
        match *seed {
            Some(v) if v <= i64::MAX as u64 => s.serialize_i64(v as i64),
            Some(v) => s.serialize_str(&v.to_string()),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<u64>, D::Error> {
        use serde::de::Error;
        match Repr::deserialize(d)? {
            Repr::Int(i) if i >= 0 => Ok(Some(i as u64)),
            Repr::Int(i) => Err(D::Error::custom(format!("seed must be >= 0, got {i}"))),
            Repr::Str(s) => s.parse().map(Some).map_err(D::Error::custom),
        }
    }
}

/// One concrete run after applying the sweep.
#[derive(Debug, Clone)]
pub struct ResolvedRun {
    /// File-name suffix such as `_speed10`; empty without a sweep.
    pub suffix: String,
    pub spec: ProcessSpec,
    /// `β` when the chain speed is tied to `n`.
    pub beta: Option<f64>,
}

pub fn parse_regime(name: &str, beta: Option<f64>, gamma: f64) -> Result<Regime, CliError> {
    let need_beta = || beta.ok_or_else(|| CliError::Validation(format!("regime {name} needs beta")));
    let regime = match name {
        "non_modulated" => Regime::NonModulated,
        "iterated_n_then_alpha" => Regime::IteratedNThenAlpha,
        "iterated_alpha_then_n" => Regime::IteratedAlphaThenN,
        "joint_beta" => Regime::JointBeta { beta: need_beta()? },
        "gamma" => Regime::Gamma { gamma },
        "recovery_non_modulated" => Regime::RecoveryNonModulated,
        "recovery_joint" => Regime::RecoveryJoint { beta: need_beta()? },
        other => {
            return Err(CliError::Validation(format!(
                "unknown regime {other:?}; expected one of non_modulated, iterated_n_then_alpha, \
                 iterated_alpha_then_n, joint_beta, gamma, recovery_non_modulated, recovery_joint"
            )))
        }
    };
    regime.validate()?;
    Ok(regime)
}

fn format_value(v: f64) -> String {
    format!("{v}")
}

impl RunFile {
    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Validation(format!("config: {e}")))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("run configuration serializes")
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn generator(&self) -> Result<Generator, CliError> {
        let q = DenseMatrix::from_rows(&self.chain.q)?;
        Ok(Generator::new(q, self.chain.convention)?)
    }

    pub fn process(&self) -> Result<&ProcessSection, CliError> {
        self.process
            .as_ref()
            .ok_or_else(|| CliError::Validation("config has no [process] table".into()))
    }

    pub fn experiment(&self) -> Result<&ExperimentSection, CliError> {
        self.experiment
            .as_ref()
            .ok_or_else(|| CliError::Validation("config has no [experiment] table".into()))
    }

    /// Process specs, one per sweep value.
    pub fn runs(&self) -> Result<Vec<ResolvedRun>, CliError> {
        let p = self.process()?;
        if p.speed.is_some() && p.beta.is_some() {
            return Err(CliError::Validation(
                "process: give either speed or beta, not both".into(),
            ));
        }
        let build = |n: u64, speed: Option<f64>| -> Result<ResolvedRun, CliError> {
            let d = p.lambda.len();
            let mut spec = ProcessSpec::new(n, p.lambda.clone(), p.horizon)
                .with_mu(p.mu.clone().unwrap_or_else(|| vec![0.0; d]))
                .with_gamma(p.gamma)
                .with_initial(p.initial.resolve()?);
            spec = match (speed, p.beta) {
                (Some(s), _) => spec.with_speed(s),
                (None, Some(b)) => spec.with_beta(b),
                (None, None) => spec,
            };
            Ok(ResolvedRun {
                suffix: String::new(),
                spec,
                beta: if speed.is_some() { None } else { p.beta },
            })
        };
        match &self.sweep {
            None => Ok(vec![build(p.n, p.speed)?]),
            Some(sw) => {
                if sw.values.is_empty() {
                    return Err(CliError::Validation("sweep.values is empty".into()));
                }
                sw.values
                    .iter()
                    .map(|&v| {
                        let mut run = match sw.parameter {
                            SweepParameter::Speed => build(p.n, Some(v))?,
                            SweepParameter::N => {
                                if !(v >= 1.0) || v.fract() != 0.0 {
                                    return Err(CliError::Validation(format!(
                                        "sweep over n needs positive integers, got {v}"
                                    )));
                                }
                                build(v as u64, p.speed)?
                            }
                        };
                        run.suffix = match sw.parameter {
                            SweepParameter::Speed => format!("_speed{}", format_value(v)),
                            SweepParameter::N => format!("_n{}", format_value(v)),
                        };
                        Ok(run)
                    })
                    .collect()
            }
        }
    }

    pub fn regime(&self) -> Result<Regime, CliError> {
        let e = self.experiment()?;
        let beta = e.beta.or(self.process.as_ref().and_then(|p| p.beta));
        let gamma = self.process.as_ref().map_or(0.0, |p| p.gamma);
        parse_regime(&e.regime, beta, gamma)
    }

    /// Experiment configurations, one per sweep value.
    pub fn experiments(&self) -> Result<Vec<(String, ExperimentConfig)>, CliError> {
        let e = self.experiment()?;
        let regime = self.regime()?;
        let generator = self.generator()?;
        let grid = e.grid.times()?;
        self.runs()?
            .into_iter()
            .map(|run| {
                let config = ExperimentConfig {
                    spec: run.spec,
                    regime,
                    generator: generator.clone(),
                    replicates: e.replicates,
                    grid: grid.clone(),
                    master_seed: self.seed(),
                    centering: e.centering,
                    tolerance: e.tolerance,
                    engine: e.engine,
                };
                config.validate()?;
                Ok((run.suffix, config))
            })
            .collect()
    }
}
