//! TOML experiment configuration.
//!
//! ```toml
//! spec_version = 1
//! horizon = 4096
//! seeds = [1, 2, 3]
//! levels = [0, 64, 128]
//! output_dir = "out/scaling"
//!
//! [[algorithm]]
//! alg = "stoch_elim"
//! z_scale = "sqrt_d"
//!
//! [[environment]]
//! env = "sphere"
//! d = 2
//! n_actions = 8
//! adversary = "weak"
//! ```
//!
//! A corruption level means the adversary budget (`C∞` for `weak`, `C`
//! for `strong`), `ρ` for `misspecified` and `ε` for `packing`.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::env::{CorruptionProfile, DeviationProfile};
use crate::error::{Error, Result};

pub const SPEC_VERSION: u32 = 1;

/// Corruption oracles usable by `alg = "reduction"`.
pub const ORACLES: &[&str] = &["stoch_elim"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub spec_version: u32,
    #[serde(default)]
    pub name: String,
    pub horizon: usize,
    pub seeds: Vec<u64>,
    pub levels: Vec<f64>,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Worker count; `BENCH_THREADS` caps it further.
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(rename = "algorithm")]
    pub algorithms: Vec<AlgorithmEntry>,
    #[serde(rename = "environment")]
    pub environments: Vec<EnvironmentEntry>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("bench_out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(flatten)]
    pub spec: AlgorithmSpec,
}

impl AlgorithmEntry {
    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| self.spec.name().to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZScale {
    /// `Z = level`.
    #[default]
    Level,
    /// `Z = √d·level`.
    SqrtD,
    /// `Z = d·level`.
    D,
}

impl ZScale {
    pub fn factor(self, d: usize) -> f64 {
        match self {
            ZScale::Level => 1.0,
            ZScale::SqrtD => (d as f64).sqrt(),
            ZScale::D => d as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "alg", rename_all = "snake_case", deny_unknown_fields)]
pub enum AlgorithmSpec {
    StochElim {
        #[serde(default)]
        z_scale: ZScale,
        #[serde(default = "default_delta")]
        delta: f64,
        #[serde(default = "one")]
        epoch_scale: f64,
    },
    MisspecElim {
        #[serde(default = "default_delta")]
        delta: f64,
        #[serde(default = "default_m1")]
        m1_multiplier: f64,
    },
    LogdetFtrl {
        /// Declared `C∞`; the cell's level when absent.
        #[serde(default)]
        c_inf: Option<f64>,
        #[serde(default = "default_delta")]
        delta: f64,
    },
    Cew {
        /// Declared `C`; the cell's level when absent.
        #[serde(default)]
        c: Option<f64>,
        #[serde(default = "default_mc")]
        mc_samples: usize,
        #[serde(default = "default_delta")]
        delta: f64,
    },
    Reduction {
        oracle: String,
        /// Assumed `ρ`; the instance's `ρ` (or the level) when absent.
        #[serde(default)]
        rho: Option<f64>,
        #[serde(default = "default_delta")]
        delta: f64,
        #[serde(default)]
        doubling: bool,
    },
}

impl AlgorithmSpec {
    pub fn name(&self) -> &'static str {
        match self {
            AlgorithmSpec::StochElim { .. } => "stoch_elim",
            AlgorithmSpec::MisspecElim { .. } => "misspec_elim",
            AlgorithmSpec::LogdetFtrl { .. } => "logdet_ftrl",
            AlgorithmSpec::Cew { .. } => "cew",
            AlgorithmSpec::Reduction { .. } => "reduction",
        }
    }
}

fn default_delta() -> f64 {
    0.1
}

fn one() -> f64 {
    1.0
}

fn default_m1() -> f64 {
    64.0
}

fn default_mc() -> usize {
    crate::cew::DEFAULT_MC_SAMPLES
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdversaryKind {
    #[default]
    None,
    Weak,
    /// Strong budget, CM form.
    Strong,
    /// Strong budget, AA form.
    StrongAdaptive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(flatten)]
    pub spec: EnvironmentSpec,
}

impl EnvironmentEntry {
    pub fn label(&self) -> String {
        self.label
            .clone()
            .unwrap_or_else(|| format!("{}_d{}", self.spec.name(), self.spec.dim()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "env", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvironmentSpec {
    /// Unit-sphere actions and a random `θ` of norm `theta_norm`.
    Sphere {
        d: usize,
        n_actions: usize,
        #[serde(default)]
        adversary: AdversaryKind,
        #[serde(default = "default_profile")]
        profile: CorruptionProfile,
        #[serde(default = "one")]
        noise: f64,
        #[serde(default = "one")]
        theta_norm: f64,
        #[serde(default)]
        instance_seed: u64,
    },
    /// Sphere instance with gap-dependent deviations at `ρ = level`.
    Misspecified {
        d: usize,
        n_actions: usize,
        #[serde(default)]
        deviation: DeviationProfile,
        #[serde(default = "one")]
        noise: f64,
        #[serde(default = "one")]
        theta_norm: f64,
        #[serde(default)]
        instance_seed: u64,
    },
    /// Packing lower-bound instance with `ε = level`.
    Packing {
        d: usize,
        n_actions: usize,
        #[serde(default = "one")]
        noise: f64,
        #[serde(default)]
        instance_seed: u64,
    },
}

fn default_profile() -> CorruptionProfile {
    CorruptionProfile::DemoteOptimal
}

impl EnvironmentSpec {
    pub fn name(&self) -> &'static str {
        match self {
            EnvironmentSpec::Sphere { .. } => "sphere",
            EnvironmentSpec::Misspecified { .. } => "misspecified",
            EnvironmentSpec::Packing { .. } => "packing",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            EnvironmentSpec::Sphere { d, .. }
            | EnvironmentSpec::Misspecified { d, .. }
            | EnvironmentSpec::Packing { d, .. } => *d,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.spec_version != SPEC_VERSION {
            return fail(format!("spec_version {} is not supported (expected {SPEC_VERSION})", self.spec_version));
        }
        if self.horizon == 0 {
            return fail("horizon must be at least 1".into());
        }
        if self.seeds.is_empty() || self.levels.is_empty() {
            return fail("seeds and levels must be non-empty".into());
        }
        let distinct: HashSet<u64> = self.seeds.iter().copied().collect();
        if distinct.len() != self.seeds.len() {
            return fail("seeds must be distinct".into());
        }
        if self.levels.iter().any(|l| !l.is_finite() || *l < 0.0) {
            return fail("levels must be finite and non-negative".into());
        }
        if self.algorithms.is_empty() || self.environments.is_empty() {
            return fail("at least one [[algorithm]] and one [[environment]] are required".into());
        }
        if self.threads == Some(0) {
            return fail("threads must be positive".into());
        }
        let labels: HashSet<String> = self.algorithms.iter().map(|a| a.label()).collect();
        if labels.len() != self.algorithms.len() {
            return fail("algorithm labels must be unique".into());
        }
        let labels: HashSet<String> = self.environments.iter().map(|e| e.label()).collect();
        if labels.len() != self.environments.len() {
            return fail("environment labels must be unique".into());
        }
        for a in &self.algorithms {
            match &a.spec {
                AlgorithmSpec::Reduction { oracle, .. } if !ORACLES.contains(&oracle.as_str()) => {
                    return fail(format!("unknown oracle `{oracle}` (known: {})", ORACLES.join(", ")));
                }
                AlgorithmSpec::Cew { mc_samples: 0, .. } => return fail("mc_samples must be positive".into()),
                _ => {}
            }
        }
        for e in &self.environments {
            match &e.spec {
                EnvironmentSpec::Sphere { d, n_actions, .. } | EnvironmentSpec::Misspecified { d, n_actions, .. } => {
                    if *d == 0 || *n_actions == 0 {
                        return fail(format!("environment `{}` needs d, n_actions >= 1", e.label()));
                    }
                }
                EnvironmentSpec::Packing { d, n_actions, .. } => {
                    if *d < 2 || *n_actions == 0 {
                        return fail(format!("environment `{}` needs d >= 2, n_actions >= 1", e.label()));
                    }
                }
            }
            if matches!(e.spec, EnvironmentSpec::Misspecified { .. }) && self.levels.iter().any(|l| *l >= 1.0) {
                return fail(format!("environment `{}` reads levels as ρ, which must be < 1", e.label()));
            }
        }
        Ok(())
    }
}
