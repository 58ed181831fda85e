use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{periodic_profile, random_profile, FieldLaw, FieldProfile, Lattice};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    EntropyScan,
    McCompare,
    TransferBounds,
    KpSearch,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::EntropyScan => "entropy-scan",
            Scenario::McCompare => "mc-compare",
            Scenario::TransferBounds => "transfer-bounds",
            Scenario::KpSearch => "kp-search",
        }
    }
}

/// Either an explicit list or an inclusive span `{ from, to }`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum IntRange {
    List(Vec<usize>),
    Span { from: usize, to: usize },
}

impl IntRange {
    pub fn values(&self) -> Vec<usize> {
        match self {
            IntRange::List(v) => v.clone(),
            IntRange::Span { from, to } => (*from..=*to).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Family {
    Homogeneous { h: f64 },
    /// Values repeat along the chain, indexed from site 0.
    Periodic { values: Vec<f64> },
    /// I.i.d. uniform fields on `[a, b]`, drawn per lattice.
    Random { a: f64, b: f64, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileSpec {
    pub id: String,
    #[serde(rename = "J")]
    pub j: f64,
    #[serde(flatten)]
    pub family: Family,
}

impl ProfileSpec {
    pub fn build(&self, lattice: Lattice) -> Result<FieldProfile> {
        match &self.family {
            Family::Homogeneous { h } => FieldProfile::homogeneous(lattice, *h, self.j),
            Family::Periodic { values } => periodic_profile(lattice, values, self.j),
            Family::Random { a, b, seed } => random_profile(lattice, *seed, FieldLaw::Uniform { a: *a, b: *b }, self.j),
        }
    }
}

fn default_max_n() -> usize {
    20
}

fn default_tol() -> f64 {
    1e-10
}

fn default_threshold() -> f64 {
    0.05
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSettings {
    pub m: IntRange,
    #[serde(rename = "L")]
    pub l: IntRange,
    #[serde(default = "default_max_n")]
    pub max_n: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Slope (bits per log2 step) separating saturation from growth.
    #[serde(default = "default_threshold")]
    pub slope_threshold: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EndpointSpec {
    #[default]
    Free,
    /// Perron-weighted endpoints on clusters of sites with `h < threshold`.
    Perron { threshold: f64 },
}

fn default_batches() -> usize {
    50
}

fn default_z_max() -> f64 {
    4.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSettings {
    pub m: usize,
    #[serde(rename = "L")]
    pub l: usize,
    pub beta: Vec<f64>,
    pub sweeps: usize,
    pub burn_in: usize,
    #[serde(default = "default_batches")]
    pub batches: usize,
    #[serde(default)]
    pub endpoint: EndpointSpec,
    #[serde(default = "default_z_max")]
    pub z_max: f64,
}

fn default_fk_checks() -> usize {
    10
}

fn default_fk_samples() -> usize {
    100_000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransferSettings {
    pub clusters: usize,
    pub max_len: usize,
    #[serde(rename = "C1")]
    pub c1: f64,
    /// Fields are drawn from `[C1, field_ratio * C1]`.
    pub field_ratio: f64,
    #[serde(rename = "J")]
    pub j: f64,
    pub s_min: f64,
    pub s_max: f64,
    #[serde(default = "default_fk_checks")]
    pub fk_checks: usize,
    #[serde(default = "default_fk_samples")]
    pub fk_samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KpSettings {
    #[serde(rename = "J")]
    pub j: f64,
    #[serde(rename = "C1")]
    pub c1: f64,
    #[serde(rename = "K")]
    pub k: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSettings {
    pub path: Option<PathBuf>,
    pub certificate: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub profiles: Vec<ProfileSpec>,
    pub scan: Option<ScanSettings>,
    pub mc: Option<McSettings>,
    pub transfer: Option<TransferSettings>,
    pub kp: Option<KpSettings>,
    #[serde(default)]
    pub output: OutputSettings,
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config = Self::parse_unvalidated(text)?;
        config.validate()?;
        Ok(config)
    }

    /// Parse without [`validate`](Self::validate), for callers that apply
    /// overrides first.
    pub fn parse_unvalidated(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| config_err(e.to_string()))
    }

    pub fn load_unvalidated(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        Self::parse_unvalidated(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| config_err(e.to_string()))
    }

    pub fn scan(&self) -> Result<&ScanSettings> {
        self.scan.as_ref().ok_or_else(|| config_err("missing [scan] section"))
    }

    pub fn mc(&self) -> Result<&McSettings> {
        self.mc.as_ref().ok_or_else(|| config_err("missing [mc] section"))
    }

    pub fn transfer(&self) -> Result<&TransferSettings> {
        self.transfer.as_ref().ok_or_else(|| config_err("missing [transfer] section"))
    }

    pub fn kp(&self) -> Result<&KpSettings> {
        self.kp.as_ref().ok_or_else(|| config_err("missing [kp] section"))
    }

    pub fn require_seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| config_err(format!("{} is stochastic and needs a seed", self.scenario.name())))
    }

    /// Checks the sections the scenario uses; other sections are ignored.
    pub fn validate(&self) -> Result<()> {
        let mut ids: Vec<&str> = self.profiles.iter().map(|p| p.id.as_str()).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(config_err("duplicate profile id"));
        }
        for p in &self.profiles {
            if p.id.is_empty() {
                return Err(config_err("empty profile id"));
            }
            p.build(Lattice::new(0, 0)).map_err(|e| config_err(format!("profile {}: {e}", p.id)))?;
        }
        if self.workers == Some(0) {
            return Err(config_err("workers must be positive"));
        }
        match self.scenario {
            Scenario::EntropyScan => {
                let s = self.scan()?;
                if self.profiles.is_empty() {
                    return Err(config_err("entropy-scan needs at least one [[profiles]] entry"));
                }
                let (ms, ls) = (s.m.values(), s.l.values());
                if ms.is_empty() || ls.is_empty() {
                    return Err(config_err("empty m or L range"));
                }
                let n = 2 * ms.iter().max().unwrap() + ls.iter().max().unwrap() + 1;
                if n > s.max_n {
                    return Err(config_err(format!("largest lattice has {n} sites, above max_n = {}", s.max_n)));
                }
                if !(s.tol > 0.0) {
                    return Err(config_err("tol must be positive"));
                }
            }
            Scenario::McCompare => {
                let s = self.mc()?;
                self.require_seed()?;
                if self.profiles.len() != 1 {
                    return Err(config_err("mc-compare uses exactly one [[profiles]] entry"));
                }
                if 2 * s.m + s.l + 1 > 8 {
                    return Err(config_err("mc-compare lattices are limited to 8 sites"));
                }
                if s.beta.is_empty() || s.beta.iter().any(|b| !(*b > 0.0)) {
                    return Err(config_err("beta list must be nonempty and positive"));
                }
                if s.sweeps <= s.burn_in || s.batches == 0 {
                    return Err(config_err("need sweeps > burn_in and batches > 0"));
                }
            }
            Scenario::TransferBounds => {
                let s = self.transfer()?;
                self.require_seed()?;
                if s.clusters == 0 || s.max_len == 0 || s.max_len > crate::transfer::DEFAULT_MAX_CLUSTER {
                    return Err(config_err("need clusters > 0 and 1 <= max_len <= 6"));
                }
                if !(s.c1 > 0.0 && s.field_ratio >= 1.0 && s.j >= 0.0 && s.s_min > 0.0 && s.s_max >= s.s_min) {
                    return Err(config_err("invalid transfer ranges"));
                }
            }
            Scenario::KpSearch => {
                let s = self.kp()?;
                if !(s.j >= 0.0 && s.c1 > 0.0) {
                    return Err(config_err("kp-search needs J >= 0 and C1 > 0"));
                }
            }
        }
        Ok(())
    }
}
