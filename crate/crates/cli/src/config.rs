use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;
use supermarket::model::SetId;
use supermarket::walk::{CrossingSpec, DriftsDownSpec, HittingSpec, ReturnWalkSpec, Tail};
use supermarket::Params;

/// A configuration problem; the process exits with status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Number of queues: a TOML integer, or a string such as "10^24" or "1e24"
/// for sizes past the 64-bit range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Count {
    Int(u64),
    Text(String),
}

impl Count {
    pub fn value(&self) -> Result<u128> {
        match self {
            Count::Int(v) => Ok(*v as u128),
            Count::Text(s) => parse_count(s).ok_or_else(|| usage(format!("cannot read n = {s:?} as a count"))),
        }
    }
}

fn parse_count(s: &str) -> Option<u128> {
    let s = s.trim().replace('_', "");
    if let Ok(v) = s.parse::<u128>() {
        return Some(v);
    }
    let (m, e) = s.split_once("e").or_else(|| s.split_once("E")).or_else(|| s.split_once("^"))?;
    let m: u128 = m.parse().ok()?;
    let e: u32 = e.parse().ok()?;
    let base: u128 = if s.contains('^') { m } else { 10 };
    let p = base.checked_pow(e)?;
    if s.contains('^') { Some(p) } else { m.checked_mul(p) }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub lambda: f64,
    pub d: u64,
    pub n: Count,
    pub epsilon: f64,
    pub k: Option<u32>,
    pub ell: Option<f64>,
    pub g: Option<f64>,
}

impl ModelConfig {
    pub fn params(&self) -> Result<Params> {
        let n = self.n.value()?;
        let p = match (self.k, self.d) {
            (Some(k), _) => Params::with_k(n, self.d, self.lambda, self.epsilon, k),
            (None, 1) => Params::with_k(n, 1, self.lambda, self.epsilon, 1),
            (None, _) => Params::new(n, self.d, self.lambda, self.epsilon),
        };
        p.map_err(|e| usage(format!("[model]: {e}")))
    }

    /// (ℓ, g), each defaulting to k.
    pub fn ell_g(&self, params: &Params) -> (f64, f64) {
        let k = params.k as f64;
        (self.ell.unwrap_or(k), self.g.unwrap_or(k))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Start {
    #[default]
    Empty,
    /// Tail counts rounded from n·π(j).
    FixedPoint,
    /// Tail counts n − n(1−λ)(λd)^{j−1} for j ≤ k.
    Center,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    #[default]
    Profile,
    Vector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub engine: Engine,
    pub start: Start,
    pub steps: u64,
    pub interval: u64,
    pub levels: usize,
    pub q_indices: Vec<u32>,
    pub p_functional: bool,
    pub sets: Vec<SetId>,
    pub cap: Option<usize>,
    pub replicas: usize,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig {
            engine: Engine::Profile,
            start: Start::Empty,
            steps: 100_000,
            interval: 1_000,
            levels: 5,
            q_indices: Vec::new(),
            p_functional: false,
            sets: Vec::new(),
            cap: None,
            replicas: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EquilibriumConfig {
    pub start: Start,
    /// Defaults to the budget burn-in.
    pub burn_in: Option<u64>,
    pub steps: u64,
    pub levels: usize,
    pub replicas: usize,
}

impl Default for EquilibriumConfig {
    fn default() -> Self {
        EquilibriumConfig { start: Start::FixedPoint, burn_in: None, steps: 10_000_000, levels: 6, replicas: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum PairKind {
    /// Burn in from the fixed-point profile, then add one customer.
    #[default]
    AdjacentAfterBurnIn,
    /// A random adjacent pair inside 𝒩^ε.
    AdjacentInN,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MixingConfig {
    /// Values of d to sweep; defaults to the model d.
    pub d_values: Vec<u64>,
    pub pairs: PairKind,
    pub burn_in: Option<u64>,
    pub horizon: u64,
    pub replicas: usize,
}

impl Default for MixingConfig {
    fn default() -> Self {
        MixingConfig { d_values: Vec::new(), pairs: PairKind::default(), burn_in: None, horizon: 2_000_000, replicas: 200 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriftAuditConfig {
    /// Queues in each audited state; the model n is usually far too large.
    pub n: u64,
    pub max_len: usize,
    pub random_states: usize,
}

impl Default for DriftAuditConfig {
    fn default() -> Self {
        DriftAuditConfig { n: 100, max_len: 6, random_states: 10_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum WalkExperiment {
    Hitting { id: String, trials: Option<u64>, spec: HittingSpec },
    Crossing { id: String, trials: Option<u64>, spec: CrossingSpec },
    DriftsDown { id: String, trials: Option<u64>, spec: DriftsDownSpec },
    ReturnTime { id: String, trials: Option<u64>, spec: ReturnWalkSpec },
    Chernoff { id: String, trials: Option<u64>, tail: Tail, eps: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WalkAuditConfig {
    pub trials: u64,
    /// Empty runs the built-in grid.
    pub experiments: Vec<WalkExperiment>,
}

impl Default for WalkAuditConfig {
    fn default() -> Self {
        WalkAuditConfig { trials: 20_000, experiments: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub n: usize,
    pub cap: u32,
    pub d: u32,
    pub lambda: f64,
    pub burn_in: u64,
    pub samples: u64,
    pub tv_threshold: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { n: 2, cap: 4, d: 2, lambda: 0.6, burn_in: 10_000, samples: 1_000_000, tv_threshold: 0.01 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathConfig {
    pub pairs: usize,
}

impl Default for PathConfig {
    fn default() -> Self {
        PathConfig { pairs: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RelaxationConfig {
    pub replicas: usize,
    pub record_every: u64,
}

impl Default for RelaxationConfig {
    fn default() -> Self {
        RelaxationConfig { replicas: 400, record_every: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct Config {
    pub seed: Option<u64>,
    pub model: Option<ModelConfig>,
    pub simulate: SimulateConfig,
    pub equilibrium: EquilibriumConfig,
    pub mixing: MixingConfig,
    pub drift_audit: DriftAuditConfig,
    pub walk_audit: WalkAuditConfig,
    pub oracle_compare: OracleConfig,
    pub path_check: PathConfig,
    pub relaxation: RelaxationConfig,
}

pub const DEFAULT_SEED: u64 = 1;

impl Config {
    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Config> {
        toml::from_str(text).map_err(|e| usage(format!("invalid config: {e}")))
    }

    pub fn model(&self) -> Result<&ModelConfig> {
        match &self.model {
            Some(m) => Ok(m),
            None => bail!(usage("this experiment needs a [model] section with lambda, d, n and epsilon")),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    /// Applies `--replicas` to the section that has a replica count.
    pub fn set_replicas(&mut self, replicas: usize) {
        self.simulate.replicas = replicas;
        self.equilibrium.replicas = replicas;
        self.mixing.replicas = replicas;
        self.relaxation.replicas = replicas;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        assert_eq!(parse_count("1000"), Some(1000));
        assert_eq!(parse_count("1e24"), Some(10u128.pow(24)));
        assert_eq!(parse_count("3e2"), Some(300));
        assert_eq!(parse_count("10^15"), Some(10u128.pow(15)));
        assert_eq!(parse_count("1_000"), Some(1000));
        assert_eq!(parse_count("1e40"), None);
        assert_eq!(parse_count("ten"), None);
    }

    #[test]
    fn model_section() {
        let c = Config::parse("seed = 3\n[model]\nlambda = 0.9\nd = 5\nn = 1000\nepsilon = 0.1\n").unwrap();
        let p = c.model().unwrap().params().unwrap();
        assert_eq!((p.n, p.d, p.k), (1000, 5, 2));
        assert_eq!(c.seed(), 3);
        assert_eq!(c.mixing.replicas, 200);
    }

    #[test]
    fn single_choice_defaults_k() {
        let c = Config::parse("[model]\nlambda = 0.8\nd = 1\nn = 10\nepsilon = 0.1\n").unwrap();
        assert_eq!(c.model().unwrap().params().unwrap().k, 1);
    }

    #[test]
    fn rejects_unknown_keys() {
        let e = Config::parse("[model]\nlambda = 0.9\nd = 5\nn = 10\nepsilon = 0.1\nmu = 3\n").unwrap_err();
        assert!(e.downcast_ref::<UsageError>().is_some());
        assert!(Config::parse("[simulate]\nstep = 3\n").is_err());
    }

    #[test]
    fn walk_experiments_parse() {
        let text = r#"
[[walk-audit.experiments]]
kind = "chernoff"
id = "tail"
tail = { Poisson = { mu = 10.0 } }
eps = 0.5
"#;
        let c = Config::parse(text).unwrap();
        assert!(matches!(&c.walk_audit.experiments[0], WalkExperiment::Chernoff { id, .. } if id == "tail"));
    }
}
