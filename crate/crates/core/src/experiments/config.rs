//! Experiment configuration: presets, grids, budgets and the config hash.

use std::f64::consts::FRAC_PI_4;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::circuits::InitialStateKind;
use crate::error::{Error, Result};
use crate::noise::{GateDurations, NoiseParams};
use crate::optimizers::{CobylaParams, DaParams, InnerOptimizer, LayerwiseDriver, ShotBudget};

pub const SCHEMA_VERSION: u32 = 1;

/// Largest register a desk-scale preset may touch.
pub const DESK_QUBIT_CAP: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    LandscapeScan,
    InitialStateComparison,
    OptimizerComparison,
    HyperparameterSweep,
    LayerwiseComparison,
    ScalingStudy,
    NoiseStudy,
    IdentityVerification,
}

impl Preset {
    pub const ALL: [Preset; 8] = [
        Preset::LandscapeScan,
        Preset::InitialStateComparison,
        Preset::OptimizerComparison,
        Preset::HyperparameterSweep,
        Preset::LayerwiseComparison,
        Preset::ScalingStudy,
        Preset::NoiseStudy,
        Preset::IdentityVerification,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Preset::LandscapeScan => "landscape-scan",
            Preset::InitialStateComparison => "initial-state-comparison",
            Preset::OptimizerComparison => "optimizer-comparison",
            Preset::HyperparameterSweep => "hyperparameter-sweep",
            Preset::LayerwiseComparison => "layerwise-comparison",
            Preset::ScalingStudy => "scaling-study",
            Preset::NoiseStudy => "noise-study",
            Preset::IdentityVerification => "identity-verification",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown preset `{s}`")))
    }
}

/// Where covariance matrices come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum InstanceSource {
    /// Random factor models.
    Synthetic { count: usize, factors: usize },
    /// Random `n`-subsets of a daily price file.
    Prices {
        path: PathBuf,
        count: usize,
        #[serde(default)]
        tickers: Vec<String>,
    },
}

impl InstanceSource {
    pub fn count(&self) -> usize {
        match self {
            InstanceSource::Synthetic { count, .. } | InstanceSource::Prices { count, .. } => *count,
        }
    }
}

/// Which angle a landscape scan sweeps; `layer` is 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanParam {
    Gamma,
    Beta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ScanTarget {
    pub param: ScanParam,
    pub layer: usize,
}

impl ScanTarget {
    pub fn label(&self) -> String {
        match self.param {
            ScanParam::Gamma => format!("gamma_{}", self.layer),
            ScanParam::Beta => format!("beta_{}", self.layer),
        }
    }

    /// Position in the ansatz parameter vector (one beta per layer).
    pub fn index(&self, p: usize) -> usize {
        match self.param {
            ScanParam::Gamma => self.layer - 1,
            ScanParam::Beta => p + self.layer - 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScanConfig {
    /// Grid intervals over `[0, 2 pi]`.
    pub resolution: usize,
    /// Value of every angle not being scanned.
    pub fixed_angle: f64,
    pub targets: Vec<ScanTarget>,
    /// A trial succeeds when its exact value lies in this lowest fraction of
    /// the scanned range.
    pub success_fraction: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            resolution: 1000,
            fixed_angle: FRAC_PI_4,
            targets: vec![ScanTarget {
                param: ScanParam::Beta,
                layer: 1,
            }],
            success_fraction: 0.05,
        }
    }
}

/// How post-optimisation metrics are measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinalMode {
    Exact,
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub preset: Preset,
    pub instances: InstanceSource,
    pub n: Vec<usize>,
    pub l: Vec<usize>,
    pub p: Vec<usize>,
    pub distance: Vec<usize>,
    pub initial_states: Vec<InitialStateKind>,
    pub optimizers: Vec<InnerOptimizer>,
    pub drivers: Vec<LayerwiseDriver>,
    pub budget: ShotBudget,
    /// `N_m` values for presets that sweep it.
    pub shots_grid: Vec<usize>,
    /// Estimation caps for the hyperparameter sweep.
    pub estimation_grid: Vec<usize>,
    pub seeds: usize,
    pub scan: ScanConfig,
    pub noise: NoiseParams,
    pub final_mode: FinalMode,
    /// Angles for the identity suite.
    pub identity_angles: usize,
    pub write_traces: bool,
    /// Allow registers above the desk cap.
    pub long_running: bool,
}

fn da() -> InnerOptimizer {
    InnerOptimizer::DualAnnealing(DaParams::default())
}

fn cobyla() -> InnerOptimizer {
    InnerOptimizer::Cobyla(CobylaParams::default())
}

impl ExperimentConfig {
    /// Desk-scale defaults for `preset`.
    pub fn preset_default(preset: Preset) -> Self {
        let mut c = Self {
            schema_version: SCHEMA_VERSION,
            preset,
            instances: InstanceSource::Synthetic { count: 5, factors: 2 },
            n: vec![3],
            l: vec![2],
            p: vec![1, 2, 3],
            distance: vec![1],
            initial_states: vec![InitialStateKind::Maxbias],
            optimizers: vec![da()],
            drivers: vec![LayerwiseDriver::Unfrozen],
            budget: ShotBudget::default(),
            shots_grid: vec![],
            estimation_grid: vec![],
            seeds: 5,
            scan: ScanConfig::default(),
            noise: NoiseParams::default(),
            final_mode: FinalMode::Exact,
            identity_angles: 10,
            write_traces: false,
            long_running: false,
        };
        match preset {
            Preset::LandscapeScan => {
                c.instances = InstanceSource::Synthetic { count: 1, factors: 2 };
                c.n = vec![3];
                c.l = vec![3];
                c.p = vec![3];
                c.seeds = 20;
                c.optimizers = vec![da(), cobyla()];
                c.shots_grid = vec![16, 256];
            }
            Preset::InitialStateComparison => {
                c.initial_states = InitialStateKind::ALL.to_vec();
            }
            Preset::OptimizerComparison => {
                c.optimizers = vec![da(), cobyla()];
            }
            Preset::HyperparameterSweep => {
                c.instances = InstanceSource::Synthetic { count: 3, factors: 2 };
                c.p = vec![2];
                c.seeds = 3;
                c.shots_grid = vec![16, 64, 256];
                c.estimation_grid = vec![500, 1000, 2000];
            }
            Preset::LayerwiseComparison => {
                c.instances = InstanceSource::Synthetic { count: 20, factors: 2 };
                c.l = vec![3];
                c.drivers = vec![LayerwiseDriver::Frozen, LayerwiseDriver::Unfrozen, LayerwiseDriver::Fixed];
            }
            Preset::ScalingStudy => {
                c.instances = InstanceSource::Synthetic { count: 20, factors: 2 };
                c.n = vec![2, 3, 4];
                c.l = vec![1, 2, 3];
                c.p = vec![3];
                c.seeds = 1;
                c.initial_states = vec![InitialStateKind::Maxbias, InitialStateKind::WarmStarted];
            }
            Preset::NoiseStudy => {
                c.instances = InstanceSource::Synthetic { count: 1, factors: 2 };
                c.n = vec![2];
                c.l = vec![2];
                c.p = vec![1, 2, 3, 4];
                c.seeds = 20;
                c.optimizers = vec![cobyla()];
                c.drivers = vec![LayerwiseDriver::Fixed];
                c.shots_grid = vec![1024];
                c.budget = ShotBudget {
                    shots_per_estimate: 1024,
                    max_estimations: 100,
                    final_shots: 4096,
                };
            }
            Preset::IdentityVerification => {
                c.instances = InstanceSource::Synthetic { count: 0, factors: 2 };
                c.seeds = 1;
            }
        }
        c
    }

    /// Preset defaults overlaid with the fields present in `json`.
    pub fn from_json_str(json: &str) -> Result<Self> {
        let user: Value = serde_json::from_str(json)?;
        let preset: Preset = match user.get("preset") {
            Some(v) => serde_json::from_value(v.clone())?,
            None => return Err(Error::Config("missing `preset`".into())),
        };
        Self::overlay(preset, user)
    }

    /// Overlays `user` on the defaults of `preset`; a `preset` field in
    /// `user` must agree.
    pub fn overlay(preset: Preset, user: Value) -> Result<Self> {
        if let Some(v) = user.get("preset") {
            let named: Preset = serde_json::from_value(v.clone())?;
            if named != preset {
                return Err(Error::Config(format!("config is for `{named}`, not `{preset}`")));
            }
        }
        let mut base = serde_json::to_value(Self::preset_default(preset))?;
        merge(&mut base, user);
        let config: Self = serde_json::from_value(base)?;
        config.validate()?;
        Ok(config)
    }

    /// Reads a config file; relative price paths resolve against its folder.
    pub fn load(path: &Path, preset: Preset) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let user: Value = serde_json::from_str(&text)?;
        let mut config = Self::overlay(preset, user)?;
        if let InstanceSource::Prices { path: p, .. } = &mut config.instances {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.preset == Preset::IdentityVerification {
            return if self.identity_angles == 0 {
                bad("identity_angles must be positive")
            } else {
                Ok(())
            };
        }
        if self.n.is_empty() || self.l.is_empty() || self.p.is_empty() || self.distance.is_empty() {
            return bad("n, l, p and distance grids must be non-empty");
        }
        if self.initial_states.is_empty() || self.optimizers.is_empty() || self.drivers.is_empty() {
            return bad("initial_states, optimizers and drivers must be non-empty");
        }
        if self.seeds == 0 || self.instances.count() == 0 {
            return bad("need at least one seed and one instance");
        }
        if self.p.contains(&0) || self.l.contains(&0) || self.n.iter().any(|&n| n < 2) {
            return bad("p and l must be positive and n at least 2");
        }
        if self.budget.shots_per_estimate == 0 || self.budget.max_estimations == 0 || self.budget.final_shots == 0 {
            return bad("budget entries must be positive");
        }
        if self.shots_grid.contains(&0) || self.estimation_grid.contains(&0) {
            return bad("shot and estimation grids must be positive");
        }
        let min_n = self.n.iter().copied().min().unwrap_or(2);
        if self.distance.iter().any(|&d| d == 0 || d > min_n / 2) {
            return bad("mixer distance must lie in 1..=n/2 for every n");
        }
        let cap = if self.long_running { crate::encoding::ENUMERATION_LIMIT } else { DESK_QUBIT_CAP };
        for &n in &self.n {
            for &l in &self.l {
                if n * l > cap {
                    return Err(Error::GuardExceeded { qubits: n * l, limit: cap });
                }
            }
        }
        if self.preset == Preset::LandscapeScan {
            if self.scan.resolution < 3 {
                return bad("scan resolution must be at least 3");
            }
            if self.scan.targets.iter().any(|t| t.layer == 0 || self.p.iter().any(|&p| t.layer > p)) {
                return bad("scan target layer out of range");
            }
        }
        if let InstanceSource::Prices { path, .. } = &self.instances {
            if !path.exists() {
                return Err(Error::Config(format!("price file {} not found", path.display())));
            }
        }
        Ok(())
    }

    /// Shot values for presets that sweep them; otherwise the budget's.
    pub fn shots_values(&self) -> Vec<usize> {
        if self.shots_grid.is_empty() {
            vec![self.budget.shots_per_estimate]
        } else {
            self.shots_grid.clone()
        }
    }

    pub fn estimation_values(&self) -> Vec<usize> {
        if self.estimation_grid.is_empty() {
            vec![self.budget.max_estimations]
        } else {
            self.estimation_grid.clone()
        }
    }

    pub fn max_p(&self) -> usize {
        self.p.iter().copied().max().unwrap_or(1)
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// Duration-free noise with the same T1/T2 draws.
    pub fn noiseless(&self) -> NoiseParams {
        NoiseParams {
            durations: GateDurations::zero(),
            ..self.noise
        }
    }
}

/// Recursive object merge; arrays and scalars in `over` replace.
fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() && k != "instances" && k != "optimizers" => {
                        merge(slot, v)
                    }
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, o) => *b = o,
    }
}

/// Mixes a root seed with integer labels into an independent task seed.
pub fn derive_seed(root: u64, parts: &[u64]) -> u64 {
    let mut h = Sha256::new();
    h.update(root.to_le_bytes());
    for p in parts {
        h.update(p.to_le_bytes());
    }
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("eight bytes"))
}
