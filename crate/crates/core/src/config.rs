//! Resolved run configuration shared by every pipeline stage.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cost::SdWanScenario;
use crate::error::{Error, Result};
use crate::features::FeatureWindowConfig;
use crate::labeling::{LabelKind, VnfDeployment};
use crate::learners::{Algorithm, TrainParams};
use crate::simulate::{ServerPowerParams, Technology, VirtualizationProfile};
use crate::trace::SyntheticTraceSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitConfig {
    pub train_days: u32,
    pub test_days: u32,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            train_days: 40,
            test_days: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvaluateConfig {
    pub algorithms: Vec<Algorithm>,
    pub labels: Vec<LabelKind>,
}

impl Default for EvaluateConfig {
    fn default() -> Self {
        Self {
            algorithms: vec![
                Algorithm::RandomForest,
                Algorithm::DecisionTree,
                Algorithm::RandomTree,
                Algorithm::NaiveBayes,
                Algorithm::MovingAverage,
            ],
            labels: vec![LabelKind::Qml, LabelKind::Cml],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RankConfig {
    pub bins: usize,
}

impl Default for RankConfig {
    fn default() -> Self {
        Self { bins: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CurveConfig {
    pub feature_counts: Vec<usize>,
    pub day_counts: Vec<u32>,
}

impl Default for CurveConfig {
    fn default() -> Self {
        Self {
            feature_counts: vec![6, 7, 8, 9, 11, 13, 15, 19, 23, 27],
            day_counts: vec![2, 5, 10, 20, 30, 40],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulateConfig {
    pub profiles: Vec<VirtualizationProfile>,
    pub server: ServerPowerParams<f64>,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            profiles: VirtualizationProfile::all_builtin(),
            server: ServerPowerParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CostConfig {
    /// The scenario's `deployment` is replaced by the run's.
    pub scenario: SdWanScenario,
    /// Profile the scenario's VNFs run on.
    pub profile: Technology,
}

impl Default for CostConfig {
    fn default() -> Self {
        Self {
            scenario: SdWanScenario::default(),
            profile: Technology::Kvm,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TimingConfig {
    pub repetitions: usize,
}

impl Default for TimingConfig {
    fn default() -> Self {
        Self { repetitions: 5 }
    }
}

/// Everything a run depends on except file locations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub seed: u64,
    /// Generator settings used when no input trace is given. Its `seed` is
    /// replaced by the derived `generate` stage seed.
    pub trace: SyntheticTraceSpec,
    pub deployment: VnfDeployment,
    pub window: FeatureWindowConfig,
    pub algorithm: Algorithm,
    pub label: LabelKind,
    pub params: TrainParams,
    pub split: SplitConfig,
    pub evaluate: EvaluateConfig,
    pub rank: RankConfig,
    pub curve: CurveConfig,
    pub simulate: SimulateConfig,
    pub cost: CostConfig,
    pub timing: TimingConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            trace: SyntheticTraceSpec::default(),
            deployment: VnfDeployment::default(),
            window: FeatureWindowConfig::default(),
            algorithm: Algorithm::RandomForest,
            label: LabelKind::Cml,
            params: TrainParams::default(),
            split: SplitConfig::default(),
            evaluate: EvaluateConfig::default(),
            rank: RankConfig::default(),
            curve: CurveConfig::default(),
            simulate: SimulateConfig::default(),
            cost: CostConfig::default(),
            timing: TimingConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.deployment.validate()?;
        self.window.validate()?;
        if self.split.train_days == 0 || self.split.test_days == 0 {
            return Err(Error::InvalidConfig("train_days and test_days must be >= 1".into()));
        }
        if self.rank.bins < 2 {
            return Err(Error::InvalidConfig("rank.bins must be >= 2".into()));
        }
        if self.timing.repetitions == 0 {
            return Err(Error::InvalidConfig("timing.repetitions must be >= 1".into()));
        }
        for p in &self.simulate.profiles {
            p.validate()?;
        }
        self.cost.scenario.validate()
    }

    /// SHA-256 over the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(json))
    }

    /// Deterministic per-stage seed derived from the run seed.
    pub fn stage_seed(&self, stage: &str) -> u64 {
        derive_seed(self.seed, stage)
    }

    /// Generator spec with the derived seed applied.
    pub fn trace_spec(&self) -> SyntheticTraceSpec {
        SyntheticTraceSpec {
            seed: self.stage_seed("generate"),
            ..self.trace.clone()
        }
    }

    pub fn profile(&self, name: Technology) -> VirtualizationProfile {
        self.simulate
            .profiles
            .iter()
            .find(|p| p.name == name)
            .cloned()
            .unwrap_or_else(|| VirtualizationProfile::builtin(name))
    }
}

pub fn derive_seed(seed: u64, stage: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(stage.as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
}
