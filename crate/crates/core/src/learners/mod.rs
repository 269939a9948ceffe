//! Scaling-decision classifiers and the moving-average baseline.
//!
//! Every learner maps a feature vector to a VNF count in `[v_min, v_max]`.
//! Training is a pure function of `(dataset, label kind, params, seed)`; forest
//! trees draw from independent ChaCha streams keyed by tree index so the
//! parallel build is bit-identical to a sequential one.

mod bayes;
mod model_io;
mod tree;

use std::time::Instant;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use bayes::{ClassStats, GaussianNb};
pub use model_io::{load_model, save_model, MODEL_FORMAT_VERSION, MODEL_MAGIC};
pub use tree::{Node, Tree};

use crate::error::{Error, Result};
use crate::labeling::{qos_required, LabelKind, LabeledDataset, VnfDeployment};
use crate::scalar::Scalar;
use crate::trace::TrafficTrace;
use tree::{GrowParams, TrainView};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    DecisionTree,
    RandomTree,
    RandomForest,
    NaiveBayes,
    MovingAverage,
    MajorityClass,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::DecisionTree,
        Algorithm::RandomTree,
        Algorithm::RandomForest,
        Algorithm::NaiveBayes,
        Algorithm::MovingAverage,
        Algorithm::MajorityClass,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::DecisionTree => "decision-tree",
            Algorithm::RandomTree => "random-tree",
            Algorithm::RandomForest => "random-forest",
            Algorithm::NaiveBayes => "naive-bayes",
            Algorithm::MovingAverage => "moving-average",
            Algorithm::MajorityClass => "majority-class",
        }
    }

    pub(crate) fn tag(self) -> u8 {
        match self {
            Algorithm::DecisionTree => 1,
            Algorithm::RandomTree => 2,
            Algorithm::RandomForest => 3,
            Algorithm::NaiveBayes => 4,
            Algorithm::MovingAverage => 5,
            Algorithm::MajorityClass => 6,
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.to_ascii_lowercase().replace('_', "-");
        Algorithm::ALL
            .into_iter()
            .find(|a| a.as_str() == norm)
            .or(match norm.as_str() {
                "tree" => Some(Algorithm::DecisionTree),
                "forest" | "rf" => Some(Algorithm::RandomForest),
                "bayes" | "nb" => Some(Algorithm::NaiveBayes),
                "ma" => Some(Algorithm::MovingAverage),
                _ => None,
            })
            .ok_or_else(|| Error::InvalidConfig(format!("unknown algorithm `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeParams {
    pub min_leaf_size: usize,
    pub max_depth: Option<usize>,
    /// Features drawn per split by the random tree (`None`: floor(sqrt(n))).
    pub features_per_split: Option<usize>,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            min_leaf_size: 1,
            max_depth: None,
            features_per_split: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub n_trees: usize,
    /// `None`: floor(sqrt(feature_count)).
    pub features_per_split: Option<usize>,
    pub min_leaf_size: usize,
    pub max_depth: Option<usize>,
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            features_per_split: None,
            min_leaf_size: 1,
            max_depth: None,
            bootstrap: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct MovingAverageParams {
    /// Past samples averaged, ending at the decision time.
    pub window: usize,
}

impl Default for MovingAverageParams {
    fn default() -> Self {
        Self { window: 6 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainParams {
    pub tree: TreeParams,
    pub forest: ForestParams,
    pub moving_average: MovingAverageParams,
}

fn sqrt_features(n: usize) -> usize {
    ((n as f64).sqrt().floor() as usize).max(1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ModelBody<T> {
    Tree(Tree<T>),
    Forest { trees: Vec<Tree<T>> },
    NaiveBayes(GaussianNb<T>),
    MovingAverage(MovingAverageParams),
    Constant { class: u32 },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub instances: usize,
    /// Wall-clock training time. Not persisted, so model bytes stay reproducible.
    #[serde(skip)]
    pub train_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel<T = f64> {
    pub algorithm: Algorithm,
    pub label_kind: LabelKind,
    pub feature_count: usize,
    pub class_range: (u32, u32),
    pub seed: u64,
    pub params: TrainParams,
    pub training_meta: TrainingMeta,
    pub body: ModelBody<T>,
}

impl<T: Scalar> TrainedModel<T> {
    pub fn n_classes(&self) -> usize {
        (self.class_range.1 - self.class_range.0 + 1) as usize
    }

    fn clamp(&self, class: u32) -> u32 {
        class.clamp(self.class_range.0, self.class_range.1)
    }

    fn check_dim(&self, x: &[T]) -> Result<()> {
        if x.len() != self.feature_count {
            return Err(Error::Dimension {
                expected: self.feature_count,
                found: x.len(),
            });
        }
        Ok(())
    }

    /// Predicted VNF count for one feature vector.
    pub fn predict(&self, x: &[T]) -> Result<u32> {
        self.check_dim(x)?;
        let class = match &self.body {
            ModelBody::Tree(t) => t.predict(x),
            ModelBody::Forest { trees } => {
                let votes = self.votes(trees, x);
                self.class_range.0 + tree::majority(&votes) as u32
            }
            ModelBody::NaiveBayes(nb) => nb.predict(x),
            ModelBody::Constant { class } => *class,
            ModelBody::MovingAverage(_) => return Err(Error::NotFeatureDriven("moving-average")),
        };
        Ok(self.clamp(class))
    }

    /// Per-class scores in class order: forest vote fractions, Bayes
    /// posteriors, or a 0/1 indicator for single-tree and constant models.
    pub fn predict_scores(&self, x: &[T]) -> Result<Vec<T>> {
        self.check_dim(x)?;
        let k = self.n_classes();
        match &self.body {
            ModelBody::Forest { trees } => {
                let n = T::from_usize(trees.len()).unwrap_or_else(T::one);
                Ok(self
                    .votes(trees, x)
                    .into_iter()
                    .map(|v| T::from_usize(v).unwrap_or_else(T::zero) / n)
                    .collect())
            }
            ModelBody::NaiveBayes(nb) => Ok(nb.posterior(x)),
            ModelBody::MovingAverage(_) => Err(Error::NotFeatureDriven("moving-average")),
            _ => {
                let class = self.predict(x)?;
                Ok(indicator_scores(class, self.class_range.0, k))
            }
        }
    }

    /// Raw per-class vote counts of a forest (sums to the tree count).
    pub fn forest_votes(&self, x: &[T]) -> Result<Option<Vec<usize>>> {
        self.check_dim(x)?;
        Ok(match &self.body {
            ModelBody::Forest { trees } => Some(self.votes(trees, x)),
            _ => None,
        })
    }

    fn votes(&self, trees: &[Tree<T>], x: &[T]) -> Vec<usize> {
        let mut votes = vec![0usize; self.n_classes()];
        for t in trees {
            let c = self.clamp(t.predict(x));
            votes[(c - self.class_range.0) as usize] += 1;
        }
        votes
    }
}

pub fn indicator_scores<T: Scalar>(class: u32, v_min: u32, n_classes: usize) -> Vec<T> {
    let mut s = vec![T::zero(); n_classes];
    if let Some(slot) = s.get_mut(class.saturating_sub(v_min) as usize) {
        *slot = T::one();
    }
    s
}

pub fn train<T: Scalar>(
    dataset: &LabeledDataset<T>,
    label_kind: LabelKind,
    algorithm: Algorithm,
    params: &TrainParams,
    seed: u64,
) -> Result<TrainedModel<T>> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let feature_count = dataset.n_features;
    if let Some(bad) = dataset.instances.iter().find(|i| i.features.len() != feature_count) {
        return Err(Error::Dimension {
            expected: feature_count,
            found: bad.features.len(),
        });
    }
    let (v_min, v_max) = dataset.class_range;
    if v_max < v_min {
        return Err(Error::InvalidConfig("empty class range".into()));
    }
    let n_classes = (v_max - v_min + 1) as usize;
    let labels: Vec<usize> = dataset
        .instances
        .iter()
        .map(|i| {
            let l = i.label(label_kind);
            if l < v_min || l > v_max {
                Err(Error::InvalidConfig(format!("label {l} outside {v_min}..={v_max}")))
            } else {
                Ok((l - v_min) as usize)
            }
        })
        .collect::<Result<_>>()?;
    let columns: Vec<Vec<T>> = (0..feature_count)
        .map(|f| dataset.instances.iter().map(|i| i.features.values[f]).collect())
        .collect();
    let view = TrainView {
        columns: &columns,
        labels: &labels,
        n_classes,
        v_min,
    };

    let started = Instant::now();
    let mut effective = *params;
    let body = match algorithm {
        Algorithm::DecisionTree => {
            let p = GrowParams {
                min_leaf_size: params.tree.min_leaf_size,
                max_depth: params.tree.max_depth,
                features_per_split: None,
            };
            let mut rng = tree_rng(seed, 0);
            ModelBody::Tree(tree::grow(&view, (0..labels.len()).collect(), p, &mut rng))
        }
        Algorithm::RandomTree => {
            let k = params.tree.features_per_split.unwrap_or_else(|| sqrt_features(feature_count));
            check_features_per_split(k, feature_count)?;
            effective.tree.features_per_split = Some(k);
            let p = GrowParams {
                min_leaf_size: params.tree.min_leaf_size,
                max_depth: params.tree.max_depth,
                features_per_split: Some(k),
            };
            let mut rng = tree_rng(seed, 0);
            ModelBody::Tree(tree::grow(&view, (0..labels.len()).collect(), p, &mut rng))
        }
        Algorithm::RandomForest => {
            let fp = params.forest;
            if fp.n_trees == 0 {
                return Err(Error::InvalidConfig("n_trees must be >= 1".into()));
            }
            let k = fp.features_per_split.unwrap_or_else(|| sqrt_features(feature_count));
            check_features_per_split(k, feature_count)?;
            effective.forest.features_per_split = Some(k);
            let p = GrowParams {
                min_leaf_size: fp.min_leaf_size,
                max_depth: fp.max_depth,
                features_per_split: Some(k),
            };
            let n = labels.len();
            let trees = (0..fp.n_trees)
                .into_par_iter()
                .map(|t| {
                    let mut rng = tree_rng(seed, t as u64);
                    let rows: Vec<usize> = if fp.bootstrap {
                        (0..n).map(|_| rng.gen_range(0..n)).collect()
                    } else {
                        (0..n).collect()
                    };
                    tree::grow(&view, rows, p, &mut rng)
                })
                .collect();
            ModelBody::Forest { trees }
        }
        Algorithm::NaiveBayes => ModelBody::NaiveBayes(GaussianNb::fit(&columns, &labels, n_classes, v_min)),
        Algorithm::MovingAverage => {
            if params.moving_average.window == 0 {
                return Err(Error::InvalidConfig("moving-average window must be >= 1".into()));
            }
            ModelBody::MovingAverage(params.moving_average)
        }
        Algorithm::MajorityClass => {
            let mut counts = vec![0usize; n_classes];
            for &l in &labels {
                counts[l] += 1;
            }
            ModelBody::Constant {
                class: v_min + tree::majority(&counts) as u32,
            }
        }
    };

    Ok(TrainedModel {
        algorithm,
        label_kind,
        feature_count,
        class_range: (v_min, v_max),
        seed,
        params: effective,
        training_meta: TrainingMeta {
            instances: labels.len(),
            train_seconds: started.elapsed().as_secs_f64(),
        },
        body,
    })
}

fn check_features_per_split(k: usize, feature_count: usize) -> Result<()> {
    if k == 0 || k > feature_count {
        return Err(Error::InvalidConfig(format!(
            "features_per_split must be in 1..={feature_count}, got {k}"
        )));
    }
    Ok(())
}

fn tree_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Moving-average baseline: required VNFs for the mean of the last `window`
/// samples ending at decision step `step`.
pub fn predict_ma(
    trace: &TrafficTrace,
    step: usize,
    params: &MovingAverageParams,
    deployment: &VnfDeployment,
) -> Result<u32> {
    if params.window == 0 {
        return Err(Error::InvalidConfig("moving-average window must be >= 1".into()));
    }
    let index = step * deployment.stride(trace.interval_secs())?;
    if index >= trace.len() || index + 1 < params.window {
        return Err(Error::Window {
            required: params.window,
            available: (index + 1).min(trace.len()),
        });
    }
    let window = &trace.samples()[index + 1 - params.window..=index];
    let mean = window.iter().sum::<f64>() / params.window as f64;
    Ok(qos_required(mean / trace.interval_secs() as f64, deployment))
}
