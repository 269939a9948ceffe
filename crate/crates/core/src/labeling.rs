//! Ground-truth scaling classes and labeled dataset assembly.
//!
//! Decision step `n` sits on sample index `n * stride`, where `stride` is the
//! decision interval divided by the trace interval (2 at the 5-min / 10-min
//! defaults). The QoS-prioritized label maximizes the required VNF count over
//! every sample in the closed window `[tau(n), tau(n+1)]`; the cost-prioritized
//! label looks only at the two endpoints.

use chrono::{DateTime, Duration, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::features::{extract_features, FeatureVector, FeatureWindowConfig};
use crate::scalar::Scalar;
use crate::trace::{TrafficTrace, SECONDS_PER_DAY};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VnfDeployment {
    pub v_min: u32,
    pub v_max: u32,
    /// Line rate one VNF instance serves without QoS violation (bits/s).
    pub per_vnf_capacity_bps: f64,
    pub decision_interval_secs: u32,
}

impl Default for VnfDeployment {
    fn default() -> Self {
        Self {
            v_min: 1,
            v_max: 10,
            per_vnf_capacity_bps: 1e9,
            decision_interval_secs: 600,
        }
    }
}

impl VnfDeployment {
    pub fn validate(&self) -> Result<()> {
        if self.v_min < 1 || self.v_max < self.v_min {
            return Err(Error::InvalidConfig(format!(
                "need 1 <= v_min <= v_max, got {}..{}",
                self.v_min, self.v_max
            )));
        }
        if !(self.per_vnf_capacity_bps > 0.0) || !self.per_vnf_capacity_bps.is_finite() {
            return Err(Error::InvalidConfig("per-VNF capacity must be > 0".into()));
        }
        if self.decision_interval_secs == 0 {
            return Err(Error::InvalidConfig("decision interval must be > 0".into()));
        }
        Ok(())
    }

    pub fn class_range(&self) -> (u32, u32) {
        (self.v_min, self.v_max)
    }

    pub fn n_classes(&self) -> usize {
        (self.v_max - self.v_min + 1) as usize
    }

    /// Trace samples per decision step.
    pub fn stride(&self, trace_interval_secs: u32) -> Result<usize> {
        if trace_interval_secs == 0 || self.decision_interval_secs % trace_interval_secs != 0 {
            return Err(Error::InvalidConfig(format!(
                "decision interval {} s is not a multiple of the trace interval {} s",
                self.decision_interval_secs, trace_interval_secs
            )));
        }
        Ok((self.decision_interval_secs / trace_interval_secs) as usize)
    }
}

/// Minimum VNF count serving `load_bps` at line rate, clamped to `[v_min, v_max]`.
pub fn qos_required(load_bps: f64, deployment: &VnfDeployment) -> u32 {
    let (lo, hi) = deployment.class_range();
    if !(load_bps > 0.0) {
        return lo;
    }
    let n = (load_bps / deployment.per_vnf_capacity_bps).ceil();
    if n >= hi as f64 {
        hi
    } else {
        (n as u32).clamp(lo, hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelKind {
    Qml,
    Cml,
}

impl LabelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LabelKind::Qml => "qml",
            LabelKind::Cml => "cml",
        }
    }
}

impl std::str::FromStr for LabelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "qml" => Ok(LabelKind::Qml),
            "cml" => Ok(LabelKind::Cml),
            other => Err(Error::InvalidConfig(format!("unknown label kind `{other}`"))),
        }
    }
}

fn window_end(trace: &TrafficTrace, step: usize, deployment: &VnfDeployment) -> Result<(usize, usize)> {
    let stride = deployment.stride(trace.interval_secs())?;
    let start = step * stride;
    let end = start + stride;
    if end >= trace.len() {
        return Err(Error::Window {
            required: end + 1,
            available: trace.len(),
        });
    }
    Ok((start, end))
}

pub fn label_qml(trace: &TrafficTrace, step: usize, deployment: &VnfDeployment) -> Result<u32> {
    let (start, end) = window_end(trace, step, deployment)?;
    Ok((start..=end)
        .map(|i| qos_required(trace.rate_bps(i), deployment))
        .max()
        .unwrap_or(deployment.v_min))
}

pub fn label_cml(trace: &TrafficTrace, step: usize, deployment: &VnfDeployment) -> Result<u32> {
    let (start, end) = window_end(trace, step, deployment)?;
    Ok(qos_required(trace.rate_bps(start), deployment).max(qos_required(trace.rate_bps(end), deployment)))
}

pub fn label(trace: &TrafficTrace, step: usize, deployment: &VnfDeployment, kind: LabelKind) -> Result<u32> {
    match kind {
        LabelKind::Qml => label_qml(trace, step, deployment),
        LabelKind::Cml => label_cml(trace, step, deployment),
    }
}

/// Decision steps that have `lookback` samples of history and a full
/// lookahead window to the next step.
pub fn decision_steps(
    trace: &TrafficTrace,
    deployment: &VnfDeployment,
    lookback: usize,
) -> Result<std::ops::Range<usize>> {
    let stride = deployment.stride(trace.interval_secs())?;
    let first = lookback.div_ceil(stride);
    // (n + 1) * stride <= len - 1
    let end = if trace.len() > stride {
        (trace.len() - 1) / stride
    } else {
        0
    };
    Ok(first..end.max(first))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance<T = f64> {
    pub step: usize,
    pub timestamp: DateTime<Utc>,
    pub features: FeatureVector<T>,
    pub qml: u32,
    pub cml: u32,
}

impl<T> Instance<T> {
    pub fn label(&self, kind: LabelKind) -> u32 {
        match kind {
            LabelKind::Qml => self.qml,
            LabelKind::Cml => self.cml,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub trace_id: String,
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset<T = f64> {
    pub n_features: usize,
    pub class_range: (u32, u32),
    pub instances: Vec<Instance<T>>,
    pub provenance: Provenance,
}

impl<T: Scalar> LabeledDataset<T> {
    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn labels(&self, kind: LabelKind) -> Vec<u32> {
        self.instances.iter().map(|i| i.label(kind)).collect()
    }

    /// Same instances restricted to the first `n_features` features.
    pub fn with_feature_prefix(&self, n_features: usize) -> Result<Self> {
        if n_features == 0 || n_features > self.n_features {
            return Err(Error::InvalidConfig(format!(
                "feature prefix {n_features} outside 1..={}",
                self.n_features
            )));
        }
        Ok(Self {
            n_features,
            class_range: self.class_range,
            instances: self
                .instances
                .iter()
                .map(|i| Instance {
                    features: i.features.truncated(n_features),
                    ..i.clone()
                })
                .collect(),
            provenance: self.provenance.clone(),
        })
    }

    pub fn filter(&self, mut keep: impl FnMut(&Instance<T>) -> bool) -> Self {
        Self {
            n_features: self.n_features,
            class_range: self.class_range,
            instances: self.instances.iter().filter(|i| keep(i)).cloned().collect(),
            provenance: self.provenance.clone(),
        }
    }

    /// Dataset CSV: one column per feature number, then `class_qml,class_cml`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = (1..=self.n_features)
            .map(|n| n.to_string())
            .chain(["class_qml".to_string(), "class_cml".to_string()])
            .collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for inst in &self.instances {
            for v in &inst.features.values {
                out.push_str(&format!("{v},"));
            }
            out.push_str(&format!("{},{}\n", inst.qml, inst.cml));
        }
        out
    }
}

/// JSON sidecar written next to a dataset CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSidecar {
    pub deployment: VnfDeployment,
    pub window: FeatureWindowConfig,
    pub provenance: Provenance,
    pub instances: usize,
    pub first_timestamp: Option<DateTime<Utc>>,
    pub last_timestamp: Option<DateTime<Utc>>,
}

impl DatasetSidecar {
    pub fn new<T: Scalar>(ds: &LabeledDataset<T>, deployment: &VnfDeployment, window: &FeatureWindowConfig) -> Self {
        Self {
            deployment: *deployment,
            window: *window,
            provenance: ds.provenance.clone(),
            instances: ds.len(),
            first_timestamp: ds.instances.first().map(|i| i.timestamp),
            last_timestamp: ds.instances.last().map(|i| i.timestamp),
        }
    }
}

fn config_hash(deployment: &VnfDeployment, window: &FeatureWindowConfig) -> String {
    let json = serde_json::to_vec(&(deployment, window)).unwrap_or_default();
    hex::encode(Sha256::digest(json))
}

pub fn build_dataset<T: Scalar>(
    trace: &TrafficTrace,
    deployment: &VnfDeployment,
    window: &FeatureWindowConfig,
) -> Result<LabeledDataset<T>> {
    deployment.validate()?;
    window.validate()?;
    let lookback = window.lookback_samples(trace.interval_secs())?;
    let stride = deployment.stride(trace.interval_secs())?;
    let steps = decision_steps(trace, deployment, lookback)?;
    if steps.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let instances = steps
        .into_par_iter()
        .map(|step| -> Result<Instance<T>> {
            let index = step * stride;
            Ok(Instance {
                step,
                timestamp: trace.timestamp(index),
                features: extract_features(trace, index, window)?,
                qml: label_qml(trace, step, deployment)?,
                cml: label_cml(trace, step, deployment)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LabeledDataset {
        n_features: window.n_features,
        class_range: deployment.class_range(),
        instances,
        provenance: Provenance {
            trace_id: trace.id(),
            config_hash: config_hash(deployment, window),
        },
    })
}

/// Whole days covered by the trace, counted from its start.
pub fn trace_days(trace: &TrafficTrace) -> u32 {
    (trace.span_secs() / SECONDS_PER_DAY) as u32
}

/// Splits by calendar position: test = the last `test_days` whole days of the
/// trace, train = the `train_days` days immediately before it. Instances are
/// assigned by decision timestamp.
pub fn split_train_test<T: Scalar>(
    dataset: &LabeledDataset<T>,
    trace: &TrafficTrace,
    train_days: u32,
    test_days: u32,
) -> Result<(LabeledDataset<T>, LabeledDataset<T>)> {
    let days = trace_days(trace);
    if test_days == 0 || test_days >= days {
        return Err(Error::InvalidConfig(format!(
            "test_days must be in 1..{days}, got {test_days}"
        )));
    }
    let available = days - test_days;
    if train_days == 0 || train_days > available {
        return Err(Error::NotEnoughDays {
            requested: train_days,
            available,
        });
    }
    let day = Duration::seconds(SECONDS_PER_DAY);
    let test_start = trace.start_time() + day * available as i32;
    let test_end = trace.start_time() + day * days as i32;
    let train_start = test_start - day * train_days as i32;
    let train = dataset.filter(|i| i.timestamp >= train_start && i.timestamp < test_start);
    let test = dataset.filter(|i| i.timestamp >= test_start && i.timestamp < test_end);
    if train.is_empty() || test.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    const G: f64 = 1e9;

    fn trace_gbps(rates: &[f64]) -> TrafficTrace {
        TrafficTrace::new(
            Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap(),
            300,
            rates.iter().map(|r| r * G * 300.0).collect(),
        )
        .unwrap()
    }

    /// Smallest n in [v_min, v_max] with n * capacity >= load.
    fn qos_oracle(load: f64, d: &VnfDeployment) -> u32 {
        (d.v_min..=d.v_max)
            .find(|&n| n as f64 * d.per_vnf_capacity_bps >= load)
            .unwrap_or(d.v_max)
    }

    #[test]
    fn qos_examples() {
        let d = VnfDeployment::default();
        assert_eq!(qos_required(10.0 * G, &d), 10);
        assert_eq!(qos_required(0.0, &d), 1);
        assert_eq!(qos_required(2.5 * G, &d), qos_oracle(2.5 * G, &d));
        assert_eq!(qos_required(2.5 * G, &d), 3);
        assert_eq!(qos_required(1.0 * G, &d), 1);
        assert_eq!(qos_required(55.0 * G, &d), 10);
        assert_eq!(qos_required(f64::INFINITY, &d), 10);
    }

    #[test]
    fn qml_window_examples() {
        let d = VnfDeployment::default();
        assert_eq!(label_qml(&trace_gbps(&[0.5, 1.2, 2.1]), 0, &d).unwrap(), 3);
        assert_eq!(label_qml(&trace_gbps(&[1.0, 1.0, 1.0]), 0, &d).unwrap(), 1);
        assert_eq!(label_qml(&trace_gbps(&[0.5, 9.7, 0.5]), 0, &d).unwrap(), 10);
    }

    #[test]
    fn cml_endpoint_examples() {
        let d = VnfDeployment::default();
        assert_eq!(label_cml(&trace_gbps(&[0.5, 0.5, 2.1]), 0, &d).unwrap(), 3);
        assert_eq!(label_cml(&trace_gbps(&[0.5, 9.0, 0.5]), 0, &d).unwrap(), 1);
        assert_eq!(label_cml(&trace_gbps(&[4.2, 0.1, 4.2]), 0, &d).unwrap(), 5);
    }

    #[test]
    fn missing_lookahead_is_window_error() {
        let d = VnfDeployment::default();
        let tr = trace_gbps(&[1.0, 1.0]);
        assert!(matches!(label_qml(&tr, 0, &d), Err(Error::Window { .. })));
        assert!(matches!(label_cml(&tr, 0, &d), Err(Error::Window { .. })));
    }

    #[test]
    fn one_hour_trace_edge_counts() {
        let d = VnfDeployment::default();
        let w = FeatureWindowConfig::with_features(27);
        // 12 samples: history needs index >= 10, lookahead needs index + 2 <= 11.
        let short = trace_gbps(&[1.0; 12]);
        assert!(matches!(build_dataset::<f64>(&short, &d, &w), Err(Error::EmptyDataset)));
        let inclusive = trace_gbps(&[1.0; 13]);
        let ds = build_dataset::<f64>(&inclusive, &d, &w).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.instances[0].step, 5);
    }

    #[test]
    fn forty_two_days_instance_count() {
        let d = VnfDeployment::default();
        let w = FeatureWindowConfig::default();
        let tr = trace_gbps(&vec![2.0; 42 * 288]);
        let ds = build_dataset::<f64>(&tr, &d, &w).unwrap();
        // steps 2..=6046: two lost to history, one to lookahead.
        assert_eq!(ds.len(), 42 * 144 - 3);
        assert!(ds.instances.iter().all(|i| i.qml == 2 && i.cml == 2));
        let (train, test) = split_train_test(&ds, &tr, 40, 2).unwrap();
        assert_eq!(train.len(), 40 * 144 - 2);
        assert_eq!(test.len(), 2 * 144 - 1);
        assert!(matches!(
            split_train_test(&ds, &tr, 41, 2),
            Err(Error::NotEnoughDays { requested: 41, available: 40 })
        ));
    }

    #[test]
    fn dataset_csv_header() {
        let d = VnfDeployment::default();
        let w = FeatureWindowConfig::with_features(8);
        let ds = build_dataset::<f64>(&trace_gbps(&[1.0, 2.0, 3.0, 4.0, 5.0]), &d, &w).unwrap();
        let csv = ds.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "1,2,3,4,5,6,7,8,class_qml,class_cml");
        assert_eq!(lines.count(), ds.len());
    }
}
