#![allow(dead_code)]

use chrono::{TimeZone, Utc};
use proptest::prelude::*;
use vnf_autoscale::features::FeatureVector;
use vnf_autoscale::labeling::{Instance, LabeledDataset, Provenance, VnfDeployment};
use vnf_autoscale::trace::TrafficTrace;

pub const GBPS_SAMPLE: f64 = 1e9 * 300.0;

pub fn monday() -> chrono::DateTime<Utc> {
    Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap()
}

pub fn trace_from_gbps(rates: &[f64]) -> TrafficTrace {
    TrafficTrace::new(monday(), 300, rates.iter().map(|r| r * GBPS_SAMPLE).collect()).unwrap()
}

/// Rates in Gbps, covering 0 to a little above the 10-VNF cap.
pub fn rates(min_len: usize, max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..11.0, min_len..max_len)
}

/// Dataset over classes 1..=10 with the same label for both kinds.
pub fn dataset(rows: &[(Vec<f64>, u32)]) -> LabeledDataset<f64> {
    LabeledDataset {
        n_features: rows[0].0.len(),
        class_range: (1, 10),
        instances: rows
            .iter()
            .enumerate()
            .map(|(i, (x, c))| Instance {
                step: i,
                timestamp: monday(),
                features: FeatureVector::new(x.clone()),
                qml: *c,
                cml: *c,
            })
            .collect(),
        provenance: Provenance {
            trace_id: String::new(),
            config_hash: String::new(),
        },
    }
}

/// Smallest VNF count in range whose capacity covers `rate`, found by scanning.
pub fn oracle_qos(rate: f64, d: &VnfDeployment) -> u32 {
    (d.v_min..=d.v_max)
        .find(|&v| v as f64 * d.per_vnf_capacity_bps >= rate)
        .unwrap_or(d.v_max)
}

/// `(qml, cml)` by scanning the decision window directly.
pub fn oracle_labels(trace: &TrafficTrace, step: usize, d: &VnfDeployment) -> (u32, u32) {
    let s = (d.decision_interval_secs / trace.interval_secs()) as usize;
    let q = |i: usize| oracle_qos(trace.rate_bps(i), d);
    let mut qml = 0;
    for i in step * s..=(step + 1) * s {
        qml = qml.max(q(i));
    }
    (qml, q(step * s).max(q((step + 1) * s)))
}
