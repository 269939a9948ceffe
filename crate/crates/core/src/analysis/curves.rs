use chrono::Duration;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::evaluate;
use crate::error::{Error, Result};
use crate::labeling::{LabelKind, LabeledDataset};
use crate::learners::{train, Algorithm, TrainParams};
use crate::scalar::Scalar;
use crate::trace::SECONDS_PER_DAY;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    /// Feature count or training days.
    pub x: u32,
    pub instances: usize,
    pub precision: f64,
    pub fp_rate: f64,
    pub roc_area: Option<f64>,
}

pub fn curve_csv(x_name: &str, points: &[CurvePoint]) -> String {
    let mut out = format!("{x_name},instances,precision,fp_rate,roc_area\n");
    for p in points {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            p.x,
            p.instances,
            p.precision,
            p.fp_rate,
            p.roc_area.map(|v| v.to_string()).unwrap_or_default()
        ));
    }
    out
}

#[derive(Debug, Clone, Copy)]
pub struct CurveSetup<'a> {
    pub algorithm: Algorithm,
    pub params: &'a TrainParams,
    pub label_kind: LabelKind,
    pub seed: u64,
}

fn point<T: Scalar>(
    x: u32,
    train_ds: &LabeledDataset<T>,
    test: &LabeledDataset<T>,
    setup: &CurveSetup<'_>,
) -> Result<CurvePoint> {
    let model = train(train_ds, setup.label_kind, setup.algorithm, setup.params, setup.seed)?;
    let report = evaluate(&model, test, setup.label_kind)?;
    Ok(CurvePoint {
        x,
        instances: train_ds.len(),
        precision: report.aggregate.precision,
        fp_rate: report.aggregate.fp_rate,
        roc_area: report.aggregate.roc_area,
    })
}

/// Precision as a function of feature count: each point retrains on the
/// first `f` features.
pub fn learning_curve_features<T: Scalar>(
    train_ds: &LabeledDataset<T>,
    test: &LabeledDataset<T>,
    setup: &CurveSetup<'_>,
    feature_counts: &[usize],
) -> Result<Vec<CurvePoint>> {
    if let Some(&bad) = feature_counts
        .iter()
        .find(|&&f| f == 0 || f > train_ds.n_features.min(test.n_features))
    {
        return Err(Error::InvalidConfig(format!(
            "feature count {bad} outside 1..={}",
            train_ds.n_features.min(test.n_features)
        )));
    }
    feature_counts
        .par_iter()
        .map(|&f| {
            point(
                f as u32,
                &train_ds.with_feature_prefix(f)?,
                &test.with_feature_prefix(f)?,
                setup,
            )
        })
        .collect()
}

/// Whole days of training history available before the test window
/// (partial leading days round up).
pub fn available_training_days<T: Scalar>(full_train: &LabeledDataset<T>, test: &LabeledDataset<T>) -> Result<u32> {
    let test_start = test.instances.iter().map(|i| i.timestamp).min().ok_or(Error::EmptyDataset)?;
    let earliest = full_train
        .instances
        .iter()
        .map(|i| i.timestamp)
        .filter(|&t| t < test_start)
        .min()
        .ok_or(Error::EmptyDataset)?;
    let secs = (test_start - earliest).num_seconds();
    Ok(((secs + SECONDS_PER_DAY - 1) / SECONDS_PER_DAY) as u32)
}

/// Precision as a function of training history: each point trains on the
/// `d` days immediately preceding the test window.
pub fn learning_curve_training_size<T: Scalar>(
    full_train: &LabeledDataset<T>,
    test: &LabeledDataset<T>,
    setup: &CurveSetup<'_>,
    day_counts: &[u32],
) -> Result<Vec<CurvePoint>> {
    let available = available_training_days(full_train, test)?;
    if let Some(&bad) = day_counts.iter().find(|&&d| d == 0 || d > available) {
        return Err(Error::NotEnoughDays {
            requested: bad,
            available,
        });
    }
    let test_start = test.instances.iter().map(|i| i.timestamp).min().ok_or(Error::EmptyDataset)?;
    day_counts
        .par_iter()
        .map(|&d| {
            let from = test_start - Duration::seconds(d as i64 * SECONDS_PER_DAY);
            let subset = full_train.filter(|i| i.timestamp >= from && i.timestamp < test_start);
            point(d, &subset, test, setup)
        })
        .collect()
}
