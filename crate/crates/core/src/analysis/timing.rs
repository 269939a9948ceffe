use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::metrics::ma_decisions;
use crate::error::{Error, Result};
use crate::labeling::{LabelKind, LabeledDataset, VnfDeployment};
use crate::learners::{train, Algorithm, TrainParams};
use crate::scalar::Scalar;
use crate::trace::TrafficTrace;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub algorithm: Algorithm,
    pub repetitions: usize,
    pub train_instances: usize,
    pub test_instances: usize,
    /// Median seconds, millisecond resolution.
    pub train_seconds: f64,
    pub test_seconds: f64,
}

fn median_ms(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = if v.len() % 2 == 1 {
        v[v.len() / 2]
    } else {
        (v[v.len() / 2 - 1] + v[v.len() / 2]) / 2.0
    };
    (m * 1000.0).round() / 1000.0
}

/// Median wall-clock train and test time over `repetitions` runs. The
/// moving-average baseline needs the trace it predicts from.
#[allow(clippy::too_many_arguments)]
pub fn time_train_test<T: Scalar>(
    train_ds: &LabeledDataset<T>,
    test: &LabeledDataset<T>,
    algorithm: Algorithm,
    params: &TrainParams,
    seed: u64,
    label_kind: LabelKind,
    repetitions: usize,
    ma_source: Option<(&TrafficTrace, &VnfDeployment)>,
) -> Result<TimingReport> {
    if repetitions == 0 {
        return Err(Error::InvalidConfig("repetitions must be >= 1".into()));
    }
    let mut train_times = Vec::with_capacity(repetitions);
    let mut test_times = Vec::with_capacity(repetitions);
    for _ in 0..repetitions {
        let started = Instant::now();
        let model = train(train_ds, label_kind, algorithm, params, seed)?;
        train_times.push(started.elapsed().as_secs_f64());

        let started = Instant::now();
        if algorithm == Algorithm::MovingAverage {
            let (trace, deployment) =
                ma_source.ok_or_else(|| Error::Missing("trace for moving-average timing".into()))?;
            std::hint::black_box(ma_decisions(trace, test, &params.moving_average, deployment)?);
        } else {
            for inst in &test.instances {
                std::hint::black_box(model.predict(&inst.features.values)?);
            }
        }
        test_times.push(started.elapsed().as_secs_f64());
    }
    Ok(TimingReport {
        algorithm,
        repetitions,
        train_instances: train_ds.len(),
        test_instances: test.len(),
        train_seconds: median_ms(train_times),
        test_seconds: median_ms(test_times),
    })
}
