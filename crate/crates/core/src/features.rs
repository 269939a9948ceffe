//! Feature vectors for a decision point.
//!
//! Numbering is 1-based and fixed:
//!
//! | #   | meaning                                   |
//! |-----|-------------------------------------------|
//! | 1   | day of month (1-31)                       |
//! | 2   | day of week (Monday = 1 .. Sunday = 7)    |
//! | 3   | weekday flag (1 weekday, 0 weekend)       |
//! | 4   | hour of day (0-23)                        |
//! | 5   | minute of hour (0-59)                     |
//! | 6   | decision timestamp, seconds since epoch   |
//! | 7   | load at the decision time k               |
//! | 8   | load(k) - load(k-1)                       |
//! | 9   | load(k-1)                                 |
//! | ... | alternating delta / older load            |
//! | 27  | load(k-10)                                |
//!
//! Loads `k-1, k-2, ..` are taken `sample_spacing` apart, ending at the decision time.

use chrono::{DateTime, Datelike, Timelike, Utc, Weekday};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::trace::TrafficTrace;

pub const MAX_FEATURES: usize = 27;
pub const CALENDAR_FEATURES: [usize; 6] = [1, 2, 3, 4, 5, 6];
/// Measured-load features (7, 9, .., 27).
pub const LOAD_FEATURES: [usize; 11] = [7, 9, 11, 13, 15, 17, 19, 21, 23, 25, 27];
/// Load-change features (8, 10, .., 26).
pub const DELTA_FEATURES: [usize; 10] = [8, 10, 12, 14, 16, 18, 20, 22, 24, 26];

pub fn feature_name(number: usize) -> String {
    match number {
        1 => "day_of_month".into(),
        2 => "day_of_week".into(),
        3 => "weekday".into(),
        4 => "hour".into(),
        5 => "minute".into(),
        6 => "timestamp".into(),
        n if n >= 7 && n % 2 == 1 => format!("load_k-{}", (n - 7) / 2),
        n => format!("delta_k-{}", (n - 8) / 2),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector<T = f64> {
    pub values: Vec<T>,
}

impl<T: Scalar> FeatureVector<T> {
    pub fn new(values: Vec<T>) -> Self {
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value of feature `number` (1-based).
    pub fn feature(&self, number: usize) -> T {
        self.values[number - 1]
    }

    pub fn truncated(&self, n_features: usize) -> Self {
        Self {
            values: self.values[..n_features.min(self.values.len())].to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureWindowConfig {
    /// Measured-load samples available to the extractor (times a..k).
    pub history_points: usize,
    pub sample_spacing_secs: u32,
    pub n_features: usize,
}

impl Default for FeatureWindowConfig {
    fn default() -> Self {
        Self {
            history_points: 11,
            sample_spacing_secs: 300,
            n_features: 15,
        }
    }
}

impl FeatureWindowConfig {
    pub fn with_features(n_features: usize) -> Self {
        Self {
            n_features,
            ..Self::default()
        }
    }

    /// Number of load samples (including the one at k) needed for `n_features`.
    pub fn required_samples(n_features: usize) -> usize {
        if n_features <= 6 {
            0
        } else {
            (n_features - 6) / 2 + 1
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_features == 0 || self.n_features > MAX_FEATURES {
            return Err(Error::InvalidConfig(format!(
                "n_features must be in 1..=27, got {}",
                self.n_features
            )));
        }
        if self.sample_spacing_secs == 0 {
            return Err(Error::InvalidConfig("sample_spacing must be > 0".into()));
        }
        let need = Self::required_samples(self.n_features);
        if need > self.history_points {
            return Err(Error::InvalidConfig(format!(
                "{} features need {need} load samples, history_points is {}",
                self.n_features, self.history_points
            )));
        }
        Ok(())
    }

    /// Trace samples spanned by the load history, counted in trace intervals
    /// back from the decision index (0 when no load feature is used).
    pub fn lookback_samples(&self, trace_interval_secs: u32) -> Result<usize> {
        let stride = self.stride(trace_interval_secs)?;
        Ok(Self::required_samples(self.n_features).saturating_sub(1) * stride)
    }

    fn stride(&self, trace_interval_secs: u32) -> Result<usize> {
        if self.sample_spacing_secs % trace_interval_secs != 0 {
            return Err(Error::InvalidConfig(format!(
                "sample spacing {} s is not a multiple of the trace interval {} s",
                self.sample_spacing_secs, trace_interval_secs
            )));
        }
        Ok((self.sample_spacing_secs / trace_interval_secs) as usize)
    }
}

/// Calendar features 1..=6 for a decision time.
pub fn calendar_features(ts: DateTime<Utc>) -> [f64; 6] {
    let weekday = ts.weekday();
    let is_weekday = !matches!(weekday, Weekday::Sat | Weekday::Sun);
    [
        ts.day() as f64,
        weekday.number_from_monday() as f64,
        if is_weekday { 1.0 } else { 0.0 },
        ts.hour() as f64,
        ts.minute() as f64,
        ts.timestamp() as f64,
    ]
}

pub fn extract_features<T: Scalar>(
    trace: &TrafficTrace,
    decision_index: usize,
    config: &FeatureWindowConfig,
) -> Result<FeatureVector<T>> {
    config.validate()?;
    if decision_index >= trace.len() {
        return Err(Error::Window {
            required: decision_index + 1,
            available: trace.len(),
        });
    }
    let stride = config.stride(trace.interval_secs())?;
    let lookback = config.lookback_samples(trace.interval_secs())?;
    if decision_index < lookback {
        return Err(Error::Window {
            required: lookback + 1,
            available: decision_index + 1,
        });
    }

    let samples = trace.samples();
    let load = |m: usize| samples[decision_index - m * stride];
    let mut values = Vec::with_capacity(config.n_features);
    for (i, v) in calendar_features(trace.timestamp(decision_index)).iter().enumerate() {
        if i < config.n_features {
            values.push(T::from_f64_lossy(*v));
        }
    }
    let mut number = 7;
    while number <= config.n_features {
        let m = (number - 7) / 2;
        let v = if number % 2 == 1 {
            load(m)
        } else {
            load(m) - load(m + 1)
        };
        values.push(T::from_f64_lossy(v));
        number += 1;
    }
    Ok(FeatureVector { values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn trace(samples: Vec<f64>) -> TrafficTrace {
        TrafficTrace::new(Utc.with_ymd_and_hms(2024, 1, 2, 13, 0, 0).unwrap(), 300, samples).unwrap()
    }

    #[test]
    fn required_samples_table() {
        let expected = [
            (1, 0),
            (6, 0),
            (7, 1),
            (8, 2),
            (9, 2),
            (10, 3),
            (11, 3),
            (15, 5),
            (26, 11),
            (27, 11),
        ];
        for (n, need) in expected {
            // ceil((n-6)/2) + [n-6 even and > 0]
            let oracle = if n <= 6 {
                0
            } else {
                (n - 6usize).div_ceil(2) + usize::from((n - 6) % 2 == 0)
            };
            assert_eq!(oracle, need, "oracle n={n}");
            assert_eq!(FeatureWindowConfig::required_samples(n), need, "n={n}");
        }
    }

    #[test]
    fn constant_trace_zero_deltas() {
        let tr = trace(vec![2e9; 20]);
        let fv: FeatureVector = extract_features(&tr, 10, &FeatureWindowConfig::default()).unwrap();
        for n in [7, 9, 11, 13, 15] {
            assert_eq!(fv.feature(n), 2e9);
        }
        for n in [8, 10, 12, 14] {
            assert_eq!(fv.feature(n), 0.0);
        }
    }

    #[test]
    fn load_and_delta_at_k() {
        let tr = trace(vec![5e8, 1e9, 3e9]);
        let fv: FeatureVector = extract_features(&tr, 2, &FeatureWindowConfig::with_features(9)).unwrap();
        assert_eq!(fv.feature(7), 3e9);
        assert_eq!(fv.feature(8), 2e9);
        assert_eq!(fv.feature(9), 1e9);
    }

    #[test]
    fn insufficient_history_reports_counts() {
        let tr = trace(vec![1.0; 10]);
        let err = extract_features::<f64>(&tr, 3, &FeatureWindowConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Window { required: 5, available: 4 }));
    }

    #[test]
    fn spacing_stride_skips_samples() {
        let tr = trace((0..10).map(|i| i as f64).collect());
        let cfg = FeatureWindowConfig {
            sample_spacing_secs: 600,
            n_features: 9,
            ..Default::default()
        };
        let fv: FeatureVector = extract_features(&tr, 6, &cfg).unwrap();
        assert_eq!(&fv.values[6..], &[6.0, 2.0, 4.0]);
    }

    #[test]
    fn feature_names() {
        assert_eq!(feature_name(7), "load_k-0");
        assert_eq!(feature_name(8), "delta_k-0");
        assert_eq!(feature_name(27), "load_k-10");
    }
}
