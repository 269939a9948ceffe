//! Traffic traces: uniformly sampled load measurements (bits per interval).
//!
//! Files use a two-column CSV with a header row:
//!
//! ```text
//! timestamp,load_bits
//! 2024-01-01T00:00:00Z,1000000000
//! 2024-01-01T00:05:00Z,2000000000
//! ```
//!
//! Timestamps are UTC ISO-8601 with second resolution; loads are written with
//! the shortest decimal that round-trips, so `write_trace(parse_trace(s)) == s`
//! for any file this module produced.

use std::f64::consts::PI;
use std::path::Path;

use chrono::{DateTime, Datelike, Duration, SecondsFormat, TimeZone, Timelike, Utc, Weekday};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const DEFAULT_INTERVAL_SECS: u32 = 300;
pub const SECONDS_PER_DAY: i64 = 86_400;

const HEADER: &str = "timestamp,load_bits";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrafficTrace {
    start_time: DateTime<Utc>,
    interval_secs: u32,
    samples: Vec<f64>,
}

impl TrafficTrace {
    pub fn new(start_time: DateTime<Utc>, interval_secs: u32, samples: Vec<f64>) -> Result<Self> {
        if interval_secs == 0 {
            return Err(Error::InvalidConfig("trace interval must be > 0".into()));
        }
        if let Some((i, &v)) = samples.iter().enumerate().find(|(_, v)| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::NegativeLoad { row: i + 1, value: v });
        }
        Ok(Self {
            start_time,
            interval_secs,
            samples,
        })
    }

    pub fn start_time(&self) -> DateTime<Utc> {
        self.start_time
    }

    pub fn interval_secs(&self) -> u32 {
        self.interval_secs
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Wall-clock time of sample `index`.
    pub fn timestamp(&self, index: usize) -> DateTime<Utc> {
        self.start_time + Duration::seconds(index as i64 * self.interval_secs as i64)
    }

    /// Average rate of sample `index` in bits per second.
    pub fn rate_bps(&self, index: usize) -> f64 {
        self.samples[index] / self.interval_secs as f64
    }

    /// Covered span in seconds (`len * interval`).
    pub fn span_secs(&self) -> i64 {
        self.samples.len() as i64 * self.interval_secs as i64
    }

    /// Content hash (hex SHA-256) over start time, interval and sample bits.
    pub fn id(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.start_time.timestamp().to_le_bytes());
        h.update(self.interval_secs.to_le_bytes());
        for s in &self.samples {
            h.update(s.to_bits().to_le_bytes());
        }
        hex::encode(h.finalize())
    }

    pub fn min_max(&self) -> Option<(f64, f64)> {
        self.samples.iter().fold(None, |acc, &v| match acc {
            None => Some((v, v)),
            Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
        })
    }

    /// Sub-trace of samples `[from, to)`.
    pub fn slice(&self, from: usize, to: usize) -> TrafficTrace {
        TrafficTrace {
            start_time: self.timestamp(from),
            interval_secs: self.interval_secs,
            samples: self.samples[from..to].to_vec(),
        }
    }
}

pub fn load_trace(path: impl AsRef<Path>) -> Result<TrafficTrace> {
    load_trace_with_interval(path, DEFAULT_INTERVAL_SECS)
}

pub fn load_trace_with_interval(path: impl AsRef<Path>, interval_secs: u32) -> Result<TrafficTrace> {
    let text = std::fs::read_to_string(path)?;
    parse_trace(&text, interval_secs)
}

/// Parses trace CSV text. `interval_secs` is the expected sample spacing.
pub fn parse_trace(text: &str, interval_secs: u32) -> Result<TrafficTrace> {
    if interval_secs == 0 {
        return Err(Error::InvalidConfig("trace interval must be > 0".into()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let headers = reader.headers().map_err(|e| Error::Parse {
        row: 0,
        message: e.to_string(),
    })?;
    if headers.len() != 2 {
        if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
            return Err(Error::NoSamples);
        }
        return Err(Error::Parse {
            row: 0,
            message: format!("expected header `{HEADER}`"),
        });
    }

    let mut start: Option<DateTime<Utc>> = None;
    let mut prev: Option<DateTime<Utc>> = None;
    let mut samples = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::Parse {
            row,
            message: e.to_string(),
        })?;
        if record.len() != 2 {
            return Err(Error::Parse {
                row,
                message: format!("expected 2 fields, found {}", record.len()),
            });
        }
        let ts = DateTime::parse_from_rfc3339(&record[0])
            .map_err(|e| Error::Parse {
                row,
                message: format!("bad timestamp `{}`: {e}", &record[0]),
            })?
            .with_timezone(&Utc);
        let load: f64 = record[1].parse().map_err(|_| Error::Parse {
            row,
            message: format!("bad load `{}`", &record[1]),
        })?;
        if !load.is_finite() {
            return Err(Error::Parse {
                row,
                message: format!("non-finite load `{}`", &record[1]),
            });
        }
        if load < 0.0 {
            return Err(Error::NegativeLoad { row, value: load });
        }
        if let Some(p) = prev {
            let gap = (ts - p).num_seconds();
            if gap != interval_secs as i64 {
                return Err(Error::Spacing {
                    row,
                    expected_secs: interval_secs as i64,
                    found_secs: gap,
                });
            }
        } else {
            start = Some(ts);
        }
        prev = Some(ts);
        samples.push(load);
    }

    match start {
        Some(start_time) => TrafficTrace::new(start_time, interval_secs, samples),
        None => Err(Error::NoSamples),
    }
}

/// Canonical CSV rendering of a trace.
pub fn write_trace(trace: &TrafficTrace) -> String {
    let mut out = String::with_capacity(32 * (trace.len() + 1));
    out.push_str(HEADER);
    out.push('\n');
    for (i, v) in trace.samples.iter().enumerate() {
        out.push_str(&trace.timestamp(i).to_rfc3339_opts(SecondsFormat::Secs, true));
        out.push(',');
        out.push_str(&format!("{v}"));
        out.push('\n');
    }
    out
}

pub fn save_trace(trace: &TrafficTrace, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, write_trace(trace))?;
    Ok(())
}

/// Parameters of the seeded seasonal traffic generator.
///
/// All load quantities are bits per sample interval. Use
/// [`SyntheticTraceSpec::from_gbps`] to specify them as rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticTraceSpec {
    pub days: u32,
    pub seed: u64,
    pub start_time: DateTime<Utc>,
    pub interval_secs: u32,
    pub base_load: f64,
    pub daily_amplitude: f64,
    /// Hour of day (UTC, fractional) at which the daily sinusoid peaks.
    pub daily_peak_hour: f64,
    /// Weekday load relative to weekend load; weekends are scaled by `1 / factor`.
    pub weekly_weekday_factor: f64,
    /// Relative change of the deterministic level per 30 days.
    pub monthly_drift: f64,
    pub noise_stddev: f64,
    pub burst_rate: f64,
    pub burst_amplitude: f64,
    pub burst_duration: f64,
    pub peak_load_cap: f64,
}

impl Default for SyntheticTraceSpec {
    fn default() -> Self {
        let per = |gbps: f64| gbps * 1e9 * DEFAULT_INTERVAL_SECS as f64;
        Self {
            days: 42,
            seed: 0,
            // 2024-01-01 is a Monday.
            start_time: Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap(),
            interval_secs: DEFAULT_INTERVAL_SECS,
            base_load: per(4.5),
            daily_amplitude: per(3.0),
            daily_peak_hour: 14.0,
            weekly_weekday_factor: 1.4,
            monthly_drift: 0.0,
            noise_stddev: per(0.05),
            burst_rate: 1.0,
            burst_amplitude: per(2.0),
            burst_duration: 300.0,
            peak_load_cap: per(10.0),
        }
    }
}

impl SyntheticTraceSpec {
    /// Builds a spec from rates in Gbps; everything not listed keeps its default.
    #[allow(clippy::too_many_arguments)]
    pub fn from_gbps(
        days: u32,
        seed: u64,
        base_gbps: f64,
        daily_amplitude_gbps: f64,
        noise_gbps: f64,
        burst_amplitude_gbps: f64,
        peak_cap_gbps: f64,
    ) -> Self {
        let interval = DEFAULT_INTERVAL_SECS as f64;
        Self {
            days,
            seed,
            base_load: base_gbps * 1e9 * interval,
            daily_amplitude: daily_amplitude_gbps * 1e9 * interval,
            noise_stddev: noise_gbps * 1e9 * interval,
            burst_amplitude: burst_amplitude_gbps * 1e9 * interval,
            peak_load_cap: peak_cap_gbps * 1e9 * interval,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.days == 0 {
            return bad("days must be positive");
        }
        if self.interval_secs == 0 || SECONDS_PER_DAY % self.interval_secs as i64 != 0 {
            return bad("interval must be positive and divide one day");
        }
        let non_neg = [
            ("base_load", self.base_load),
            ("daily_amplitude", self.daily_amplitude),
            ("noise_stddev", self.noise_stddev),
            ("burst_rate", self.burst_rate),
            ("burst_amplitude", self.burst_amplitude),
            ("burst_duration", self.burst_duration),
        ];
        for (name, v) in non_neg {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidConfig(format!("{name} must be finite and >= 0")));
            }
        }
        if !(self.weekly_weekday_factor > 0.0) || !self.weekly_weekday_factor.is_finite() {
            return bad("weekly_weekday_factor must be > 0");
        }
        if !(self.peak_load_cap > 0.0) || !self.peak_load_cap.is_finite() {
            return bad("peak_load_cap must be > 0");
        }
        if !self.monthly_drift.is_finite() || !self.daily_peak_hour.is_finite() {
            return bad("monthly_drift and daily_peak_hour must be finite");
        }
        Ok(())
    }

    pub fn sample_count(&self) -> usize {
        self.days as usize * (SECONDS_PER_DAY / self.interval_secs as i64) as usize
    }
}

/// Generates a deterministic synthetic trace: daily sinusoid, weekday/weekend
/// factor, optional monthly drift, Gaussian noise and Poisson rectangular bursts.
pub fn generate_trace(spec: &SyntheticTraceSpec) -> Result<TrafficTrace> {
    spec.validate()?;
    let n = spec.sample_count();
    let interval = spec.interval_secs as f64;

    // Independent streams so that toggling noise leaves burst placement unchanged.
    let mut noise_rng = ChaCha8Rng::seed_from_u64(spec.seed);
    noise_rng.set_stream(0);
    let mut burst_rng = ChaCha8Rng::seed_from_u64(spec.seed);
    burst_rng.set_stream(1);

    let mut samples: Vec<f64> = (0..n)
        .map(|i| {
            let ts = spec.start_time + Duration::seconds(i as i64 * spec.interval_secs as i64);
            deterministic_level(spec, ts, i as f64 * interval)
        })
        .collect();

    if spec.noise_stddev > 0.0 {
        let normal = Normal::new(0.0, spec.noise_stddev)
            .map_err(|e| Error::InvalidConfig(format!("noise: {e}")))?;
        for s in &mut samples {
            *s += normal.sample(&mut noise_rng);
        }
    }

    if spec.burst_rate > 0.0 && spec.burst_amplitude > 0.0 && spec.burst_duration > 0.0 {
        let span = n as f64 * interval;
        let gaps = Exp::new(spec.burst_rate / SECONDS_PER_DAY as f64)
            .map_err(|e| Error::InvalidConfig(format!("burst rate: {e}")))?;
        let mut t = gaps.sample(&mut burst_rng);
        while t < span {
            add_burst(&mut samples, interval, t, spec.burst_duration, spec.burst_amplitude);
            t += gaps.sample(&mut burst_rng);
        }
    }

    for s in &mut samples {
        *s = s.clamp(0.0, spec.peak_load_cap);
    }
    TrafficTrace::new(spec.start_time, spec.interval_secs, samples)
}

fn deterministic_level(spec: &SyntheticTraceSpec, ts: DateTime<Utc>, elapsed_secs: f64) -> f64 {
    let hour = ts.num_seconds_from_midnight() as f64 / 3600.0;
    let phase = 2.0 * PI * (hour - spec.daily_peak_hour + 6.0) / 24.0;
    let diurnal = spec.base_load + spec.daily_amplitude * phase.sin();
    let weekly = match ts.weekday() {
        Weekday::Sat | Weekday::Sun => 1.0 / spec.weekly_weekday_factor,
        _ => 1.0,
    };
    let drift = 1.0 + spec.monthly_drift * elapsed_secs / (30.0 * SECONDS_PER_DAY as f64);
    diurnal * weekly * drift
}

/// Adds a rectangular burst `[start, start + duration)` (seconds from trace
/// start), weighting each sample by its overlap with the burst.
fn add_burst(samples: &mut [f64], interval: f64, start: f64, duration: f64, amplitude: f64) {
    let end = start + duration;
    let first = (start / interval).floor() as usize;
    let mut i = first;
    while i < samples.len() {
        let lo = i as f64 * interval;
        let hi = lo + interval;
        if lo >= end {
            break;
        }
        let overlap = hi.min(end) - lo.max(start);
        if overlap > 0.0 {
            samples[i] += amplitude * overlap / interval;
        }
        i += 1;
    }
}
