//! End-to-end stages with fixed output file names.
//!
//! JSON outputs wrap their result with the config hash, the resolved config
//! and the trace id. CSV outputs start with a `# config_hash=` comment line,
//! except `trace.csv` and `dataset.csv`, whose formats are fixed and whose
//! JSON sidecars carry the hash.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::{
    available_training_days, curve_csv, evaluate, evaluate_ma, learning_curve_features,
    learning_curve_training_size, rank_features, time_train_test, CurvePoint, CurveSetup, EvaluationReport,
    FeatureRanking, TimingReport,
};
use crate::config::RunConfig;
use crate::cost::{run_sdwan, CostReport, DecisionSource};
use crate::error::{Error, Result};
use crate::features::{FeatureWindowConfig, MAX_FEATURES};
use crate::labeling::{build_dataset, split_train_test, trace_days, DatasetSidecar, LabelKind};
use crate::learners::{load_model, save_model, train, Algorithm};
use crate::simulate::{simulate, timeline_csv, SimulationReport, VirtualizationProfile};
use crate::trace::{generate_trace, load_trace, write_trace, TrafficTrace};
use crate::{DatasetF64, ModelF64};

pub mod files {
    pub const TRACE: &str = "trace.csv";
    pub const TRACE_META: &str = "trace.json";
    pub const DATASET: &str = "dataset.csv";
    pub const DATASET_META: &str = "dataset.json";
    pub const EVALUATION_JSON: &str = "evaluation.json";
    pub const EVALUATION_CSV: &str = "evaluation.csv";
    pub const EVALUATION_CLASSES_CSV: &str = "evaluation_classes.csv";
    pub const RANKING_JSON: &str = "ranking.json";
    pub const RANKING_CSV: &str = "ranking.csv";
    pub const CURVES_JSON: &str = "curves.json";
    pub const CURVE_FEATURES_CSV: &str = "curve_features.csv";
    pub const CURVE_DAYS_CSV: &str = "curve_days.csv";
    pub const SIMULATION_JSON: &str = "simulation.json";
    pub const SIMULATION_CSV: &str = "simulation.csv";
    pub const COST_JSON: &str = "cost.json";
    pub const COST_CSV: &str = "cost.csv";
    pub const TIMING_JSON: &str = "timing.json";
    pub const TIMING_CSV: &str = "timing.csv";

    /// `model-<algorithm>-<label>.vnfm` plus a `.json` sidecar of the same stem.
    pub fn model(algorithm: crate::learners::Algorithm, label: crate::labeling::LabelKind) -> String {
        format!("model-{}-{}.vnfm", algorithm.as_str(), label.as_str())
    }

    pub fn timeline(method: &str, profile: &str) -> String {
        format!("timeline-{method}-{profile}.csv")
    }
}

#[derive(Debug, Serialize)]
pub struct Envelope<'a, R: Serialize> {
    pub config_hash: &'a str,
    pub trace_id: &'a str,
    pub config: &'a RunConfig,
    pub result: &'a R,
}

/// Decision method compared in simulation and cost: a model trained on one
/// label kind, or the moving-average baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Qml,
    Cml,
    Ma,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Qml, Method::Cml, Method::Ma];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Qml => "qml",
            Method::Cml => "cml",
            Method::Ma => "ma",
        }
    }

    pub fn label(self) -> Option<LabelKind> {
        match self {
            Method::Qml => Some(LabelKind::Qml),
            Method::Cml => Some(LabelKind::Cml),
            Method::Ma => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationEntry {
    pub algorithm: Algorithm,
    pub label: LabelKind,
    pub report: EvaluationReport,
}

pub fn evaluation_csv(entries: &[EvaluationEntry]) -> String {
    let mut out = String::from("algorithm,label,instances,accuracy,precision,fp_rate,roc_area\n");
    for e in entries {
        let a = &e.report.aggregate;
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            e.algorithm.as_str(),
            e.label.as_str(),
            e.report.instances,
            e.report.accuracy(),
            a.precision,
            a.fp_rate,
            a.roc_area.map(|v| v.to_string()).unwrap_or_default()
        ));
    }
    out
}

pub fn evaluation_classes_csv(entries: &[EvaluationEntry]) -> String {
    let mut out = String::new();
    for (i, e) in entries.iter().enumerate() {
        for (j, line) in e.report.to_csv().lines().enumerate() {
            if j == 0 {
                if i == 0 {
                    out.push_str(&format!("algorithm,label,{line}\n"));
                }
                continue;
            }
            out.push_str(&format!("{},{},{line}\n", e.algorithm.as_str(), e.label.as_str()));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curves {
    pub algorithm: Algorithm,
    pub label: LabelKind,
    pub by_features: Vec<CurvePoint>,
    pub by_training_days: Vec<CurvePoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationEntry {
    pub method: Method,
    pub report: SimulationReport,
}

pub fn simulation_csv(entries: &[SimulationEntry]) -> String {
    let mut out = String::from(
        "method,profile,startup_seconds,degraded_minutes_total,degraded_minutes_low_provisioning,\
         degraded_minutes_startup,energy_joules,overprovisioned_vnf_minutes\n",
    );
    for e in entries {
        let r = &e.report;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            e.method.as_str(),
            r.profile.label(),
            r.profile.startup_seconds,
            r.degraded_minutes_total,
            r.degraded_minutes_low_provisioning,
            r.degraded_minutes_startup,
            r.energy_joules,
            r.overprovisioned_vnf_minutes
        ));
    }
    out
}

pub fn timing_csv(reports: &[TimingReport]) -> String {
    let mut out = String::from("algorithm,repetitions,train_instances,test_instances,train_seconds,test_seconds\n");
    for r in reports {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.algorithm.as_str(),
            r.repetitions,
            r.train_instances,
            r.test_instances,
            r.train_seconds,
            r.test_seconds
        ));
    }
    out
}

pub fn cost_csv(reports: &[CostReport]) -> String {
    let mut out = String::new();
    for (i, r) in reports.iter().enumerate() {
        let csv = r.to_csv();
        let body = if i == 0 { &csv[..] } else { csv.split_once('\n').map_or("", |x| x.1) };
        out.push_str(body);
    }
    out
}

/// Models keyed by (algorithm, label).
pub type ModelSet = BTreeMap<(Algorithm, LabelKind), ModelF64>;

/// A configured run. Stage methods are pure; `write_*` methods persist.
#[derive(Debug, Clone)]
pub struct Pipeline {
    config: RunConfig,
    hash: String,
}

impl Pipeline {
    pub fn new(config: RunConfig) -> Result<Self> {
        config.validate()?;
        let hash = config.hash();
        Ok(Self { config, hash })
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    /// Loads `input`, or generates the configured synthetic trace.
    pub fn obtain_trace(&self, input: Option<&Path>) -> Result<TrafficTrace> {
        match input {
            Some(p) => load_trace(p),
            None => generate_trace(&self.config.trace_spec()),
        }
    }

    pub fn dataset(&self, trace: &TrafficTrace, n_features: usize) -> Result<DatasetF64> {
        let window = FeatureWindowConfig {
            n_features,
            ..self.config.window
        };
        build_dataset(trace, &self.config.deployment, &window)
    }

    pub fn split(&self, dataset: &DatasetF64, trace: &TrafficTrace) -> Result<(DatasetF64, DatasetF64)> {
        split_train_test(
            dataset,
            trace,
            self.config.split.train_days,
            self.config.split.test_days,
        )
    }

    pub fn train(&self, train_ds: &DatasetF64, algorithm: Algorithm, label: LabelKind) -> Result<ModelF64> {
        train(
            train_ds,
            label,
            algorithm,
            &self.config.params,
            self.config.stage_seed("train"),
        )
    }

    pub fn evaluate_model(&self, model: &ModelF64, trace: &TrafficTrace, test: &DatasetF64) -> Result<EvaluationReport> {
        if model.algorithm == Algorithm::MovingAverage {
            evaluate_ma(
                trace,
                test,
                &model.params.moving_average,
                &self.config.deployment,
                model.label_kind,
            )
        } else {
            evaluate(model, test, model.label_kind)
        }
    }

    /// Trains every configured (algorithm, label) pair.
    pub fn train_all(&self, train_ds: &DatasetF64) -> Result<ModelSet> {
        let mut set = ModelSet::new();
        for &label in &self.config.evaluate.labels {
            for &algorithm in &self.config.evaluate.algorithms {
                set.insert((algorithm, label), self.train(train_ds, algorithm, label)?);
            }
        }
        Ok(set)
    }

    pub fn evaluate_all(&self, models: &ModelSet, trace: &TrafficTrace, test: &DatasetF64) -> Result<Vec<EvaluationEntry>> {
        let mut out = Vec::new();
        for &label in &self.config.evaluate.labels {
            for &algorithm in &self.config.evaluate.algorithms {
                let model = models
                    .get(&(algorithm, label))
                    .ok_or_else(|| Error::Missing(files::model(algorithm, label)))?;
                out.push(EvaluationEntry {
                    algorithm,
                    label,
                    report: self.evaluate_model(model, trace, test)?,
                });
            }
        }
        Ok(out)
    }

    pub fn rank(&self, train_ds: &DatasetF64) -> Result<FeatureRanking> {
        rank_features(train_ds, self.config.label, self.config.rank.bins)
    }

    pub fn curves(&self, trace: &TrafficTrace) -> Result<Curves> {
        let c = &self.config;
        let setup = CurveSetup {
            algorithm: c.algorithm,
            params: &c.params,
            label_kind: c.label,
            seed: c.stage_seed("curve"),
        };
        let widest = c
            .curve
            .feature_counts
            .iter()
            .copied()
            .max()
            .unwrap_or(c.window.n_features)
            .clamp(1, MAX_FEATURES);
        let wide = self.dataset(trace, widest)?;
        let (train_wide, test_wide) = self.split(&wide, trace)?;
        let by_features = learning_curve_features(&train_wide, &test_wide, &setup, &c.curve.feature_counts)?;

        let ds = self.dataset(trace, c.window.n_features)?;
        let days = trace_days(trace);
        let (full_train, test) = split_train_test(&ds, trace, days - c.split.test_days, c.split.test_days)?;
        let available = available_training_days(&full_train, &test)?;
        if let Some(&bad) = c.curve.day_counts.iter().find(|&&d| d > available) {
            return Err(Error::NotEnoughDays {
                requested: bad,
                available,
            });
        }
        let by_training_days = learning_curve_training_size(&full_train, &test, &setup, &c.curve.day_counts)?;
        Ok(Curves {
            algorithm: c.algorithm,
            label: c.label,
            by_features,
            by_training_days,
        })
    }

    fn source<'a>(&'a self, method: Method, models: &'a ModelSet) -> Result<DecisionSource<'a, f64>> {
        Ok(match method.label() {
            None => DecisionSource::MovingAverage(&self.config.params.moving_average),
            Some(label) => DecisionSource::Model {
                model: models
                    .get(&(self.config.algorithm, label))
                    .ok_or_else(|| Error::Missing(files::model(self.config.algorithm, label)))?,
                window: &self.config.window,
            },
        })
    }

    /// Decisions of `method` for the test window: `(first_step, decisions)`.
    pub fn test_decisions(&self, method: Method, models: &ModelSet, trace: &TrafficTrace) -> Result<(usize, Vec<u32>)> {
        let source = self.source(method, models)?;
        let steps = crate::cost::evaluation_steps(
            trace,
            &source,
            &self.config.deployment,
            Some(self.config.split.test_days),
        )?;
        let first = steps.start;
        Ok((first, source.decide(trace, steps, &self.config.deployment)?))
    }

    /// Replays every method under every configured profile. With
    /// `timelines`, per-piece timelines are also returned as CSV text.
    pub fn simulate(
        &self,
        models: &ModelSet,
        trace: &TrafficTrace,
        timelines: bool,
    ) -> Result<(Vec<SimulationEntry>, Vec<(String, String)>)> {
        let c = &self.config;
        let mut entries = Vec::new();
        let mut dumps = Vec::new();
        for method in Method::ALL {
            let (first, decisions) = self.test_decisions(method, models, trace)?;
            for profile in &c.simulate.profiles {
                let (tl, report) = simulate(trace, first, &decisions, &c.deployment, profile, &c.simulate.server)?;
                if timelines {
                    dumps.push((
                        files::timeline(method.as_str(), profile.label()),
                        timeline_csv(trace, &tl, &c.deployment),
                    ));
                }
                entries.push(SimulationEntry { method, report });
            }
        }
        Ok((entries, dumps))
    }

    /// SD-WAN cost per method, with every site carrying `site_traces[i]`.
    pub fn cost(&self, models: &ModelSet, site_traces: &[&TrafficTrace]) -> Result<Vec<CostReport>> {
        let c = &self.config;
        let profile: VirtualizationProfile = c.profile(c.cost.profile);
        let scenario = crate::cost::SdWanScenario {
            deployment: c.deployment,
            ..c.cost.scenario.clone()
        };
        Method::ALL
            .iter()
            .map(|&m| {
                run_sdwan(
                    &scenario,
                    site_traces,
                    m.as_str(),
                    &self.source(m, models)?,
                    &profile,
                    Some(c.split.test_days),
                )
            })
            .collect()
    }

    pub fn timing(&self, trace: &TrafficTrace, train_ds: &DatasetF64, test: &DatasetF64) -> Result<Vec<TimingReport>> {
        let c = &self.config;
        c.evaluate
            .algorithms
            .iter()
            .map(|&a| {
                time_train_test(
                    train_ds,
                    test,
                    a,
                    &c.params,
                    c.stage_seed("train"),
                    c.label,
                    c.timing.repetitions,
                    Some((trace, &c.deployment)),
                )
            })
            .collect()
    }

    pub fn write_json<R: Serialize>(&self, dir: &Path, name: &str, trace_id: &str, result: &R) -> Result<PathBuf> {
        let env = Envelope {
            config_hash: &self.hash,
            trace_id,
            config: &self.config,
            result,
        };
        let mut text = serde_json::to_string_pretty(&env)?;
        text.push('\n');
        write_file(dir, name, text.as_bytes())
    }

    pub fn write_csv(&self, dir: &Path, name: &str, body: &str) -> Result<PathBuf> {
        let text = format!("# config_hash={}\n{body}", self.hash);
        write_file(dir, name, text.as_bytes())
    }

    pub fn write_trace(&self, dir: &Path, trace: &TrafficTrace) -> Result<()> {
        write_file(dir, files::TRACE, write_trace(trace).as_bytes())?;
        let meta = TraceMeta::new(trace);
        self.write_json(dir, files::TRACE_META, &meta.trace_id, &meta)?;
        Ok(())
    }

    pub fn write_dataset(&self, dir: &Path, dataset: &DatasetF64) -> Result<()> {
        write_file(dir, files::DATASET, dataset.to_csv().as_bytes())?;
        let window = FeatureWindowConfig {
            n_features: dataset.n_features,
            ..self.config.window
        };
        let sidecar = DatasetSidecar::new(dataset, &self.config.deployment, &window);
        self.write_json(dir, files::DATASET_META, &dataset.provenance.trace_id, &sidecar)?;
        Ok(())
    }

    pub fn write_model(&self, dir: &Path, model: &ModelF64, trace_id: &str) -> Result<PathBuf> {
        let name = files::model(model.algorithm, model.label_kind);
        let path = write_file(dir, &name, &save_model(model)?)?;
        self.write_json(dir, &name.replace(".vnfm", ".json"), trace_id, &ModelMeta::new(model))?;
        Ok(path)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub trace_id: String,
    pub samples: usize,
    pub days: u32,
    pub interval_secs: u32,
    pub start_time: String,
    pub min_load_bits: f64,
    pub max_load_bits: f64,
}

impl TraceMeta {
    pub fn new(trace: &TrafficTrace) -> Self {
        let (lo, hi) = trace.min_max().unwrap_or((0.0, 0.0));
        Self {
            trace_id: trace.id(),
            samples: trace.len(),
            days: trace_days(trace),
            interval_secs: trace.interval_secs(),
            start_time: trace.start_time().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            min_load_bits: lo,
            max_load_bits: hi,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub algorithm: Algorithm,
    pub label: LabelKind,
    pub feature_count: usize,
    pub class_range: (u32, u32),
    pub seed: u64,
    pub instances: usize,
}

impl ModelMeta {
    pub fn new(m: &ModelF64) -> Self {
        Self {
            algorithm: m.algorithm,
            label: m.label_kind,
            feature_count: m.feature_count,
            class_range: m.class_range,
            seed: m.seed,
            instances: m.training_meta.instances,
        }
    }
}

pub fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, bytes)?;
    Ok(path)
}

pub fn read_model(path: &Path) -> Result<ModelF64> {
    load_model(&fs::read(path)?)
}

/// Summary of a full report run.
#[derive(Debug, Clone)]
pub struct ReportOutcome {
    pub trace_id: String,
    pub evaluation: Vec<EvaluationEntry>,
    pub simulation: Vec<SimulationEntry>,
    pub cost: Vec<CostReport>,
    pub written: Vec<PathBuf>,
}

/// Runs every stage and writes all outputs under `out_dir`. Timing output,
/// which is not reproducible, is written only when `with_timing` is set.
pub fn run_report(
    config: RunConfig,
    input: Option<&Path>,
    out_dir: &Path,
    with_timing: bool,
) -> Result<ReportOutcome> {
    let p = Pipeline::new(config)?;
    let c = p.config().clone();
    let mut written = Vec::new();

    let trace = p.obtain_trace(input)?;
    let trace_id = trace.id();
    p.write_trace(out_dir, &trace)?;
    written.push(out_dir.join(files::TRACE));

    let dataset = p.dataset(&trace, c.window.n_features)?;
    p.write_dataset(out_dir, &dataset)?;
    written.push(out_dir.join(files::DATASET));

    let (train_ds, test) = p.split(&dataset, &trace)?;
    let mut models = p.train_all(&train_ds)?;
    for label in [LabelKind::Qml, LabelKind::Cml] {
        if !models.contains_key(&(c.algorithm, label)) {
            models.insert((c.algorithm, label), p.train(&train_ds, c.algorithm, label)?);
        }
    }
    for m in models.values() {
        written.push(p.write_model(out_dir, m, &trace_id)?);
    }

    let evaluation = p.evaluate_all(&models, &trace, &test)?;
    written.push(p.write_json(out_dir, files::EVALUATION_JSON, &trace_id, &evaluation)?);
    written.push(p.write_csv(out_dir, files::EVALUATION_CSV, &evaluation_csv(&evaluation))?);
    written.push(p.write_csv(out_dir, files::EVALUATION_CLASSES_CSV, &evaluation_classes_csv(&evaluation))?);

    let ranking = p.rank(&train_ds)?;
    written.push(p.write_json(out_dir, files::RANKING_JSON, &trace_id, &ranking)?);
    written.push(p.write_csv(out_dir, files::RANKING_CSV, &ranking.to_csv())?);

    let curves = p.curves(&trace)?;
    written.push(p.write_json(out_dir, files::CURVES_JSON, &trace_id, &curves)?);
    written.push(p.write_csv(out_dir, files::CURVE_FEATURES_CSV, &curve_csv("features", &curves.by_features))?);
    written.push(p.write_csv(out_dir, files::CURVE_DAYS_CSV, &curve_csv("training_days", &curves.by_training_days))?);

    let (simulation, _) = p.simulate(&models, &trace, false)?;
    written.push(p.write_json(out_dir, files::SIMULATION_JSON, &trace_id, &simulation)?);
    written.push(p.write_csv(out_dir, files::SIMULATION_CSV, &simulation_csv(&simulation))?);

    let sites = vec![&trace; c.cost.scenario.sites.len()];
    let cost = p.cost(&models, &sites)?;
    written.push(p.write_json(out_dir, files::COST_JSON, &trace_id, &cost)?);
    written.push(p.write_csv(out_dir, files::COST_CSV, &cost_csv(&cost))?);

    if with_timing {
        let timing = p.timing(&trace, &train_ds, &test)?;
        written.push(p.write_json(out_dir, files::TIMING_JSON, &trace_id, &timing)?);
        written.push(p.write_csv(out_dir, files::TIMING_CSV, &timing_csv(&timing))?);
    }
    Ok(ReportOutcome {
        trace_id,
        evaluation,
        simulation,
        cost,
        written,
    })
}
