use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use vnf_autoscale::analysis::curve_csv;
use vnf_autoscale::config::RunConfig;
use vnf_autoscale::labeling::{split_train_test, LabelKind};
use vnf_autoscale::learners::Algorithm;
use vnf_autoscale::pipeline::{
    cost_csv, evaluation_classes_csv, evaluation_csv, files, read_model, run_report, simulation_csv, EvaluationEntry,
    ModelSet, Pipeline, TraceMeta,
};
use vnf_autoscale::trace::{save_trace, TrafficTrace};
use vnf_autoscale::ModelF64;

use crate::{Cli, Command, GenerateArgs, ModelArgs, SplitArgs};

const GBPS_PER_SAMPLE: f64 = 1e9 * 300.0;

pub fn run(cli: Cli) -> Result<()> {
    let mut cfg = load_config(cli.global.config.as_deref())?;
    if let Some(seed) = cli.global.seed {
        cfg.seed = seed;
    }
    let out = cli.global.out_dir;
    match cli.command {
        Command::Generate(args) => generate(cfg, args),
        Command::Dataset { trace, features } => {
            if let Some(n) = features {
                cfg.window.n_features = n;
            }
            let p = Pipeline::new(cfg)?;
            let trace = p.obtain_trace(trace.trace.as_deref())?;
            let ds = p.dataset(&trace, p.config().window.n_features)?;
            p.write_dataset(&out, &ds)?;
            println!(
                "{} instances, {} features -> {}",
                ds.len(),
                ds.n_features,
                out.join(files::DATASET).display()
            );
            Ok(())
        }
        Command::Train {
            trace,
            algo,
            label,
            split,
            features,
            trees,
        } => {
            apply_split(&mut cfg, &split);
            if let Some(a) = algo {
                cfg.algorithm = a;
            }
            if let Some(l) = label {
                cfg.label = l;
            }
            if let Some(n) = features {
                cfg.window.n_features = n;
            }
            if let Some(t) = trees {
                cfg.params.forest.n_trees = t;
            }
            let p = Pipeline::new(cfg)?;
            let c = p.config().clone();
            let trace = p.obtain_trace(trace.trace.as_deref())?;
            let ds = p.dataset(&trace, c.window.n_features)?;
            let (train_ds, _) = p.split(&ds, &trace)?;
            let model = p.train(&train_ds, c.algorithm, c.label)?;
            let path = p.write_model(&out, &model, &trace.id())?;
            println!(
                "trained {} on {} labels: {} instances, {} features -> {}",
                c.algorithm.as_str(),
                c.label.as_str(),
                train_ds.len(),
                model.feature_count,
                path.display()
            );
            Ok(())
        }
        Command::Evaluate { trace, model, split } => {
            apply_split(&mut cfg, &split);
            evaluate(cfg, trace.trace.as_deref(), model, &out)
        }
        Command::Rank {
            trace,
            label,
            bins,
            split,
        } => {
            apply_split(&mut cfg, &split);
            if let Some(l) = label {
                cfg.label = l;
            }
            if let Some(b) = bins {
                cfg.rank.bins = b;
            }
            let p = Pipeline::new(cfg)?;
            let trace = p.obtain_trace(trace.trace.as_deref())?;
            let ds = p.dataset(&trace, p.config().window.n_features)?;
            let (train_ds, _) = p.split(&ds, &trace)?;
            let ranking = p.rank(&train_ds)?;
            let id = trace.id();
            p.write_json(&out, files::RANKING_JSON, &id, &ranking)?;
            p.write_csv(&out, files::RANKING_CSV, &ranking.to_csv())?;
            println!("{:>4}  {:>7}  {:<22} {:>9}", "rank", "feature", "name", "gain_bits");
            for (i, g) in ranking.by_info_gain.iter().enumerate() {
                println!("{:>4}  {:>7}  {:<22} {:>9.4}", i + 1, g.feature, g.name, g.gain);
            }
            if let Some(pc) = ranking.pca.components.first() {
                println!(
                    "PCA: first component explains {:.1}% of variance ({} features retained, {} dropped)",
                    pc.explained_ratio * 100.0,
                    ranking.pca.retained.len(),
                    ranking.pca.dropped.len()
                );
            }
            Ok(())
        }
        Command::Curve {
            trace,
            algo,
            label,
            feature_counts,
            day_counts,
            split,
        } => {
            apply_split(&mut cfg, &split);
            if let Some(a) = algo {
                cfg.algorithm = a;
            }
            if let Some(l) = label {
                cfg.label = l;
            }
            if let Some(f) = feature_counts {
                cfg.curve.feature_counts = f;
            }
            if let Some(d) = day_counts {
                cfg.curve.day_counts = d;
            }
            let p = Pipeline::new(cfg)?;
            let trace = p.obtain_trace(trace.trace.as_deref())?;
            let curves = p.curves(&trace)?;
            let id = trace.id();
            p.write_json(&out, files::CURVES_JSON, &id, &curves)?;
            let by_f = curve_csv("features", &curves.by_features);
            let by_d = curve_csv("training_days", &curves.by_training_days);
            p.write_csv(&out, files::CURVE_FEATURES_CSV, &by_f)?;
            p.write_csv(&out, files::CURVE_DAYS_CSV, &by_d)?;
            print!("{by_f}\n{by_d}");
            Ok(())
        }
        Command::Simulate {
            trace,
            models,
            profile,
            timeline,
            test_days,
        } => {
            if let Some(d) = test_days {
                cfg.split.test_days = d;
            }
            if !profile.is_empty() {
                let chosen: Vec<_> = profile.iter().map(|&t| cfg.profile(t)).collect();
                cfg.simulate.profiles = chosen;
            }
            let set = load_models(&mut cfg, &models, &out)?;
            let p = Pipeline::new(cfg)?;
            let trace = p.obtain_trace(trace.trace.as_deref())?;
            let (entries, dumps) = p.simulate(&set, &trace, timeline)?;
            let id = trace.id();
            p.write_json(&out, files::SIMULATION_JSON, &id, &entries)?;
            p.write_csv(&out, files::SIMULATION_CSV, &simulation_csv(&entries))?;
            for (name, body) in dumps {
                p.write_csv(&out, &name, &body)?;
            }
            println!(
                "{:<6} {:<8} {:>10} {:>10} {:>10} {:>14}",
                "method", "profile", "degraded", "low_prov", "startup", "energy_kJ"
            );
            for e in &entries {
                let r = &e.report;
                println!(
                    "{:<6} {:<8} {:>10.2} {:>10.2} {:>10.2} {:>14.1}",
                    e.method.as_str(),
                    r.profile.label(),
                    r.degraded_minutes_total,
                    r.degraded_minutes_low_provisioning,
                    r.degraded_minutes_startup,
                    r.energy_joules / 1000.0
                );
            }
            println!("(degraded times in minutes)");
            Ok(())
        }
        Command::Cost {
            trace,
            models,
            profile,
            penalty_scope,
            test_days,
        } => {
            if let Some(d) = test_days {
                cfg.split.test_days = d;
            }
            if let Some(t) = profile {
                cfg.cost.profile = t;
            }
            if let Some(s) = penalty_scope {
                cfg.cost.scenario.penalty_scope = s;
            }
            let set = load_models(&mut cfg, &models, &out)?;
            let p = Pipeline::new(cfg)?;
            let n_sites = p.config().cost.scenario.sites.len();
            let traces: Vec<TrafficTrace> = match trace.len() {
                0 => vec![p.obtain_trace(None)?],
                1 => vec![p.obtain_trace(Some(&trace[0]))?],
                n if n == n_sites => trace
                    .iter()
                    .map(|t| p.obtain_trace(Some(t)))
                    .collect::<vnf_autoscale::Result<_>>()?,
                n => bail!("{n} traces given for {n_sites} sites; pass one shared trace or one per site"),
            };
            let sites: Vec<&TrafficTrace> = if traces.len() == 1 {
                vec![&traces[0]; n_sites]
            } else {
                traces.iter().collect()
            };
            let reports = p.cost(&set, &sites)?;
            let id = traces.iter().map(|t| t.id()).collect::<Vec<_>>().join(",");
            p.write_json(&out, files::COST_JSON, &id, &reports)?;
            p.write_csv(&out, files::COST_CSV, &cost_csv(&reports))?;
            println!(
                "{:<6} {:>12} {:>12} {:>12} {:>12}",
                "method", "vnf", "network", "degradation", "total"
            );
            for r in &reports {
                let sum = |f: fn(&vnf_autoscale::cost::CostRow) -> f64| r.rows.iter().map(f).sum::<f64>();
                println!(
                    "{:<6} {:>12.2} {:>12.2} {:>12.2} {:>12.2}",
                    r.method,
                    sum(|x| x.vnf_cost),
                    sum(|x| x.network_cost),
                    sum(|x| x.degradation_cost),
                    r.total
                );
            }
            println!("(profile {}, {} sites)", reports[0].profile.label(), n_sites);
            Ok(())
        }
        Command::Report { trace, split, timing } => {
            apply_split(&mut cfg, &split);
            let outcome = run_report(cfg, trace.trace.as_deref(), &out, timing)?;
            print_evaluation(&outcome.evaluation);
            println!("reports written to {}", out.display());
            Ok(())
        }
    }
}

pub fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing config {}", p.display()))
        }
    }
}

fn apply_split(cfg: &mut RunConfig, split: &SplitArgs) {
    if let Some(d) = split.train_days {
        cfg.split.train_days = d;
    }
    if let Some(d) = split.test_days {
        cfg.split.test_days = d;
    }
}

fn generate(mut cfg: RunConfig, args: GenerateArgs) -> Result<()> {
    let spec = &mut cfg.trace;
    if let Some(d) = args.days {
        spec.days = d;
    }
    let per = |g: f64| g * GBPS_PER_SAMPLE;
    if let Some(v) = args.base_gbps {
        spec.base_load = per(v);
    }
    if let Some(v) = args.amplitude_gbps {
        spec.daily_amplitude = per(v);
    }
    if let Some(v) = args.noise_gbps {
        spec.noise_stddev = per(v);
    }
    if let Some(v) = args.weekday_factor {
        spec.weekly_weekday_factor = v;
    }
    if let Some(v) = args.burst_rate {
        spec.burst_rate = v;
    }
    if let Some(v) = args.burst_gbps {
        spec.burst_amplitude = per(v);
    }
    if let Some(v) = args.cap_gbps {
        spec.peak_load_cap = per(v);
    }
    let p = Pipeline::new(cfg)?;
    let trace = p.obtain_trace(None)?;
    let dir = args.output.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    save_trace(&trace, &args.output).with_context(|| format!("writing {}", args.output.display()))?;
    let meta = TraceMeta::new(&trace);
    // Sidecar carrying the config hash, next to the trace.
    let sidecar = args.output.with_extension("json");
    let name = sidecar.file_name().context("output has no file name")?.to_string_lossy();
    p.write_json(dir, &name, &meta.trace_id, &meta)?;
    println!(
        "{} days, {} samples, load {:.3}..{:.3} Gbps -> {}",
        meta.days,
        meta.samples,
        meta.min_load_bits / GBPS_PER_SAMPLE,
        meta.max_load_bits / GBPS_PER_SAMPLE,
        args.output.display()
    );
    Ok(())
}

fn model_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut found: Vec<PathBuf> = match fs::read_dir(dir) {
        Ok(entries) => entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.file_name()
                    .and_then(|n| n.to_str())
                    .is_some_and(|n| n.starts_with("model-") && n.ends_with(".vnfm"))
            })
            .collect(),
        Err(_) => Vec::new(),
    };
    found.sort();
    Ok(found)
}

fn read(path: &Path) -> Result<ModelF64> {
    read_model(path).with_context(|| format!("loading model {}", path.display()))
}

fn evaluate(cfg: RunConfig, trace: Option<&Path>, paths: Vec<PathBuf>, out: &Path) -> Result<()> {
    let paths = if paths.is_empty() { model_files(out)? } else { paths };
    if paths.is_empty() {
        bail!(
            "no model files in {}; run `vnfscale train` first or pass --model",
            out.display()
        );
    }
    let p = Pipeline::new(cfg)?;
    let trace = p.obtain_trace(trace)?;
    let test_days = p.config().split.test_days;
    let mut tests = BTreeMap::new();
    let mut entries = Vec::new();
    for path in &paths {
        let model = read(path)?;
        if !tests.contains_key(&model.feature_count) {
            let ds = p.dataset(&trace, model.feature_count)?;
            let (_, test) = split_train_test(&ds, &trace, 1, test_days)?;
            tests.insert(model.feature_count, test);
        }
        let report = p.evaluate_model(&model, &trace, &tests[&model.feature_count])?;
        entries.push(EvaluationEntry {
            algorithm: model.algorithm,
            label: model.label_kind,
            report,
        });
    }
    let id = trace.id();
    p.write_json(out, files::EVALUATION_JSON, &id, &entries)?;
    p.write_csv(out, files::EVALUATION_CSV, &evaluation_csv(&entries))?;
    p.write_csv(out, files::EVALUATION_CLASSES_CSV, &evaluation_classes_csv(&entries))?;
    print_evaluation(&entries);
    Ok(())
}

fn print_evaluation(entries: &[EvaluationEntry]) {
    println!(
        "{:<15} {:<5} {:>9} {:>8} {:>8}",
        "algorithm", "label", "precision", "fp_rate", "roc_area"
    );
    for e in entries {
        let a = &e.report.aggregate;
        println!(
            "{:<15} {:<5} {:>8.1}% {:>7.2}% {:>8}",
            e.algorithm.as_str(),
            e.label.as_str(),
            a.precision * 100.0,
            a.fp_rate * 100.0,
            a.roc_area.map(|r| format!("{:.1}%", r * 100.0)).unwrap_or_else(|| "n/a".into())
        );
    }
}

/// Loads the QML and CML models and aligns the config with them.
fn load_models(cfg: &mut RunConfig, args: &ModelArgs, out: &Path) -> Result<ModelSet> {
    let algo = args.algo.unwrap_or(cfg.algorithm);
    let path = |given: &Option<PathBuf>, label: LabelKind| {
        given.clone().unwrap_or_else(|| out.join(files::model(algo, label)))
    };
    let mut set = ModelSet::new();
    let mut shape: Option<(Algorithm, usize)> = None;
    for (given, label) in [(&args.model_qml, LabelKind::Qml), (&args.model_cml, LabelKind::Cml)] {
        let p = path(given, label);
        if !p.exists() {
            bail!(
                "missing model {}; run `vnfscale train --algo {} --label {}` first",
                p.display(),
                algo.as_str(),
                label.as_str()
            );
        }
        let m = read(&p)?;
        if m.label_kind != label {
            bail!("{} was trained on {} labels, expected {}", p.display(), m.label_kind.as_str(), label.as_str());
        }
        match shape {
            None => shape = Some((m.algorithm, m.feature_count)),
            Some(s) if s != (m.algorithm, m.feature_count) => {
                bail!("QML and CML models must share algorithm and feature count")
            }
            Some(_) => {}
        }
        set.insert((m.algorithm, label), m);
    }
    if let Some((a, n)) = shape {
        cfg.algorithm = a;
        cfg.window.n_features = n;
    }
    Ok(set)
}
