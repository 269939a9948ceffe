//! Confusion-matrix metrics and one-vs-rest ROC area.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labeling::{LabelKind, LabeledDataset, VnfDeployment};
use crate::learners::{indicator_scores, predict_ma, MovingAverageParams, TrainedModel};
use crate::scalar::Scalar;
use crate::trace::TrafficTrace;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: u32,
    pub support: usize,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub fp_rate: f64,
    /// `None` when the class has no positives or no negatives in the test set.
    pub roc_area: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateMetrics {
    pub precision: f64,
    pub fp_rate: f64,
    pub roc_area: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub classes: Vec<u32>,
    /// `confusion[actual][predicted]`, indexed by class offset.
    pub confusion: Vec<Vec<usize>>,
    pub per_class: Vec<ClassMetrics>,
    /// Support-weighted averages.
    pub aggregate: AggregateMetrics,
    pub instances: usize,
    pub correct: usize,
}

impl EvaluationReport {
    pub fn accuracy(&self) -> f64 {
        self.correct as f64 / self.instances as f64
    }

    /// One row per class plus a `weighted` row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("class,support,tp,fp,tn,fn,precision,fp_rate,roc_area\n");
        let roc = |r: Option<f64>| r.map(|v| v.to_string()).unwrap_or_default();
        for m in &self.per_class {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                m.class,
                m.support,
                m.tp,
                m.fp,
                m.tn,
                m.fn_,
                m.precision,
                m.fp_rate,
                roc(m.roc_area)
            ));
        }
        out.push_str(&format!(
            "weighted,{},,,,,{},{},{}\n",
            self.instances,
            self.aggregate.precision,
            self.aggregate.fp_rate,
            roc(self.aggregate.roc_area)
        ));
        out
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Area under the ROC curve of `scores` against `positives`, by the trapezoid
/// rule over every distinct score threshold (ties contribute a diagonal step).
pub fn roc_area<T: Scalar>(scores: &[T], positives: &[bool]) -> Option<T> {
    let n_pos = positives.iter().filter(|&&p| p).count();
    let n_neg = positives.len() - n_pos;
    if n_pos == 0 || n_neg == 0 || scores.len() != positives.len() {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap_or(std::cmp::Ordering::Equal));

    let (mut tp, mut fp) = (0usize, 0usize);
    let (mut prev_tp, mut prev_fp) = (0usize, 0usize);
    // Accumulate 2 * area in integer units of (1/n_pos * 1/n_neg).
    let mut twice_area: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if positives[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        twice_area += ((fp - prev_fp) as u128) * ((tp + prev_tp) as u128);
        prev_tp = tp;
        prev_fp = fp;
    }
    let area = twice_area as f64 / (2.0 * n_pos as f64 * n_neg as f64);
    Some(T::from_f64_lossy(area))
}

/// Metrics from true classes, predicted classes and per-class scores
/// (`scores[i][c - v_min]`).
pub fn evaluate_predictions<T: Scalar>(
    class_range: (u32, u32),
    truth: &[u32],
    predicted: &[u32],
    scores: &[Vec<T>],
) -> Result<EvaluationReport> {
    if truth.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if truth.len() != predicted.len() || truth.len() != scores.len() {
        return Err(Error::DecisionCount {
            expected: truth.len(),
            found: predicted.len().min(scores.len()),
        });
    }
    let (lo, hi) = class_range;
    let k = (hi - lo + 1) as usize;
    let offset = |c: u32| -> Result<usize> {
        if c < lo || c > hi {
            Err(Error::InvalidConfig(format!("class {c} outside {lo}..={hi}")))
        } else {
            Ok((c - lo) as usize)
        }
    };

    let mut confusion = vec![vec![0usize; k]; k];
    for (&t, &p) in truth.iter().zip(predicted) {
        confusion[offset(t)?][offset(p)?] += 1;
    }
    let n = truth.len();
    let correct = (0..k).map(|c| confusion[c][c]).sum();

    let mut per_class = Vec::with_capacity(k);
    for c in 0..k {
        let tp = confusion[c][c];
        let support: usize = confusion[c].iter().sum();
        let predicted_c: usize = (0..k).map(|r| confusion[r][c]).sum();
        let fp = predicted_c - tp;
        let fn_ = support - tp;
        let tn = n - tp - fp - fn_;
        let column: Vec<T> = scores
            .iter()
            .map(|s| s.get(c).copied().unwrap_or_else(T::zero))
            .collect();
        let positives: Vec<bool> = truth.iter().map(|&t| t == lo + c as u32).collect();
        per_class.push(ClassMetrics {
            class: lo + c as u32,
            support,
            tp,
            fp,
            tn,
            fn_,
            precision: ratio(tp, tp + fp),
            fp_rate: ratio(fp, fp + tn),
            roc_area: roc_area(&column, &positives).map(Scalar::as_f64),
        });
    }

    let weighted = |f: &dyn Fn(&ClassMetrics) -> f64| -> f64 {
        per_class.iter().map(|m| m.support as f64 * f(m)).sum::<f64>() / n as f64
    };
    let roc_support: usize = per_class.iter().filter(|m| m.roc_area.is_some()).map(|m| m.support).sum();
    let roc = (roc_support > 0).then(|| {
        per_class
            .iter()
            .filter_map(|m| m.roc_area.map(|r| r * m.support as f64))
            .sum::<f64>()
            / roc_support as f64
    });
    let aggregate = AggregateMetrics {
        precision: weighted(&|m| m.precision),
        fp_rate: weighted(&|m| m.fp_rate),
        roc_area: roc,
    };

    Ok(EvaluationReport {
        classes: (lo..=hi).collect(),
        confusion,
        per_class,
        aggregate,
        instances: n,
        correct,
    })
}

/// Evaluates a feature-driven model on a labeled test set.
pub fn evaluate<T: Scalar>(
    model: &TrainedModel<T>,
    test: &LabeledDataset<T>,
    label_kind: LabelKind,
) -> Result<EvaluationReport> {
    if test.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if test.n_features != model.feature_count {
        return Err(Error::Dimension {
            expected: model.feature_count,
            found: test.n_features,
        });
    }
    let mut predicted = Vec::with_capacity(test.len());
    let mut scores = Vec::with_capacity(test.len());
    for inst in &test.instances {
        let s = model.predict_scores(&inst.features.values)?;
        predicted.push(model.predict(&inst.features.values)?);
        scores.push(s);
    }
    evaluate_predictions(model.class_range, &test.labels(label_kind), &predicted, &scores)
}

/// Moving-average decisions for each test instance's decision step.
pub fn ma_decisions<T: Scalar>(
    trace: &TrafficTrace,
    test: &LabeledDataset<T>,
    params: &MovingAverageParams,
    deployment: &VnfDeployment,
) -> Result<Vec<u32>> {
    test.instances
        .iter()
        .map(|i| predict_ma(trace, i.step, params, deployment))
        .collect()
}

/// Evaluates the moving-average baseline (indicator scores) on the steps of `test`.
pub fn evaluate_ma<T: Scalar>(
    trace: &TrafficTrace,
    test: &LabeledDataset<T>,
    params: &MovingAverageParams,
    deployment: &VnfDeployment,
    label_kind: LabelKind,
) -> Result<EvaluationReport> {
    if test.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let predicted = ma_decisions(trace, test, params, deployment)?;
    let k = deployment.n_classes();
    let scores: Vec<Vec<f64>> = predicted
        .iter()
        .map(|&c| indicator_scores(c, deployment.v_min, k))
        .collect();
    evaluate_predictions(deployment.class_range(), &test.labels(label_kind), &predicted, &scores)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent oracle: explicit threshold sweep, one ROC point per
    /// candidate threshold, then trapezoids between sorted points.
    fn roc_oracle(scores: &[f64], pos: &[bool]) -> f64 {
        let p = pos.iter().filter(|&&b| b).count() as f64;
        let n = pos.len() as f64 - p;
        let mut thresholds: Vec<f64> = scores.to_vec();
        thresholds.push(f64::INFINITY);
        let mut pts: Vec<(f64, f64)> = thresholds
            .iter()
            .map(|&th| {
                let tp = scores.iter().zip(pos).filter(|(&s, &b)| b && s >= th).count() as f64;
                let fp = scores.iter().zip(pos).filter(|(&s, &b)| !b && s >= th).count() as f64;
                (fp / n, tp / p)
            })
            .collect();
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts.dedup();
        pts.windows(2).map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0).sum()
    }

    #[test]
    fn roc_matches_oracle_on_pseudo_random_scores() {
        let mut state = 0x2545F4914F6CDD1Du64;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        for _ in 0..200 {
            let n = 2 + (next() % 30) as usize;
            let scores: Vec<f64> = (0..n).map(|_| (next() % 7) as f64 / 6.0).collect();
            let pos: Vec<bool> = (0..n).map(|_| next() % 3 == 0).collect();
            match roc_area(&scores, &pos) {
                Some(a) => assert!((a - roc_oracle(&scores, &pos)).abs() < 1e-12),
                None => assert!(pos.iter().all(|&b| b) || pos.iter().all(|&b| !b)),
            }
        }
    }

    #[test]
    fn binary_counts() {
        // 96 TP, 4 FP, 180 TN, 8 FN for class 2 in a {1, 2} problem.
        let mut truth = Vec::new();
        let mut pred = Vec::new();
        let rows = [(2, 2, 96), (1, 2, 4), (1, 1, 180), (2, 1, 8)];
        for (t, p, n) in rows {
            for _ in 0..n {
                truth.push(t);
                pred.push(p);
            }
        }
        let scores: Vec<Vec<f64>> = pred.iter().map(|&c| indicator_scores(c, 1, 2)).collect();
        let r = evaluate_predictions((1, 2), &truth, &pred, &scores).unwrap();
        let m = &r.per_class[1];
        assert_eq!((m.tp, m.fp, m.tn, m.fn_), (96, 4, 180, 8));
        assert!((m.precision - 0.96).abs() < 1e-12);
        assert!((m.fp_rate - 4.0 / 184.0).abs() < 1e-12);
        assert_eq!(r.confusion.iter().flatten().sum::<usize>(), 288);
    }

    #[test]
    fn perfect_predictions() {
        let truth = vec![1, 2, 3, 3, 2, 1, 5];
        let scores: Vec<Vec<f64>> = truth.iter().map(|&c| indicator_scores(c, 1, 5)).collect();
        let r = evaluate_predictions((1, 5), &truth, &truth, &scores).unwrap();
        for m in r.per_class.iter().filter(|m| m.support > 0) {
            assert_eq!(m.precision, 1.0);
            assert_eq!(m.fp_rate, 0.0);
            assert_eq!(m.roc_area, Some(1.0));
        }
        assert_eq!(r.aggregate.precision, 1.0);
        assert_eq!(r.correct, 7);
    }

    #[test]
    fn empty_test_set() {
        let r = evaluate_predictions::<f64>((1, 3), &[], &[], &[]);
        assert!(matches!(r, Err(Error::EmptyDataset)));
    }
}
