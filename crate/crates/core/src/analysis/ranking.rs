//! Feature ranking: information gain over equal-frequency bins, and PCA.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::feature_name;
use crate::labeling::{LabelKind, LabeledDataset};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureGain {
    pub feature: usize,
    pub name: String,
    /// Bits.
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrincipalComponent {
    pub eigenvalue: f64,
    pub explained_ratio: f64,
    /// Unit-norm loading over `PcaResult::retained`.
    pub loadings: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaResult {
    /// Feature numbers kept in the decomposition.
    pub retained: Vec<usize>,
    /// Constant feature numbers, excluded.
    pub dropped: Vec<usize>,
    pub components: Vec<PrincipalComponent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRanking {
    pub by_info_gain: Vec<FeatureGain>,
    pub pca: PcaResult,
}

impl FeatureRanking {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("rank,feature,name,info_gain\n");
        for (i, g) in self.by_info_gain.iter().enumerate() {
            out.push_str(&format!("{},{},{},{}\n", i + 1, g.feature, g.name, g.gain));
        }
        out
    }
}

fn entropy_of(counts: impl Iterator<Item = usize>, total: usize) -> f64 {
    let n = total as f64;
    counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

/// Equal-frequency bin index per value. Equal values share the bin of their
/// first sorted position, so bins depend only on ranks.
pub fn equal_frequency_bins<T: Scalar>(values: &[T], bins: usize) -> Vec<usize> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(std::cmp::Ordering::Equal));
    let mut out = vec![0; n];
    let mut run_start = 0;
    for (pos, &i) in order.iter().enumerate() {
        if pos > 0 && values[i] != values[order[pos - 1]] {
            run_start = pos;
        }
        out[i] = run_start * bins / n;
    }
    out
}

/// Information gain `H(class) - H(class | binned feature)` for every feature,
/// sorted by gain descending (ties: lower feature number first).
pub fn rank_features_info_gain<T: Scalar>(
    train: &LabeledDataset<T>,
    label_kind: LabelKind,
    bins: usize,
) -> Result<Vec<FeatureGain>> {
    if bins < 2 {
        return Err(Error::InvalidConfig("bins must be >= 2".into()));
    }
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let (lo, hi) = train.class_range;
    let k = (hi - lo + 1) as usize;
    let n = train.len();
    let labels: Vec<usize> = train
        .labels(label_kind)
        .into_iter()
        .map(|c| (c.clamp(lo, hi) - lo) as usize)
        .collect();
    let mut class_counts = vec![0usize; k];
    for &l in &labels {
        class_counts[l] += 1;
    }
    let h_class = entropy_of(class_counts.iter().copied(), n);

    let mut gains: Vec<FeatureGain> = (0..train.n_features)
        .map(|f| {
            let column: Vec<T> = train.instances.iter().map(|i| i.features.values[f]).collect();
            let binned = equal_frequency_bins(&column, bins);
            let mut joint = vec![vec![0usize; k]; bins];
            for (&b, &l) in binned.iter().zip(&labels) {
                joint[b][l] += 1;
            }
            let h_cond: f64 = joint
                .iter()
                .map(|row| {
                    let m: usize = row.iter().sum();
                    if m == 0 {
                        0.0
                    } else {
                        m as f64 / n as f64 * entropy_of(row.iter().copied(), m)
                    }
                })
                .sum();
            FeatureGain {
                feature: f + 1,
                name: feature_name(f + 1),
                gain: (h_class - h_cond).max(0.0),
            }
        })
        .collect();
    gains.sort_by(|a, b| b.gain.total_cmp(&a.gain).then(a.feature.cmp(&b.feature)));
    Ok(gains)
}

/// PCA on standardized features (sample standard deviation); constant
/// features are dropped. Components are sorted by eigenvalue, descending, and
/// each loading is signed so its largest-magnitude entry is positive.
pub fn pca<T: Scalar>(train: &LabeledDataset<T>) -> Result<PcaResult> {
    let n = train.len();
    let rows: Vec<Vec<f64>> = train
        .instances
        .iter()
        .map(|i| i.features.values.iter().map(|v| v.as_f64()).collect())
        .collect();
    let mut distinct = rows.clone();
    distinct.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::TooFewRows);
    }

    let p = train.n_features;
    let mut retained = Vec::new();
    let mut dropped = Vec::new();
    let mut stats = Vec::new();
    for f in 0..p {
        let mean = rows.iter().map(|r| r[f]).sum::<f64>() / n as f64;
        let var = rows.iter().map(|r| (r[f] - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        if var > 0.0 && var.is_finite() {
            retained.push(f + 1);
            stats.push((f, mean, var.sqrt()));
        } else {
            dropped.push(f + 1);
        }
    }
    let q = stats.len();
    if q == 0 {
        return Ok(PcaResult {
            retained,
            dropped,
            components: vec![],
        });
    }

    let z = DMatrix::from_fn(n, q, |i, j| {
        let (f, mean, sd) = stats[j];
        (rows[i][f] - mean) / sd
    });
    let cov = (z.transpose() * &z) / (n - 1) as f64;
    let eig = SymmetricEigen::new(cov);
    let total: f64 = eig.eigenvalues.iter().sum();
    let mut order: Vec<usize> = (0..q).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let components = order
        .into_iter()
        .map(|c| {
            let mut loadings: Vec<f64> = eig.eigenvectors.column(c).iter().copied().collect();
            let norm = loadings.iter().map(|v| v * v).sum::<f64>().sqrt();
            let pivot = loadings
                .iter()
                .copied()
                .fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
            let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
            loadings.iter_mut().for_each(|v| *v *= sign / norm);
            let eigenvalue = eig.eigenvalues[c];
            PrincipalComponent {
                eigenvalue,
                explained_ratio: eigenvalue / total,
                loadings,
            }
        })
        .collect();
    Ok(PcaResult {
        retained,
        dropped,
        components,
    })
}

pub fn rank_features<T: Scalar>(
    train: &LabeledDataset<T>,
    label_kind: LabelKind,
    bins: usize,
) -> Result<FeatureRanking> {
    Ok(FeatureRanking {
        by_info_gain: rank_features_info_gain(train, label_kind, bins)?,
        pca: pca(train)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureVector;
    use crate::labeling::{Instance, Provenance};
    use chrono::{TimeZone, Utc};

    fn ds(rows: Vec<(Vec<f64>, u32)>) -> LabeledDataset<f64> {
        LabeledDataset {
            n_features: rows[0].0.len(),
            class_range: (1, 10),
            instances: rows
                .into_iter()
                .enumerate()
                .map(|(i, (x, c))| Instance {
                    step: i,
                    timestamp: Utc.timestamp_opt(0, 0).unwrap(),
                    features: FeatureVector::new(x),
                    qml: c,
                    cml: c,
                })
                .collect(),
            provenance: Provenance {
                trace_id: String::new(),
                config_hash: String::new(),
            },
        }
    }

    #[test]
    fn bins_by_rank() {
        assert_eq!(equal_frequency_bins(&[5.0, 1.0, 3.0, 7.0], 2), vec![1, 0, 0, 1]);
        // Ties share the first position's bin.
        assert_eq!(equal_frequency_bins(&[1.0, 1.0, 1.0, 2.0], 4), vec![0, 0, 0, 3]);
    }

    #[test]
    fn label_copy_gets_full_entropy_constant_gets_zero() {
        let rows: Vec<(Vec<f64>, u32)> = (0..90)
            .map(|i| {
                let c = 1 + (i % 3) as u32;
                (vec![c as f64, 4.0], c)
            })
            .collect();
        let g = rank_features_info_gain(&ds(rows), LabelKind::Qml, 10).unwrap();
        assert_eq!(g[0].feature, 1);
        assert!((g[0].gain - 3f64.log2()).abs() < 1e-12);
        assert_eq!(g[1].feature, 2);
        assert_eq!(g[1].gain, 0.0);
    }

    #[test]
    fn collinear_pca() {
        let rows: Vec<(Vec<f64>, u32)> = (0..50).map(|i| (vec![i as f64, i as f64, 3.0], 1)).collect();
        let r = pca(&ds(rows)).unwrap();
        assert_eq!(r.retained, vec![1, 2]);
        assert_eq!(r.dropped, vec![3]);
        let first = &r.components[0];
        let s = 1.0 / 2f64.sqrt();
        assert!((first.loadings[0] - s).abs() < 1e-12 && (first.loadings[1] - s).abs() < 1e-12);
        assert!((first.eigenvalue - 2.0).abs() < 1e-12);
        assert!(r.components[1].eigenvalue.abs() < 1e-12);
    }

    #[test]
    fn pca_needs_two_distinct_rows() {
        let rows = vec![(vec![1.0, 2.0], 1), (vec![1.0, 2.0], 1)];
        assert!(matches!(pca(&ds(rows)), Err(Error::TooFewRows)));
    }
}
