//! Gaussian naive Bayes.

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassStats<T> {
    pub means: Vec<T>,
    pub variances: Vec<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNb<T> {
    pub v_min: u32,
    /// Laplace-smoothed log priors, one per class in range.
    pub log_priors: Vec<T>,
    /// `None` for classes absent from training; they are never predicted.
    pub classes: Vec<Option<ClassStats<T>>>,
}

impl<T: Scalar> GaussianNb<T> {
    pub(crate) fn fit(columns: &[Vec<T>], labels: &[usize], n_classes: usize, v_min: u32) -> Self {
        let n = labels.len();
        let n_features = columns.len();
        let mut counts = vec![0usize; n_classes];
        for &l in labels {
            counts[l] += 1;
        }

        let floors: Vec<T> = columns
            .iter()
            .map(|col| {
                let (lo, hi) = col
                    .iter()
                    .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| (lo.min(v), hi.max(v)));
                let range = if hi > lo { hi - lo } else { T::zero() };
                (T::from_f64_lossy(1e-12) * range * range).max(T::min_positive_value())
            })
            .collect();

        let denom = T::from_usize(n + n_classes).unwrap_or_else(T::one);
        let log_priors = counts
            .iter()
            .map(|&c| (T::from_usize(c + 1).unwrap_or_else(T::one) / denom).ln())
            .collect();

        let classes = (0..n_classes)
            .map(|c| {
                if counts[c] == 0 {
                    return None;
                }
                let cnt = T::from_usize(counts[c]).unwrap_or_else(T::one);
                let mut means = Vec::with_capacity(n_features);
                let mut variances = Vec::with_capacity(n_features);
                for (f, col) in columns.iter().enumerate() {
                    let mean = labels
                        .iter()
                        .zip(col)
                        .filter(|(&l, _)| l == c)
                        .fold(T::zero(), |s, (_, &v)| s + v)
                        / cnt;
                    let var = labels
                        .iter()
                        .zip(col)
                        .filter(|(&l, _)| l == c)
                        .fold(T::zero(), |s, (_, &v)| s + (v - mean) * (v - mean))
                        / cnt;
                    means.push(mean);
                    variances.push(var.max(floors[f]));
                }
                Some(ClassStats { means, variances })
            })
            .collect();

        Self {
            v_min,
            log_priors,
            classes,
        }
    }

    pub fn log_joint(&self, x: &[T]) -> Vec<T> {
        let two = T::one() + T::one();
        let log_2pi = (two * T::from_f64_lossy(std::f64::consts::PI)).ln();
        self.classes
            .iter()
            .zip(&self.log_priors)
            .map(|(stats, &prior)| match stats {
                None => T::neg_infinity(),
                Some(s) => {
                    let mut acc = prior;
                    for ((&v, &m), &var) in x.iter().zip(&s.means).zip(&s.variances) {
                        let d = v - m;
                        acc = acc - (log_2pi + var.ln()) / two - d * d / (two * var);
                    }
                    acc
                }
            })
            .collect()
    }

    /// Class posteriors (softmax of the log joint).
    pub fn posterior(&self, x: &[T]) -> Vec<T> {
        let lj = self.log_joint(x);
        let max = lj.iter().copied().fold(T::neg_infinity(), T::max);
        if !max.is_finite() {
            // Every likelihood underflowed; fall back to the most likely prior.
            let mut p = vec![T::zero(); lj.len()];
            p[argmax(&lj)] = T::one();
            return p;
        }
        let exps: Vec<T> = lj.iter().map(|&v| (v - max).exp()).collect();
        let sum = exps.iter().fold(T::zero(), |s, &v| s + v);
        exps.into_iter().map(|v| v / sum).collect()
    }

    pub fn predict(&self, x: &[T]) -> u32 {
        self.v_min + argmax(&self.log_joint(x)) as u32
    }
}

/// Index of the largest value; ties and NaNs resolve to the smallest index.
pub(crate) fn argmax<T: Scalar>(v: &[T]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] || (v[best].is_nan() && !x.is_nan()) {
            best = i;
        }
    }
    best
}
