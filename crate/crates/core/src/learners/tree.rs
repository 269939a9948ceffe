//! Information-gain classification trees with numeric threshold splits.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Node<T> {
    Leaf {
        class: u32,
    },
    Split {
        /// 0-based feature column; feature number is `feature + 1`.
        feature: usize,
        threshold: T,
        left: usize,
        right: usize,
    },
}

/// Flat arena tree, root at index 0. `x[feature] <= threshold` goes left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree<T> {
    pub nodes: Vec<Node<T>>,
}

impl<T: Scalar> Tree<T> {
    pub fn predict(&self, x: &[T]) -> u32 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { class } => return *class,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go<T>(nodes: &[Node<T>], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
            }
        }
        go(&self.nodes, 0)
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct GrowParams {
    pub min_leaf_size: usize,
    pub max_depth: Option<usize>,
    /// Features examined per split; `None` examines all.
    pub features_per_split: Option<usize>,
}

/// Column-major training view. Labels are class offsets `class - v_min`.
pub(crate) struct TrainView<'a, T> {
    pub columns: &'a [Vec<T>],
    pub labels: &'a [usize],
    pub n_classes: usize,
    pub v_min: u32,
}

pub(crate) fn entropy(counts: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let n = total as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

/// Majority class offset; ties resolve to the smallest class.
pub(crate) fn majority(counts: &[usize]) -> usize {
    let mut best = 0;
    for (c, &n) in counts.iter().enumerate() {
        if n > counts[best] {
            best = c;
        }
    }
    best
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct SplitChoice<T> {
    pub feature: usize,
    pub threshold: T,
    pub gain: f64,
}

const MIN_GAIN: f64 = 1e-12;

/// Best split of `rows` over the candidate features (ascending order).
/// Equal gains keep the earlier feature and the lower threshold. Returns a
/// zero-gain cut when no cut reduces entropy, `None` only when no cut
/// separates distinct values within the leaf size limit.
pub(crate) fn best_split<T: Scalar>(
    view: &TrainView<'_, T>,
    rows: &[usize],
    candidates: &[usize],
    min_leaf_size: usize,
) -> Option<SplitChoice<T>> {
    let total = rows.len();
    let mut parent = vec![0usize; view.n_classes];
    for &r in rows {
        parent[view.labels[r]] += 1;
    }
    let parent_h = entropy(&parent, total);
    let min_leaf = min_leaf_size.max(1);

    let mut best: Option<SplitChoice<T>> = None;
    let mut order: Vec<usize> = rows.to_vec();
    let mut left = vec![0usize; view.n_classes];
    let mut right = vec![0usize; view.n_classes];
    for &f in candidates {
        let col = &view.columns[f];
        order.copy_from_slice(rows);
        order.sort_by(|&a, &b| col[a].partial_cmp(&col[b]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));
        left.iter_mut().for_each(|c| *c = 0);
        right.copy_from_slice(&parent);
        for p in 0..total - 1 {
            let r = order[p];
            left[view.labels[r]] += 1;
            right[view.labels[r]] -= 1;
            let n_left = p + 1;
            let n_right = total - n_left;
            let lo = col[r];
            let hi = col[order[p + 1]];
            if !(lo < hi) || n_left < min_leaf || n_right < min_leaf {
                continue;
            }
            let weighted = (n_left as f64 * entropy(&left, n_left) + n_right as f64 * entropy(&right, n_right))
                / total as f64;
            let gain = parent_h - weighted;
            // Zero-gain cuts are kept as a last resort so impure nodes still split.
            let gain = if gain > MIN_GAIN { gain } else { 0.0 };
            if best.map_or(true, |b| gain > b.gain) {
                best = Some(SplitChoice {
                    feature: f,
                    threshold: midpoint(lo, hi),
                    gain,
                });
            }
        }
    }
    best
}

/// Midpoint that still separates `lo` from `hi` after rounding.
fn midpoint<T: Scalar>(lo: T, hi: T) -> T {
    let two = T::one() + T::one();
    let mid = lo + (hi - lo) / two;
    if mid >= lo && mid < hi {
        mid
    } else {
        lo
    }
}

pub(crate) fn grow<T: Scalar, R: Rng>(
    view: &TrainView<'_, T>,
    rows: Vec<usize>,
    params: GrowParams,
    rng: &mut R,
) -> Tree<T> {
    let mut nodes = Vec::new();
    grow_node(view, rows, 0, params, rng, &mut nodes);
    Tree { nodes }
}

fn grow_node<T: Scalar, R: Rng>(
    view: &TrainView<'_, T>,
    rows: Vec<usize>,
    depth: usize,
    params: GrowParams,
    rng: &mut R,
    nodes: &mut Vec<Node<T>>,
) -> usize {
    let mut counts = vec![0usize; view.n_classes];
    for &r in &rows {
        counts[view.labels[r]] += 1;
    }
    let at = nodes.len();
    let class = view.v_min + majority(&counts) as u32;
    nodes.push(Node::Leaf { class });

    let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
    let depth_capped = params.max_depth.is_some_and(|d| depth >= d);
    if pure || depth_capped || rows.len() < 2 * params.min_leaf_size.max(1) {
        return at;
    }

    let n_features = view.columns.len();
    let candidates: Vec<usize> = match params.features_per_split {
        Some(k) if k < n_features => {
            let mut picked = sample(rng, n_features, k).into_vec();
            picked.sort_unstable();
            picked
        }
        _ => (0..n_features).collect(),
    };
    let Some(split) = best_split(view, &rows, &candidates, params.min_leaf_size) else {
        return at;
    };

    let col = &view.columns[split.feature];
    let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
        rows.into_iter().partition(|&r| col[r] <= split.threshold);
    let left = grow_node(view, left_rows, depth + 1, params, rng, nodes);
    let right = grow_node(view, right_rows, depth + 1, params, rng, nodes);
    nodes[at] = Node::Split {
        feature: split.feature,
        threshold: split.threshold,
        left,
        right,
    };
    at
}
