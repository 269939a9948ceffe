mod common;

use common::*;
use proptest::prelude::*;
use vnf_autoscale::labeling::LabelKind;
use vnf_autoscale::learners::{load_model, save_model, train, Algorithm, ModelBody, Node, TrainParams, Tree};

/// Rows with small integer features so duplicates and ties are common.
fn rows(n_features: usize) -> impl Strategy<Value = Vec<(Vec<f64>, u32)>> {
    prop::collection::vec(
        (prop::collection::vec(0u8..6, n_features), 1u32..=10),
        4..60,
    )
    .prop_map(|rs| rs.into_iter().map(|(x, c)| (x.into_iter().map(f64::from).collect(), c)).collect())
}

/// Keeps the first label seen for each distinct feature vector.
fn consistent(rows: Vec<(Vec<f64>, u32)>) -> Vec<(Vec<f64>, u32)> {
    let mut seen: Vec<(Vec<f64>, u32)> = Vec::new();
    for (x, c) in rows {
        let c = seen.iter().find(|(y, _)| *y == x).map_or(c, |(_, c)| *c);
        seen.push((x, c));
    }
    seen
}

fn small_forest(n_trees: usize) -> TrainParams {
    let mut p = TrainParams::default();
    p.forest.n_trees = n_trees;
    p
}

fn entropy(labels: &[u32]) -> f64 {
    let n = labels.len() as f64;
    let mut counts = std::collections::BTreeMap::new();
    for l in labels {
        *counts.entry(l).or_insert(0usize) += 1;
    }
    counts
        .values()
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

fn labels(rows: &[(Vec<f64>, u32)]) -> Vec<u32> {
    rows.iter().map(|(_, c)| *c).collect()
}

fn split_gain(rows: &[(Vec<f64>, u32)], feature: usize, threshold: f64) -> Option<f64> {
    let (l, r): (Vec<_>, Vec<_>) = rows.iter().cloned().partition(|(x, _)| x[feature] <= threshold);
    if l.is_empty() || r.is_empty() {
        return None;
    }
    let n = rows.len() as f64;
    let children = (l.len() as f64 * entropy(&labels(&l)) + r.len() as f64 * entropy(&labels(&r))) / n;
    Some(entropy(&labels(rows)) - children)
}

/// Largest gain over every cut between distinct values of every feature.
fn best_gain(rows: &[(Vec<f64>, u32)]) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for f in 0..rows[0].0.len() {
        let mut values: Vec<f64> = rows.iter().map(|(x, _)| x[f]).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for w in values.windows(2) {
            if let Some(g) = split_gain(rows, f, (w[0] + w[1]) / 2.0) {
                best = best.max(g);
            }
        }
    }
    best
}

/// Routes `rows` through the tree. Every split must not raise entropy, and
/// must strictly lower it whenever some cut of the node could.
fn check_gains(tree: &Tree<f64>, at: usize, rows: &[(Vec<f64>, u32)]) -> Result<(), String> {
    match &tree.nodes[at] {
        Node::Leaf { .. } => Ok(()),
        Node::Split {
            feature,
            threshold,
            left,
            right,
        } => {
            let gain = split_gain(rows, *feature, *threshold).ok_or("split leaves a child empty")?;
            if gain < -1e-12 {
                return Err(format!("negative gain {gain} at node {at}"));
            }
            if best_gain(rows) > 1e-9 && gain <= 0.0 {
                return Err(format!("zero-gain split at node {at} although a positive one exists"));
            }
            let (l, r): (Vec<_>, Vec<_>) = rows.iter().cloned().partition(|(x, _)| x[*feature] <= *threshold);
            check_gains(tree, *left, &l)?;
            check_gains(tree, *right, &r)
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn training_is_deterministic_across_thread_counts(rs in rows(4), seed in any::<u64>()) {
        let ds = dataset(&rs);
        let params = small_forest(8);
        for algo in [Algorithm::RandomForest, Algorithm::RandomTree, Algorithm::DecisionTree, Algorithm::NaiveBayes] {
            let a = save_model(&train(&ds, LabelKind::Qml, algo, &params, seed).unwrap()).unwrap();
            let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
            let b = pool.install(|| save_model(&train(&ds, LabelKind::Qml, algo, &params, seed).unwrap()).unwrap());
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn saved_models_reload_identically(rs in rows(3), seed in any::<u64>(), probe in prop::collection::vec(-5.0f64..10.0, 3)) {
        let ds = dataset(&rs);
        for algo in Algorithm::ALL {
            let m = train(&ds, LabelKind::Cml, algo, &small_forest(5), seed).unwrap();
            let bytes = save_model(&m).unwrap();
            let back = load_model::<f64>(&bytes).unwrap();
            prop_assert_eq!(save_model(&back).unwrap(), bytes);
            if algo != Algorithm::MovingAverage {
                prop_assert_eq!(back.predict(&probe).unwrap(), m.predict(&probe).unwrap());
            }
        }
    }

    #[test]
    fn forest_votes_sum_to_tree_count(rs in rows(3), n_trees in 1usize..20, probe in prop::collection::vec(-5.0f64..10.0, 3)) {
        let m = train(&dataset(&rs), LabelKind::Qml, Algorithm::RandomForest, &small_forest(n_trees), 3).unwrap();
        let votes = m.forest_votes(&probe).unwrap().unwrap();
        prop_assert_eq!(votes.iter().sum::<usize>(), n_trees);
        let scores = m.predict_scores(&probe).unwrap();
        prop_assert!((scores.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn decision_tree_fits_consistent_data(rs in rows(3)) {
        let rs = consistent(rs);
        let ds = dataset(&rs);
        let m = train(&ds, LabelKind::Qml, Algorithm::DecisionTree, &TrainParams::default(), 0).unwrap();
        for (x, c) in &rs {
            prop_assert_eq!(m.predict(x).unwrap(), *c);
        }
        let ModelBody::Tree(tree) = &m.body else { panic!("tree body") };
        if let Err(e) = check_gains(tree, 0, &rs) {
            return Err(TestCaseError::fail(e));
        }
    }

    #[test]
    fn predictions_stay_in_class_range(rs in rows(3), probe in prop::collection::vec(prop_oneof![
        Just(f64::MAX), Just(f64::MIN), Just(f64::NAN), Just(f64::INFINITY), -1e300f64..1e300,
    ], 3)) {
        let ds = dataset(&rs);
        for algo in [Algorithm::RandomForest, Algorithm::RandomTree, Algorithm::DecisionTree, Algorithm::NaiveBayes, Algorithm::MajorityClass] {
            let m = train(&ds, LabelKind::Qml, algo, &small_forest(4), 1).unwrap();
            let c = m.predict(&probe).unwrap();
            prop_assert!((1..=10).contains(&c), "{:?} predicted {}", algo, c);
        }
    }
}

#[test]
fn forest_trains_slower_than_tree() {
    let rs: Vec<(Vec<f64>, u32)> = (0..400)
        .map(|i| {
            let x: Vec<f64> = (0..8).map(|f| ((i * 31 + f * 17) % 97) as f64).collect();
            let c = 1 + (x[0] as u32 + x[3] as u32) % 10;
            (x, c)
        })
        .collect();
    let ds = dataset(&rs);
    let t = vnf_autoscale::analysis::time_train_test(
        &ds,
        &ds,
        Algorithm::DecisionTree,
        &TrainParams::default(),
        0,
        LabelKind::Qml,
        3,
        None,
    )
    .unwrap();
    let f = vnf_autoscale::analysis::time_train_test(
        &ds,
        &ds,
        Algorithm::RandomForest,
        &TrainParams::default(),
        0,
        LabelKind::Qml,
        3,
        None,
    )
    .unwrap();
    assert!(t.train_seconds >= 0.0 && t.test_seconds >= 0.0);
    assert!(f.train_seconds > t.train_seconds, "forest {} vs tree {}", f.train_seconds, t.train_seconds);
}
