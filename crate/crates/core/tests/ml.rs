use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::RngExt;
use revkit::ml::{
    auc, evaluate, read_rows_csv, train_gbt, train_logreg, write_rows_csv, Classifier, FeatureRow, GbtModel,
    GbtParams, LogRegParams,
};
use revkit::recompose::{enumerate, Order};
use revkit_testkit::random::{random_permutation, rng};
use revkit_testkit::{pairwise_auc, trapezoid_auc};

/// Rows labelled by whether module `a` precedes module `b`, with a little
/// label noise when `noisy`.
fn order_rows(seed: u64, n: usize, count: usize, noisy: bool) -> Vec<FeatureRow> {
    let mut r = rng(seed);
    (0..count)
        .map(|_| {
            let p = random_permutation(&mut r, n);
            let s = p.as_slice();
            let pos = |m: usize| s.iter().position(|&x| x == m).unwrap();
            let mut label = pos(0) < pos(n - 1);
            if noisy && r.random_range(0..10) == 0 {
                label = !label;
            }
            FeatureRow::from_permutation(&p, label)
        })
        .collect()
}

fn small() -> GbtParams {
    GbtParams { trees: 20, ..Default::default() }
}

#[test]
fn separable_position_rule() {
    // module 3 at position 1: the 24 positives plus 16 negatives
    let all: Vec<FeatureRow> = enumerate(5, Order::Lexicographic)
        .unwrap()
        .map(|p| {
            let r = FeatureRow::from_permutation(&p, false);
            FeatureRow { label: r.x[0] == 3, ..r }
        })
        .collect();
    let mut rows: Vec<FeatureRow> = all.iter().filter(|r| r.label).cloned().collect();
    rows.extend(all.iter().filter(|r| !r.label).step_by(6).take(16).cloned());
    assert_eq!(rows.len(), 40);
    let m = train_gbt(&rows, &GbtParams::default()).unwrap();
    let scores: Vec<(f64, bool)> = rows.iter().map(|r| (m.predict(&r.x).unwrap(), r.label)).collect();
    assert_eq!(evaluate(&scores).unwrap().accuracy, 1.0);
    let mut x = vec![3, 1, 2, 4, 5];
    assert!(m.predict(&x).unwrap() > 0.5);
    x.swap(0, 1);
    assert!(m.predict(&x).unwrap() < 0.5);
}

#[test]
fn loss_never_increases() {
    for (seed, noisy) in [(1, false), (2, true), (3, true)] {
        let rows = order_rows(seed, 6, 300, noisy);
        let m = train_gbt(&rows, &GbtParams::default()).unwrap();
        assert_eq!(m.train_loss.len(), 101);
        for w in m.train_loss.windows(2) {
            assert!(w[1] <= w[0], "{w:?}");
        }
    }
}

#[test]
fn model_json_survives_round_trip() {
    let m = train_gbt(&order_rows(4, 5, 80, true), &small()).unwrap();
    let back = GbtModel::from_json(&m.to_json().unwrap()).unwrap();
    for r in order_rows(5, 5, 20, false) {
        assert_eq!(m.predict(&r.x).unwrap().to_bits(), back.predict(&r.x).unwrap().to_bits());
    }
    let bumped = m.to_json().unwrap().replacen("\"version\": 1", "\"version\": 2", 1);
    assert!(GbtModel::from_json(&bumped).is_err());
}

#[test]
fn rows_csv_round_trip() {
    let rows = order_rows(6, 4, 10, true);
    let mut buf = Vec::new();
    write_rows_csv(&rows, &mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with("pos_1,pos_2,pos_3,pos_4,label\n"));
    assert_eq!(read_rows_csv(buf.as_slice()).unwrap(), rows);
    assert!(read_rows_csv("pos_1,pos_2,label\n1,1,0\n".as_bytes()).is_err());
}

#[test]
fn logistic_baseline_is_deterministic() {
    let rows = order_rows(7, 5, 120, false);
    let a = train_logreg(&rows, &LogRegParams::default()).unwrap();
    let b = train_logreg(&rows, &LogRegParams::default()).unwrap();
    assert_eq!(a, b);
    let scores: Vec<(f64, bool)> = rows.iter().map(|r| (a.predict(&r.x).unwrap(), r.label)).collect();
    assert!(evaluate(&scores).unwrap().accuracy > 0.7);
}

#[test]
fn confusion_counts_match_direct_count() {
    let mut r = rng(8);
    let scores: Vec<(f64, bool)> = (0..300).map(|_| (r.random::<f64>(), r.random::<bool>())).collect();
    let m = evaluate(&scores).unwrap();
    let count = |pred: bool, y: bool| scores.iter().filter(|s| (s.0 > 0.5) == pred && s.1 == y).count();
    assert_eq!(
        (m.true_positives, m.false_positives, m.true_negatives, m.false_negatives),
        (count(true, true), count(true, false), count(false, false), count(false, true))
    );
    assert_eq!(m.precision, Some(m.true_positives as f64 / (m.true_positives + m.false_positives) as f64));
}

#[test]
fn metric_conventions() {
    // no positive predictions and nothing missed
    let m = evaluate(&[(0.1, false), (0.2, false)]).unwrap();
    assert_eq!(m.precision, Some(1.0));
    assert_eq!(m.recall, None);
    assert_eq!(m.auc, None);
    let m = evaluate(&[(0.1, true), (0.2, false)]).unwrap();
    assert_eq!(m.precision, None);
    assert_eq!(m.recall, Some(0.0));
    assert!(evaluate(&[]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn training_ignores_row_order(seed in any::<u64>()) {
        let rows = order_rows(seed, 6, 150, true);
        let mut shuffled = rows.clone();
        shuffled.shuffle(&mut rng(seed ^ 1));
        let a = train_gbt(&rows, &small()).unwrap();
        let b = train_gbt(&shuffled, &small()).unwrap();
        prop_assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn auc_matches_oracles(seed in any::<u64>(), levels in 2u32..50) {
        let mut r = rng(seed);
        // coarse scores force ties
        let scores: Vec<(f64, bool)> = (0..200)
            .map(|_| (f64::from(r.random_range(0..levels)) / f64::from(levels), r.random::<bool>()))
            .collect();
        let got = auc(&scores);
        let pair = pairwise_auc(&scores);
        prop_assert_eq!(got.is_some(), pair.is_some());
        if let (Some(a), Some(b), Some(c)) = (got, pair, trapezoid_auc(&scores)) {
            prop_assert!((a - b).abs() <= 1e-12, "{} vs {}", a, b);
            prop_assert!((a - c).abs() <= 1e-12, "{} vs {}", a, c);
        }
    }
}
