mod common;

use rand::Rng;
use toxclass::metrics::{class_report, cohens_kappa, roc_auc};

#[test]
fn aggregates_match_brute_force() {
    let mut r = common::rng(2024);
    for _ in 0..1000 {
        let (pred, gold) = common::random_instance(&mut r);
        let names: Vec<String> = (0..gold[0].len()).map(|j| format!("c{j}")).collect();
        let names: Vec<&str> = names.iter().map(String::as_str).collect();
        let ours = class_report(&names, &pred, &gold).unwrap();
        let oracle = common::oracle_report(&pred, &gold);
        assert!((ours.weighted_precision - oracle.weighted_precision).abs() <= 1e-12);
        assert!((ours.weighted_recall - oracle.weighted_recall).abs() <= 1e-12);
        assert!((ours.weighted_f1 - oracle.weighted_f1).abs() <= 1e-12);
        assert!((ours.subset_accuracy - oracle.subset_accuracy).abs() <= 1e-12);
    }
}

#[test]
fn kappa_matches_contingency_formula() {
    let mut r = common::rng(7);
    let mut checked = 0;
    for _ in 0..1000 {
        let n = r.gen_range(1..=50);
        let cats = r.gen_range(2..=4u8);
        let agree = r.gen_range(0.0..1.0);
        let a: Vec<u8> = (0..n).map(|_| r.gen_range(0..cats)).collect();
        let b: Vec<u8> = a.iter().map(|&x| if r.gen_bool(agree) { x } else { r.gen_range(0..cats) }).collect();
        match (common::oracle_kappa(&a, &b), cohens_kappa(&a, &b)) {
            (Some(k), Ok(ours)) => {
                assert!((k - ours).abs() <= 1e-12, "{a:?} {b:?}");
                checked += 1;
            }
            (None, res) => assert!(res.is_err() || res.unwrap() == 1.0),
            (Some(_), Err(e)) => panic!("unexpected error {e}"),
        }
    }
    assert!(checked > 900);
}

#[test]
fn auc_matches_pair_counting() {
    let mut r = common::rng(11);
    let mut checked = 0;
    for _ in 0..1000 {
        let n = r.gen_range(2..=50);
        let levels = r.gen_range(2..=20);
        let gold: Vec<bool> = (0..n).map(|_| r.gen_bool(0.4)).collect();
        if gold.iter().all(|&g| g) || gold.iter().all(|&g| !g) {
            assert!(roc_auc(&vec![0.5; n], &gold).is_err());
            continue;
        }
        let scores: Vec<f64> = (0..n).map(|_| r.gen_range(0..levels) as f64 / levels as f64).collect();
        let ours = roc_auc(&scores, &gold).unwrap();
        assert!((ours.auc - common::oracle_auc(&scores, &gold)).abs() <= 1e-12);
        checked += 1;
    }
    assert!(checked > 900);
}

#[test]
fn worked_examples() {
    // kappa: p_o = 0.5, p_e = 0.5
    assert_eq!(cohens_kappa(&[1, 1, 0, 0], &[1, 0, 0, 1]).unwrap(), 0.0);
    // supports 3 and 1, F1 0.8 and 1.0
    let gold = [[true, false], [true, false], [true, false], [false, true]];
    let pred = [[true, false], [true, false], [false, false], [false, true]];
    let r = class_report(&["a", "b"], &pred, &gold).unwrap();
    assert!((r.classes[0].f1 - 0.8).abs() < 1e-15);
    assert_eq!(r.classes[1].f1, 1.0);
    assert!((r.weighted_f1 - 0.85).abs() < 1e-15);
}
