use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ukm_core::metrics::{
    auc, cap_consistent, cohen_kappa, evaluate_multiclass, mwcs_cap, random_accuracy, roc_curve, total_accuracy,
    BinaryConfusion,
};

fn mann_whitney(scores: &[f64], labels: &[bool]) -> f64 {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for (i, &li) in labels.iter().enumerate() {
        if !li {
            continue;
        }
        for (j, &lj) in labels.iter().enumerate() {
            if lj {
                continue;
            }
            pairs += 1.0;
            if scores[i] > scores[j] {
                wins += 1.0;
            } else if scores[i] == scores[j] {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}

#[test]
fn auc_equals_pairwise_ranking_probability() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut done = 0;
    while done < 1000 {
        let n = rng.gen_range(2..=50);
        // coarse scores force plenty of ties
        let levels = rng.gen_range(2..20);
        let scores: Vec<f64> = (0..n).map(|_| rng.gen_range(0..levels) as f64 / levels as f64).collect();
        let labels: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.4)).collect();
        if labels.iter().all(|&l| l) || labels.iter().all(|&l| !l) {
            continue;
        }
        let curve = roc_curve(&scores, &labels).unwrap();
        assert!((auc(&curve) - mann_whitney(&scores, &labels)).abs() <= 1e-12);
        done += 1;
    }
}

#[test]
fn chance_predictions_have_kappa_near_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let mut kappas = Vec::new();
    for _ in 0..200 {
        let p = rng.gen_range(0.1..0.6);
        let mut c = BinaryConfusion::default();
        for _ in 0..1000 {
            match (rng.gen_bool(p), rng.gen_bool(p)) {
                (true, true) => c.tp += 1,
                (false, true) => c.fp += 1,
                (false, false) => c.tn += 1,
                (true, false) => c.fn_ += 1,
            }
        }
        let k = cohen_kappa(&c).unwrap();
        assert!(k.abs() < 0.15);
        kappas.push(k);
    }
    let mean = kappas.iter().sum::<f64>() / kappas.len() as f64;
    assert!(mean.abs() < 0.05, "mean kappa {mean}");
}

#[test]
fn published_style_mwcs_cap_checks() {
    let m = mwcs_cap(&[2], 145).unwrap();
    assert_eq!(m.mwcs, 2.0);
    assert_eq!(format!("{:.2}", m.cap), "98.62");
    assert!(cap_consistent(2.0, "98.62", 145));
    assert!(!cap_consistent(3.5, "97.24", 145));
    assert!(cap_consistent(5.0, "96.5", 145));
    assert!(!cap_consistent(2.0, "not a number", 145));
}

fn arb_confusion() -> impl Strategy<Value = BinaryConfusion> {
    (0usize..60, 0usize..60, 0usize..60, 0usize..60).prop_map(|(tp, fp, tn, fn_)| BinaryConfusion { tp, fp, tn, fn_ })
}

proptest! {
    #[test]
    fn kappa_is_one_exactly_without_errors(c in arb_confusion()) {
        prop_assume!(c.tp + c.fn_ > 0 && c.fp + c.tn > 0);
        let k = cohen_kappa(&c).unwrap();
        prop_assert_eq!((k - 1.0).abs() < 1e-12, c.fp == 0 && c.fn_ == 0);
    }

    #[test]
    fn rates_survive_swapping_the_positive_class(c in arb_confusion()) {
        prop_assume!(c.total() > 0);
        let s = c.swapped();
        prop_assert_eq!(s.tp, c.tn);
        prop_assert_eq!(s.fp, c.fn_);
        prop_assert!((total_accuracy(&c).unwrap() - total_accuracy(&s).unwrap()).abs() < 1e-12);
        prop_assert!((random_accuracy(&c).unwrap() - random_accuracy(&s).unwrap()).abs() < 1e-12);
        match (cohen_kappa(&c), cohen_kappa(&s)) {
            (Ok(a), Ok(b)) => prop_assert!((a - b).abs() < 1e-12),
            (Err(_), Err(_)) => {}
            _ => prop_assert!(false, "kappa defined for only one convention"),
        }
    }

    #[test]
    fn roc_curves_are_monotone(
        data in prop::collection::vec((-5.0f64..5.0, any::<bool>()), 2..80),
        rounding in 1.0f64..10.0,
    ) {
        let scores: Vec<f64> = data.iter().map(|(s, _)| (s * rounding).round() / rounding).collect();
        let labels: Vec<bool> = data.iter().map(|(_, l)| *l).collect();
        prop_assume!(labels.iter().any(|&l| l) && labels.iter().any(|&l| !l));
        let curve = roc_curve(&scores, &labels).unwrap();
        let first = &curve.points[0];
        let last = curve.points.last().unwrap();
        prop_assert_eq!((first.fpr, first.tpr), (0.0, 0.0));
        prop_assert_eq!((last.fpr, last.tpr), (1.0, 1.0));
        for w in curve.points.windows(2) {
            prop_assert!(w[1].threshold < w[0].threshold);
            prop_assert!(w[1].fpr >= w[0].fpr && w[1].tpr >= w[0].tpr);
        }
        let a = auc(&curve);
        prop_assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn multiclass_partition_identities(pairs in prop::collection::vec((0usize..4, 0usize..4), 1..120)) {
        let truth: Vec<usize> = pairs.iter().map(|p| p.0).collect();
        let predicted: Vec<usize> = pairs.iter().map(|p| p.1).collect();
        let eval = evaluate_multiclass(&truth, &predicted).unwrap();
        for k in 0..4 {
            let row_sum: usize = eval.confusion[k].iter().sum();
            prop_assert_eq!(row_sum, truth.iter().filter(|&&t| t == k).count());
            let row = &eval.rows[k];
            prop_assert_eq!(row.confusion.total(), truth.len());
            if let (Some(tpr), Some(fnr)) = (row.tpr, row.fnr) {
                prop_assert!((tpr + fnr - 1.0).abs() < 1e-12);
            }
            if let (Some(fpr), Some(tnr)) = (row.fpr, row.tnr) {
                prop_assert!((fpr + tnr - 1.0).abs() < 1e-12);
            }
        }
        let m = mwcs_cap(&[eval.wrong], eval.total).unwrap();
        prop_assert!((m.cap / 100.0 - eval.accuracy).abs() < 1e-12);
    }
}
