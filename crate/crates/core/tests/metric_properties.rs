use proptest::prelude::*;
use sparseseq_core::metrics::{auprc, auroc, f1_scores};

/// Scores on a coarse grid so ties are common, with both classes present.
fn scored() -> impl Strategy<Value = (Vec<f64>, Vec<usize>)> {
    (2usize..200, prop::sample::select(vec![2u32, 5, 20, 1000])).prop_flat_map(|(n, levels)| {
        (
            prop::collection::vec((0..levels).prop_map(move |k| f64::from(k) / f64::from(levels)), n),
            prop::collection::vec(0usize..2, n),
        )
            .prop_map(|(s, mut l)| {
                l[0] = 1;
                l[1] = 0;
                (s, l)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn ranking_metrics_ignore_monotone_transforms((scores, labels) in scored()) {
        let warped: Vec<f64> = scores.iter().map(|&s| (3.0 * s).exp() + s * s * s - 7.0).collect();
        prop_assert_eq!(auroc(&scores, &labels).unwrap(), auroc(&warped, &labels).unwrap());
        prop_assert_eq!(auprc(&scores, &labels).unwrap(), auprc(&warped, &labels).unwrap());
    }

    #[test]
    fn negated_scores_flip_auroc((scores, labels) in scored()) {
        let neg: Vec<f64> = scores.iter().map(|s| -s).collect();
        let (a, b) = (auroc(&scores, &labels).unwrap(), auroc(&neg, &labels).unwrap());
        prop_assert!((a + b - 1.0).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn auprc_bounded_and_flat_scores_give_prevalence((scores, labels) in scored()) {
        let ap = auprc(&scores, &labels).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&ap));
        // A constant score ranks everything together: AP is the prevalence.
        let flat = vec![0.5; scores.len()];
        let prevalence = labels.iter().sum::<usize>() as f64 / labels.len() as f64;
        prop_assert!((auprc(&flat, &labels).unwrap() - prevalence).abs() < 1e-12);
    }

    #[test]
    fn f1_follows_class_relabelling(
        k in 2usize..6,
        pairs in prop::collection::vec((0usize..6, 0usize..6), 1..150),
        rot in 1usize..6,
    ) {
        let truth: Vec<usize> = pairs.iter().map(|p| p.0 % k).collect();
        let preds: Vec<usize> = pairs.iter().map(|p| p.1 % k).collect();
        let pi = |c: usize| (c + rot) % k;
        let a = f1_scores(&preds, &truth, k).unwrap();
        let b = f1_scores(
            &preds.iter().map(|&c| pi(c)).collect::<Vec<_>>(),
            &truth.iter().map(|&c| pi(c)).collect::<Vec<_>>(),
            k,
        )
        .unwrap();
        for c in 0..k {
            prop_assert_eq!(a.per_class[c], b.per_class[pi(c)]);
        }
        prop_assert!((a.weighted - b.weighted).abs() < 1e-9);
        prop_assert!((0.0..=100.0 + 1e-9).contains(&a.weighted));
    }
}

#[test]
fn random_scores_give_prevalence_auprc() {
    use rand::Rng;
    use sparseseq_core::numcore::seeded_rng;
    let mut rng = seeded_rng(41);
    for pi in [0.05, 0.2, 0.5] {
        let n = 10_000;
        let labels: Vec<usize> = (0..n).map(|_| usize::from(rng.random_bool(pi))).collect();
        let scores: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let a = auprc(&scores, &labels).unwrap();
        assert!((a - pi).abs() <= 0.03, "prevalence {pi}: {a}");
    }
}
