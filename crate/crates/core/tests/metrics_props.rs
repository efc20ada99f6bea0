use churnlab_core::linalg::Matrix;
use churnlab_core::metrics::{
    histogram, pairwise_pr_curve, pr_curve, recall_at_k, score_distribution_profile, BinSpec,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_scores(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Matrix {
    Matrix::from_vec(n, m, (0..n * m).map(|_| rng.random::<f64>()).collect()).unwrap()
}

#[test]
fn random_scores_give_chance_recall() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let s = random_scores(&mut rng, 1000, 1000);
    assert!((recall_at_k(&s, 1).unwrap() - 0.001).abs() <= 0.002);
}

#[test]
fn uninformative_scores_give_base_rate_auc() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let n = 20_000;
    let rho = 0.1;
    let scores: Vec<f64> = (0..n).map(|_| rng.random()).collect();
    let matches: Vec<bool> = (0..n).map(|_| rng.random::<f64>() < rho).collect();
    let auc = pr_curve(&scores, &matches).unwrap().auc;
    assert!((auc - rho).abs() <= 0.02, "{auc}");
}

#[test]
fn uniform_values_fill_bins_evenly() {
    let values: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
    let h = histogram(&values, &BinSpec::Range { lo: 0.0, hi: 1.0, bins: 10 }).unwrap();
    assert_eq!(h.counts, vec![100; 10]);
}

#[test]
fn envelope_brackets_distinct_rows() {
    let s = Matrix::from_rows(&[[3.0, 2.0, 1.0], [0.0, -1.0, -2.0], [3.0, 2.0, 1.0]]).unwrap();
    let prof = score_distribution_profile(&s, &[0, 1, 2]).unwrap();
    for r in 0..3 {
        for c in &prof.curves {
            assert!(prof.p05[r] <= c[r] && c[r] <= prof.p95[r]);
        }
    }
}

proptest! {
    #[test]
    fn recall_is_monotone_in_k(seed in 0u64..1000, n in 2usize..20) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_scores(&mut rng, n, n);
        let mut last = 0.0;
        for k in 1..=n {
            let r = recall_at_k(&s, k).unwrap();
            prop_assert!(r >= last);
            last = r;
        }
        prop_assert_eq!(last, 1.0);
    }

    #[test]
    fn pr_auc_is_rank_invariant(seed in 0u64..1000, n in 2usize..15) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_scores(&mut rng, n, n);
        let t = Matrix::from_vec(n, n, s.as_slice().iter().map(|x| (3.0 * x).exp() - 7.0).collect()).unwrap();
        let a = pairwise_pr_curve(&s).unwrap();
        let b = pairwise_pr_curve(&t).unwrap();
        prop_assert!((a.auc - b.auc).abs() <= 1e-12);
    }

    #[test]
    fn pr_curve_invariants(seed in 0u64..1000, n in 2usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // coarse scores to exercise ties
        let s = Matrix::from_vec(n, n, (0..n * n).map(|_| (rng.random::<f64>() * 4.0).floor()).collect()).unwrap();
        let c = pairwise_pr_curve(&s).unwrap();
        for w in c.points.windows(2) {
            prop_assert!(w[1].0 >= w[0].0);
        }
        let mut area = 0.0;
        for w in c.points.windows(2) {
            area += (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0;
        }
        prop_assert!((area - c.auc).abs() <= 1e-9);
        prop_assert!(c.points.iter().all(|&(r, p)| (0.0..=1.0).contains(&r) && (0.0..=1.0).contains(&p)));
    }

    #[test]
    fn histogram_conserves_counts(values in prop::collection::vec(-100.0f64..100.0, 1..300), bins in 1usize..30) {
        let h = histogram(&values, &BinSpec::Uniform { bins }).unwrap();
        prop_assert_eq!(h.counts.iter().sum::<u64>(), values.len() as u64);
        let h = histogram(&values, &BinSpec::Range { lo: -10.0, hi: 10.0, bins }).unwrap();
        prop_assert_eq!(h.counts.iter().sum::<u64>(), values.len() as u64);
    }
}
