use churnlab_core::churn::{
    check_churn_err_bound, check_hellinger_sandwich, check_kl_proxy_bound, check_margin_event, confidence_entropy,
    confidence_entropy_slope, entropy_minimizer_check, hard_churn, soft_churn, PairedPredictions,
};
use churnlab_core::prob::{random_simplex, ProbVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn pv(v: &[f64]) -> ProbVector {
    ProbVector::new(v.to_vec()).unwrap()
}

#[test]
fn all_checkers_hold_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for k in [2, 3, 5, 10] {
        for _ in 0..20 {
            let pp = PairedPredictions::random(&mut rng, 200, k, true).unwrap();
            assert!(check_churn_err_bound(&pp).unwrap().holds);
            assert!(check_kl_proxy_bound(&pp).unwrap().holds);
            let h = check_hellinger_sandwich(&pp).unwrap();
            assert!(h.holds, "{h:?}");
            assert_eq!(h.pointwise_violations, 0);
            let m = check_margin_event(&pp).unwrap();
            assert!(m.holds && m.violations == 0, "{m:?}");
        }
    }
}

#[test]
fn checkers_hold_at_extremes() {
    let a = pv(&[1.0, 0.0, 0.0]);
    let b = pv(&[0.0, 1.0, 0.0]);
    let tie = pv(&[0.5, 0.5, 0.0]);
    let u = ProbVector::uniform(3).unwrap();
    let cases = vec![
        (vec![a.clone(), a.clone()], vec![a.clone(), b.clone()]),
        (vec![tie.clone(), tie.clone()], vec![a.clone(), b.clone()]),
        (vec![u.clone(), tie.clone()], vec![u.clone(), u.clone()]),
    ];
    for (m1, m2) in cases {
        let n = m1.len();
        let pp = PairedPredictions::new(m1, m2, Some(vec![0; n])).unwrap();
        assert!(check_churn_err_bound(&pp).unwrap().holds);
        assert!(check_hellinger_sandwich(&pp).unwrap().holds);
        assert!(check_margin_event(&pp).unwrap().holds);
        // disjoint supports send the collision proxy to +inf, which still bounds
        assert!(check_kl_proxy_bound(&pp).unwrap().holds);
    }
}

#[test]
fn swapping_models_preserves_symmetric_metrics() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let pp = PairedPredictions::random(&mut rng, 500, 4, true).unwrap();
    let sw = pp.swapped();
    assert_eq!(hard_churn(&pp).unwrap(), hard_churn(&sw).unwrap());
    assert!((soft_churn(&pp).unwrap() - soft_churn(&sw).unwrap()).abs() <= 1e-15);
}

#[test]
fn identical_models_have_zero_hard_churn() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let preds: Vec<ProbVector> = (0..100).map(|_| random_simplex(&mut rng, 4).unwrap()).collect();
    let pp = PairedPredictions::new(preds.clone(), preds, None).unwrap();
    assert_eq!(hard_churn(&pp).unwrap(), 0.0);
}

#[test]
fn entropy_slope_matches_central_differences() {
    let h = 1e-5;
    for i in 1..=99 {
        let g = i as f64 / 100.0;
        let fd = (confidence_entropy(g + h) - confidence_entropy(g - h)) / (2.0 * h);
        assert!((fd - confidence_entropy_slope(g)).abs() <= 1e-6, "gamma {g}");
    }
}

#[test]
fn entropy_slope_is_negative_and_vanishes_at_zero() {
    assert_eq!(confidence_entropy_slope(0.0), 0.0);
    for i in 1..100 {
        assert!(confidence_entropy_slope(i as f64 / 100.0) < 0.0);
    }
}

fn random_family<R: Rng>(rng: &mut R, candidates: usize, n: usize, k: usize) -> (Vec<Vec<ProbVector>>, Vec<usize>) {
    let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
    let family = (0..candidates).map(|_| (0..n).map(|_| random_simplex(rng, k).unwrap()).collect()).collect();
    (family, labels)
}

#[test]
fn entropic_minimizer_never_raises_mean_entropy() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..1000 {
        let (family, labels) = random_family(&mut rng, 6, 15, 3);
        let alpha = rng.random_range(0.0..2.0);
        let r = entropy_minimizer_check(&family, &labels, alpha).unwrap();
        assert!(r.holds, "{r:?}");
    }
}

#[test]
fn entropic_minimizer_zero_alpha_matches_base() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (family, labels) = random_family(&mut rng, 5, 10, 4);
    let r = entropy_minimizer_check(&family, &labels, 0.0).unwrap();
    assert_eq!(r.base_index, r.entropic_index);
}
