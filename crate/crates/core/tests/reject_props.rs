use churnlab_core::prob::BinaryProb;
use churnlab_core::reject::{
    bayes_optimal_score, bayes_reject, convex_surrogate, link, reject_loss, smooth_surrogate, GridSearch,
    RejectDecision, RejectParams,
};

fn params(alpha: f64) -> RejectParams {
    RejectParams::new(0.3, 0.0, alpha).unwrap()
}

/// Largest `|φ̄ − φ|` on a 0.001 grid over `[−3, 3]`, skipping 0.05 around
/// the kinks at 0 and 1.
fn max_gap(p: &RejectParams) -> f64 {
    (0..=6000)
        .map(|i| -3.0 + i as f64 * 0.001)
        .filter(|z| z.abs() > 0.05 && (z - 1.0).abs() > 0.05)
        .map(|z| (smooth_surrogate(z, p).value - convex_surrogate(z, p)).abs())
        .fold(0.0, f64::max)
}

const ALPHAS: [f64; 8] = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0];

#[test]
fn smooth_surrogate_converges() {
    let gaps: Vec<f64> = ALPHAS.iter().map(|&a| max_gap(&params(a))).collect();
    for w in gaps.windows(2) {
        assert!(w[1] < w[0], "{gaps:?}");
    }
    assert!(gaps[gaps.len() - 1] < 0.02, "{gaps:?}");
}

#[test]
fn pointwise_gap_is_nonincreasing() {
    for i in 0..=600 {
        let z = -3.0 + i as f64 * 0.01;
        if z.abs() <= 0.05 || (z - 1.0).abs() <= 0.05 {
            continue;
        }
        let gaps: Vec<f64> = ALPHAS
            .iter()
            .map(|&a| (smooth_surrogate(z, &params(a)).value - convex_surrogate(z, &params(a))).abs())
            .collect();
        for w in gaps.windows(2) {
            assert!(w[1] <= w[0] + 1e-15, "z={z}: {gaps:?}");
        }
    }
}

#[test]
fn surrogates_bound_the_rejection_loss() {
    for alpha in ALPHAS {
        let p = params(alpha);
        for i in 0..=600 {
            let z = -3.0 + i as f64 * 0.01;
            let phi = convex_surrogate(z, &p);
            assert!(smooth_surrogate(z, &p).value >= 0.0);
            assert!(phi >= reject_loss(z, &p) - 1e-15, "z={z}");
        }
    }
}

#[test]
fn optimal_score_is_nondecreasing_in_eta() {
    for alpha in [1.0, 4.0, 32.0] {
        let p = params(alpha);
        let mut last = f64::NEG_INFINITY;
        for i in 1..100 {
            let z =
                bayes_optimal_score(BinaryProb::new(i as f64 / 100.0).unwrap(), &p, &GridSearch::default()).unwrap();
            assert!(z >= last - 1e-6, "alpha {alpha} eta {}", i as f64 / 100.0);
            last = z;
        }
    }
}

// The printed link inverts the optimal-score map: F̄(z*(η)) = η.
#[test]
fn link_inverts_optimal_score() {
    for alpha in [1.0, 2.0, 4.0, 8.0] {
        let p = params(alpha);
        for i in 1..20 {
            let eta = i as f64 / 20.0;
            let z = bayes_optimal_score(BinaryProb::new(eta).unwrap(), &p, &GridSearch::default()).unwrap();
            if z.abs() < 2.9 {
                assert!((link(z, &p).unwrap() - eta).abs() <= 1e-4, "alpha {alpha} eta {eta}");
            }
        }
    }
}

fn transition(p: &RejectParams, level: f64, lo: f64, hi: f64) -> f64 {
    let score = |eta: f64| bayes_optimal_score(BinaryProb::new(eta).unwrap(), p, &GridSearch::default()).unwrap();
    let (mut lo, mut hi) = (lo, hi);
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if score(mid) < level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn three_plateaus_at_alpha_32() {
    let p = params(32.0);
    let search = GridSearch::default();
    let at = |eta: f64| bayes_optimal_score(BinaryProb::new(eta).unwrap(), &p, &search).unwrap();
    for (etas, target) in [([0.1, 0.15, 0.2], -1.0), ([0.4, 0.5, 0.6], 0.0), ([0.8, 0.85, 0.9], 1.0)] {
        for eta in etas {
            assert!((at(eta) - target).abs() <= 0.05, "eta {eta}: {}", at(eta));
        }
    }
    assert!((transition(&p, -0.5, 0.01, 0.5) - 0.3).abs() <= 0.05);
    assert!((transition(&p, 0.5, 0.5, 0.99) - 0.7).abs() <= 0.05);
}

#[test]
fn transitions_approach_cost_thresholds() {
    let dist = |alpha: f64| {
        let p = params(alpha);
        (transition(&p, -0.5, 0.01, 0.5) - 0.3).abs() + (transition(&p, 0.5, 0.5, 0.99) - 0.7).abs()
    };
    assert!(dist(32.0) < dist(2.0));
}

#[test]
fn bayes_rule_matches_plateaus() {
    let p = params(32.0);
    for (eta, d) in [(0.1, RejectDecision::Negative), (0.5, RejectDecision::Reject), (0.9, RejectDecision::Positive)] {
        assert_eq!(bayes_reject(BinaryProb::new(eta).unwrap(), &p), d);
        let z = bayes_optimal_score(BinaryProb::new(eta).unwrap(), &p, &GridSearch::default()).unwrap();
        assert!((z - d.value() as f64).abs() <= 0.05);
    }
}
