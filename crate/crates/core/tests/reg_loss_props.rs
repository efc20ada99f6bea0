use churnlab_core::prob::{entropy, ProbVector};
use churnlab_core::reg_loss::{entropic_log_loss, kl_log_loss, kl_logistic_loss, log_loss};
use proptest::prelude::*;

fn labelled() -> impl Strategy<Value = (ProbVector, usize)> {
    (2usize..7).prop_flat_map(|k| {
        (prop::collection::vec(0.01f64..1.0, k), 0..k).prop_map(|(w, y)| {
            let s: f64 = w.iter().sum();
            (ProbVector::new(w.iter().map(|x| x / s).collect()).unwrap(), y)
        })
    })
}

proptest! {
    #[test]
    fn zero_alpha_is_plain_log_loss((p, y) in labelled()) {
        let base = log_loss(&p, y).unwrap();
        prop_assert_eq!(entropic_log_loss(&p, y, 0.0).unwrap(), base);
        prop_assert_eq!(kl_log_loss(&p, y, 0.0).unwrap(), base);
    }

    #[test]
    fn kl_loss_expands_algebraically((p, y) in labelled(), alpha in 0.0f64..=1.0) {
        let k = p.len() as f64;
        let mean_log = p.as_slice().iter().map(|x| x.ln()).sum::<f64>() / k;
        let expect = (1.0 - alpha) * -p.get(y).ln() + alpha * (-k.ln() - mean_log);
        let got = kl_log_loss(&p, y, alpha).unwrap();
        prop_assert!((got - expect).abs() <= 1e-12 * expect.abs().max(1.0));
    }

    #[test]
    fn entropic_loss_adds_scaled_entropy((p, y) in labelled(), alpha in 0.0f64..3.0) {
        let expect = -p.get(y).ln() + alpha * entropy(&p);
        prop_assert!((entropic_log_loss(&p, y, alpha).unwrap() - expect).abs() <= 1e-12 * expect.max(1.0));
    }

    #[test]
    fn kl_logistic_label_symmetry(f in -40.0f64..40.0, alpha in 0.0f64..=1.0) {
        let a = kl_logistic_loss(f, 1, alpha).unwrap().value;
        let b = kl_logistic_loss(-f, 0, alpha).unwrap().value;
        prop_assert!((a - b).abs() <= 1e-12);
    }
}

fn binary_grid() -> Vec<f64> {
    (1..1000).map(|i| i as f64 / 1000.0).collect()
}

fn argmin_on_grid(f: impl Fn(f64) -> f64) -> f64 {
    let grid = binary_grid();
    let mut best = grid[0];
    for &p in &grid {
        if f(p) < f(best) {
            best = p;
        }
    }
    best
}

fn entropic_binary(p: f64, y: usize, alpha: f64) -> f64 {
    entropic_log_loss(&ProbVector::new(vec![1.0 - p, p]).unwrap(), y, alpha).unwrap()
}

#[test]
fn single_label_minimizer_sits_at_grid_top() {
    let mut last = 0.0;
    for i in 0..=20 {
        let alpha = i as f64 * 0.1;
        let m = argmin_on_grid(|p| entropic_binary(p, 1, alpha));
        assert!(m >= last);
        assert_eq!(m, 0.999);
        last = m;
    }
}

// Under a label distribution with P(y = 1) = η the plain minimizer is η; the
// entropy penalty pushes it toward 1 monotonically in α.
#[test]
fn expected_loss_minimizer_moves_toward_one() {
    for eta in [0.6, 0.7, 0.8] {
        let mut last = 0.0;
        for i in 0..=15 {
            let alpha = i as f64 * 0.1;
            let m = argmin_on_grid(|p| eta * entropic_binary(p, 1, alpha) + (1.0 - eta) * entropic_binary(p, 0, alpha));
            if alpha == 0.0 {
                assert!((m - eta).abs() <= 1e-3 + 1e-12, "eta {eta}: {m}");
            } else {
                assert!(m > eta, "eta {eta} alpha {alpha}: {m}");
            }
            assert!(m >= last, "eta {eta} alpha {alpha}: {m} < {last}");
            last = m;
        }
    }
}

#[test]
fn kl_uniform_minimizer_is_pulled_toward_half() {
    // population optimum is (1 − α)η + α/2
    let eta = 0.8;
    for alpha in [0.0, 0.3, 0.6, 1.0] {
        let m = argmin_on_grid(|p| {
            let pv = ProbVector::new(vec![1.0 - p, p]).unwrap();
            eta * kl_log_loss(&pv, 1, alpha).unwrap() + (1.0 - eta) * kl_log_loss(&pv, 0, alpha).unwrap()
        });
        assert!((m - ((1.0 - alpha) * eta + alpha / 2.0)).abs() <= 1e-3 + 1e-12, "alpha {alpha}: {m}");
    }
}
