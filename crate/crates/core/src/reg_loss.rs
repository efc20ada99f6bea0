//! Log-loss with churn-reducing regularizers.
//!
//! Two penalties are provided: `+α·H(p)` (entropic, pushes toward confident
//! predictions) and the mixture `(1 − α)·(−ln p_y) + α·KL(Unif ‖ p)`
//! (KL-to-uniform). Binary "logistic" forms take a raw score `f` with
//! `p = σ(f)` the probability of class 1 and return the derivative in `f`.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::math::{abs, expm1, ln, ln_1p, sigmoid, softplus};
use crate::prob::{entropy, kl_from_uniform, log_softmax_into, ProbVector, ScoreVector};
use crate::{Error, Result, ValueGrad};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegKind {
    None,
    Entropic,
    KlUniform,
}

/// Regularizer choice and strength.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawRegParams")]
pub struct RegParams {
    kind: RegKind,
    alpha: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRegParams {
    kind: RegKind,
    alpha: f64,
}

impl TryFrom<RawRegParams> for RegParams {
    type Error = Error;

    fn try_from(raw: RawRegParams) -> Result<Self> {
        Self::new(raw.kind, raw.alpha)
    }
}

impl RegParams {
    /// `alpha` must lie in `[0, 1]` for [`RegKind::KlUniform`] (it is a mixing
    /// weight) and be nonnegative otherwise.
    pub fn new(kind: RegKind, alpha: f64) -> Result<Self> {
        let ok = match kind {
            RegKind::KlUniform => (0.0..=1.0).contains(&alpha),
            RegKind::None | RegKind::Entropic => alpha >= 0.0 && alpha.is_finite(),
        };
        if !ok {
            return Err(Error::InvalidParameter { name: "alpha", value: alpha });
        }
        Ok(Self { kind, alpha })
    }

    pub fn none() -> Self {
        Self { kind: RegKind::None, alpha: 0.0 }
    }

    pub fn kind(&self) -> RegKind {
        self.kind
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Regularized log-loss of `p` at label `y`.
    pub fn log_loss(&self, p: &ProbVector, y: usize) -> Result<f64> {
        match self.kind {
            RegKind::None => log_loss(p, y),
            RegKind::Entropic => entropic_log_loss(p, y, self.alpha),
            RegKind::KlUniform => kl_log_loss(p, y, self.alpha),
        }
    }
}

fn check_label(y: usize, k: usize) -> Result<()> {
    if y >= k {
        return Err(Error::IndexOutOfRange { index: y, len: k });
    }
    Ok(())
}

/// `−ln p_y`, `+∞` when `p_y = 0`.
pub fn log_loss(p: &ProbVector, y: usize) -> Result<f64> {
    check_label(y, p.len())?;
    let py = p.get(y);
    Ok(if py > 0.0 { -ln(py) } else { f64::INFINITY })
}

/// `−ln p_y + α·H(p)`.
pub fn entropic_log_loss(p: &ProbVector, y: usize, alpha: f64) -> Result<f64> {
    RegParams::new(RegKind::Entropic, alpha)?;
    let nll = log_loss(p, y)?;
    Ok(if alpha == 0.0 { nll } else { nll + alpha * entropy(p) })
}

/// `(1 − α)·(−ln p_y) + α·KL(Unif ‖ p)`. Terms with zero weight are dropped,
/// so `α = 0` is exactly the plain log-loss even when `p` has zeros.
pub fn kl_log_loss(p: &ProbVector, y: usize, alpha: f64) -> Result<f64> {
    RegParams::new(RegKind::KlUniform, alpha)?;
    let mut value = 0.0;
    if alpha < 1.0 {
        value += (1.0 - alpha) * log_loss(p, y)?;
    } else {
        check_label(y, p.len())?;
    }
    if alpha > 0.0 {
        value += alpha * kl_from_uniform(p);
    }
    Ok(value)
}

fn check_binary(f: f64, y: usize) -> Result<()> {
    if !f.is_finite() {
        return Err(Error::NonFinite { index: 0, value: f });
    }
    check_label(y, 2)
}

/// `−ln σ(f)` for `y = 1`, `−ln(1 − σ(f))` for `y = 0`, as softplus.
fn binary_nll(f: f64, y: usize) -> ValueGrad {
    if y == 1 {
        ValueGrad { value: softplus(-f), grad: -sigmoid(-f) }
    } else {
        ValueGrad { value: softplus(f), grad: sigmoid(f) }
    }
}

/// `H_bin(σ(f))` and its derivative `−f·σ(f)·σ(−f)`.
fn binary_entropy_of_score(f: f64) -> ValueGrad {
    let (s, sn) = (sigmoid(f), sigmoid(-f));
    ValueGrad { value: s * softplus(-f) + sn * softplus(f), grad: -f * s * sn }
}

/// `KL(Unif ‖ σ(f)) = ½|f| + ln(1 + ½(e^{−|f|} − 1))` and its derivative
/// `σ(f) − ½`.
fn binary_kl_uniform_of_score(f: f64) -> ValueGrad {
    let a = abs(f);
    ValueGrad { value: 0.5 * a + ln_1p(0.5 * expm1(-a)), grad: sigmoid(f) - 0.5 }
}

/// `−ln σ(f) + α·H_bin(σ(f))` (label 1; label 0 mirrors it) and `d/df`.
pub fn entropic_logistic_loss(f: f64, y: usize, alpha: f64) -> Result<ValueGrad> {
    check_binary(f, y)?;
    RegParams::new(RegKind::Entropic, alpha)?;
    let nll = binary_nll(f, y);
    let h = binary_entropy_of_score(f);
    Ok(ValueGrad { value: nll.value + alpha * h.value, grad: nll.grad + alpha * h.grad })
}

/// `(1 − α)·(−ln σ(f)) + α·KL(Unif ‖ σ(f))` (label 1; label 0 mirrors it)
/// and `d/df`.
pub fn kl_logistic_loss(f: f64, y: usize, alpha: f64) -> Result<ValueGrad> {
    check_binary(f, y)?;
    RegParams::new(RegKind::KlUniform, alpha)?;
    let nll = binary_nll(f, y);
    let kl = binary_kl_uniform_of_score(f);
    Ok(ValueGrad {
        value: (1.0 - alpha) * nll.value + alpha * kl.value,
        grad: (1.0 - alpha) * nll.grad + alpha * kl.grad,
    })
}

/// Loss value and gradient with respect to the raw scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossGradient {
    pub value: f64,
    pub grad: Vec<f64>,
}

/// Regularized log-loss of `softmax(λ·scores)` at label `y`, with the
/// gradient in `scores`. With `α = 0` the gradient is `λ·(p − e_y)`.
pub fn softmax_reg_loss_grad(
    scores: &ScoreVector,
    y: usize,
    params: &RegParams,
    temperature: f64,
) -> Result<LossGradient> {
    let k = scores.len();
    if k < 2 {
        return Err(Error::TooFewClasses(k));
    }
    check_label(y, k)?;
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(Error::InvalidParameter { name: "temperature", value: temperature });
    }
    let mut grad = vec![0.0; k];
    let mut scratch = vec![0.0; k];
    let value = reg_loss_grad_into(scores.as_slice(), y, params, temperature, &mut grad, &mut scratch);
    Ok(LossGradient { value, grad })
}

/// Unchecked kernel behind [`softmax_reg_loss_grad`], used by the trainer.
/// `grad` is overwritten; `scratch` must have the same length as `scores`.
pub(crate) fn reg_loss_grad_into(
    scores: &[f64],
    y: usize,
    params: &RegParams,
    temperature: f64,
    grad: &mut [f64],
    scratch: &mut [f64],
) -> f64 {
    let k = scores.len();
    let logp = scratch;
    let lse = log_softmax_into(scores, temperature, logp);
    let nll = lse - temperature * scores[y];
    let alpha = params.alpha;
    // d(nll)/ds_k = λ(p_k − [k = y])
    for (j, (g, &lp)) in grad.iter_mut().zip(logp.iter()).enumerate() {
        *g = temperature * (crate::math::exp(lp) - if j == y { 1.0 } else { 0.0 });
    }
    match params.kind {
        RegKind::None => nll,
        RegKind::Entropic => {
            let h: f64 = -logp.iter().map(|&lp| crate::math::exp(lp) * lp).sum::<f64>();
            // dH/ds_k = −λ·p_k·(ln p_k + H)
            for (g, &lp) in grad.iter_mut().zip(logp.iter()) {
                *g -= alpha * temperature * crate::math::exp(lp) * (lp + h);
            }
            nll + alpha * h
        }
        RegKind::KlUniform => {
            let kf = k as f64;
            let kl = -ln(kf) - logp.iter().sum::<f64>() / kf;
            // dKL/ds_k = λ(p_k − 1/K)
            for (g, &lp) in grad.iter_mut().zip(logp.iter()) {
                let p = crate::math::exp(lp);
                *g = (1.0 - alpha) * *g + alpha * temperature * (p - 1.0 / kf);
            }
            (1.0 - alpha) * nll + alpha * kl
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::LN_2;
    use approx::assert_abs_diff_eq;

    fn pv(v: &[f64]) -> ProbVector {
        ProbVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn params_validate_alpha_range() {
        assert!(RegParams::new(RegKind::KlUniform, 1.2).is_err());
        assert!(RegParams::new(RegKind::KlUniform, -0.1).is_err());
        assert!(RegParams::new(RegKind::Entropic, 3.0).is_ok());
        assert!(RegParams::new(RegKind::Entropic, f64::NAN).is_err());
    }

    #[test]
    fn entropic_log_loss_examples() {
        let e = ProbVector::one_hot(3, 2).unwrap();
        assert_eq!(entropic_log_loss(&e, 2, 0.7).unwrap(), 0.0);
        // ln 2 · 1.3
        assert_abs_diff_eq!(
            entropic_log_loss(&pv(&[0.5, 0.5]), 0, 0.3).unwrap(),
            0.901_091_334_727_928_9,
            epsilon = 1e-12
        );
        assert_eq!(entropic_log_loss(&pv(&[1.0, 0.0]), 1, 0.3).unwrap(), f64::INFINITY);
    }

    #[test]
    fn kl_log_loss_examples() {
        let p = pv(&[0.2, 0.8]);
        assert_eq!(kl_log_loss(&p, 1, 0.0).unwrap(), log_loss(&p, 1).unwrap());
        // 0.7 · ln 2
        assert_abs_diff_eq!(kl_log_loss(&pv(&[0.5, 0.5]), 0, 0.3).unwrap(), 0.485_203_026_391_961_7, epsilon = 1e-12);
        assert_eq!(kl_log_loss(&ProbVector::uniform(4).unwrap(), 3, 1.0).unwrap(), 0.0);
        assert_eq!(kl_log_loss(&pv(&[1.0, 0.0]), 0, 0.0).unwrap(), 0.0);
        assert_eq!(kl_log_loss(&pv(&[1.0, 0.0]), 0, 0.3).unwrap(), f64::INFINITY);
        assert!(kl_log_loss(&p, 2, 0.3).is_err());
    }

    #[test]
    fn logistic_examples() {
        assert_abs_diff_eq!(entropic_logistic_loss(0.0, 1, 0.0).unwrap().value, LN_2, epsilon = 1e-15);
        assert_abs_diff_eq!(entropic_logistic_loss(0.0, 1, 0.3).unwrap().value, 1.3 * LN_2, epsilon = 1e-15);
        for alpha in [0.0, 0.3, 0.9] {
            assert_abs_diff_eq!(kl_logistic_loss(0.0, 1, alpha).unwrap().value, (1.0 - alpha) * LN_2, epsilon = 1e-15);
        }
        for i in -40..=40 {
            let f = i as f64 * 0.9;
            let a = kl_logistic_loss(f, 1, 0.3).unwrap().value;
            let b = kl_logistic_loss(-f, 0, 0.3).unwrap().value;
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
        assert!(entropic_logistic_loss(f64::NAN, 1, 0.3).is_err());
        assert!(kl_logistic_loss(0.0, 2, 0.3).is_err());
        // saturated scores stay finite
        let v = kl_logistic_loss(800.0, 1, 0.3).unwrap();
        assert_abs_diff_eq!(v.value, 0.3 * (400.0 - LN_2), epsilon = 1e-9);
    }

    #[test]
    fn logistic_forms_agree_with_probability_forms() {
        for i in -20..=20 {
            let f = i as f64 * 0.37;
            let p = ProbVector::binary(crate::prob::sigmoid(f).unwrap());
            for y in 0..2 {
                let a = entropic_logistic_loss(f, y, 0.4).unwrap().value;
                assert_abs_diff_eq!(a, entropic_log_loss(&p, y, 0.4).unwrap(), epsilon = 1e-12);
                let b = kl_logistic_loss(f, y, 0.4).unwrap().value;
                assert_abs_diff_eq!(b, kl_log_loss(&p, y, 0.4).unwrap(), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn softmax_gradient_examples() {
        let s = ScoreVector::new(alloc::vec![0.0, 0.0]).unwrap();
        let g = softmax_reg_loss_grad(&s, 0, &RegParams::none(), 1.0).unwrap();
        assert_abs_diff_eq!(g.grad[0], -0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(g.grad[1], 0.5, epsilon = 1e-15);
        let s = ScoreVector::new(alloc::vec![1.5, 1.5, 1.5]).unwrap();
        let kl1 = RegParams::new(RegKind::KlUniform, 1.0).unwrap();
        let g = softmax_reg_loss_grad(&s, 1, &kl1, 2.0).unwrap();
        assert_abs_diff_eq!(g.value, 0.0, epsilon = 1e-15);
        for x in g.grad {
            assert_abs_diff_eq!(x, 0.0, epsilon = 1e-15);
        }
        assert!(softmax_reg_loss_grad(&s, 3, &kl1, 1.0).is_err());
        assert!(softmax_reg_loss_grad(&s, 0, &kl1, 0.0).is_err());
    }

    #[test]
    fn softmax_values_match_probability_forms() {
        let s = ScoreVector::new(alloc::vec![0.3, -1.2, 2.0, 0.0]).unwrap();
        let p = crate::prob::softmax(&s, 1.5).unwrap();
        for params in [
            RegParams::none(),
            RegParams::new(RegKind::Entropic, 0.6).unwrap(),
            RegParams::new(RegKind::KlUniform, 0.3).unwrap(),
        ] {
            let g = softmax_reg_loss_grad(&s, 2, &params, 1.5).unwrap();
            assert_abs_diff_eq!(g.value, params.log_loss(&p, 2).unwrap(), epsilon = 1e-12);
        }
    }
}
