//! Distances between prediction distributions.
//!
//! Total variation follows the `½·Σ|p − q|` convention; [`l1`] exposes the
//! unhalved sum for the bounds that are stated in terms of it.

use crate::math::{powf, sqrt};
use crate::prob::{check_same_len, ProbVector};
use crate::{Error, Result};

/// `Σ_j |p_j − q_j|`, in `[0, 2]`.
pub fn l1(p: &ProbVector, q: &ProbVector) -> Result<f64> {
    check_same_len(p, q)?;
    Ok(l1_unchecked(p.as_slice(), q.as_slice()))
}

pub(crate) fn l1_unchecked(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum()
}

/// Total variation distance `½·Σ_j |p_j − q_j|`, in `[0, 1]`.
pub fn tv(p: &ProbVector, q: &ProbVector) -> Result<f64> {
    Ok(0.5 * l1(p, q)?)
}

/// `(1/√2)·‖√p − √q‖₂`.
pub fn hellinger(p: &ProbVector, q: &ProbVector) -> Result<f64> {
    check_same_len(p, q)?;
    let ss: f64 = p
        .as_slice()
        .iter()
        .zip(q.as_slice())
        .map(|(&a, &b)| {
            let d = sqrt(a) - sqrt(b);
            d * d
        })
        .sum();
    Ok(sqrt(0.5 * ss))
}

/// `1 − Σ_j √(p_j q_j)`, clamped to `[0, 1]` against rounding.
pub fn hellinger_sq(p: &ProbVector, q: &ProbVector) -> Result<f64> {
    check_same_len(p, q)?;
    Ok(hellinger_sq_unchecked(p.as_slice(), q.as_slice()))
}

pub(crate) fn hellinger_sq_unchecked(p: &[f64], q: &[f64]) -> f64 {
    let bc: f64 = p.iter().zip(q).map(|(&a, &b)| sqrt(a * b)).sum();
    (1.0 - bc).clamp(0.0, 1.0)
}

/// Collision probability `Σ_j p_j q_j`: the chance that independent draws
/// from `p` and `q` agree.
pub fn collision(p: &ProbVector, q: &ProbVector) -> Result<f64> {
    check_same_len(p, q)?;
    Ok(collision_unchecked(p.as_slice(), q.as_slice()))
}

pub(crate) fn collision_unchecked(p: &[f64], q: &[f64]) -> f64 {
    crate::linalg::dot(p, q)
}

/// `(Σ|p_j − q_j|^r)^{1/r}` for `r ≥ 1`; for `0 < r < 1` the plain sum
/// `Σ|p_j − q_j|^r`, which is not a norm but is monotone in the same way.
pub fn lp_dist(p: &ProbVector, q: &ProbVector, exponent: f64) -> Result<f64> {
    check_same_len(p, q)?;
    check_exponent(exponent)?;
    Ok(lp_unchecked(p.as_slice(), q.as_slice(), exponent))
}

pub(crate) fn lp_unchecked(p: &[f64], q: &[f64], r: f64) -> f64 {
    if r == 1.0 {
        return l1_unchecked(p, q);
    }
    let s: f64 = p.iter().zip(q).map(|(a, b)| powf((a - b).abs(), r)).sum();
    if r >= 1.0 {
        powf(s, 1.0 / r)
    } else {
        s
    }
}

/// [`lp_dist`] divided by its value at two disjoint one-hot vectors:
/// `2^{1/r}` for `r ≥ 1`, `2` below. For `r ≥ 1` that is the maximum over the
/// simplex and the result lies in `[0, 1]`. For `r < 1` and `K ≥ 3`, spreading
/// mass is farther apart than one-hots, and the result can exceed 1 (up to
/// `(√⌈K/2⌉ + √⌊K/2⌋)/2` at `r = 1/2`).
pub fn lp_dist_normalized(p: &ProbVector, q: &ProbVector, exponent: f64) -> Result<f64> {
    Ok(lp_dist(p, q, exponent)? / lp_max(exponent))
}

pub(crate) fn lp_max(r: f64) -> f64 {
    if r >= 1.0 {
        powf(2.0, 1.0 / r)
    } else {
        2.0
    }
}

fn check_exponent(r: f64) -> Result<()> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidParameter { name: "exponent", value: r });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn pv(v: &[f64]) -> ProbVector {
        ProbVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn tv_and_l1_examples() {
        let a = pv(&[0.5, 0.5]);
        let b = pv(&[0.8, 0.2]);
        let e0 = pv(&[1.0, 0.0]);
        let e1 = pv(&[0.0, 1.0]);
        assert_eq!(tv(&a, &a).unwrap(), 0.0);
        assert_eq!(tv(&e0, &e1).unwrap(), 1.0);
        assert_abs_diff_eq!(tv(&a, &b).unwrap(), 0.3, epsilon = 1e-15);
        assert_eq!(l1(&e0, &e1).unwrap(), 2.0);
        assert_abs_diff_eq!(l1(&a, &b).unwrap(), 0.6, epsilon = 1e-15);
        assert!(tv(&a, &ProbVector::uniform(3).unwrap()).is_err());
    }

    #[test]
    fn hellinger_examples() {
        let a = pv(&[0.5, 0.5]);
        let b = pv(&[0.9, 0.1]);
        let e0 = pv(&[1.0, 0.0]);
        let e1 = pv(&[0.0, 1.0]);
        assert_eq!(hellinger(&a, &a).unwrap(), 0.0);
        assert_eq!(hellinger_sq(&b, &b).unwrap(), 0.0);
        assert_abs_diff_eq!(hellinger(&e0, &e1).unwrap(), 1.0, epsilon = 1e-15);
        assert_eq!(hellinger_sq(&e0, &e1).unwrap(), 1.0);
        // 1 - (sqrt(0.45) + sqrt(0.05))
        assert_abs_diff_eq!(hellinger_sq(&a, &b).unwrap(), 0.105_572_809_000_084_14, epsilon = 1e-12);
        let h = hellinger(&a, &b).unwrap();
        assert_abs_diff_eq!(h * h, hellinger_sq(&a, &b).unwrap(), epsilon = 1e-12);
    }

    #[test]
    fn collision_examples() {
        let e = ProbVector::one_hot(4, 2).unwrap();
        assert_eq!(collision(&e, &e).unwrap(), 1.0);
        let u = ProbVector::uniform(5).unwrap();
        assert_abs_diff_eq!(collision(&u, &u).unwrap(), 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(collision(&pv(&[0.5, 0.5]), &pv(&[0.9, 0.1])).unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn lp_examples() {
        let a = pv(&[0.5, 0.5]);
        let b = pv(&[0.8, 0.2]);
        let e0 = pv(&[1.0, 0.0]);
        let e1 = pv(&[0.0, 1.0]);
        for r in [0.5, 1.0, 2.0, 4.0] {
            assert_eq!(lp_dist(&a, &a, r).unwrap(), 0.0);
            assert_eq!(lp_dist_normalized(&a, &a, r).unwrap(), 0.0);
            assert_abs_diff_eq!(lp_dist_normalized(&e0, &e1, r).unwrap(), 1.0, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(lp_dist(&e0, &e1, 4.0).unwrap(), 1.189_207_115_002_721, epsilon = 1e-12);
        assert_abs_diff_eq!(lp_dist_normalized(&a, &b, 1.0).unwrap(), 0.3, epsilon = 1e-15);
        // sub-unit exponent: plain sum of powers, 2·sqrt(0.3)
        assert_abs_diff_eq!(lp_dist(&a, &b, 0.5).unwrap(), 2.0 * sqrt(0.3), epsilon = 1e-15);
        assert!(lp_dist(&a, &b, 0.0).is_err());
        assert!(lp_dist(&a, &b, -2.0).is_err());
        assert!(lp_dist(&a, &ProbVector::uniform(3).unwrap(), 2.0).is_err());
    }
}
