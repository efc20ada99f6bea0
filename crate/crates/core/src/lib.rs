//! Numerical core for studying prediction churn.
//!
//! Everything in this crate is pure computation over immutable inputs and is
//! `#![no_std]` (it needs `alloc`). The pieces:
//!
//! | Module | What it holds |
//! |--------|---------------|
//! | [`prob`] | simplex vectors, softmax/sigmoid, entropy, cross-entropy, KL |
//! | [`divergence`] | total variation, L1/Lp, Hellinger, collision probability |
//! | [`churn`] | hard and soft churn, margins, executable churn-bound checkers |
//! | [`reg_loss`] | entropy- and KL-to-uniform-regularized log/logistic losses |
//! | [`reject`] | rejection loss, its convex and smooth surrogates, link, Bayes scores |
//! | [`xex`] | sampled softmax, negative mining and the cross-example variants |
//! | [`metrics`] | recall@k, precision-recall curves, histograms, score envelopes |
//! | [`train`] | synthetic data, tiny models with hand-written backprop, experiments |
//!
//! All logarithms are natural. Every reduction sums in index order so that a
//! fixed input produces bit-identical output.

#![no_std]
// NaN must fail these checks, so `!(a < b)` is deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod churn;
pub mod divergence;
mod error;
pub mod linalg;
pub mod math;
pub mod metrics;
pub mod prob;
pub mod reg_loss;
pub mod reject;
pub mod train;
pub mod xex;

pub use error::{Error, Result};
pub use prob::{BinaryProb, ProbVector, ScoreVector};

/// Value and derivative of a scalar loss.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ValueGrad {
    pub value: f64,
    pub grad: f64,
}
