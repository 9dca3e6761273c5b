//! Cutoff calibration error: the supremum over intervals `I` of
//! `|E[(Y - f(X)) 1{f(X) in I}]|`.
//!
//! On tie-pooled data an interval selects a contiguous run of groups, so the
//! supremum is a two-sided maximum-subarray problem over the group residual
//! sums (the empty run is allowed and gives zero).

use serde::{Deserialize, Serialize};

use crate::data::GroupedDataset;
use crate::scalar::Scalar;

/// Plug-in cutoff calibration error with the maximising group range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutoffEstimate<T> {
    pub value: T,
    /// Inclusive `(lo, hi)` group indices, `None` when the empty interval wins.
    pub argmax_interval: Option<(usize, usize)>,
    pub n: usize,
}

impl<T: Scalar> CutoffEstimate<T> {
    /// `(20 + sqrt(2 ln(1/delta))) / sqrt(n)`: with probability at least
    /// `1 - delta` the plug-in value is within this radius of the population
    /// cutoff error.
    pub fn concentration_radius(&self, delta: f64) -> f64 {
        concentration_radius(self.n, delta)
    }
}

/// `(20 + sqrt(2 ln(1/delta))) / sqrt(n)`.
pub fn concentration_radius(n: usize, delta: f64) -> f64 {
    (20.0 + (2.0 * (1.0 / delta).ln()).sqrt()) / (n as f64).sqrt()
}

/// Best strictly positive run of `values` under Kadane's recursion.
/// Running sums restart from the empty prefix, so the sum of the returned
/// run is accumulated left to right starting at its first element.
fn max_run<T: Scalar>(values: impl Iterator<Item = T>) -> (T, Option<(usize, usize)>) {
    let mut best = T::zero();
    let mut best_range = None;
    let mut current = T::zero();
    let mut start = 0;
    for (j, v) in values.enumerate() {
        if current <= T::zero() {
            current = v;
            start = j;
        } else {
            current = current + v;
        }
        if current > best {
            best = current.clone();
            best_range = Some((start, j));
        }
    }
    (best, best_range)
}

/// Plug-in cutoff calibration error of grouped data.
pub fn cutoff_error<T: Scalar>(data: &GroupedDataset<T>) -> CutoffEstimate<T> {
    let sums = || data.groups().iter().map(|g| g.residual_sum.clone());
    let (pos, pos_range) = max_run(sums());
    let (neg, neg_range) = max_run(sums().map(|s| -s));
    let (sum, argmax_interval) = if neg > pos { (neg, neg_range) } else { (pos, pos_range) };
    CutoffEstimate {
        value: sum / data.total_mass().clone(),
        argmax_interval,
        n: data.n(),
    }
}
