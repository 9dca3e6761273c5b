//! Sampled lower bound on the weighted calibration error over functions of
//! bounded total variation.

use crate::data::GroupedDataset;
use crate::error::{CalibError, Result};
use crate::metrics::cutoff::cutoff_error;
use crate::rng::SeededRng;
use crate::scalar::Scalar;

fn weighted_sum<T: Scalar>(weights: &[T], residuals: &[T]) -> T {
    T::total(weights.iter().zip(residuals).map(|(w, s)| w.clone() * s.clone())).abs()
}

/// Best `|sum_j w(t_j) s_j|` over `num_samples` random step functions
/// `w: [0,1] -> [-1,1]` with total variation at most `total_variation`.
///
/// The indicator of the cutoff maximising interval and the constant function
/// are always evaluated as well, so the result is at least the cutoff
/// calibration error. Every candidate lies in the class, so the result never
/// exceeds the class supremum, which is itself at most
/// `(M + 2)` times the cutoff calibration error.
pub fn bv_wce_lower_bound<T: Scalar>(
    data: &GroupedDataset<T>,
    total_variation: f64,
    rng: &mut SeededRng,
    num_samples: usize,
) -> Result<T> {
    if total_variation.is_nan() || total_variation < 2.0 {
        return Err(CalibError::InvalidParameter(format!(
            "total variation bound must be at least 2, got {total_variation}"
        )));
    }
    let s = data.normalized_residuals();
    let m = s.len();
    let budget = T::lift(total_variation);

    let mut best = cutoff_error(data).value;
    best = T::max_of(best, weighted_sum(&vec![T::one(); m], &s));

    let mut weights = vec![T::zero(); m];
    for _ in 0..num_samples {
        let pieces = 1 + rng.index(m.min(8));
        let mut cuts: Vec<usize> = (0..pieces - 1).map(|_| 1 + rng.index(m.max(2) - 1)).collect();
        cuts.sort_unstable();
        cuts.dedup();
        let levels: Vec<T> = (0..=cuts.len()).map(|_| T::lift(2.0 * rng.uniform() - 1.0)).collect();
        let variation = T::total(levels.windows(2).map(|w| (w[1].clone() - w[0].clone()).abs()));
        let scale = if variation > budget {
            budget.clone() / variation
        } else {
            T::one()
        };
        let mut piece = 0;
        for (j, w) in weights.iter_mut().enumerate() {
            while piece < cuts.len() && j >= cuts[piece] {
                piece += 1;
            }
            *w = levels[piece].clone() * scale.clone();
        }
        best = T::max_of(best, weighted_sum(&weights, &s));
    }
    Ok(best)
}
