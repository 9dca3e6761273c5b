//! Isotonic regression by pool-adjacent-violators.

use crate::data::ForecastSample;
use crate::error::{CalibError, Result};
use crate::scalar::Scalar;

use super::CalibratorMap;

struct Block<T> {
    start: T,
    sum: T,
    weight: T,
}

impl<T: Scalar> Block<T> {
    /// `mean(self) >= mean(next)`, compared without division.
    fn violates(&self, next: &Block<T>) -> bool {
        self.sum.clone() * next.weight.clone() >= next.sum.clone() * self.weight.clone()
    }
}

/// Least-squares non-decreasing fit of outcomes on forecasts.
///
/// Samples sharing a forecast are merged into one weighted point first, so
/// the fit is a function of the forecast. Each fitted block value is the
/// mean outcome of its members. The returned map is a right-continuous step
/// function: `z` gets the value of the last block starting at or below `z`,
/// and the first block's value below the data range.
pub fn fit_isotonic<T: Scalar>(samples: &[ForecastSample<T>]) -> Result<CalibratorMap<T>> {
    if samples.is_empty() {
        return Err(CalibError::EmptyInput);
    }
    let mut sorted: Vec<&ForecastSample<T>> = samples.iter().collect();
    sorted.sort_by(|a, b| a.forecast.partial_cmp(&b.forecast).unwrap_or(std::cmp::Ordering::Equal));

    let mut stack: Vec<Block<T>> = Vec::with_capacity(sorted.len());
    let mut i = 0;
    while i < sorted.len() {
        let t = sorted[i].forecast.clone();
        let mut block = Block {
            start: t.clone(),
            sum: T::zero(),
            weight: T::zero(),
        };
        while i < sorted.len() && sorted[i].forecast == t {
            block.sum = block.sum + sorted[i].outcome.clone();
            block.weight = block.weight + T::one();
            i += 1;
        }
        while stack.last().is_some_and(|prev| prev.violates(&block)) {
            let prev = stack.pop().unwrap();
            block = Block {
                start: prev.start,
                sum: prev.sum + block.sum,
                weight: prev.weight + block.weight,
            };
        }
        stack.push(block);
    }
    Ok(CalibratorMap::Isotonic {
        breakpoints: stack.into_iter().map(|b| (b.start, b.sum / b.weight)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;
    use num_rational::BigRational;
    use proptest::prelude::*;

    fn samples<T: Scalar>(rows: &[(T, T)]) -> Vec<ForecastSample<T>> {
        rows.iter()
            .map(|(t, y)| ForecastSample {
                forecast: t.clone(),
                outcome: y.clone(),
                oracle_mean: None,
            })
            .collect()
    }

    /// Exhaustive monotone least squares over a finite value lattice: the
    /// optimum takes values among the means of contiguous runs, so enumerate
    /// every non-decreasing assignment of those candidates.
    fn exhaustive(ys: &[f64]) -> Vec<f64> {
        let n = ys.len();
        let mut candidates: Vec<f64> = Vec::new();
        for lo in 0..n {
            for hi in lo..n {
                candidates.push(ys[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64);
            }
        }
        candidates.sort_by(|a, b| a.partial_cmp(b).unwrap());
        candidates.dedup();
        let mut best = (f64::INFINITY, vec![]);
        let mut current = vec![0usize; n];
        fn recurse(
            pos: usize,
            min_idx: usize,
            ys: &[f64],
            cands: &[f64],
            current: &mut Vec<usize>,
            best: &mut (f64, Vec<f64>),
        ) {
            if pos == ys.len() {
                let sse: f64 = current.iter().zip(ys).map(|(&c, y)| (cands[c] - y).powi(2)).sum();
                if sse < best.0 - 1e-15 {
                    *best = (sse, current.iter().map(|&c| cands[c]).collect());
                }
                return;
            }
            for c in min_idx..cands.len() {
                current[pos] = c;
                recurse(pos + 1, c, ys, cands, current, best);
            }
        }
        recurse(0, 0, ys, &candidates, &mut current, &mut best);
        best.1
    }

    #[test]
    fn monotone_data_is_reproduced() {
        let rows = [(0.1, 0.0), (0.4, 0.5), (0.7, 1.0)];
        let map = fit_isotonic(&samples(&rows)).unwrap();
        for (t, y) in rows {
            assert_eq!(map.predict(&t), y);
        }
    }

    #[test]
    fn decreasing_outcomes_pool_to_mean() {
        let rows = [
            (ratio(1, 10), ratio(1, 1)),
            (ratio(2, 10), ratio(0, 1)),
            (ratio(3, 10), ratio(0, 1)),
        ];
        let map = fit_isotonic(&samples(&rows)).unwrap();
        for (t, _) in &rows {
            assert_eq!(map.predict(t), ratio(1, 3));
        }
    }

    #[test]
    fn constant_outcomes_give_constant_map() {
        let rows = [(0.9, 0.3), (0.1, 0.3), (0.5, 0.3)];
        let map = fit_isotonic(&samples(&rows)).unwrap();
        assert_eq!(
            map,
            CalibratorMap::Isotonic {
                breakpoints: vec![(0.1, 0.3)]
            }
        );
    }

    #[test]
    fn step_prediction_between_and_beyond_blocks() {
        let rows = [(0.2, 0.0), (0.6, 1.0)];
        let map = fit_isotonic(&samples(&rows)).unwrap();
        assert_eq!(map.predict(&0.0), 0.0);
        assert_eq!(map.predict(&0.59), 0.0);
        assert_eq!(map.predict(&0.6), 1.0);
        assert_eq!(map.predict(&1.0), 1.0);
    }

    #[test]
    fn ties_are_merged_before_pooling() {
        let rows = [(0.5, 1.0), (0.5, 0.0), (0.5, 0.0), (0.8, 1.0)];
        let map = fit_isotonic(&samples(&rows)).unwrap();
        assert_eq!(map.predict(&0.5), 1.0 / 3.0);
        assert_eq!(map.predict(&0.8), 1.0);
    }

    #[test]
    fn empty_input_rejected() {
        assert!(fit_isotonic::<f64>(&[]).is_err());
    }

    proptest! {
        #[test]
        fn matches_exhaustive_least_squares(ys in prop::collection::vec(0.0f64..1.0, 1..=7)) {
            let rows: Vec<(f64, f64)> = ys.iter().enumerate().map(|(i, &y)| ((i + 1) as f64 / 10.0, y)).collect();
            let map = fit_isotonic(&samples(&rows)).unwrap();
            let oracle = exhaustive(&ys);
            for ((t, _), o) in rows.iter().zip(&oracle) {
                prop_assert!((map.predict(t) - o).abs() < 1e-9);
            }
        }

        #[test]
        fn block_sums_match_exactly(raw in prop::collection::vec((0u8..12, 0i64..=4), 1..40)) {
            let rows: Vec<(BigRational, BigRational)> =
                raw.iter().map(|&(t, y)| (ratio(t as i64, 11), ratio(y, 4))).collect();
            let map = fit_isotonic(&samples(&rows)).unwrap();
            let fitted: Vec<BigRational> = rows.iter().map(|(t, _)| map.predict(t)).collect();
            // each level set of the fit is a piecewise empirical mean
            let mut levels = fitted.clone();
            levels.sort();
            levels.dedup();
            for level in &levels {
                let (fit_sum, y_sum) = rows.iter().zip(&fitted).filter(|(_, f)| *f == level).fold(
                    (ratio(0, 1), ratio(0, 1)),
                    |(a, b), ((_, y), f)| (a + f, b + y),
                );
                prop_assert_eq!(fit_sum, y_sum);
            }
            let mut by_t: Vec<_> = rows.iter().map(|(t, _)| (t.clone(), map.predict(t))).collect();
            by_t.sort();
            prop_assert!(by_t.windows(2).all(|w| w[0].1 <= w[1].1));
        }
    }
}
