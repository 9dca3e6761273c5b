//! Binned ECE, oracle ECE and effective support size.

use crate::data::{GroupedDataset, ResidualMode};
use crate::error::{CalibError, Result};
use crate::scalar::Scalar;

/// Index of the equal-width bin containing `t`: bin 0 is `[0, 1/N]`, bin `b`
/// is `(b/N, (b+1)/N]`.
fn bin_index<T: Scalar>(t: &T, num_bins: usize) -> usize {
    let bins = T::from_count(num_bins);
    let approx = (t.lower() * num_bins as f64).ceil() as i64 - 1;
    let mut b = approx.clamp(0, num_bins as i64 - 1) as usize;
    // fix up rounding in the float estimate with exact comparisons
    while b > 0 && *t <= T::from_count(b) / bins.clone() {
        b -= 1;
    }
    while b + 1 < num_bins && *t > T::from_count(b + 1) / bins.clone() {
        b += 1;
    }
    b
}

/// Binned ECE `sum_b (n_b / n) |ybar_b - tbar_b|` over `num_bins` equal-width
/// bins.
///
/// This is the ECE of the binned approximation of `f` (the function that is
/// constant on each bin), not of `f` itself: it can be near zero while the
/// ECE of `f` is large, e.g. when within-bin errors cancel.
pub fn binned_ece<T: Scalar>(data: &GroupedDataset<T>, num_bins: usize) -> Result<T> {
    if num_bins == 0 {
        return Err(CalibError::InvalidParameter("num_bins must be at least 1".into()));
    }
    let mut bin_sums = vec![Vec::new(); num_bins];
    for g in data.groups() {
        bin_sums[bin_index(&g.forecast, num_bins)].push(g.residual_sum.clone());
    }
    let total = T::total(bin_sums.into_iter().map(|sums| T::total(sums).abs()));
    Ok(total / data.total_mass().clone())
}

/// Oracle ECE `(1/n) sum_i |mu_i - t_i|`, requiring oracle-mode residuals.
pub fn oracle_ece<T: Scalar>(data: &GroupedDataset<T>) -> Result<T> {
    if data.mode() != ResidualMode::Oracle {
        return Err(CalibError::InvalidParameter(
            "oracle ECE needs oracle-mean residuals".into(),
        ));
    }
    let total = T::total(data.groups().iter().map(|g| g.abs_residual_sum.clone()));
    Ok(total / data.total_mass().clone())
}

/// Smallest `k >= 1` such that the `k` heaviest forecast values carry at
/// least a `1 - gamma` fraction of the mass.
pub fn effective_support_size<T: Scalar>(data: &GroupedDataset<T>, gamma: f64) -> usize {
    let gamma = gamma.clamp(0.0, 1.0);
    let mut masses: Vec<T> = data.groups().iter().map(|g| g.mass.clone()).collect();
    masses.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let target = (T::one() - T::lift(gamma)) * data.total_mass().clone();
    let mut covered = T::zero();
    for (k, m) in masses.into_iter().enumerate() {
        covered = covered + m;
        if covered >= target {
            return k + 1;
        }
    }
    // only reachable through rounding in the float case
    data.len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Atom, ForecastGroup, ForecastSample};
    use crate::scalar::ratio;
    use num_rational::BigRational;

    fn sample(t: f64, y: f64) -> ForecastSample<f64> {
        ForecastSample {
            forecast: t,
            outcome: y,
            oracle_mean: Some(y),
        }
    }

    #[test]
    fn bin_edges_are_right_closed() {
        assert_eq!(bin_index(&0.0, 4), 0);
        assert_eq!(bin_index(&0.25, 4), 0);
        assert_eq!(bin_index(&0.2500001, 4), 1);
        assert_eq!(bin_index(&1.0, 4), 3);
        assert_eq!(bin_index(&ratio(1, 2), 2), 0);
        assert_eq!(bin_index(&ratio(1, 3), 3), 0);
        assert_eq!(bin_index(&(ratio(1, 3) + ratio(1, 1000)), 3), 1);
    }

    #[test]
    fn single_bin_matching_means() {
        let data = [sample(0.2, 0.0), sample(0.6, 1.0), sample(0.7, 0.5)];
        let g = GroupedDataset::from_samples(&data, ResidualMode::Outcome).unwrap();
        assert!(binned_ece(&g, 1).unwrap().abs() < 1e-15);
    }

    #[test]
    fn degenerate_example_any_bins() {
        let data = vec![sample(1.0, 0.0); 10];
        let g = GroupedDataset::from_samples(&data, ResidualMode::Oracle).unwrap();
        for bins in [1, 3, 10, 64] {
            assert_eq!(binned_ece(&g, bins).unwrap(), 1.0);
        }
        assert_eq!(oracle_ece(&g).unwrap(), 1.0);
    }

    #[test]
    fn zero_bins_rejected() {
        let g = GroupedDataset::from_samples(&[sample(0.5, 1.0)], ResidualMode::Outcome).unwrap();
        assert!(binned_ece(&g, 0).is_err());
        assert!(oracle_ece(&g).is_err());
    }

    #[test]
    fn oracle_ece_of_perfect_calibration() {
        let atoms: Vec<Atom<BigRational>> = (1..5)
            .map(|k| Atom::new(ratio(k, 5), ratio(k, 5), ratio(1, 4)))
            .collect();
        let g = GroupedDataset::from_atoms(&atoms).unwrap();
        assert_eq!(oracle_ece(&g).unwrap(), ratio(0, 1));
    }

    fn grouped_masses(masses: &[usize]) -> GroupedDataset<f64> {
        let groups = masses
            .iter()
            .enumerate()
            .map(|(j, &m)| ForecastGroup {
                forecast: j as f64 / 10.0,
                residual_sum: 0.0,
                abs_residual_sum: 0.0,
                count: m,
                mass: m as f64,
                outcome_sum: 0.0,
            })
            .collect();
        GroupedDataset::from_groups(groups, ResidualMode::Outcome).unwrap()
    }

    #[test]
    fn support_size_examples() {
        assert_eq!(effective_support_size(&grouped_masses(&[50, 30, 20]), 0.25), 2);
        assert_eq!(effective_support_size(&grouped_masses(&[1; 7]), 0.0), 7);
        assert_eq!(effective_support_size(&grouped_masses(&[12]), 0.0), 1);
        assert_eq!(effective_support_size(&grouped_masses(&[12]), 0.9), 1);
        assert_eq!(effective_support_size(&grouped_masses(&[3, 3, 3]), 1.0), 1);
    }
}
