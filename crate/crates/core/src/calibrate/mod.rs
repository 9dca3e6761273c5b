//! Post-hoc recalibration maps: isotonic regression, Platt scaling and the
//! cutoff-checked variant of Platt scaling.

mod isotonic;
mod logistic;
mod platt;

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

pub use isotonic::fit_isotonic;
pub use logistic::{fit_logistic, sigmoid, LogisticFit, LogisticPoint};
pub use platt::{
    default_modified_platt_epsilon, fit_modified_platt, fit_platt, fit_platt_detailed, fit_population_platt,
    platt_targets, ModifiedPlatt, PlattCoefficients, PlattFit,
};

/// A fitted map from forecasts to recalibrated probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CalibratorMap<T> {
    /// Right-continuous step function; `(input, output)` pairs sorted by
    /// input with non-decreasing outputs.
    Isotonic {
        breakpoints: Vec<(T, T)>,
    },
    Platt {
        coefficients: PlattCoefficients,
    },
    Constant {
        constant_value: T,
    },
}

impl<T: Scalar> CalibratorMap<T> {
    pub fn predict(&self, z: &T) -> T {
        match self {
            CalibratorMap::Isotonic { breakpoints } => {
                let idx = breakpoints.partition_point(|(input, _)| input <= z);
                breakpoints[idx.saturating_sub(1)].1.clone()
            }
            CalibratorMap::Platt { coefficients } => T::lift(coefficients.eval(z.lower())),
            CalibratorMap::Constant { constant_value } => constant_value.clone(),
        }
    }

    /// `true` when the map is non-decreasing in its input.
    pub fn is_monotone(&self) -> bool {
        match self {
            CalibratorMap::Isotonic { breakpoints } => breakpoints.windows(2).all(|w| w[0].1 <= w[1].1),
            CalibratorMap::Platt { coefficients } => coefficients.a >= 0.0,
            CalibratorMap::Constant { .. } => true,
        }
    }
}

/// Element-wise [`CalibratorMap::predict`].
pub fn apply<T: Scalar>(map: &CalibratorMap<T>, forecasts: &[T]) -> Vec<T> {
    forecasts.iter().map(|z| map.predict(z)).collect()
}
