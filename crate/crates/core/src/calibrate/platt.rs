//! Platt scaling and its cutoff-checked variant.

use serde::{Deserialize, Serialize};

use crate::data::{Atom, ForecastSample, GroupedDataset, ResidualMode};
use crate::error::{CalibError, Result};
use crate::metrics::cutoff_error;
use crate::scalar::Scalar;

use super::logistic::{fit_logistic, sigmoid, LogisticFit, LogisticPoint};
use super::CalibratorMap;

/// `z -> sigmoid(a z + b)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlattCoefficients {
    pub a: f64,
    pub b: f64,
}

impl PlattCoefficients {
    pub fn eval(&self, z: f64) -> f64 {
        sigmoid(self.a * z + self.b)
    }
}

/// Platt coefficients with the underlying optimisation record.
#[derive(Debug, Clone, PartialEq)]
pub struct PlattFit {
    pub coefficients: PlattCoefficients,
    pub logistic: LogisticFit,
}

impl PlattFit {
    fn from_logistic(logistic: LogisticFit) -> Self {
        Self {
            coefficients: PlattCoefficients {
                a: logistic.slope,
                b: logistic.intercept,
            },
            logistic,
        }
    }
}

/// Smoothed targets `y (N+ + 1)/(N+ + 2) + (1 - y)/(N- + 2)`, where `N+` and
/// `N-` are the summed outcomes and summed complements.
pub fn platt_targets(outcomes: &[f64]) -> Vec<f64> {
    let positives: f64 = outcomes.iter().sum();
    let negatives: f64 = outcomes.iter().map(|y| 1.0 - y).sum();
    let hi = (positives + 1.0) / (positives + 2.0);
    let lo = 1.0 / (negatives + 2.0);
    outcomes.iter().map(|y| y * hi + (1.0 - y) * lo).collect()
}

/// Logistic regression of smoothed outcomes on the raw forecast.
///
/// The fit runs in `f64` whatever the sample scalar type.
pub fn fit_platt_detailed<T: Scalar>(samples: &[ForecastSample<T>]) -> Result<PlattFit> {
    if samples.is_empty() {
        return Err(CalibError::EmptyInput);
    }
    let outcomes: Vec<f64> = samples.iter().map(|s| s.outcome.lower()).collect();
    let points: Vec<LogisticPoint> = samples
        .iter()
        .zip(platt_targets(&outcomes))
        .map(|(s, target)| LogisticPoint {
            x: s.forecast.lower(),
            target,
            weight: 1.0,
        })
        .collect();
    fit_logistic(&points).map(PlattFit::from_logistic)
}

pub fn fit_platt<T: Scalar>(samples: &[ForecastSample<T>]) -> Result<CalibratorMap<T>> {
    fit_platt_detailed(samples).map(|fit| CalibratorMap::Platt {
        coefficients: fit.coefficients,
    })
}

/// Population Platt scaling: minimises the mass-weighted logistic loss of the
/// atoms' conditional means on their forecasts, without target smoothing.
pub fn fit_population_platt<T: Scalar>(atoms: &[Atom<T>]) -> Result<PlattFit> {
    let points: Vec<LogisticPoint> = atoms
        .iter()
        .map(|a| LogisticPoint {
            x: a.forecast.lower(),
            target: a.mean.lower(),
            weight: a.mass.lower(),
        })
        .collect();
    fit_logistic(&points).map(PlattFit::from_logistic)
}

/// `(20 + sqrt(2 ln 20)) / sqrt(n)`.
pub fn default_modified_platt_epsilon(n: usize) -> f64 {
    (20.0 + (2.0 * 20.0_f64.ln()).sqrt()) / (n as f64).sqrt()
}

/// Outcome of [`fit_modified_platt`].
#[derive(Debug, Clone, PartialEq)]
pub struct ModifiedPlatt<T> {
    /// The Platt map if accepted, otherwise the constant mean outcome.
    pub map: CalibratorMap<T>,
    pub platt: PlattCoefficients,
    /// Plug-in cutoff error of the Platt-recalibrated training sample.
    pub estimate: f64,
    pub epsilon: f64,
    pub accepted: bool,
}

/// Platt scaling that falls back to the mean outcome when the recalibrated
/// training sample has plug-in cutoff error above `epsilon` (default
/// [`default_modified_platt_epsilon`]). The check reuses the training data.
pub fn fit_modified_platt<T: Scalar>(samples: &[ForecastSample<T>], epsilon: Option<f64>) -> Result<ModifiedPlatt<T>> {
    let n = samples.len();
    let epsilon = match epsilon {
        Some(e) if e > 0.0 && e.is_finite() => e,
        Some(e) => {
            return Err(CalibError::InvalidParameter(format!(
                "epsilon must be positive, got {e}"
            )))
        }
        None if n == 0 => return Err(CalibError::EmptyInput),
        None => default_modified_platt_epsilon(n),
    };
    let platt = fit_platt_detailed(samples)?.coefficients;
    let recalibrated = GroupedDataset::from_pairs(
        samples
            .iter()
            .map(|s| (T::lift(platt.eval(s.forecast.lower())), s.outcome.clone())),
        ResidualMode::Outcome,
    )?;
    let estimate = cutoff_error(&recalibrated).value.lower();
    let accepted = estimate <= epsilon;
    let map = if accepted {
        CalibratorMap::Platt { coefficients: platt }
    } else {
        let mean = T::total(samples.iter().map(|s| s.outcome.clone())) / T::from_count(n);
        CalibratorMap::Constant { constant_value: mean }
    };
    Ok(ModifiedPlatt {
        map,
        platt,
        estimate,
        epsilon,
        accepted,
    })
}
