//! Population Platt scaling can leave a strictly positive distance from
//! calibration: a four-atom construction with an LP certificate.

use serde::{Deserialize, Serialize};

use crate::calibrate::{fit_population_platt, PlattCoefficients};
use crate::data::{Atom, GroupedDataset};
use crate::error::{CalibError, Result};
use crate::metrics::{cutoff_error, lipschitz_wce};

/// Forecast support of the construction.
pub const COUNTEREXAMPLE_FORECASTS: [f64; 4] = [0.0, 0.25, 0.5, 1.0];

/// Margin the certified Lipschitz weighted error must exceed.
pub const CERTIFICATE_MARGIN: f64 = 0.01;

/// A distribution, its population Platt map and the certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlattCertificate {
    /// `(forecast, conditional mean, mass)` of the original forecaster.
    pub atoms: Vec<Atom<f64>>,
    pub population_platt: PlattCoefficients,
    /// The same atoms with forecasts replaced by their recalibrated values.
    pub recalibrated: Vec<Atom<f64>>,
    /// Lipschitz weighted calibration error of the recalibrated forecaster.
    /// Half of it lower-bounds the distance from calibration.
    pub certified_wce: f64,
    /// Cutoff calibration error of the recalibrated forecaster.
    pub cutoff: f64,
}

/// Fits population Platt scaling (no target smoothing) to `atoms` and
/// certifies the calibration error of the result.
pub fn population_platt_certificate(atoms: &[Atom<f64>]) -> Result<PlattCertificate> {
    let platt = fit_population_platt(atoms)?.coefficients;
    let recalibrated: Vec<Atom<f64>> = atoms
        .iter()
        .map(|a| Atom::new(platt.eval(a.forecast), a.mean, a.mass))
        .collect();
    let data = GroupedDataset::from_atoms(&recalibrated)?;
    Ok(PlattCertificate {
        atoms: atoms.to_vec(),
        population_platt: platt,
        certified_wce: lipschitz_wce(&data).objective,
        cutoff: cutoff_error(&data).value,
        recalibrated,
    })
}

/// Searches non-decreasing conditional means `q_v in {0.05, 0.10, ..., 0.95}`
/// on the forecasts `{0, 0.25, 0.5, 1}` (mass 1/4 each) for the one whose
/// population Platt map has the largest certified Lipschitz weighted error.
/// Fails unless that error exceeds [`CERTIFICATE_MARGIN`].
pub fn platt_counterexample() -> Result<PlattCertificate> {
    let levels: Vec<f64> = (1..=19).map(|k| k as f64 / 20.0).collect();
    let mut best: Option<PlattCertificate> = None;
    for (i0, &q0) in levels.iter().enumerate() {
        for (i1, &q1) in levels.iter().enumerate().skip(i0) {
            for (i2, &q2) in levels.iter().enumerate().skip(i1) {
                for &q3 in &levels[i2..] {
                    let atoms: Vec<Atom<f64>> = COUNTEREXAMPLE_FORECASTS
                        .iter()
                        .zip([q0, q1, q2, q3])
                        .map(|(&t, q)| Atom::new(t, q, 0.25))
                        .collect();
                    let Ok(cert) = population_platt_certificate(&atoms) else {
                        continue;
                    };
                    if best.as_ref().is_none_or(|b| cert.certified_wce > b.certified_wce) {
                        best = Some(cert);
                    }
                }
            }
        }
    }
    match best {
        Some(cert) if cert.certified_wce > CERTIFICATE_MARGIN => Ok(cert),
        other => Err(CalibError::SearchFailed {
            best_margin: other.map_or(0.0, |c| c.certified_wce),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibrate::sigmoid;

    #[test]
    fn realizable_truth_is_recovered() {
        let atoms: Vec<Atom<f64>> = COUNTEREXAMPLE_FORECASTS
            .iter()
            .map(|&t| Atom::new(t, sigmoid(2.0 * t - 0.7), 0.25))
            .collect();
        let cert = population_platt_certificate(&atoms).unwrap();
        assert!((cert.population_platt.a - 2.0).abs() < 1e-6);
        assert!((cert.population_platt.b + 0.7).abs() < 1e-6);
        assert!(cert.certified_wce < 1e-6);
    }

    #[test]
    fn identity_truth_is_miscalibrated_after_platt() {
        let atoms: Vec<Atom<f64>> = [0.05, 0.25, 0.5, 0.95]
            .iter()
            .zip(COUNTEREXAMPLE_FORECASTS)
            .map(|(&q, t)| Atom::new(t, q, 0.25))
            .collect();
        assert!(population_platt_certificate(&atoms).unwrap().certified_wce > 0.0);
    }
}
