//! Two-stage certification: train on the first half, test the plug-in cutoff
//! error of the trained model on the second half against a threshold
//! corrected for sampling error, and fall back to a constant otherwise.
//!
//! For any data distribution and any training algorithm, the returned model
//! has population cutoff error at most `c` with probability `1 - 2 delta`.

use serde::{Deserialize, Serialize};

use crate::calibrate::CalibratorMap;
use crate::data::{GroupedDataset, ResidualMode};
use crate::error::{CalibError, Result};
use crate::metrics::{concentration_radius, cutoff_error};
use crate::rng::SeededRng;

/// A fitted forecaster on covariates of type `C`.
pub trait Forecaster<C> {
    fn forecast(&self, covariate: &C) -> f64;
}

impl<C, F: Fn(&C) -> f64> Forecaster<C> for F {
    fn forecast(&self, covariate: &C) -> f64 {
        self(covariate)
    }
}

impl Forecaster<f64> for CalibratorMap<f64> {
    fn forecast(&self, covariate: &f64) -> f64 {
        self.predict(covariate)
    }
}

/// One labelled observation with an opaque covariate.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation<C> {
    pub covariate: C,
    pub outcome: f64,
}

/// Settings of [`certify`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertifyConfig {
    pub c: f64,
    pub delta: f64,
    /// Seeded shuffle before splitting; `None` splits in input order.
    pub shuffle_seed: Option<u64>,
}

/// The model handed back by [`certify`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReturnedModel<M> {
    Trained { model: M },
    Constant { value: f64 },
}

impl<C, M: Forecaster<C>> Forecaster<C> for ReturnedModel<M> {
    fn forecast(&self, covariate: &C) -> f64 {
        match self {
            ReturnedModel::Trained { model } => model.forecast(covariate),
            ReturnedModel::Constant { value } => *value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationVerdict<M> {
    pub accepted: bool,
    /// Plug-in cutoff error of the trained model on the second half.
    pub estimate: f64,
    /// `c - (20 + sqrt(2 ln(1/delta))) / sqrt(floor(n/2))`.
    pub threshold: f64,
    pub c: f64,
    pub delta: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub returned_model: ReturnedModel<M>,
    /// Mean second-half outcome, the fallback constant.
    pub fallback_mean: f64,
}

/// Smallest admissible `c`: `sqrt(ln(1/delta) / (2 floor(n/2)))`.
pub fn minimum_c(n: usize, delta: f64) -> f64 {
    ((1.0 / delta).ln() / (2.0 * (n / 2) as f64)).sqrt()
}

/// Runs the two-stage procedure. The trainer sees the first `ceil(n/2)`
/// observations; the cutoff estimate uses the remaining `floor(n/2)`.
pub fn certify<C, M, E, F>(
    data: &[Observation<C>],
    trainer: F,
    config: CertifyConfig,
) -> Result<CertificationVerdict<M>>
where
    C: Clone,
    M: Forecaster<C>,
    E: std::fmt::Display,
    F: FnOnce(&[Observation<C>]) -> std::result::Result<M, E>,
{
    let n = data.len();
    if n < 4 {
        return Err(CalibError::InvalidParameter(format!(
            "certification needs n >= 4, got {n}"
        )));
    }
    let CertifyConfig { c, delta, shuffle_seed } = config;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(CalibError::InvalidParameter(format!(
            "delta must lie in (0,1), got {delta}"
        )));
    }
    let minimum = minimum_c(n, delta);
    if c.is_nan() || c < minimum {
        return Err(CalibError::ThresholdTooSmall { c, minimum });
    }
    if data.iter().any(|o| !(0.0..=1.0).contains(&o.outcome)) {
        return Err(CalibError::InvalidParameter("outcomes must lie in [0,1]".into()));
    }

    let mut order: Vec<usize> = (0..n).collect();
    if let Some(seed) = shuffle_seed {
        SeededRng::new(seed, 0).shuffle(&mut order);
    }
    let n_train = n.div_ceil(2);
    let train: Vec<Observation<C>> = order[..n_train].iter().map(|&i| data[i].clone()).collect();
    let test: Vec<&Observation<C>> = order[n_train..].iter().map(|&i| &data[i]).collect();
    let n_test = test.len();

    let model = trainer(&train).map_err(|e| CalibError::Trainer(e.to_string()))?;
    let mut forecasts = Vec::with_capacity(n_test);
    for o in &test {
        let t = model.forecast(&o.covariate);
        if !(0.0..=1.0).contains(&t) {
            return Err(CalibError::Trainer(format!("forecast {t} outside [0,1]")));
        }
        forecasts.push((t, o.outcome));
    }
    let held_out = GroupedDataset::from_pairs(forecasts, ResidualMode::Outcome)?;
    let estimate = cutoff_error(&held_out).value;
    let threshold = c - concentration_radius(n_test, delta);
    let fallback_mean = test.iter().map(|o| o.outcome).sum::<f64>() / n_test as f64;
    let accepted = estimate <= threshold;
    let returned_model = if accepted {
        ReturnedModel::Trained { model }
    } else {
        ReturnedModel::Constant { value: fallback_mean }
    };
    Ok(CertificationVerdict {
        accepted,
        estimate,
        threshold,
        c,
        delta,
        n_train,
        n_test,
        returned_model,
        fallback_mean,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(x: f64, y: f64) -> Observation<f64> {
        Observation {
            covariate: x,
            outcome: y,
        }
    }

    fn calibrated(n: usize, seed: u64) -> Vec<Observation<f64>> {
        let mut rng = SeededRng::new(seed, 0);
        (0..n)
            .map(|_| {
                let x = rng.uniform();
                obs(x, rng.bernoulli(x))
            })
            .collect()
    }

    fn ok_identity(_: &[Observation<f64>]) -> std::result::Result<fn(&f64) -> f64, String> {
        Ok(|x: &f64| *x)
    }

    #[test]
    fn miscalibrated_model_rejected_with_fallback() {
        let data = vec![obs(0.5, 0.0); 2000];
        let config = CertifyConfig {
            c: 0.2,
            delta: 0.05,
            shuffle_seed: None,
        };
        let v = certify(&data, |_: &[Observation<f64>]| Ok::<_, String>(|_: &f64| 1.0), config).unwrap();
        assert!(!v.accepted);
        assert_eq!(v.estimate, 1.0);
        assert_eq!(v.fallback_mean, 0.0);
        assert!(matches!(v.returned_model, ReturnedModel::Constant { value } if value == 0.0));
    }

    #[test]
    fn small_c_reports_floor() {
        let data = calibrated(100, 1);
        let config = CertifyConfig {
            c: 0.01,
            delta: 0.05,
            shuffle_seed: None,
        };
        match certify(&data, ok_identity, config) {
            Err(CalibError::ThresholdTooSmall { minimum, .. }) => {
                assert!((minimum - (20.0_f64.ln() / 100.0).sqrt()).abs() < 1e-15)
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn threshold_uses_half_sample_radius() {
        let data = calibrated(2001, 2);
        let config = CertifyConfig {
            c: 0.2,
            delta: 0.05,
            shuffle_seed: None,
        };
        let v = certify(&data, ok_identity, config).unwrap();
        assert_eq!((v.n_train, v.n_test), (1001, 1000));
        let radius = (20.0 + (2.0 * 20.0_f64.ln()).sqrt()) / 1000.0_f64.sqrt();
        assert_eq!(v.threshold, 0.2 - radius);
        // at this size the corrected threshold is negative: nothing passes
        assert!(v.threshold < 0.0 && !v.accepted);
    }

    #[test]
    fn calibrated_model_accepted_at_large_n() {
        let data = calibrated(50_000, 3);
        let config = CertifyConfig {
            c: 0.2,
            delta: 0.05,
            shuffle_seed: Some(9),
        };
        let v = certify(&data, ok_identity, config).unwrap();
        assert!(v.accepted);
        assert!(v.estimate < 0.02);
        assert!(matches!(v.returned_model, ReturnedModel::Trained { .. }));
    }

    #[test]
    fn first_half_goes_to_trainer() {
        let data: Vec<_> = (0..9).map(|i| obs(i as f64, 0.0)).collect();
        let config = CertifyConfig {
            c: 0.9,
            delta: 0.5,
            shuffle_seed: None,
        };
        let v = certify(
            &data,
            |train: &[Observation<f64>]| {
                let xs: Vec<f64> = train.iter().map(|o| o.covariate).collect();
                assert_eq!(xs, vec![0.0, 1.0, 2.0, 3.0, 4.0]);
                Ok::<_, String>(|_: &f64| 0.0)
            },
            config,
        )
        .unwrap();
        assert_eq!(v.n_test, 4);
    }

    #[test]
    fn trainer_error_propagates() {
        let data = calibrated(100, 4);
        let config = CertifyConfig {
            c: 0.5,
            delta: 0.05,
            shuffle_seed: None,
        };
        let r = certify(
            &data,
            |_: &[Observation<f64>]| Err::<fn(&f64) -> f64, _>("boom"),
            config,
        );
        assert!(matches!(r, Err(CalibError::Trainer(msg)) if msg == "boom"));
    }

    #[test]
    fn too_few_samples() {
        let data = calibrated(3, 5);
        let config = CertifyConfig {
            c: 0.9,
            delta: 0.5,
            shuffle_seed: None,
        };
        assert!(certify(&data, ok_identity, config).is_err());
    }
}
