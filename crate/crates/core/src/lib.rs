//! Calibration auditing toolkit.
//!
//! The central metric is the cutoff calibration error
//! `sup_I |E[(Y - f(X)) 1{f(X) in I}]|` over intervals `I`, estimated by a
//! linear scan over tie-pooled forecast groups. Around it sit the binned and
//! oracle ECE, the Lipschitz weighted calibration error (solved exactly as a
//! linear program), post-hoc calibrators, a two-stage certification
//! procedure and decision-theoretic risk gaps.
//!
//! Data and metrics are generic over [`scalar::Scalar`]; the aliases below
//! fix the two common choices.

pub mod calibrate;
pub mod certify;
pub mod data;
pub mod decision;
pub mod error;
pub mod experiments;
pub mod metrics;
pub mod rng;
pub mod scalar;

pub use num_rational::BigRational;

pub use calibrate::{apply, fit_isotonic, fit_modified_platt, fit_platt, CalibratorMap};
pub use certify::{certify, CertificationVerdict, CertifyConfig, Observation};
pub use data::{group_by_forecast, load_samples, Atom, ForecastSample, GroupedDataset, LoadMode, ResidualMode};
pub use error::{CalibError, Result};
pub use metrics::{
    binned_ece, bv_wce_lower_bound, cutoff_error, effective_support_size, lipschitz_wce, oracle_ece, CutoffEstimate,
    LipschitzWeights, MetricReport,
};
pub use rng::SeededRng;
pub use scalar::{Real, Scalar};

pub type Sample64 = ForecastSample<f64>;
pub type GroupedDataset64 = GroupedDataset<f64>;
pub type Atom64 = Atom<f64>;
pub type CalibratorMap64 = CalibratorMap<f64>;

pub type ExactSample = ForecastSample<BigRational>;
pub type ExactGroupedDataset = GroupedDataset<BigRational>;
pub type ExactAtom = Atom<BigRational>;
