//! Calibration metrics on grouped data.
//!
//! All metrics are pure functions of a [`GroupedDataset`](crate::data::GroupedDataset)
//! and are generic over [`Scalar`](crate::scalar::Scalar), so they can be
//! evaluated exactly on rational data.

mod binned;
mod bv;
mod cutoff;
mod lipschitz;
mod report;

pub use binned::{binned_ece, effective_support_size, oracle_ece};
pub use bv::bv_wce_lower_bound;
pub use cutoff::{concentration_radius, cutoff_error, CutoffEstimate};
pub use lipschitz::{lipschitz_wce, LipschitzWeights};
pub use report::{audit_grouped, AuditConfig, MetricParams, MetricReport};
