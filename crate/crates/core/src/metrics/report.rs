//! JSON-serialisable metric reports.

use serde::{Deserialize, Serialize};

use crate::data::GroupedDataset;
use crate::error::Result;
use crate::metrics::{binned_ece, cutoff_error, lipschitz_wce, oracle_ece};
use crate::scalar::Scalar;

/// Parameters a metric was computed with.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricParams {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub bins: Option<usize>,
    #[serde(rename = "M", skip_serializing_if = "Option::is_none", default)]
    pub total_variation: Option<f64>,
    /// Concentration radius of the cutoff estimate at `delta`.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub radius: Option<f64>,
}

/// One named metric value with estimator metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub metric_name: String,
    pub value: f64,
    pub n: usize,
    pub params: MetricParams,
    pub argmax_interval: Option<[usize; 2]>,
}

impl MetricReport {
    pub fn new(metric_name: impl Into<String>, value: f64, n: usize) -> Self {
        Self {
            metric_name: metric_name.into(),
            value,
            n,
            params: MetricParams::default(),
            argmax_interval: None,
        }
    }
}

/// Settings for [`audit_grouped`].
#[derive(Debug, Clone, Copy)]
pub struct AuditConfig {
    pub delta: f64,
    pub bins: usize,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self { delta: 0.05, bins: 10 }
    }
}

/// Cutoff (with radius), binned ECE and Lipschitz wCE of `data`, each name
/// prefixed with `prefix`. Oracle-mode data also gets the oracle ECE.
pub fn audit_grouped<T: Scalar>(
    data: &GroupedDataset<T>,
    config: AuditConfig,
    prefix: &str,
) -> Result<Vec<MetricReport>> {
    let n = data.n();
    let cutoff = cutoff_error(data);
    let mut reports = Vec::new();

    let mut report = MetricReport::new(format!("{prefix}cutoff"), cutoff.value.lower(), n);
    report.params.delta = Some(config.delta);
    report.params.radius = Some(cutoff.concentration_radius(config.delta));
    report.argmax_interval = cutoff.argmax_interval.map(|(lo, hi)| [lo, hi]);
    reports.push(report);

    let mut report = MetricReport::new(format!("{prefix}binned_ece"), binned_ece(data, config.bins)?.lower(), n);
    report.params.bins = Some(config.bins);
    reports.push(report);

    reports.push(MetricReport::new(
        format!("{prefix}lipschitz_wce"),
        lipschitz_wce(data).objective.lower(),
        n,
    ));

    if data.mode() == crate::data::ResidualMode::Oracle {
        reports.push(MetricReport::new(format!("{prefix}ece"), oracle_ece(data)?.lower(), n));
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{ForecastSample, ResidualMode};

    #[test]
    fn json_shape() {
        let samples = vec![
            ForecastSample {
                forecast: 1.0,
                outcome: 0.0,
                oracle_mean: None
            };
            100
        ];
        let g = GroupedDataset::from_samples(&samples, ResidualMode::Outcome).unwrap();
        let reports = audit_grouped(&g, AuditConfig::default(), "").unwrap();
        assert_eq!(reports[0].metric_name, "cutoff");
        assert_eq!(reports[0].value, 1.0);
        assert_eq!(reports[0].argmax_interval, Some([0, 0]));
        let json = serde_json::to_value(&reports[0]).unwrap();
        assert_eq!(json["params"]["delta"], 0.05);
        assert!(json["params"].get("bins").is_none());
        let binned = serde_json::to_value(&reports[1]).unwrap();
        assert_eq!(binned["argmax_interval"], serde_json::Value::Null);
        assert_eq!(binned["params"]["bins"], 10);
    }
}
