//! Misspecified logistic-regression simulation: the truth mixes a parabola
//! with the identity, `E[Y|X] = alpha (1 - 2X)^2 + (1 - alpha) X`, and a
//! univariate logistic model is fitted by plain maximum likelihood.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibrate::{fit_logistic, sigmoid, LogisticPoint};
use crate::data::{ForecastSample, GroupedDataset, ResidualMode};
use crate::decision::{risk_gaps, DecisionEvalSet};
use crate::error::{CalibError, Result};
use crate::metrics::{cutoff_error, lipschitz_wce, oracle_ece};
use crate::rng::{mix_seed, SeededRng};

/// Attempts per run before a non-converging fit is reported as an error.
const MAX_ATTEMPTS: u64 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub runs: usize,
    pub n_train: usize,
    pub n_eval: usize,
    pub tau: f64,
    pub master_seed: u64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            runs: 100,
            n_train: 500,
            n_eval: 10_000,
            tau: 0.35,
            master_seed: 0,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 || self.n_train == 0 || self.n_eval == 0 {
            return Err(CalibError::InvalidParameter(
                "runs, n_train and n_eval must be at least 1".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return Err(CalibError::InvalidParameter("tau must lie in [0,1]".into()));
        }
        Ok(())
    }
}

/// Oracle metrics and decision risks of one fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationRunRecord {
    pub alpha: f64,
    pub cutoff: f64,
    pub ece: f64,
    pub lipschitz_wce: f64,
    pub risk: f64,
    pub bayes_risk: f64,
    pub monotone_risk: f64,
    pub gap: f64,
    pub monotone_gap: f64,
    pub seed: u64,
}

/// Records plus the number of runs that were redrawn after a failed fit.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOutcome {
    pub records: Vec<SimulationRunRecord>,
    pub reruns: usize,
}

pub fn conditional_mean(alpha: f64, x: f64) -> f64 {
    alpha * (1.0 - 2.0 * x).powi(2) + (1.0 - alpha) * x
}

/// One run keyed by `seed`. `alpha` is drawn uniformly unless forced.
pub fn run_single(config: &SimulationConfig, seed: u64, alpha: Option<f64>) -> Result<SimulationRunRecord> {
    config.validate()?;
    let mut rng = SeededRng::new(seed, 0);
    let alpha = alpha.unwrap_or_else(|| rng.uniform());
    let train: Vec<LogisticPoint> = (0..config.n_train)
        .map(|_| {
            let x = rng.uniform();
            LogisticPoint {
                x,
                target: rng.bernoulli(conditional_mean(alpha, x)),
                weight: 1.0,
            }
        })
        .collect();
    let fit = fit_logistic(&train)?;

    let mut eval_rng = rng.substream(1);
    let eval: Vec<ForecastSample<f64>> = (0..config.n_eval)
        .map(|_| {
            let x = eval_rng.uniform();
            let mu = conditional_mean(alpha, x);
            ForecastSample {
                forecast: sigmoid(fit.slope * x + fit.intercept),
                outcome: mu,
                oracle_mean: Some(mu),
            }
        })
        .collect();
    let grouped = GroupedDataset::from_samples(&eval, ResidualMode::Oracle)?;
    let gaps = risk_gaps(&DecisionEvalSet::from_samples(&eval, config.tau)?);
    Ok(SimulationRunRecord {
        alpha,
        cutoff: cutoff_error(&grouped).value,
        ece: oracle_ece(&grouped)?,
        lipschitz_wce: lipschitz_wce(&grouped).objective,
        risk: gaps.risk,
        bayes_risk: gaps.bayes_risk,
        monotone_risk: gaps.monotone_risk,
        gap: gaps.gap,
        monotone_gap: gaps.monotone_gap,
        seed,
    })
}

/// Runs `config.runs` independent replications in parallel.
///
/// Run `i` uses seed `mix_seed(master_seed, i)`; a run whose fit fails to
/// converge is redrawn with a derived seed and counted in `reruns`. Output
/// order and values do not depend on the thread count.
pub fn run_simulation(config: &SimulationConfig) -> Result<SimulationOutcome> {
    config.validate()?;
    let results: Vec<Result<(SimulationRunRecord, usize)>> = (0..config.runs as u64)
        .into_par_iter()
        .map(|i| {
            let base = mix_seed(config.master_seed, i);
            let mut last = None;
            for attempt in 0..MAX_ATTEMPTS {
                let seed = if attempt == 0 { base } else { mix_seed(base, attempt) };
                match run_single(config, seed, None) {
                    Ok(record) => return Ok((record, attempt as usize)),
                    Err(e @ CalibError::NonConvergence { .. }) => last = Some(e),
                    Err(e) => return Err(e),
                }
            }
            Err(last.expect("at least one attempt"))
        })
        .collect();
    let mut records = Vec::with_capacity(config.runs);
    let mut reruns = 0;
    for r in results {
        let (record, redraws) = r?;
        reruns += redraws;
        records.push(record);
    }
    Ok(SimulationOutcome { records, reruns })
}

/// Writes records as CSV with one column per record field.
pub fn write_records_csv<W: Write>(records: &[SimulationRunRecord], sink: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(sink);
    let csv_err = |e: csv::Error| CalibError::Io(std::io::Error::other(e));
    if records.is_empty() {
        writer
            .write_record([
                "alpha",
                "cutoff",
                "ece",
                "lipschitz_wce",
                "risk",
                "bayes_risk",
                "monotone_risk",
                "gap",
                "monotone_gap",
                "seed",
            ])
            .map_err(csv_err)?;
    }
    for r in records {
        writer.serialize(r).map_err(csv_err)?;
    }
    writer.flush()?;
    Ok(())
}
