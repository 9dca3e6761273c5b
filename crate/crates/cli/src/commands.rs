use std::fmt;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::Path;

use cutoff_calib::calibrate::{fit_isotonic, fit_modified_platt, fit_platt, PlattCoefficients};
use cutoff_calib::certify::{certify as run_certify, CertifyConfig, Forecaster, Observation};
use cutoff_calib::decision::{risk_gaps, risk_st, DecisionEvalSet, RiskGaps};
use cutoff_calib::experiments::{platt_counterexample, run_simulation, write_records_csv, SimulationConfig};
use cutoff_calib::metrics::{audit_grouped, AuditConfig, MetricReport};
use cutoff_calib::{CalibError, CalibratorMap, ForecastSample, GroupedDataset, LoadMode, ResidualMode};
use serde::{Deserialize, Serialize};

use crate::{Format, Method};

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(msg) | CliError::Internal(msg) => f.write_str(msg),
        }
    }
}

impl From<CalibError> for CliError {
    fn from(err: CalibError) -> Self {
        if err.is_input_error() {
            CliError::Input(err.to_string())
        } else {
            CliError::Internal(err.to_string())
        }
    }
}

type CliResult = Result<(), CliError>;

fn load(path: &Path, mode: LoadMode) -> Result<Vec<ForecastSample<f64>>, CliError> {
    let file = File::open(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let samples =
        cutoff_calib::load_samples(BufReader::new(file), mode).map_err(|e| CliError::from(e).with_context(path))?;
    if samples.is_empty() {
        return Err(CliError::Input(format!("{}: no data rows", path.display())));
    }
    Ok(samples)
}

impl CliError {
    fn with_context(self, path: &Path) -> Self {
        match self {
            CliError::Input(msg) => CliError::Input(format!("{}: {msg}", path.display())),
            other => other,
        }
    }
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> CliResult {
    let written = match out {
        Some(path) => File::create(path).and_then(|mut f| f.write_all(bytes)),
        None => std::io::stdout().lock().write_all(bytes),
    };
    written.map_err(|e| CliError::Internal(format!("cannot write output: {e}")))
}

fn emit_json<S: Serialize>(out: Option<&Path>, value: &S) -> CliResult {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Internal(e.to_string()))?;
    bytes.push(b'\n');
    emit(out, &bytes)
}

fn check_delta(delta: f64) -> CliResult {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(CliError::Input(format!("--delta must lie in (0,1), got {delta}")))
    }
}

fn audit_samples(samples: &[ForecastSample<f64>], config: AuditConfig) -> Result<Vec<MetricReport>, CliError> {
    let mut reports = audit_grouped(
        &GroupedDataset::from_samples(samples, ResidualMode::Outcome)?,
        config,
        "",
    )?;
    if samples.iter().all(|s| s.oracle_mean.is_some()) {
        let oracle = GroupedDataset::from_samples(samples, ResidualMode::Oracle)?;
        reports.extend(audit_grouped(&oracle, config, "oracle_")?);
    }
    Ok(reports)
}

fn audit_config(delta: f64, bins: usize) -> Result<AuditConfig, CliError> {
    check_delta(delta)?;
    if bins == 0 {
        return Err(CliError::Input("--bins must be at least 1".into()));
    }
    Ok(AuditConfig { delta, bins })
}

/// Flat row of the CSV audit format.
#[derive(Serialize)]
struct ReportRow<'a> {
    metric_name: &'a str,
    value: f64,
    n: usize,
    delta: Option<f64>,
    bins: Option<usize>,
    radius: Option<f64>,
    argmax_lo: Option<usize>,
    argmax_hi: Option<usize>,
}

fn reports_csv(reports: &[MetricReport]) -> Result<Vec<u8>, CliError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for r in reports {
        writer
            .serialize(ReportRow {
                metric_name: &r.metric_name,
                value: r.value,
                n: r.n,
                delta: r.params.delta,
                bins: r.params.bins,
                radius: r.params.radius,
                argmax_lo: r.argmax_interval.map(|a| a[0]),
                argmax_hi: r.argmax_interval.map(|a| a[1]),
            })
            .map_err(|e| CliError::Internal(e.to_string()))?;
    }
    writer.into_inner().map_err(|e| CliError::Internal(e.to_string()))
}

pub fn audit(input: &Path, delta: f64, bins: usize, oracle: bool, format: Format, out: Option<&Path>) -> CliResult {
    let config = audit_config(delta, bins)?;
    let mode = if oracle { LoadMode::Oracle } else { LoadMode::Empirical };
    let reports = audit_samples(&load(input, mode)?, config)?;
    match format {
        Format::Json => emit_json(out, &reports),
        Format::Csv => emit(out, &reports_csv(&reports)?),
    }
}

fn fit(method: Method, samples: &[ForecastSample<f64>], epsilon: Option<f64>) -> Result<Fitted, CliError> {
    Ok(match method {
        Method::Isotonic => Fitted {
            map: fit_isotonic(samples)?,
            check: None,
        },
        Method::Platt => Fitted {
            map: fit_platt(samples)?,
            check: None,
        },
        Method::ModifiedPlatt => {
            let fit = fit_modified_platt(samples, epsilon)?;
            Fitted {
                map: fit.map,
                check: Some(PlattCheck {
                    platt: fit.platt,
                    estimate: fit.estimate,
                    epsilon: fit.epsilon,
                    accepted: fit.accepted,
                }),
            }
        }
    })
}

struct Fitted {
    map: CalibratorMap<f64>,
    check: Option<PlattCheck>,
}

/// Acceptance test of modified Platt scaling.
#[derive(Serialize)]
struct PlattCheck {
    platt: PlattCoefficients,
    estimate: f64,
    epsilon: f64,
    accepted: bool,
}

#[derive(Serialize)]
struct HeldOut {
    n_test: usize,
    pre: Vec<MetricReport>,
    post: Vec<MetricReport>,
}

#[derive(Serialize)]
struct CalibrateReport {
    method: &'static str,
    n_train: usize,
    map: CalibratorMap<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    modified_platt: Option<PlattCheck>,
    #[serde(skip_serializing_if = "Option::is_none")]
    held_out: Option<HeldOut>,
}

fn method_name(method: Method) -> &'static str {
    match method {
        Method::Isotonic => "isotonic",
        Method::Platt => "platt",
        Method::ModifiedPlatt => "modified_platt",
    }
}

pub fn calibrate(
    method: Method,
    input: &Path,
    epsilon: Option<f64>,
    test: Option<&Path>,
    delta: f64,
    bins: usize,
    out: Option<&Path>,
) -> CliResult {
    let config = audit_config(delta, bins)?;
    if epsilon.is_some() && method != Method::ModifiedPlatt {
        return Err(CliError::Input(
            "--epsilon only applies to --method modified-platt".into(),
        ));
    }
    let train = load(input, LoadMode::Empirical)?;
    let fitted = fit(method, &train, epsilon)?;
    let held_out = match test {
        Some(path) => {
            let test = load(path, LoadMode::Empirical)?;
            let recalibrated: Vec<ForecastSample<f64>> = test
                .iter()
                .map(|s| ForecastSample {
                    forecast: fitted.map.predict(&s.forecast),
                    ..s.clone()
                })
                .collect();
            Some(HeldOut {
                n_test: test.len(),
                pre: audit_samples(&test, config)?,
                post: audit_samples(&recalibrated, config)?,
            })
        }
        None => None,
    };
    if let Some(path) = out {
        emit_json(Some(path), &fitted.map)?;
    }
    emit_json(
        None,
        &CalibrateReport {
            method: method_name(method),
            n_train: train.len(),
            map: fitted.map,
            modified_platt: fitted.check,
            held_out,
        },
    )
}

/// Model certified by the CLI: the input forecasts or a recalibration of them.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum CertifiedModel {
    Identity,
    Recalibrated { map: CalibratorMap<f64> },
}

impl Forecaster<f64> for CertifiedModel {
    fn forecast(&self, t: &f64) -> f64 {
        match self {
            CertifiedModel::Identity => *t,
            CertifiedModel::Recalibrated { map } => map.predict(t),
        }
    }
}

pub fn certify(
    input: &Path,
    c: f64,
    delta: f64,
    shuffle_seed: Option<u64>,
    method: Option<Method>,
    out: Option<&Path>,
) -> CliResult {
    check_delta(delta)?;
    let observations: Vec<Observation<f64>> = load(input, LoadMode::Empirical)?
        .into_iter()
        .map(|s| Observation {
            covariate: s.forecast,
            outcome: s.outcome,
        })
        .collect();
    let trainer = |train: &[Observation<f64>]| -> Result<CertifiedModel, CliError> {
        let Some(method) = method else {
            return Ok(CertifiedModel::Identity);
        };
        let samples: Vec<ForecastSample<f64>> = train
            .iter()
            .map(|o| ForecastSample {
                forecast: o.covariate,
                outcome: o.outcome,
                oracle_mean: None,
            })
            .collect();
        Ok(CertifiedModel::Recalibrated {
            map: fit(method, &samples, None)?.map,
        })
    };
    let verdict = run_certify(&observations, trainer, CertifyConfig { c, delta, shuffle_seed })?;
    emit_json(out, &verdict)
}

#[derive(Serialize)]
struct DecideReport {
    tau: f64,
    n: usize,
    #[serde(flatten)]
    gaps: RiskGaps<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ystar: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    risk_st: Option<f64>,
}

pub fn decide(input: &Path, tau: f64, ystar: Option<f64>, out: Option<&Path>) -> CliResult {
    if !(0.0..=1.0).contains(&tau) {
        return Err(CliError::Input(format!("--tau must lie in [0,1], got {tau}")));
    }
    let samples = load(input, LoadMode::Oracle)?;
    let eval = DecisionEvalSet::from_samples(&samples, tau)?;
    let risk_st = ystar.map(|y| risk_st(&samples, &y)).transpose()?;
    emit_json(
        out,
        &DecideReport {
            tau,
            n: samples.len(),
            gaps: risk_gaps(&eval),
            ystar,
            risk_st,
        },
    )
}

/// Caps the rayon pool at `CALIB_THREADS` when set.
fn configure_threads() -> CliResult {
    let Ok(raw) = std::env::var("CALIB_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| CliError::Input(format!("CALIB_THREADS must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Internal(e.to_string()))
}

pub fn simulate(runs: usize, n_train: usize, n_eval: usize, tau: f64, seed: u64, out: Option<&Path>) -> CliResult {
    configure_threads()?;
    let outcome = run_simulation(&SimulationConfig {
        runs,
        n_train,
        n_eval,
        tau,
        master_seed: seed,
    })?;
    let mut bytes = Vec::new();
    write_records_csv(&outcome.records, &mut bytes)?;
    emit(out, &bytes)?;
    eprintln!(
        "calib: {} runs, {} redrawn after failed fits",
        outcome.records.len(),
        outcome.reruns
    );
    Ok(())
}

pub fn counterexample_platt(out: Option<&Path>) -> CliResult {
    emit_json(out, &platt_counterexample()?)
}
