//! Forecast samples, CSV ingestion and the tie-pooled grouped representation
//! that every interval-based metric runs on.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{CalibError, Result};
use crate::scalar::Scalar;

/// One `(forecast, outcome[, oracle_mean])` record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastSample<T> {
    pub forecast: T,
    pub outcome: T,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_mean: Option<T>,
}

impl<T: Scalar> ForecastSample<T> {
    /// Validates every field against `[0, 1]`.
    pub fn new(forecast: T, outcome: T, oracle_mean: Option<T>) -> Result<Self> {
        let sample = Self {
            forecast,
            outcome,
            oracle_mean,
        };
        if !sample.in_range() {
            return Err(CalibError::InvalidParameter(
                "forecast, outcome and oracle mean must lie in [0,1]".into(),
            ));
        }
        Ok(sample)
    }

    fn in_range(&self) -> bool {
        let ok = |v: &T| *v >= T::zero() && *v <= T::one();
        ok(&self.forecast) && ok(&self.outcome) && self.oracle_mean.as_ref().is_none_or(ok)
    }

    /// Converts to another scalar type via `f64`.
    pub fn cast<U: Scalar>(&self) -> ForecastSample<U> {
        ForecastSample {
            forecast: U::lift(self.forecast.lower()),
            outcome: U::lift(self.outcome.lower()),
            oracle_mean: self.oracle_mean.as_ref().map(|m| U::lift(m.lower())),
        }
    }
}

/// How `load_samples` treats the optional `oracle_mean` column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoadMode {
    /// `oracle_mean` is read when present.
    Empirical,
    /// `oracle_mean` is required.
    Oracle,
}

/// Which quantity is compared against the forecast when forming residuals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualMode {
    /// `y_i - t_i`
    Outcome,
    /// `mu_i - t_i`, with `mu_i = E[Y | X = x_i]`.
    Oracle,
}

const FORECAST: &str = "forecast";
const OUTCOME: &str = "outcome";
const ORACLE_MEAN: &str = "oracle_mean";

/// Parses CSV with header `forecast,outcome[,oracle_mean]`.
///
/// Line numbers in errors count the header as line 1.
pub fn load_samples<T: Scalar, R: Read>(source: R, mode: LoadMode) -> Result<Vec<ForecastSample<T>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let headers = reader
        .headers()
        .map_err(|e| CalibError::MalformedRow {
            line: 1,
            reason: e.to_string(),
        })?
        .clone();
    let column = |name: &str| headers.iter().position(|h| h == name);
    let forecast_col = column(FORECAST).ok_or(CalibError::MissingColumn(FORECAST))?;
    let outcome_col = column(OUTCOME).ok_or(CalibError::MissingColumn(OUTCOME))?;
    let oracle_col = column(ORACLE_MEAN);
    if mode == LoadMode::Oracle && oracle_col.is_none() {
        return Err(CalibError::MissingColumn(ORACLE_MEAN));
    }
    if let Some(unknown) = headers.iter().find(|h| ![FORECAST, OUTCOME, ORACLE_MEAN].contains(h)) {
        return Err(CalibError::MalformedRow {
            line: 1,
            reason: format!("unknown column `{unknown}`"),
        });
    }

    let mut samples = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let fallback_line = row + 2;
        let record = record.map_err(|e| CalibError::MalformedRow {
            line: e.position().map_or(fallback_line, |p| p.line() as usize),
            reason: e.to_string(),
        })?;
        let line = record.position().map_or(fallback_line, |p| p.line() as usize);
        if record.len() != headers.len() {
            return Err(CalibError::MalformedRow {
                line,
                reason: format!("expected {} fields, found {}", headers.len(), record.len()),
            });
        }
        let field = |col: usize, name: &str| -> Result<T> {
            let raw = &record[col];
            let value: f64 = raw.parse().map_err(|_| CalibError::MalformedRow {
                line,
                reason: format!("cannot parse {name} `{raw}`"),
            })?;
            if !value.is_finite() {
                return Err(CalibError::MalformedRow {
                    line,
                    reason: format!("non-finite {name}"),
                });
            }
            if !(0.0..=1.0).contains(&value) {
                return Err(CalibError::OutOfRange { line });
            }
            Ok(T::lift(value))
        };
        samples.push(ForecastSample {
            forecast: field(forecast_col, FORECAST)?,
            outcome: field(outcome_col, OUTCOME)?,
            oracle_mean: oracle_col.map(|c| field(c, ORACLE_MEAN)).transpose()?,
        });
    }
    Ok(samples)
}

/// Writes samples in the format read by [`load_samples`]. The oracle column
/// is emitted only when every sample carries one.
pub fn write_samples<T: Scalar, W: Write>(samples: &[ForecastSample<T>], sink: W) -> Result<()> {
    let with_oracle = !samples.is_empty() && samples.iter().all(|s| s.oracle_mean.is_some());
    let mut writer = csv::Writer::from_writer(sink);
    let csv_err = |e: csv::Error| CalibError::Io(std::io::Error::other(e));
    if with_oracle {
        writer.write_record([FORECAST, OUTCOME, ORACLE_MEAN]).map_err(csv_err)?;
    } else {
        writer.write_record([FORECAST, OUTCOME]).map_err(csv_err)?;
    }
    for s in samples {
        let mut row = vec![s.forecast.lower().to_string(), s.outcome.lower().to_string()];
        if with_oracle {
            if let Some(m) = &s.oracle_mean {
                row.push(m.lower().to_string());
            }
        }
        writer.write_record(&row).map_err(csv_err)?;
    }
    writer.flush()?;
    Ok(())
}

/// A point mass of an oracle distribution: forecast value `forecast` carries
/// probability `mass` and conditional mean `E[Y | f(X) = forecast] = mean`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom<T> {
    pub forecast: T,
    pub mean: T,
    pub mass: T,
}

impl<T: Scalar> Atom<T> {
    pub fn new(forecast: T, mean: T, mass: T) -> Self {
        Self { forecast, mean, mass }
    }
}

/// All samples sharing one forecast value.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastGroup<T> {
    pub forecast: T,
    /// Mass-weighted `sum(target - forecast)`.
    pub residual_sum: T,
    /// Mass-weighted `sum |target - forecast|`, before pooling.
    pub abs_residual_sum: T,
    pub count: usize,
    /// Equal to `count` for samples; the atom probability for oracle atoms.
    pub mass: T,
    pub outcome_sum: T,
}

/// Samples sorted by forecast with ties pooled into groups.
///
/// Forecast values are strictly increasing across groups. Metrics normalise
/// by `total_mass`, which equals `n` for sample data.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupedDataset<T> {
    groups: Vec<ForecastGroup<T>>,
    n: usize,
    total_mass: T,
    mode: ResidualMode,
}

struct Entry<T> {
    forecast: T,
    target: T,
    outcome: T,
    mass: T,
}

impl<T: Scalar> GroupedDataset<T> {
    fn build(mut entries: Vec<Entry<T>>, mode: ResidualMode) -> Result<Self> {
        if entries.is_empty() {
            return Err(CalibError::EmptyInput);
        }
        if entries.iter().any(|e| e.forecast.partial_cmp(&e.forecast).is_none()) {
            return Err(CalibError::InvalidParameter("NaN forecast".into()));
        }
        // Stable sort on forecast, then target, so the grouped sums do not
        // depend on input order.
        entries.sort_by(|a, b| {
            a.forecast
                .partial_cmp(&b.forecast)
                .unwrap()
                .then(a.target.partial_cmp(&b.target).unwrap_or(std::cmp::Ordering::Equal))
                .then(a.outcome.partial_cmp(&b.outcome).unwrap_or(std::cmp::Ordering::Equal))
                .then(a.mass.partial_cmp(&b.mass).unwrap_or(std::cmp::Ordering::Equal))
        });

        let n = entries.len();
        let mut groups = Vec::new();
        let mut start = 0;
        while start < n {
            let mut end = start + 1;
            while end < n && entries[end].forecast == entries[start].forecast {
                end += 1;
            }
            let run = &entries[start..end];
            let t = run[0].forecast.clone();
            groups.push(ForecastGroup {
                forecast: t.clone(),
                residual_sum: T::total(run.iter().map(|e| e.mass.clone() * (e.target.clone() - t.clone()))),
                abs_residual_sum: T::total(
                    run.iter()
                        .map(|e| e.mass.clone() * (e.target.clone() - t.clone()).abs()),
                ),
                count: run.len(),
                mass: T::total(run.iter().map(|e| e.mass.clone())),
                outcome_sum: T::total(run.iter().map(|e| e.mass.clone() * e.outcome.clone())),
            });
            start = end;
        }
        let total_mass = T::total(groups.iter().map(|g| g.mass.clone()));
        if total_mass <= T::zero() {
            return Err(CalibError::InvalidParameter("total mass must be positive".into()));
        }
        Ok(Self {
            groups,
            n,
            total_mass,
            mode,
        })
    }

    /// Groups samples by forecast. Residuals are `y - t` in
    /// [`ResidualMode::Outcome`] and `mu - t` in [`ResidualMode::Oracle`].
    pub fn from_samples(samples: &[ForecastSample<T>], mode: ResidualMode) -> Result<Self> {
        let entries = samples
            .iter()
            .enumerate()
            .map(|(index, s)| {
                let target = match mode {
                    ResidualMode::Outcome => s.outcome.clone(),
                    ResidualMode::Oracle => s.oracle_mean.clone().ok_or(CalibError::MissingOracleMean { index })?,
                };
                Ok(Entry {
                    forecast: s.forecast.clone(),
                    target,
                    outcome: s.outcome.clone(),
                    mass: T::one(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::build(entries, mode)
    }

    /// Groups unit-mass `(forecast, target)` pairs; `target` is used both as
    /// the residual reference and as the outcome.
    pub fn from_pairs<I>(pairs: I, mode: ResidualMode) -> Result<Self>
    where
        I: IntoIterator<Item = (T, T)>,
    {
        let entries = pairs
            .into_iter()
            .map(|(forecast, target)| Entry {
                forecast,
                outcome: target.clone(),
                target,
                mass: T::one(),
            })
            .collect();
        Self::build(entries, mode)
    }

    /// Exact representation of a finitely supported oracle distribution.
    /// `n` is the number of atoms.
    pub fn from_atoms(atoms: &[Atom<T>]) -> Result<Self> {
        if atoms.iter().any(|a| a.mass < T::zero()) {
            return Err(CalibError::InvalidParameter("atom mass must be non-negative".into()));
        }
        let entries = atoms
            .iter()
            .map(|a| Entry {
                forecast: a.forecast.clone(),
                target: a.mean.clone(),
                outcome: a.mean.clone(),
                mass: a.mass.clone(),
            })
            .collect();
        Self::build(entries, ResidualMode::Oracle)
    }

    /// Builds directly from precomputed groups, e.g. to study the scan on
    /// synthetic residual sequences. Forecasts must be strictly increasing.
    pub fn from_groups(groups: Vec<ForecastGroup<T>>, mode: ResidualMode) -> Result<Self> {
        if groups.is_empty() {
            return Err(CalibError::EmptyInput);
        }
        if groups.windows(2).any(|w| w[0].forecast >= w[1].forecast) {
            return Err(CalibError::InvalidParameter(
                "group forecasts must be strictly increasing".into(),
            ));
        }
        let n = groups.iter().map(|g| g.count).sum();
        let total_mass = T::total(groups.iter().map(|g| g.mass.clone()));
        if total_mass <= T::zero() {
            return Err(CalibError::InvalidParameter("total mass must be positive".into()));
        }
        Ok(Self {
            groups,
            n,
            total_mass,
            mode,
        })
    }

    pub fn groups(&self) -> &[ForecastGroup<T>] {
        &self.groups
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn total_mass(&self) -> &T {
        &self.total_mass
    }

    pub fn mode(&self) -> ResidualMode {
        self.mode
    }

    /// Residual sums normalised by total mass: `s_j = residual_sum_j / n`.
    pub fn normalized_residuals(&self) -> Vec<T> {
        self.groups
            .iter()
            .map(|g| g.residual_sum.clone() / self.total_mass.clone())
            .collect()
    }

    /// Gaps `t_{j+1} - t_j` between adjacent group forecasts.
    pub fn forecast_gaps(&self) -> Vec<T> {
        self.groups
            .windows(2)
            .map(|w| w[1].forecast.clone() - w[0].forecast.clone())
            .collect()
    }
}

/// Groups samples by forecast value (see [`GroupedDataset::from_samples`]).
pub fn group_by_forecast<T: Scalar>(samples: &[ForecastSample<T>], mode: ResidualMode) -> Result<GroupedDataset<T>> {
    GroupedDataset::from_samples(samples, mode)
}
