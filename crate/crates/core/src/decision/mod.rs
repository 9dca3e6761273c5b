//! Binary-decision risks of thresholded forecasts and their gaps to the best
//! (monotone) post-processing.
//!
//! Risks are plug-in estimates: each point carries an oracle conditional
//! mean `mu = E[Y | X]` that stands in for the outcome, and a weight.

mod mixture;

use serde::{Deserialize, Serialize};

use crate::data::{Atom, ForecastSample};
use crate::error::{CalibError, Result};
use crate::scalar::Scalar;

pub use mixture::{mixture_monotone_risk, mixture_plug_in_risk, mixture_risk_gap, schervish_loss, DiscreteMixture};

/// One evaluation point.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionPoint<T> {
    pub forecast: T,
    pub mean: T,
    pub weight: T,
}

/// Evaluation points plus the decision threshold `tau`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionEvalSet<T> {
    points: Vec<DecisionPoint<T>>,
    tau: T,
}

fn unit<T: Scalar>(v: &T) -> bool {
    *v >= T::zero() && *v <= T::one()
}

impl<T: Scalar> DecisionEvalSet<T> {
    pub fn new(points: Vec<DecisionPoint<T>>, tau: T) -> Result<Self> {
        if points.is_empty() {
            return Err(CalibError::EmptyInput);
        }
        if !unit(&tau) {
            return Err(CalibError::InvalidParameter("tau must lie in [0,1]".into()));
        }
        if points
            .iter()
            .any(|p| !unit(&p.forecast) || !unit(&p.mean) || p.weight < T::zero())
        {
            return Err(CalibError::InvalidParameter(
                "forecasts and means must lie in [0,1], weights must be non-negative".into(),
            ));
        }
        if T::total(points.iter().map(|p| p.weight.clone())) <= T::zero() {
            return Err(CalibError::InvalidParameter("total weight must be positive".into()));
        }
        Ok(Self { points, tau })
    }

    /// Unit-weight points from oracle-mode samples.
    pub fn from_samples(samples: &[ForecastSample<T>], tau: T) -> Result<Self> {
        let points = samples
            .iter()
            .enumerate()
            .map(|(index, s)| {
                Ok(DecisionPoint {
                    forecast: s.forecast.clone(),
                    mean: s.oracle_mean.clone().ok_or(CalibError::MissingOracleMean { index })?,
                    weight: T::one(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(points, tau)
    }

    pub fn from_atoms(atoms: &[Atom<T>], tau: T) -> Result<Self> {
        let points = atoms
            .iter()
            .map(|a| DecisionPoint {
                forecast: a.forecast.clone(),
                mean: a.mean.clone(),
                weight: a.mass.clone(),
            })
            .collect();
        Self::new(points, tau)
    }

    pub fn points(&self) -> &[DecisionPoint<T>] {
        &self.points
    }

    pub fn tau(&self) -> &T {
        &self.tau
    }

    pub fn n_eval(&self) -> usize {
        self.points.len()
    }

    fn total_weight(&self) -> T {
        T::total(self.points.iter().map(|p| p.weight.clone()))
    }
}

/// `tau (1 - y) yhat + (1 - tau) y (1 - yhat)`.
pub fn loss_bd<T: Scalar>(y: &T, act: bool, tau: &T) -> T {
    if act {
        tau.clone() * (T::one() - y.clone())
    } else {
        (T::one() - tau.clone()) * y.clone()
    }
}

/// Weighted mean of `loss_bd(mu, rule(t), tau)`.
pub fn risk_bd<T: Scalar>(eval: &DecisionEvalSet<T>, rule: impl Fn(&T) -> bool) -> T {
    let total = T::total(
        eval.points
            .iter()
            .map(|p| p.weight.clone() * loss_bd(&p.mean, rule(&p.forecast), &eval.tau)),
    );
    total / eval.total_weight()
}

/// Risk of the plug-in rule `1{t >= tau}`.
pub fn plug_in_risk<T: Scalar>(eval: &DecisionEvalSet<T>) -> T {
    risk_bd(eval, |t| *t >= eval.tau)
}

/// Forecast values with pooled conditional-mean mass `sum w mu` and
/// complement mass `sum w (1 - mu)`, sorted by forecast.
fn pooled<T: Scalar>(points: &[DecisionPoint<T>]) -> Vec<(T, T, T)> {
    let mut sorted: Vec<&DecisionPoint<T>> = points.iter().collect();
    sorted.sort_by(|a, b| a.forecast.partial_cmp(&b.forecast).unwrap_or(std::cmp::Ordering::Equal));
    let mut out: Vec<(T, T, T)> = Vec::new();
    for p in sorted {
        let pos = p.weight.clone() * p.mean.clone();
        let neg = p.weight.clone() * (T::one() - p.mean.clone());
        match out.last_mut() {
            Some(last) if last.0 == p.forecast => {
                last.1 = last.1.clone() + pos;
                last.2 = last.2.clone() + neg;
            }
            _ => out.push((p.forecast.clone(), pos, neg)),
        }
    }
    out
}

/// Risk of the best wrapper `h o f` over all `h`: each forecast value takes
/// the action with the smaller pooled loss. For injective forecasts this is
/// the rule `1{mu >= tau}`.
pub fn best_wrapper_risk<T: Scalar>(eval: &DecisionEvalSet<T>) -> T {
    let tau = &eval.tau;
    let total = T::total(
        pooled(&eval.points)
            .into_iter()
            .map(|(_, pos, neg)| T::min_of(tau.clone() * neg, (T::one() - tau.clone()) * pos)),
    );
    total / eval.total_weight()
}

/// Which side of the threshold acts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdDirection {
    /// `1{t >= threshold}`
    AtLeast,
    /// `1{t <= threshold}`
    AtMost,
}

/// A monotone decision rule on the forecast.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdRule<T> {
    pub threshold: T,
    pub direction: ThresholdDirection,
}

impl<T: Scalar> ThresholdRule<T> {
    pub fn acts(&self, t: &T) -> bool {
        match self.direction {
            ThresholdDirection::AtLeast => *t >= self.threshold,
            ThresholdDirection::AtMost => *t <= self.threshold,
        }
    }
}

/// Minimum risk over the rules `1{t >= c}` and `1{t <= c}` for
/// `c in {0, 1, tau} U {t_j}`, with the minimising rule.
///
/// Sorting plus prefix sums: `O(n log n)`. Including `tau` makes the plug-in
/// rule a candidate, so the monotone gap is never negative.
pub fn best_monotone_rule<T: Scalar>(eval: &DecisionEvalSet<T>) -> (T, ThresholdRule<T>) {
    let tau = eval.tau.clone();
    let groups = pooled(&eval.points);
    let m = groups.len();
    // idle[k]: cost of not acting on groups < k; busy[k]: cost of acting on them
    let mut idle = vec![T::zero(); m + 1];
    let mut busy = vec![T::zero(); m + 1];
    for (k, (_, pos, neg)) in groups.iter().enumerate() {
        idle[k + 1] = idle[k].clone() + (T::one() - tau.clone()) * pos.clone();
        busy[k + 1] = busy[k].clone() + tau.clone() * neg.clone();
    }
    let suffix_risk = |k: usize| idle[k].clone() + (busy[m].clone() - busy[k].clone());
    let prefix_risk = |k: usize| busy[k].clone() + (idle[m].clone() - idle[k].clone());

    let mut candidates: Vec<T> = vec![T::zero(), T::one(), tau.clone()];
    candidates.extend(groups.iter().map(|g| g.0.clone()));
    let mut best: Option<(T, ThresholdRule<T>)> = None;
    for c in candidates {
        let at_least = groups.partition_point(|g| g.0 < c);
        let at_most = groups.partition_point(|g| g.0 <= c);
        for (risk, direction) in [
            (suffix_risk(at_least), ThresholdDirection::AtLeast),
            (prefix_risk(at_most), ThresholdDirection::AtMost),
        ] {
            if best.as_ref().is_none_or(|(r, _)| risk < *r) {
                best = Some((
                    risk,
                    ThresholdRule {
                        threshold: c.clone(),
                        direction,
                    },
                ));
            }
        }
    }
    let (risk, rule) = best.expect("candidate set is never empty");
    (risk / eval.total_weight(), rule)
}

pub fn best_monotone_wrapper_risk<T: Scalar>(eval: &DecisionEvalSet<T>) -> T {
    best_monotone_rule(eval).0
}

/// Plug-in risk and its gaps to the best wrapper and best monotone wrapper.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskGaps<T> {
    pub risk: T,
    pub bayes_risk: T,
    pub monotone_risk: T,
    pub gap: T,
    pub monotone_gap: T,
}

pub fn risk_gaps<T: Scalar>(eval: &DecisionEvalSet<T>) -> RiskGaps<T> {
    let risk = plug_in_risk(eval);
    let bayes_risk = best_wrapper_risk(eval);
    let monotone_risk = best_monotone_wrapper_risk(eval);
    RiskGaps {
        gap: risk.clone() - bayes_risk.clone(),
        monotone_gap: risk.clone() - monotone_risk.clone(),
        risk,
        bayes_risk,
        monotone_risk,
    }
}

/// Right-hand side of the rearrangement identity for a wrapper whose
/// decisions are `acts(t)`:
/// `E[(mu - tau) 1{t < tau} 1{acts}] + E[(tau - mu) 1{t >= tau} 1{!acts}]`.
pub fn rearrangement_terms<T: Scalar>(eval: &DecisionEvalSet<T>, acts: impl Fn(&T) -> bool) -> T {
    let tau = &eval.tau;
    let total = T::total(eval.points.iter().map(|p| {
        let plug_in = p.forecast >= *tau;
        let wrapped = acts(&p.forecast);
        let term = match (plug_in, wrapped) {
            (false, true) => p.mean.clone() - tau.clone(),
            (true, false) => tau.clone() - p.mean.clone(),
            _ => T::zero(),
        };
        p.weight.clone() * term
    }));
    total / eval.total_weight()
}

/// Sign-testing risk
/// `mean[(y - y*) 1{t <= y*} 1{y > y*} + (y* - y) 1{t > y*} 1{y <= y*}]`.
pub fn risk_st<T: Scalar>(samples: &[ForecastSample<T>], ystar: &T) -> Result<T> {
    if samples.is_empty() {
        return Err(CalibError::EmptyInput);
    }
    let total = T::total(samples.iter().map(|s| {
        let (t, y) = (&s.forecast, &s.outcome);
        if t <= ystar && y > ystar {
            y.clone() - ystar.clone()
        } else if t > ystar && y <= ystar {
            ystar.clone() - y.clone()
        } else {
            T::zero()
        }
    }));
    Ok(total / T::from_count(samples.len()))
}
