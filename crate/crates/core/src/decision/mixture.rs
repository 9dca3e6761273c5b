//! Proper scoring rules built as finite mixtures of binary-decision losses.

use crate::error::{CalibError, Result};
use crate::scalar::Scalar;

use super::{loss_bd, pooled, DecisionPoint};

/// Finitely many thresholds `tau_k` with probability weights.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMixture<T> {
    atoms: Vec<(T, T)>,
}

impl<T: Scalar> DiscreteMixture<T> {
    /// `atoms` are `(tau, weight)`; weights must be non-negative and sum to 1
    /// within `1e-12`.
    pub fn new(atoms: Vec<(T, T)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(CalibError::EmptyInput);
        }
        if atoms
            .iter()
            .any(|(tau, w)| *tau < T::zero() || *tau > T::one() || *w < T::zero())
        {
            return Err(CalibError::InvalidParameter(
                "mixture thresholds must lie in [0,1] with non-negative weights".into(),
            ));
        }
        let total = T::total(atoms.iter().map(|(_, w)| w.clone()));
        if (total - T::one()).abs().lower() > 1e-12 {
            return Err(CalibError::InvalidParameter("mixture weights must sum to 1".into()));
        }
        Ok(Self { atoms })
    }

    pub fn atoms(&self) -> &[(T, T)] {
        &self.atoms
    }

    /// Atoms with equal thresholds merged, sorted by threshold.
    fn levels(&self) -> Vec<(T, T)> {
        let mut sorted = self.atoms.clone();
        sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
        let mut out: Vec<(T, T)> = Vec::new();
        for (tau, w) in sorted {
            match out.last_mut() {
                Some(last) if last.0 == tau => last.1 = last.1.clone() + w,
                _ => out.push((tau, w)),
            }
        }
        out
    }
}

/// `sum_k w_k loss_bd(y, 1{p >= tau_k}, tau_k)`.
pub fn schervish_loss<T: Scalar>(mixture: &DiscreteMixture<T>, y: &T, p: &T) -> T {
    T::total(
        mixture
            .atoms
            .iter()
            .map(|(tau, w)| w.clone() * loss_bd(y, *p >= *tau, tau)),
    )
}

fn total_weight<T: Scalar>(points: &[DecisionPoint<T>]) -> T {
    T::total(points.iter().map(|p| p.weight.clone()))
}

/// Mixture risk of reporting the forecast itself.
pub fn mixture_plug_in_risk<T: Scalar>(points: &[DecisionPoint<T>], mixture: &DiscreteMixture<T>) -> T {
    let total = T::total(
        points
            .iter()
            .map(|p| p.weight.clone() * schervish_loss(mixture, &p.mean, &p.forecast)),
    );
    total / total_weight(points)
}

/// Exact minimum mixture risk of `h o f` over monotone `h: [0,1] -> [0,1]`,
/// either non-decreasing or non-increasing.
///
/// Only the super-level sets `{h >= tau_k}` matter. For non-decreasing `h`
/// they are nested suffixes of the sorted forecast values, shrinking as
/// `tau_k` grows; a dynamic program over the cut position of each level
/// finds the best nested family in `O(K m)`.
pub fn mixture_monotone_risk<T: Scalar>(points: &[DecisionPoint<T>], mixture: &DiscreteMixture<T>) -> T {
    let groups = pooled(points);
    let m = groups.len();
    let levels = mixture.levels();

    // cost of level k when exactly the groups in [lo, hi) act
    let mut idle = vec![T::zero(); m + 1];
    let mut neg = vec![T::zero(); m + 1];
    for (j, (_, p, n)) in groups.iter().enumerate() {
        idle[j + 1] = idle[j].clone() + p.clone();
        neg[j + 1] = neg[j].clone() + n.clone();
    }
    let level_cost = |tau: &T, w: &T, lo: usize, hi: usize| {
        let acting = neg[hi].clone() - neg[lo].clone();
        let resting = idle[m].clone() - (idle[hi].clone() - idle[lo].clone());
        w.clone() * (tau.clone() * acting + (T::one() - tau.clone()) * resting)
    };

    // increasing: level k acts on [c_k, m) with c_k non-decreasing in k;
    // decreasing: acts on [0, c_k) with c_k non-increasing in k
    let mut best: Option<T> = None;
    for increasing in [true, false] {
        let full = if increasing { 0 } else { m };
        // None marks cut positions that no monotone h can produce
        let mut prev: Vec<Option<T>> = vec![Some(T::zero()); m + 1];
        for (tau, w) in &levels {
            let mut running: Option<T> = None;
            let mut next: Vec<Option<T>> = vec![None; m + 1];
            let order: Vec<usize> = if increasing {
                (0..=m).collect()
            } else {
                (0..=m).rev().collect()
            };
            for c in order {
                if let Some(p) = &prev[c] {
                    running = Some(match running {
                        Some(r) => T::min_of(r, p.clone()),
                        None => p.clone(),
                    });
                }
                // h >= 0 everywhere, so a zero threshold acts on every group
                if *tau == T::zero() && c != full {
                    continue;
                }
                let cost = if increasing {
                    level_cost(tau, w, c, m)
                } else {
                    level_cost(tau, w, 0, c)
                };
                next[c] = running.clone().map(|r| cost + r);
            }
            prev = next;
        }
        for value in prev.into_iter().flatten() {
            best = Some(match best {
                Some(b) => T::min_of(b, value),
                None => value,
            });
        }
    }
    best.expect("the identity map is always feasible") / total_weight(points)
}

/// `mixture_plug_in_risk - mixture_monotone_risk`; never negative because
/// the identity map is monotone.
pub fn mixture_risk_gap<T: Scalar>(points: &[DecisionPoint<T>], mixture: &DiscreteMixture<T>) -> T {
    mixture_plug_in_risk(points, mixture) - mixture_monotone_risk(points, mixture)
}
