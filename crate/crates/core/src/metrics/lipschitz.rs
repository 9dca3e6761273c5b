//! Lipschitz weighted calibration error (smooth calibration).
//!
//! Solves
//!
//! ```text
//! maximize   sum_j w_j s_j
//! subject to -1 <= w_j <= 1,  |w_{j+1} - w_j| <= t_{j+1} - t_j
//! ```
//!
//! where `s_j` is the normalised residual sum of group `j` and `t_j` its
//! forecast. On a totally ordered set the adjacent constraints imply all the
//! pairwise Lipschitz constraints, so this is the supremum over 1-Lipschitz
//! weight functions `[0,1] -> [-1,1]`. The class is closed under negation,
//! so the maximum is already the two-sided supremum.
//!
//! The primal is solved by dynamic programming over the concave
//! piecewise-linear value function `F_j(w)` (best objective of groups
//! `0..=j` given `w_j = w`); moving to the next group is a sliding-window
//! maximum followed by a clip to `[-1,1]` and adding a linear term. The dual
//!
//! ```text
//! minimize sum_j |mu_j| + sum_j d_j |phi_j|,   mu_j = s_j + phi_{j-1} - phi_j
//! ```
//!
//! is solved by the mirrored recursion on convex functions (infimal
//! convolution with `|.|` clamps slopes to `[-1,1]`). The two optimal values
//! agree exactly in rational arithmetic; for floats their difference is the
//! reported certificate. Both passes only use field operations and run in
//! `O(m k)` for `k` live breakpoints.

use serde::{Deserialize, Serialize};

use crate::data::GroupedDataset;
use crate::scalar::Scalar;

/// Maximiser and certificate of the Lipschitz weighted calibration error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipschitzWeights<T> {
    /// One weight per group, in `[-1, 1]`.
    pub weights: Vec<T>,
    /// `sum_j w_j residual_sum_j / n`.
    pub objective: T,
    /// Optimal value of the dual problem.
    pub dual_objective: T,
    /// Largest of the primal infeasibility and the duality gap.
    pub kkt_residual: T,
}

/// Concave piecewise-linear function on `[lo, hi]`.
#[derive(Debug, Clone)]
struct ConcavePiecewise<T> {
    lo: T,
    hi: T,
    value_lo: T,
    /// Interior breakpoints, non-decreasing.
    knots: Vec<T>,
    /// `knots.len() + 1` slopes, non-increasing.
    slopes: Vec<T>,
}

impl<T: Scalar> ConcavePiecewise<T> {
    fn linear(slope: T, lo: T, hi: T) -> Self {
        Self {
            value_lo: slope.clone() * lo.clone(),
            lo,
            hi,
            knots: Vec::new(),
            slopes: vec![slope],
        }
    }

    /// Index of the first strictly decreasing piece.
    fn peak_index(&self) -> usize {
        self.slopes
            .iter()
            .position(|s| *s < T::zero())
            .unwrap_or(self.slopes.len())
    }

    fn peak(&self) -> T {
        let p = self.peak_index();
        if p == 0 {
            self.lo.clone()
        } else if p == self.slopes.len() {
            self.hi.clone()
        } else {
            self.knots[p - 1].clone()
        }
    }

    fn eval(&self, x: &T) -> T {
        let mut value = self.value_lo.clone();
        let mut prev = self.lo.clone();
        for (i, slope) in self.slopes.iter().enumerate() {
            let end = self.knots.get(i).unwrap_or(&self.hi);
            if *x <= *end {
                return value + slope.clone() * (x.clone() - prev);
            }
            value = value + slope.clone() * (end.clone() - prev);
            prev = end.clone();
        }
        value
    }

    /// `G(w) = max_{|u - w| <= d} F(u)` on `[lo - d, hi + d]`: pieces left of
    /// the peak move left by `d`, pieces right of it move right, and a flat
    /// piece of width `2d` is inserted at the peak.
    fn dilate(&mut self, d: &T) {
        let p = self.peak_index();
        let peak = self.peak();
        let len = self.slopes.len();
        for (i, k) in self.knots.iter_mut().enumerate() {
            if i + 1 < p {
                *k = k.clone() - d.clone();
            } else if i >= p {
                *k = k.clone() + d.clone();
            }
        }
        if p > 0 && p < len {
            self.knots[p - 1] = peak.clone() - d.clone();
            self.knots.insert(p, peak + d.clone());
        } else if p == 0 {
            self.knots.insert(0, peak + d.clone());
        } else {
            self.knots.push(peak - d.clone());
        }
        self.slopes.insert(p, T::zero());
        self.lo = self.lo.clone() - d.clone();
        self.hi = self.hi.clone() + d.clone();
    }

    /// Restricts the domain to `[a, b] ⊆ [lo, hi]`.
    fn clip(&mut self, a: &T, b: &T) {
        self.value_lo = self.eval(a);
        let front = self.knots.iter().take_while(|k| **k <= *a).count();
        self.knots.drain(..front);
        self.slopes.drain(..front);
        let back = self.knots.iter().rev().take_while(|k| **k >= *b).count();
        let keep = self.knots.len() - back;
        self.knots.truncate(keep);
        self.slopes.truncate(keep + 1);
        self.lo = a.clone();
        self.hi = b.clone();
    }

    fn add_linear(&mut self, slope: &T) {
        for s in &mut self.slopes {
            *s = s.clone() + slope.clone();
        }
        self.value_lo = self.value_lo.clone() + slope.clone() * self.lo.clone();
    }
}

/// Convex piecewise-linear function on the whole line.
#[derive(Debug, Clone)]
struct ConvexPiecewise<T> {
    /// Non-empty, non-decreasing.
    knots: Vec<T>,
    /// `knots.len() + 1` slopes, non-decreasing.
    slopes: Vec<T>,
    /// Value at `knots[0]`.
    value_first: T,
}

impl<T: Scalar> ConvexPiecewise<T> {
    /// `|x - center|`
    fn abs_at(center: T) -> Self {
        Self {
            knots: vec![center],
            slopes: vec![-T::one(), T::one()],
            value_first: T::zero(),
        }
    }

    fn eval(&self, x: &T) -> T {
        let first = &self.knots[0];
        if *x <= *first {
            return self.value_first.clone() - self.slopes[0].clone() * (first.clone() - x.clone());
        }
        let mut value = self.value_first.clone();
        let mut prev = first.clone();
        for i in 1..self.slopes.len() {
            let slope = &self.slopes[i];
            match self.knots.get(i) {
                Some(end) if *x > *end => {
                    value = value + slope.clone() * (end.clone() - prev);
                    prev = end.clone();
                }
                _ => return value + slope.clone() * (x.clone() - prev),
            }
        }
        value
    }

    /// Adds `weight * |x|`.
    fn add_abs_at_zero(&mut self, weight: &T) {
        let zero = T::zero();
        let idx = self.knots.iter().take_while(|k| **k < zero).count();
        if self.knots.get(idx) != Some(&zero) {
            let new_first = if idx == 0 { zero.clone() } else { self.knots[0].clone() };
            self.value_first = self.eval(&new_first);
            self.knots.insert(idx, zero.clone());
            let split = self.slopes[idx].clone();
            self.slopes.insert(idx, split);
        }
        self.value_first = self.value_first.clone() + weight.clone() * self.knots[0].abs();
        // pieces 0..=idx end at or before the knot at zero
        for (i, s) in self.slopes.iter_mut().enumerate() {
            if i <= idx {
                *s = s.clone() - weight.clone();
            } else {
                *s = s.clone() + weight.clone();
            }
        }
    }

    /// Infimal convolution with `|.|`: slopes outside `[-1, 1]` are replaced
    /// by `-1` on the left and `+1` on the right. The leftmost slope must be
    /// `<= -1` and the rightmost `>= 1`.
    fn clamp_slopes(&mut self) {
        let one = T::one();
        let lead = self.slopes.iter().take_while(|s| **s <= -one.clone()).count();
        if lead > 1 {
            let anchor = self.knots[lead - 1].clone();
            self.value_first = self.eval(&anchor);
            self.knots.drain(..lead - 1);
            self.slopes.drain(..lead - 1);
        }
        self.slopes[0] = -one.clone();
        let trail = self.slopes.iter().rev().take_while(|s| **s >= one).count();
        if trail > 1 {
            let keep = self.knots.len() + 1 - trail;
            self.knots.truncate(keep);
            self.slopes.truncate(keep + 1);
        }
        let last = self.slopes.len() - 1;
        self.slopes[last] = one;
    }

    fn translate(&mut self, shift: &T) {
        for k in &mut self.knots {
            *k = k.clone() + shift.clone();
        }
    }
}

/// Optimal value and maximiser of the primal problem.
fn solve_primal<T: Scalar>(s: &[T], gaps: &[T]) -> Vec<T> {
    let m = s.len();
    let (lo, hi) = (-T::one(), T::one());
    let mut value = ConcavePiecewise::linear(s[0].clone(), lo.clone(), hi.clone());
    let mut peaks = Vec::with_capacity(m);
    for j in 1..m {
        peaks.push(value.peak());
        value.dilate(&gaps[j - 1]);
        value.clip(&lo, &hi);
        value.add_linear(&s[j]);
    }
    let mut weights = vec![T::zero(); m];
    weights[m - 1] = value.peak();
    for j in (0..m - 1).rev() {
        let next = weights[j + 1].clone();
        let a = T::max_of(next.clone() - gaps[j].clone(), lo.clone());
        let b = T::min_of(next + gaps[j].clone(), hi.clone());
        weights[j] = peaks[j].clone().clamp_to(&a, &b);
    }
    weights
}

/// Optimal value of the dual problem.
fn solve_dual<T: Scalar>(s: &[T], gaps: &[T]) -> T {
    let mut value = ConvexPiecewise::abs_at(s[0].clone());
    for j in 1..s.len() {
        value.add_abs_at_zero(&gaps[j - 1]);
        value.clamp_slopes();
        value.translate(&s[j]);
    }
    value.eval(&T::zero())
}

fn primal_violation<T: Scalar>(weights: &[T], gaps: &[T]) -> T {
    let mut worst = T::zero();
    for w in weights {
        worst = T::max_of(worst, w.abs() - T::one());
    }
    for (pair, d) in weights.windows(2).zip(gaps) {
        worst = T::max_of(worst, (pair[1].clone() - pair[0].clone()).abs() - d.clone());
    }
    worst
}

/// Lipschitz weighted calibration error of grouped data, with maximising
/// weights and a duality certificate.
pub fn lipschitz_wce<T: Scalar>(data: &GroupedDataset<T>) -> LipschitzWeights<T> {
    let s = data.normalized_residuals();
    let gaps = data.forecast_gaps();
    let weights = solve_primal(&s, &gaps);
    let objective = T::total(weights.iter().zip(&s).map(|(w, r)| w.clone() * r.clone()));
    let dual_objective = solve_dual(&s, &gaps);
    let gap = (dual_objective.clone() - objective.clone()).abs();
    let kkt_residual = T::max_of(gap, primal_violation(&weights, &gaps));
    LipschitzWeights {
        weights,
        objective,
        dual_objective,
        kkt_residual,
    }
}
