//! Weighted two-parameter logistic regression by damped Newton.

use crate::error::{CalibError, Result};

const MAX_ITERATIONS: usize = 200;
const MAX_HALVINGS: usize = 50;
const GRADIENT_TOLERANCE: f64 = 1e-10;

/// One weighted observation: regressor `x`, soft target in `[0, 1]`, weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticPoint {
    pub x: f64,
    pub target: f64,
    pub weight: f64,
}

/// Minimiser of the weighted mean logistic loss, with its optimisation trace.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticFit {
    pub slope: f64,
    pub intercept: f64,
    pub iterations: usize,
    pub gradient_norm: f64,
    /// Loss after each accepted step, starting from the initial point.
    pub loss_trace: Vec<f64>,
    /// Accurately computed loss change of each accepted step; never positive.
    pub step_changes: Vec<f64>,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// `softplus(z + d) - softplus(z)` without cancellation.
fn softplus_change(z: f64, d: f64) -> f64 {
    if d.abs() <= 1.0 {
        (sigmoid(z) * d.exp_m1()).ln_1p()
    } else {
        softplus(z + d) - softplus(z)
    }
}

struct Problem<'a> {
    points: &'a [LogisticPoint],
    total_weight: f64,
    fit_slope: bool,
}

impl Problem<'_> {
    fn loss(&self, a: f64, b: f64) -> f64 {
        let sum: f64 = self
            .points
            .iter()
            .map(|p| {
                let z = a * p.x + b;
                p.weight * (softplus(z) - p.target * z)
            })
            .sum();
        sum / self.total_weight
    }

    fn loss_change(&self, a: f64, b: f64, da: f64, db: f64) -> f64 {
        let sum: f64 = self
            .points
            .iter()
            .map(|p| {
                let z = a * p.x + b;
                let d = da * p.x + db;
                p.weight * (softplus_change(z, d) - p.target * d)
            })
            .sum();
        sum / self.total_weight
    }

    /// Gradient `(g_a, g_b)` and Hessian `(h_aa, h_ab, h_bb)` of the mean loss.
    fn derivatives(&self, a: f64, b: f64) -> ([f64; 2], [f64; 3]) {
        let mut g = [0.0; 2];
        let mut h = [0.0; 3];
        for p in self.points {
            let q = sigmoid(a * p.x + b);
            let r = p.weight * (q - p.target);
            let v = p.weight * q * (1.0 - q);
            g[0] += r * p.x;
            g[1] += r;
            h[0] += v * p.x * p.x;
            h[1] += v * p.x;
            h[2] += v;
        }
        let w = self.total_weight;
        if !self.fit_slope {
            g[0] = 0.0;
        }
        ([g[0] / w, g[1] / w], [h[0] / w, h[1] / w, h[2] / w])
    }

    fn newton_direction(&self, g: [f64; 2], h: [f64; 3]) -> Option<(f64, f64)> {
        if !self.fit_slope {
            return (h[2] > 0.0).then(|| (0.0, -g[1] / h[2]));
        }
        let det = h[0] * h[2] - h[1] * h[1];
        if !det.is_finite() || det <= 0.0 {
            // fall back to a scaled gradient step when curvature is lost
            let scale = h[0].max(h[2]);
            return (scale > 0.0).then(|| (-g[0] / scale, -g[1] / scale));
        }
        Some((-(h[2] * g[0] - h[1] * g[1]) / det, -(h[0] * g[1] - h[1] * g[0]) / det))
    }
}

/// Minimises `sum_i w_i [softplus(a x_i + b) - target_i (a x_i + b)] / sum_i w_i`.
///
/// When every `x_i` is equal the slope is not identified and is fixed at 0.
/// Steps are halved (at most 50 times) until the loss does not increase.
/// Converges when the gradient norm drops below `1e-10`; otherwise fails
/// after 200 iterations.
pub fn fit_logistic(points: &[LogisticPoint]) -> Result<LogisticFit> {
    if points.is_empty() {
        return Err(CalibError::EmptyInput);
    }
    if points
        .iter()
        .any(|p| !p.x.is_finite() || !(0.0..=1.0).contains(&p.target) || p.weight.is_nan() || p.weight < 0.0)
    {
        return Err(CalibError::InvalidParameter(
            "logistic points need finite x, target in [0,1] and non-negative weight".into(),
        ));
    }
    let total_weight: f64 = points.iter().map(|p| p.weight).sum();
    if total_weight.is_nan() || total_weight <= 0.0 {
        return Err(CalibError::InvalidParameter("total weight must be positive".into()));
    }
    let x0 = points[0].x;
    let problem = Problem {
        points,
        total_weight,
        fit_slope: points.iter().any(|p| p.x != x0),
    };

    let (mut a, mut b) = (0.0, 0.0);
    let mut loss_trace = vec![problem.loss(a, b)];
    let mut step_changes = Vec::new();
    let mut gradient_norm = f64::INFINITY;
    for iteration in 0..=MAX_ITERATIONS {
        let (g, h) = problem.derivatives(a, b);
        gradient_norm = g[0].hypot(g[1]);
        if gradient_norm < GRADIENT_TOLERANCE {
            return Ok(LogisticFit {
                slope: a,
                intercept: b,
                iterations: iteration,
                gradient_norm,
                loss_trace,
                step_changes,
            });
        }
        if iteration == MAX_ITERATIONS {
            break;
        }
        let Some((mut da, mut db)) = problem.newton_direction(g, h) else {
            break;
        };
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let change = problem.loss_change(a, b, da, db);
            if change <= 0.0 {
                accepted = Some(change);
                break;
            }
            da *= 0.5;
            db *= 0.5;
        }
        let Some(change) = accepted else {
            break;
        };
        a += da;
        b += db;
        step_changes.push(change);
        loss_trace.push(problem.loss(a, b));
    }
    Err(CalibError::NonConvergence {
        iterations: step_changes.len(),
        gradient_norm,
    })
}
