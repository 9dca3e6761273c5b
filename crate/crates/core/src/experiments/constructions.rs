//! Closed-form oracle distributions with known calibration errors, and
//! samplers that draw finite data sets from them.

use crate::data::{Atom, ForecastSample};
use crate::error::{CalibError, Result};
use crate::rng::SeededRng;
use crate::scalar::Scalar;

/// Staircase with `num_steps` bands: `f(X) ~ Uniform(0,1)` and
/// `E[Y | f(X) = t] = (i - 1/2)/N` on band `((i-1)/N, i/N]`.
///
/// Each band is represented by two atoms of mass `1/(2N)` at its quarter
/// points, which carry the band's residual integrals over its two halves.
/// The oracle cutoff error is exactly `1/(8N^2)` and the ECE `1/(4N)`.
pub fn make_staircase<T: Scalar>(num_steps: usize) -> Result<Vec<Atom<T>>> {
    if num_steps == 0 {
        return Err(CalibError::InvalidParameter("staircase needs at least one step".into()));
    }
    let n = T::from_count(num_steps);
    let four_n = T::from_count(4 * num_steps);
    let mass = T::one() / T::from_count(2 * num_steps);
    let mut atoms = Vec::with_capacity(2 * num_steps);
    for i in 1..=num_steps {
        let left = T::from_count(i - 1) / n.clone();
        let mean = (T::from_count(2 * i - 1)) / T::from_count(2 * num_steps);
        for quarter in [1, 3] {
            atoms.push(Atom::new(
                left.clone() + T::from_count(quarter) / four_n.clone(),
                mean.clone(),
                mass.clone(),
            ));
        }
    }
    Ok(atoms)
}

/// `f = 0.5(1 + b)` with `E[Y|f] = 0` and `f = 0.5(1 - b)` with `E[Y|f] = 1`,
/// mass one half each. ECE is `0.5(1 + b)`; see [`separation_dce`].
pub fn make_separation_example<T: Scalar>(b: T) -> Result<Vec<Atom<T>>> {
    if b <= T::zero() || b > T::one() {
        return Err(CalibError::InvalidParameter("separation b must lie in (0,1]".into()));
    }
    let half = T::one() / T::from_count(2);
    Ok(vec![
        Atom::new(half.clone() * (T::one() + b.clone()), T::zero(), half.clone()),
        Atom::new(half.clone() * (T::one() - b), T::one(), half),
    ])
}

/// Distance from calibration of [`make_separation_example`]: `0.5 b`.
pub fn separation_dce<T: Scalar>(b: T) -> T {
    b / T::from_count(2)
}

/// `X ~ Bernoulli(3/4)`, `Y = X`, `f(x) = 3/4 + eps - 2 eps x`: forecasts
/// `3/4 + eps` (mean 0, mass 1/4) and `3/4 - eps` (mean 1, mass 3/4).
/// ECE is `3/8 + eps` while the distance from calibration is at most `eps`.
pub fn make_perturbed_constant<T: Scalar>(epsilon: T) -> Result<Vec<Atom<T>>> {
    let quarter = T::one() / T::from_count(4);
    if epsilon <= T::zero() || epsilon >= quarter {
        return Err(CalibError::InvalidParameter("epsilon must lie in (0, 1/4)".into()));
    }
    let three_quarters = T::from_count(3) / T::from_count(4);
    Ok(vec![
        Atom::new(three_quarters.clone() + epsilon.clone(), T::zero(), quarter),
        Atom::new(three_quarters.clone() - epsilon, T::one(), three_quarters),
    ])
}

/// Conditional mean of the staircase at forecast `t`.
pub fn staircase_mean(num_steps: usize, t: f64) -> f64 {
    let n = num_steps as f64;
    let band = ((t * n).ceil()).clamp(1.0, n);
    (band - 0.5) / n
}

/// `n` draws from the continuous staircase, with oracle means.
pub fn sample_staircase(num_steps: usize, n: usize, rng: &mut SeededRng) -> Vec<ForecastSample<f64>> {
    (0..n)
        .map(|_| {
            let t = rng.uniform();
            let mu = staircase_mean(num_steps, t);
            ForecastSample {
                forecast: t,
                outcome: rng.bernoulli(mu),
                oracle_mean: Some(mu),
            }
        })
        .collect()
}

/// `n` draws from a finite atom distribution: a forecast picked with
/// probability proportional to mass, then `Y ~ Bernoulli(mean)`.
pub fn sample_atoms(atoms: &[Atom<f64>], n: usize, rng: &mut SeededRng) -> Result<Vec<ForecastSample<f64>>> {
    let total: f64 = atoms.iter().map(|a| a.mass).sum();
    if atoms.is_empty() || total.is_nan() || total <= 0.0 {
        return Err(CalibError::InvalidParameter("atoms need positive total mass".into()));
    }
    let mut cumulative = Vec::with_capacity(atoms.len());
    let mut acc = 0.0;
    for a in atoms {
        acc += a.mass / total;
        cumulative.push(acc);
    }
    Ok((0..n)
        .map(|_| {
            let u = rng.uniform();
            let k = cumulative.partition_point(|&c| c <= u).min(atoms.len() - 1);
            let a = &atoms[k];
            ForecastSample {
                forecast: a.forecast,
                outcome: rng.bernoulli(a.mean),
                oracle_mean: Some(a.mean),
            }
        })
        .collect())
}
