//! One-dimensional front: y' = g(y/ε, t/ε) |q|.
//!
//! The long-time slope (y(T) − y0)/T estimates the homogenized velocity.
//! The coefficient is evaluated on the x1-axis, `g([y/ε, 0], t/ε)`, so the
//! front advances toward +x1; pass an unscaled field since ε is applied here.

use rayon::prelude::*;

use crate::coeffs::CoefficientField;
use crate::error::{argument, config, Result};

/// Default RK4 resolution: steps per fast period ε.
pub const DEFAULT_STEPS_PER_PERIOD: usize = 200;
/// Fewer steps per fast period than this is rejected.
pub const MIN_STEPS_PER_PERIOD: f64 = 50.0;
/// Default horizon T, in slow time.
pub const DEFAULT_HORIZON: f64 = 20.0;

#[derive(Debug, Clone, PartialEq)]
pub struct FrontTrajectory {
    pub y0: f64,
    pub horizon: f64,
    pub steps: usize,
    /// y(t_i) for t_i = i T / n, i = 0..=n.
    pub samples: Vec<f64>,
    pub r: f64,
}

fn validate(qmag: f64, eps: f64, horizon: f64, steps: usize) -> Result<()> {
    if !(qmag > 0.0) || !qmag.is_finite() {
        return Err(argument(format!("|q| must be positive, got {qmag}")));
    }
    if !(eps > 0.0) || !(horizon > 0.0) {
        return Err(argument(format!("ε and T must be positive (ε = {eps}, T = {horizon})")));
    }
    let needed = horizon / eps * MIN_STEPS_PER_PERIOD;
    if (steps as f64) < needed {
        return Err(config(format!(
            "{steps} steps under-resolve T/ε = {} fast periods (need ≥ {})",
            horizon / eps,
            needed.ceil()
        )));
    }
    Ok(())
}

#[inline]
fn rk4_step(g: &CoefficientField, qmag: f64, y: f64, t: f64, dt: f64, inv_eps: f64) -> f64 {
    let f = |y: f64, t: f64| qmag * g.eval([y * inv_eps, 0.0], t * inv_eps);
    let half = 0.5 * dt;
    let k1 = f(y, t);
    let k2 = f(y + half * k1, t + half);
    let k3 = f(y + half * k2, t + half);
    let k4 = f(y + dt * k3, t + dt);
    y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

/// Classical RK4 trajectory in slow variables, starting from y0 = 0.
pub fn integrate_front(
    g: &CoefficientField,
    qmag: f64,
    eps: f64,
    horizon: f64,
    steps: usize,
) -> Result<FrontTrajectory> {
    integrate_front_from(g, 0.0, qmag, eps, horizon, steps)
}

pub fn integrate_front_from(
    g: &CoefficientField,
    y0: f64,
    qmag: f64,
    eps: f64,
    horizon: f64,
    steps: usize,
) -> Result<FrontTrajectory> {
    validate(qmag, eps, horizon, steps)?;
    let dt = horizon / steps as f64;
    let inv_eps = 1.0 / eps;
    let mut samples = Vec::with_capacity(steps + 1);
    let mut y = y0;
    samples.push(y);
    for i in 0..steps {
        y = rk4_step(g, qmag, y, i as f64 * dt, dt, inv_eps);
        samples.push(y);
    }
    Ok(FrontTrajectory { y0, horizon, steps, samples, r: (y - y0) / horizon })
}

/// Same trajectory computed in fast variables: ε = 1 over T/ε periods,
/// then mapped back by y = ε Y.
pub fn integrate_front_unit(
    g: &CoefficientField,
    y0: f64,
    qmag: f64,
    eps: f64,
    horizon: f64,
    steps: usize,
) -> Result<FrontTrajectory> {
    validate(qmag, eps, horizon, steps)?;
    let periods = horizon / eps;
    let ds = periods / steps as f64;
    let mut samples = Vec::with_capacity(steps + 1);
    let mut big_y = y0 / eps;
    samples.push(y0);
    for i in 0..steps {
        big_y = rk4_step(g, qmag, big_y, i as f64 * ds, ds, 1.0);
        samples.push(big_y * eps);
    }
    let y = big_y * eps;
    Ok(FrontTrajectory { y0, horizon, steps, samples, r: (y - y0) / horizon })
}

/// Final position only; no sample storage.
fn final_slope(g: &CoefficientField, qmag: f64, eps: f64, horizon: f64, steps: usize) -> f64 {
    let periods = horizon / eps;
    let ds = periods / steps as f64;
    let mut y = 0.0;
    for i in 0..steps {
        y = rk4_step(g, qmag, y, i as f64 * ds, ds, 1.0);
    }
    y / periods
}

pub fn steps_for(eps: f64, horizon: f64, steps_per_period: usize) -> usize {
    (horizon / eps * steps_per_period as f64).ceil() as usize
}

/// r(q) ≈ (y(T) − y0)/T with [`DEFAULT_STEPS_PER_PERIOD`].
pub fn estimate_r1(g: &CoefficientField, qmag: f64, eps: f64, horizon: f64) -> Result<f64> {
    estimate_r1_with(g, qmag, eps, horizon, DEFAULT_STEPS_PER_PERIOD)
}

pub fn estimate_r1_with(
    g: &CoefficientField,
    qmag: f64,
    eps: f64,
    horizon: f64,
    steps_per_period: usize,
) -> Result<f64> {
    let steps = steps_for(eps, horizon, steps_per_period);
    validate(qmag, eps, horizon, steps)?;
    Ok(final_slope(g, qmag, eps, horizon, steps))
}

/// Gradient magnitudes pinned to r = 1 for g = f(x − t): [1/max f, 1/min f].
pub fn predicted_pinning(fmin: f64, fmax: f64) -> Result<(f64, f64)> {
    if !(fmin > 0.0) || fmax < fmin {
        return Err(argument(format!("need 0 < fmin ≤ fmax, got ({fmin}, {fmax})")));
    }
    Ok((1.0 / fmax, 1.0 / fmin))
}

/// One estimate per |q|, in input order.
pub fn sweep_r1(
    g: &CoefficientField,
    qmags: &[f64],
    eps: f64,
    horizon: f64,
) -> Result<Vec<(f64, f64)>> {
    sweep_r1_with(g, qmags, eps, horizon, DEFAULT_STEPS_PER_PERIOD)
}

pub fn sweep_r1_with(
    g: &CoefficientField,
    qmags: &[f64],
    eps: f64,
    horizon: f64,
    steps_per_period: usize,
) -> Result<Vec<(f64, f64)>> {
    qmags
        .par_iter()
        .map(|&q| estimate_r1_with(g, q, eps, horizon, steps_per_period).map(|r| (q, r)))
        .collect()
}
