//! Parameter sweeps over rational directions and the comparison against
//! the 1D front ODE along the x1-axis.
//!
//! Every run is independent and deterministic, so results do not depend on
//! the worker count; records come back in input order.

mod output;

use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;

use crate::coeffs::CoefficientField;
use crate::error::{argument, config, Error, Result};
use crate::lattice::{Direction, EpsilonRule};
use crate::ode1d::{self, DEFAULT_HORIZON};
use crate::stefan::{self, RunParams};

pub use output::{
    render_contour_svg, write_compare_csv, write_compare_csv_to, write_contour_matrix, write_csv, write_csv_to,
    write_timings, ContourMatrix,
};

/// Solver settings a sweep may override; `None` keeps the [`RunParams`] default.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOverrides {
    pub lambda: Option<f64>,
    /// τ as a multiple of h.
    pub tau_over_h: Option<f64>,
    pub cycles: Option<usize>,
    pub l0: Option<f64>,
    pub l1: Option<f64>,
    pub max_steps: Option<usize>,
}

impl RunOverrides {
    pub fn params(&self, m: usize, q1: f64) -> RunParams {
        let mut p = RunParams::new(m, q1);
        if let Some(v) = self.lambda {
            p.lambda = v;
        }
        if let Some(v) = self.tau_over_h {
            p.tau = Some(v / m as f64);
        }
        if let Some(v) = self.cycles {
            p.cycles_per_step = v;
        }
        if let Some(v) = self.l0 {
            p.l0 = v;
        }
        if let Some(v) = self.l1 {
            p.l1 = v;
        }
        p.max_steps = self.max_steps;
        p
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DirectionSet {
    /// 0 ≤ m1, m2 ≤ mmax without (0, 0).
    Quadrant { mmax: i64 },
    List(Vec<(i64, i64)>),
}

impl DirectionSet {
    pub fn pairs(&self) -> Vec<(i64, i64)> {
        match self {
            DirectionSet::Quadrant { mmax } => {
                let mut v = Vec::new();
                for m1 in 0..=*mmax {
                    for m2 in 0..=*mmax {
                        if (m1, m2) != (0, 0) {
                            v.push((m1, m2));
                        }
                    }
                }
                v
            }
            DirectionSet::List(v) => {
                let mut v = v.clone();
                v.sort_unstable();
                v.dedup();
                v
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    /// Builtin name or expression.
    pub coefficient: String,
    pub m: usize,
    pub directions: DirectionSet,
    /// Defaults to 6.4 / M.
    pub sigma: Option<f64>,
    pub run: RunOverrides,
    pub workers: usize,
}

impl SweepConfig {
    pub fn new(coefficient: impl Into<String>, m: usize, directions: DirectionSet) -> Self {
        Self { coefficient: coefficient.into(), m, directions, sigma: None, run: RunOverrides::default(), workers: 1 }
    }

    pub fn sigma(&self) -> f64 {
        self.sigma.unwrap_or(6.4 / self.m as f64)
    }

    fn validate(&self) -> Result<()> {
        if self.m < 4 || !self.m.is_power_of_two() {
            return Err(argument(format!("M must be a power of two ≥ 4, got {}", self.m)));
        }
        if !(self.sigma() > 0.0) {
            return Err(argument("σ must be positive"));
        }
        if self.workers == 0 {
            return Err(argument("need at least one worker"));
        }
        if let DirectionSet::Quadrant { mmax } = self.directions {
            if mmax < 1 {
                return Err(argument("mmax must be at least 1"));
            }
        }
        if matches!(&self.directions, DirectionSet::List(v) if v.contains(&(0, 0))) {
            return Err(argument("(0, 0) is not a direction"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    Timeout,
    Failed,
}

/// One sweep point. q1, q2 are reported as m σ, the sign convention of the
/// plots; the flux actually applied is −|q| along ζ = −q/|q|.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRecord {
    pub m1: i64,
    pub m2: i64,
    pub q1: f64,
    pub q2: f64,
    pub q_norm: f64,
    pub eps_inv: f64,
    pub t_eps: f64,
    pub r_est: f64,
    pub steps: usize,
    #[serde(skip)]
    pub wall_seconds: f64,
    pub monotonicity_violations: usize,
    /// ε ≥ 4h.
    pub resolved: bool,
    pub status: RunStatus,
}

fn run_one(g: &CoefficientField, m: usize, sigma: f64, run: &RunOverrides, (m1, m2): (i64, i64)) -> Result<SweepRecord> {
    let dir = Direction::new(m1, m2, sigma, EpsilonRule::Sweep(m))?;
    let resolved = dir.epsilon >= 4.0 / m as f64;
    if !resolved {
        warn!("({m1}, {m2}): ε = 1/{} is below 4h", dir.eps_inv());
    }
    let params = run.params(m, -dir.qmag);
    let mut rec = SweepRecord {
        m1,
        m2,
        q1: dir.q[0],
        q2: dir.q[1],
        q_norm: dir.qmag,
        eps_inv: dir.eps_inv(),
        t_eps: f64::NAN,
        r_est: f64::NAN,
        steps: 0,
        wall_seconds: 0.0,
        monotonicity_violations: 0,
        resolved,
        status: RunStatus::Ok,
    };
    let field = g.rotated(dir.zeta)?.rescaled(dir.epsilon)?;
    let mut solver = stefan::BbrSolver::strip(params, field)?;
    match solver.run_breakthrough() {
        Ok(b) => {
            rec.t_eps = b.time;
            rec.r_est = b.r;
            rec.steps = b.steps;
        }
        Err(Error::Timeout { steps, time }) => {
            warn!("({m1}, {m2}): no breakthrough after {steps} steps (t = {time})");
            rec.steps = steps;
            rec.status = RunStatus::Timeout;
        }
        Err(e) => return Err(e),
    }
    let d = solver.diagnostics();
    rec.wall_seconds = d.wall_seconds;
    rec.monotonicity_violations = d.monotonicity_violations;
    info!(
        "({m1}, {m2}) |q| = {:.4} 1/ε = {} r = {:.5} [{} steps, {:.1} s, MG min/mean contraction {:.2}/{:.2}]",
        rec.q_norm, rec.eps_inv, rec.r_est, rec.steps, rec.wall_seconds, d.min_contraction, d.mean_contraction
    );
    Ok(rec)
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| config(format!("cannot start worker pool: {e}")))
}

/// Runs every direction of the config. Timeouts and per-run failures are
/// recorded in the row, never abort the sweep.
pub fn sweep2d(cfg: &SweepConfig) -> Result<Vec<SweepRecord>> {
    cfg.validate()?;
    let g = CoefficientField::from_spec(&cfg.coefficient)?;
    let sigma = cfg.sigma();
    let pairs = cfg.directions.pairs();
    info!("sweep: {} directions, M = {}, σ = {sigma}, {} workers", pairs.len(), cfg.m, cfg.workers);
    let records = pool(cfg.workers)?.install(|| {
        pairs
            .par_iter()
            .map(|&p| {
                run_one(&g, cfg.m, sigma, &cfg.run, p).unwrap_or_else(|e| {
                    warn!("({}, {}) failed: {e}", p.0, p.1);
                    let q = [p.0 as f64 * sigma, p.1 as f64 * sigma];
                    SweepRecord {
                        m1: p.0,
                        m2: p.1,
                        q1: q[0],
                        q2: q[1],
                        q_norm: q[0].hypot(q[1]),
                        eps_inv: f64::NAN,
                        t_eps: f64::NAN,
                        r_est: f64::NAN,
                        steps: 0,
                        wall_seconds: 0.0,
                        monotonicity_violations: 0,
                        resolved: false,
                        status: RunStatus::Failed,
                    }
                })
            })
            .collect::<Vec<_>>()
    });
    Ok(records)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareConfig {
    pub coefficient: String,
    pub m: usize,
    pub eps_inv: u64,
    /// |q1| values; the flux is applied as q = (−|q1|, 0).
    pub q: Vec<f64>,
    pub run: RunOverrides,
    /// Horizon of the 1D reference in slow time.
    pub horizon: f64,
    pub workers: usize,
}

impl CompareConfig {
    pub fn new(coefficient: impl Into<String>, m: usize, eps_inv: u64, q: Vec<f64>) -> Self {
        Self {
            coefficient: coefficient.into(),
            m,
            eps_inv,
            q,
            run: RunOverrides::default(),
            horizon: DEFAULT_HORIZON,
            workers: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareRow {
    pub q1: f64,
    pub r_2d: f64,
    pub r_1d: f64,
    pub abs_diff: f64,
    pub steps: usize,
    pub monotonicity_violations: usize,
    #[serde(skip)]
    pub min_contraction: f64,
    #[serde(skip)]
    pub mean_contraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareTable {
    pub rows: Vec<CompareRow>,
    pub max_error: f64,
}

/// 2D breakthrough speed against the 1D ODE at the same ε for q on the
/// negative x1-axis.
pub fn compare_axis(cfg: &CompareConfig) -> Result<CompareTable> {
    if cfg.q.is_empty() {
        return Err(argument("no q values given"));
    }
    if cfg.q.iter().any(|&q| !(q.abs() > 0.0) || !q.is_finite()) {
        return Err(argument("q values must be finite and non-zero"));
    }
    let g = CoefficientField::from_spec(&cfg.coefficient)?;
    let eps = 1.0 / cfg.eps_inv as f64;
    let rows = pool(cfg.workers.max(1))?.install(|| {
        cfg.q
            .par_iter()
            .map(|&q| -> Result<CompareRow> {
                let q = q.abs();
                let dir = Direction::axis(q, cfg.eps_inv)?;
                let params = cfg.run.params(cfg.m, -q);
                let b = stefan::run_breakthrough(&params, &g, &dir)?;
                // the ODE evaluates g along the x1-axis of the rotated frame
                let r_1d = ode1d::estimate_r1(&g.rotated(dir.zeta)?, q, eps, cfg.horizon)?;
                info!("|q1| = {q}: r_2D = {:.5}, r_1D = {r_1d:.5}", b.r);
                Ok(CompareRow {
                    q1: -q,
                    r_2d: b.r,
                    r_1d,
                    abs_diff: (b.r - r_1d).abs(),
                    steps: b.steps,
                    monotonicity_violations: b.diagnostics.monotonicity_violations,
                    min_contraction: b.diagnostics.min_contraction,
                    mean_contraction: b.diagnostics.mean_contraction,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let max_error = rows.iter().fold(0.0f64, |acc, r| acc.max(r.abs_diff));
    Ok(CompareTable { rows, max_error })
}
