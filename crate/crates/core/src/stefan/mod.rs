//! Enthalpy (BBR) time stepping for the Stefan approximation of the
//! Hele-Shaw problem.
//!
//! Each step solves `λ μ u − τ Δu = λ μ β(z)` by multigrid, updates z with
//! the boundary-layer reset rule and refreshes `μ = 1/(δ + β'(z))`. The strip
//! mode measures the breakthrough time of a planar front; the disk mode
//! grows a wet region from a source on the unit torus.

mod checkpoint;
mod facet;

use std::time::Instant;

use log::{debug, warn};

use crate::coeffs::CoefficientField;
use crate::contour::{contour, Grid2, Polyline};
use crate::error::{argument, config, Error, Result};
use crate::lattice::Direction;
use crate::multigrid::{GridField, Hierarchy, MgParams, Topology};

/// Cap on the converged solve used for the first step.
const FIRST_STEP_MAX_CYCLES: usize = 60;

pub use checkpoint::{read_checkpoint, write_checkpoint, Checkpoint};
pub use facet::{mirror_symmetric, run_facet, write_snapshots, FacetConfig, FacetOutcome, Snapshot};

/// Solver settings. `tau = None` picks `min(h/8, h/(2 V_max))`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunParams {
    pub m: usize,
    pub lambda: f64,
    pub tau: Option<f64>,
    pub w: f64,
    pub gamma_layer: f64,
    pub l0: f64,
    pub l1: f64,
    /// Neumann flux ∂u/∂x1 = q1 on x1 = 0; negative pushes the front to +x1.
    pub q1: f64,
    pub cycles_per_step: usize,
    pub activation_factor: f64,
    /// Step budget; `None` derives one from the slowest admissible speed.
    pub max_steps: Option<usize>,
    pub mg: MgParams,
    /// Record residuals around each V-cycle for the contraction diagnostic.
    pub track_residuals: bool,
}

impl RunParams {
    pub fn new(m: usize, q1: f64) -> Self {
        Self {
            m,
            lambda: 1e-7,
            tau: None,
            w: 1.0,
            gamma_layer: 0.01,
            l0: 0.1,
            l1: 0.9,
            q1,
            cycles_per_step: 2,
            activation_factor: 1e-3,
            max_steps: None,
            mg: MgParams::default(),
            track_residuals: true,
        }
    }

    pub fn h(&self) -> f64 {
        1.0 / self.m as f64
    }

    fn validate(&self, topology: Topology) -> Result<()> {
        if self.m < 4 || !self.m.is_power_of_two() {
            return Err(argument(format!("M must be a power of two ≥ 4, got {}", self.m)));
        }
        if !(self.lambda > 0.0) {
            return Err(argument(format!("λ must be positive, got {}", self.lambda)));
        }
        if !(self.w > 0.0) {
            return Err(argument(format!("w must be positive, got {}", self.w)));
        }
        if !(self.activation_factor > 0.0) {
            return Err(argument("activation factor must be positive"));
        }
        if self.cycles_per_step == 0 {
            return Err(argument("at least one V-cycle per step is needed"));
        }
        match topology {
            Topology::Strip => {
                if !(0.0 < self.l0 && self.l0 < self.l1 && self.l1 < 1.0) {
                    return Err(config(format!("need 0 < L0 < L1 < 1, got L0 = {}, L1 = {}", self.l0, self.l1)));
                }
                if !(self.q1 < 0.0) || !self.q1.is_finite() {
                    return Err(config(format!("strip runs need q1 < 0, got {}", self.q1)));
                }
                let gate = (self.l1 * self.m as f64).round() as usize;
                if gate >= self.m {
                    return Err(config("L1 rounds onto the Dirichlet row"));
                }
            }
            Topology::Torus => {
                if self.q1 != 0.0 {
                    return Err(config("the torus has no boundary flux; set q1 = 0"));
                }
            }
        }
        Ok(())
    }
}

/// δ = (w / ln γ)² λ h² / τ.
pub fn make_delta(lambda: f64, h: f64, tau: f64, w: f64, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(argument(format!("γ must lie in (0, 1), got {gamma}")));
    }
    if !(w > 0.0 && lambda > 0.0 && h > 0.0 && tau > 0.0) {
        return Err(argument("w, λ, h and τ must be positive"));
    }
    Ok((w / gamma.ln()).powi(2) * lambda * h * h / tau)
}

/// Time step: the given τ if it satisfies τ ≤ h/(2 V_max), else an error;
/// without one, h/8 capped by the same bound.
pub fn choose_tau(h: f64, tau: Option<f64>, vmax: f64) -> Result<f64> {
    let bound = if vmax > 0.0 { h / (2.0 * vmax) } else { f64::INFINITY };
    match tau {
        Some(t) if !(t > 0.0) => Err(argument(format!("τ must be positive, got {t}"))),
        Some(t) if t > bound => Err(config(format!(
            "τ = {t:e} exceeds h/(2 V_max) = {bound:e}; the front could skip a node per step"
        ))),
        Some(t) => Ok(t),
        None => Ok((h / 8.0).min(bound)),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnthalpyState {
    pub k: usize,
    pub t: f64,
    pub z: GridField,
    pub u: GridField,
    pub mu: GridField,
    /// Nodes past the reset; only these receive the z-update.
    pub activated: Vec<bool>,
    pub breakthrough: Option<f64>,
}

impl EnthalpyState {
    pub fn wet_count(&self) -> usize {
        self.z.as_slice().iter().filter(|&&z| z > 0.0).count()
    }

    pub fn is_wet(&self, i: usize, j: usize) -> bool {
        self.z[(i, j)] > 0.0
    }

    /// Polylines of {z = 0}.
    pub fn boundary(&self) -> Vec<Polyline> {
        extract_boundary(&self.z)
    }
}

/// Marching-squares contour of z = 0; the strip is open in x1, the torus
/// periodic in both directions.
pub fn extract_boundary(z: &GridField) -> Vec<Polyline> {
    let torus = z.topology() == Topology::Torus;
    contour(z.as_slice(), &Grid2::unit(z.m(), torus, true), 0.0)
}

/// Source f(x) = peak · max(r − |x − c|, 0) on the unit torus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskSource {
    pub center: [f64; 2],
    pub radius: f64,
    pub peak: f64,
}

impl Default for DiskSource {
    fn default() -> Self {
        Self { center: [0.5, 0.5], radius: 0.1, peak: 1500.0 }
    }
}

impl DiskSource {
    fn distance(&self, x: [f64; 2]) -> f64 {
        let d = |a: f64, b: f64| {
            let r = (a - b).rem_euclid(1.0);
            r.min(1.0 - r)
        };
        d(x[0], self.center[0]).hypot(d(x[1], self.center[1]))
    }

    pub fn eval(&self, x: [f64; 2]) -> f64 {
        self.peak * (self.radius - self.distance(x)).max(0.0)
    }

    pub fn contains(&self, x: [f64; 2]) -> bool {
        self.distance(x) < self.radius
    }
}

/// Running diagnostics of one solver.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub steps: usize,
    pub wall_seconds: f64,
    /// Smallest per-cycle residual reduction seen above the round-off floor.
    pub min_contraction: f64,
    /// Geometric mean of the per-cycle reductions.
    pub mean_contraction: f64,
    pub contraction_samples: usize,
    /// Nodes that left the wet set.
    pub monotonicity_violations: usize,
    pub activations: usize,
    pub min_u: f64,
    log_sum: f64,
}

impl Default for Diagnostics {
    fn default() -> Self {
        Self {
            steps: 0,
            wall_seconds: 0.0,
            min_contraction: f64::INFINITY,
            mean_contraction: f64::NAN,
            contraction_samples: 0,
            monotonicity_violations: 0,
            activations: 0,
            min_u: f64::INFINITY,
            log_sum: 0.0,
        }
    }
}

impl Diagnostics {
    fn record_contraction(&mut self, factor: f64) {
        self.min_contraction = self.min_contraction.min(factor);
        self.contraction_samples += 1;
        self.log_sum += factor.ln();
        self.mean_contraction = (self.log_sum / self.contraction_samples as f64).exp();
    }
}

/// Per-step enthalpy bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub k: usize,
    pub t: f64,
    /// Σ μ (u − β(z)) h² over all nodes: the diffusive part of the z-increment.
    pub deposited: f64,
    /// (τ/λ) Σ f h² for the disk source, 0 otherwise.
    pub injected: f64,
    pub wet: usize,
    pub retreated: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Breakthrough {
    pub time: f64,
    pub r: f64,
    pub steps: usize,
    pub diagnostics: Diagnostics,
}

/// One BBR run: parameters, coefficient, state and the multigrid hierarchy.
#[derive(Debug, Clone)]
pub struct BbrSolver {
    params: RunParams,
    g: CoefficientField,
    tau: f64,
    delta: f64,
    max_steps: usize,
    source: Option<GridField>,
    state: EnthalpyState,
    hier: Hierarchy,
    diag: Diagnostics,
    a: Vec<f64>,
    b: Vec<f64>,
    history: Vec<f64>,
}

impl BbrSolver {
    /// Planar-front setup on the strip: z = |q1|(L0 − x1) left of L0 and
    /// z = −1/(λ g) elsewhere. `g` must already be rotated and rescaled.
    pub fn strip(params: RunParams, g: CoefficientField) -> Result<Self> {
        params.validate(Topology::Strip)?;
        let (h, lambda) = (params.h(), params.lambda);
        let (l0, q) = (params.l0, params.q1.abs());
        let z = GridField::from_fn(params.m, Topology::Strip, |i, j| {
            let x = [i as f64 * h, j as f64 * h];
            if x[0] < l0 {
                q * (l0 - x[0])
            } else {
                -1.0 / (lambda * g.eval(x, 0.0))
            }
        });
        Self::assemble(params, g, z, None)
    }

    /// Disk setup on the torus: z = `z_init` inside the source disk and
    /// z = −1/(λ g) outside.
    pub fn disk(params: RunParams, g: CoefficientField, source: DiskSource, z_init: f64) -> Result<Self> {
        params.validate(Topology::Torus)?;
        if !(z_init > 0.0) {
            return Err(argument(format!("z_init must be positive, got {z_init}")));
        }
        if !(source.peak >= 0.0 && source.radius > 0.0) {
            return Err(argument("the source must be non-negative with positive radius"));
        }
        let (h, lambda) = (params.h(), params.lambda);
        let z = GridField::from_fn(params.m, Topology::Torus, |i, j| {
            let x = [i as f64 * h, j as f64 * h];
            if source.contains(x) {
                z_init
            } else {
                -1.0 / (lambda * g.eval(x, 0.0))
            }
        });
        let f = GridField::from_fn(params.m, Topology::Torus, |i, j| source.eval([i as f64 * h, j as f64 * h]));
        Self::assemble(params, g, z, Some(f))
    }

    fn assemble(params: RunParams, g: CoefficientField, z: GridField, source: Option<GridField>) -> Result<Self> {
        let (gmin, gmax) = g.bounds();
        let h = params.h();
        let vmax = gmax * params.q1.abs();
        let tau = choose_tau(h, params.tau, vmax)?;
        let delta = make_delta(params.lambda, h, tau, params.w, params.gamma_layer)?;
        let max_steps = match params.max_steps {
            Some(n) => n,
            None if params.q1 != 0.0 => {
                // comparison with the slowest constant medium bounds the arrival time
                let t_max = (params.l1 - params.l0) / (gmin * params.q1.abs());
                (2.0 * t_max / tau).ceil() as usize + 100
            }
            None => usize::MAX,
        };
        let u = GridField::from_vec(z.m(), z.topology(), z.as_slice().iter().map(|&v| v.max(0.0)).collect())?;
        let mu = mu_of(&z, delta);
        let activated = z.as_slice().iter().map(|&v| v > 0.0).collect();
        let a0 = GridField::from_vec(
            mu.m(),
            mu.topology(),
            mu.as_slice().iter().map(|m| params.lambda * h * h / tau * m).collect(),
        )?;
        let hier = Hierarchy::new(&a0, params.mg)?;
        let n = params.m * params.m;
        debug!("BBR setup: M = {}, τ = {tau:e}, δ = {delta:e}, budget {max_steps} steps", params.m);
        Ok(Self {
            params,
            g,
            tau,
            delta,
            max_steps,
            source,
            state: EnthalpyState { k: 0, t: 0.0, z, u, mu, activated, breakthrough: None },
            hier,
            diag: Diagnostics::default(),
            a: vec![0.0; n],
            b: vec![0.0; n],
            history: Vec::new(),
        })
    }

    pub fn params(&self) -> &RunParams {
        &self.params
    }

    pub fn coefficient(&self) -> &CoefficientField {
        &self.g
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn max_steps(&self) -> usize {
        self.max_steps
    }

    pub fn state(&self) -> &EnthalpyState {
        &self.state
    }

    pub fn diagnostics(&self) -> &Diagnostics {
        &self.diag
    }

    pub fn topology(&self) -> Topology {
        self.state.z.topology()
    }

    /// Grid row checked for breakthrough, round(L1 M).
    pub fn gate_row(&self) -> usize {
        (self.params.l1 * self.params.m as f64).round() as usize
    }

    /// Advances one time step.
    pub fn step(&mut self) -> Result<StepReport> {
        let started = Instant::now();
        let m = self.params.m;
        let h = self.params.h();
        let (lambda, tau, delta) = (self.params.lambda, self.tau, self.delta);
        let k = self.state.k + 1;
        let t_k = k as f64 * tau;
        let t_half = (k as f64 - 0.5) * tau;
        let c = lambda * h * h / tau;

        {
            let z = self.state.z.as_slice();
            let mu = self.state.mu.as_slice();
            for idx in 0..m * m {
                self.a[idx] = c * mu[idx];
                self.b[idx] = c * mu[idx] * z[idx].max(0.0);
            }
        }
        let mut injected = 0.0;
        if let Some(f) = &self.source {
            for (b, &f) in self.b.iter_mut().zip(f.as_slice()) {
                *b += h * h * f;
            }
            injected = tau / lambda * f.sum() * h * h;
        }
        if self.topology() == Topology::Strip {
            let flux = -2.0 * self.params.q1 * h;
            for b in &mut self.b[..m] {
                *b += flux;
            }
        }
        self.hier.set_coefficient_slice(m, self.topology(), &self.a)?;

        self.history.clear();
        let u = self.state.u.as_mut_slice();
        self.hier
            .cycles_tracked(u, &self.b, self.params.cycles_per_step, self.params.track_residuals, &mut self.history);
        if k == 1 && self.source.is_some() {
            // On the torus the initial u is not a pressure, so it is a poor warm start.
            let bmax = self.b.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
            self.hier.cycles_until(u, &self.b, 1e-10 * bmax, FIRST_STEP_MAX_CYCLES);
        }
        if self.params.track_residuals {
            let umax = u.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
            let bmax = self.b.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
            let floor = 1e-11 * (8.0 * umax + bmax);
            for w in self.history.windows(2) {
                if w[0] > floor && w[1] > 0.0 {
                    self.diag.record_contraction(w[0] / w[1]);
                }
            }
        }

        let mut deposited = 0.0;
        let mut retreated = 0;
        let mut wet = 0;
        let mut min_u = f64::INFINITY;
        let threshold = self.params.activation_factor * delta;
        let strip = self.topology() == Topology::Strip;
        let gate = self.gate_row();
        let st = &mut self.state;
        let u = st.u.as_slice();
        let z = st.z.as_mut_slice();
        let mu = st.mu.as_mut_slice();
        for i in 0..m {
            for j in 0..m {
                let idx = i * m + j;
                let x = [i as f64 * h, j as f64 * h];
                let z_prev = z[idx];
                let incr = mu[idx] * (u[idx] - z_prev.max(0.0));
                deposited += incr;
                min_u = min_u.min(u[idx]);
                if st.activated[idx] {
                    let mut zn = z_prev + incr;
                    if z_prev < 0.0 {
                        zn -= tau / lambda * self.g.eval_dt_inv(x, t_half);
                    }
                    z[idx] = zn;
                } else if u[idx] > threshold {
                    z[idx] = -1.0 / (lambda * self.g.eval(x, t_k));
                    st.activated[idx] = true;
                    self.diag.activations += 1;
                }
                if z_prev > 0.0 && z[idx] <= 0.0 {
                    retreated += 1;
                }
                if z[idx] > 0.0 {
                    wet += 1;
                    mu[idx] = 1.0 / (delta + 1.0);
                } else {
                    mu[idx] = 1.0 / delta;
                }
            }
        }
        if retreated > 0 {
            warn!("step {k}: {retreated} nodes left the wet set");
        }
        st.k = k;
        st.t = t_k;
        self.diag.steps += 1;
        self.diag.monotonicity_violations += retreated;
        self.diag.min_u = self.diag.min_u.min(min_u);
        self.diag.wall_seconds += started.elapsed().as_secs_f64();

        if strip && st.breakthrough.is_none() && st.z.as_slice()[gate * m..(gate + 1) * m].iter().any(|&v| v > 0.0) {
            st.breakthrough = Some(t_k);
        }
        Ok(StepReport { k, t: t_k, deposited: deposited * h * h, injected, wet, retreated })
    }

    /// Residual history of the last step: before the first cycle, then after each.
    pub fn last_residuals(&self) -> &[f64] {
        &self.history
    }

    /// Steps until the wet set reaches row round(L1 M); returns T and
    /// r = (L1 − L0)/T. On timeout the partial state stays in the solver.
    pub fn run_breakthrough(&mut self) -> Result<Breakthrough> {
        if self.topology() != Topology::Strip {
            return Err(config("breakthrough needs the strip topology"));
        }
        while self.state.breakthrough.is_none() {
            if self.state.k >= self.max_steps {
                return Err(Error::Timeout { steps: self.state.k, time: self.state.t });
            }
            self.step()?;
        }
        let time = self.state.breakthrough.expect("loop exits on breakthrough");
        Ok(Breakthrough {
            time,
            r: (self.params.l1 - self.params.l0) / time,
            steps: self.state.k,
            diagnostics: self.diag.clone(),
        })
    }

    /// Steps while t < `t_end` (up to rounding), calling `observe` after each.
    pub fn run_until(&mut self, t_end: f64, mut observe: impl FnMut(&Self, &StepReport)) -> Result<()> {
        while self.state.t + 0.5 * self.tau < t_end {
            if self.state.k >= self.max_steps {
                return Err(Error::Timeout { steps: self.state.k, time: self.state.t });
            }
            let rep = self.step()?;
            observe(self, &rep);
        }
        Ok(())
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            k: self.state.k as u64,
            z: self.state.z.clone(),
            u: self.state.u.clone(),
            activated: self.state.activated.clone(),
        }
    }

    /// Replaces the state with a checkpoint taken from a solver with the
    /// same parameters.
    pub fn restore(&mut self, ck: Checkpoint) -> Result<()> {
        if ck.z.m() != self.params.m || ck.z.topology() != self.topology() {
            return Err(Error::Checkpoint(format!(
                "checkpoint is {}×{} {:?}, solver is {}×{} {:?}",
                ck.z.m(),
                ck.z.m(),
                ck.z.topology(),
                self.params.m,
                self.params.m,
                self.topology()
            )));
        }
        let k = ck.k as usize;
        let mu = mu_of(&ck.z, self.delta);
        let mut st = EnthalpyState {
            k,
            t: k as f64 * self.tau,
            z: ck.z,
            u: ck.u,
            mu,
            activated: ck.activated,
            breakthrough: None,
        };
        if st.z.topology() == Topology::Strip {
            let (m, gate) = (self.params.m, self.gate_row());
            if st.z.as_slice()[gate * m..(gate + 1) * m].iter().any(|&v| v > 0.0) {
                st.breakthrough = Some(st.t);
            }
        }
        self.state = st;
        Ok(())
    }
}

fn mu_of(z: &GridField, delta: f64) -> GridField {
    let data = z
        .as_slice()
        .iter()
        .map(|&v| if v > 0.0 { 1.0 / (delta + 1.0) } else { 1.0 / delta })
        .collect();
    GridField::from_vec(z.m(), z.topology(), data).expect("same shape")
}

/// Rotates `g` into the frame of `dir`, rescales it by ε and runs to breakthrough
/// with q1 = −|q|.
pub fn run_breakthrough(params: &RunParams, g: &CoefficientField, dir: &Direction) -> Result<Breakthrough> {
    let field = g.rotated(dir.zeta)?.rescaled(dir.epsilon)?;
    let mut p = params.clone();
    p.q1 = -dir.qmag;
    BbrSolver::strip(p, field)?.run_breakthrough()
}
