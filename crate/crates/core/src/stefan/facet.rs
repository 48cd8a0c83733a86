//! Source-driven growth on the unit torus with boundary snapshots.

use std::io::Write;
use std::path::Path;

use log::info;

use super::{BbrSolver, DiskSource, RunParams};
use crate::coeffs::CoefficientField;
use crate::contour::Polyline;
use crate::error::{argument, Result};
use crate::multigrid::GridField;

#[derive(Debug, Clone, PartialEq)]
pub struct FacetConfig {
    pub m: usize,
    pub eps_inv: u64,
    pub t_max: f64,
    /// Snapshot spacing in time.
    pub snap: f64,
    pub coefficient: String,
    pub source: DiskSource,
    pub z_init: f64,
    pub cycles: usize,
    pub lambda: f64,
}

impl FacetConfig {
    pub fn new(m: usize, eps_inv: u64, t_max: f64, snap: f64) -> Self {
        Self {
            m,
            eps_inv,
            t_max,
            snap,
            coefficient: "tw(1.05,-1)".into(),
            source: DiskSource::default(),
            z_init: 1e-3,
            cycles: 2,
            lambda: 1e-7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub wet: usize,
    pub polylines: Vec<Polyline>,
    /// Wet set matches its x2-mirror image up to one cell.
    pub symmetric: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FacetOutcome {
    pub snapshots: Vec<Snapshot>,
    pub steps: usize,
    pub monotonicity_violations: usize,
    /// Largest |deposited / injected − 1| over all steps.
    pub max_balance_error: f64,
    /// Steps whose wet set broke the mirror check.
    pub asymmetric_steps: usize,
    pub final_z: GridField,
}

/// Wet masks W and its mirror j → −j (mod M) agree up to a one-node dilation
/// both ways.
pub fn mirror_symmetric(z: &GridField) -> bool {
    let m = z.m();
    let wet = |i: usize, j: usize| z[(i, j)] > 0.0;
    let mirrored = |i: usize, j: usize| wet(i, (m - j) % m);
    let near = |f: &dyn Fn(usize, usize) -> bool, i: usize, j: usize| {
        [(0, 0), (1, 0), (m - 1, 0), (0, 1), (0, m - 1)]
            .iter()
            .any(|&(di, dj)| f((i + di) % m, (j + dj) % m))
    };
    for i in 0..m {
        for j in 0..m {
            if wet(i, j) && !near(&mirrored, i, j) {
                return false;
            }
            if mirrored(i, j) && !near(&wet, i, j) {
                return false;
            }
        }
    }
    true
}

/// Runs the disk experiment to `t_max`, taking a snapshot every `snap`.
pub fn run_facet(cfg: &FacetConfig) -> Result<FacetOutcome> {
    if !(cfg.t_max > 0.0 && cfg.snap > 0.0) {
        return Err(argument("t_max and snap must be positive"));
    }
    if cfg.eps_inv == 0 {
        return Err(argument("1/ε must be positive"));
    }
    let g = CoefficientField::from_spec(&cfg.coefficient)?.rescaled(1.0 / cfg.eps_inv as f64)?;
    let mut params = RunParams::new(cfg.m, 0.0);
    params.cycles_per_step = cfg.cycles;
    params.lambda = cfg.lambda;
    let mut solver = BbrSolver::disk(params, g, cfg.source, cfg.z_init)?;

    let snapshot = |s: &BbrSolver| Snapshot {
        t: s.state().t,
        wet: s.state().wet_count(),
        polylines: s.state().boundary(),
        symmetric: mirror_symmetric(&s.state().z),
    };
    let mut snapshots = vec![snapshot(&solver)];
    let mut next_snap = cfg.snap;
    let mut max_balance_error: f64 = 0.0;
    let mut asymmetric_steps = 0;
    let half = 0.5 * solver.tau();
    solver.run_until(cfg.t_max, |s, rep| {
        if rep.injected > 0.0 {
            max_balance_error = max_balance_error.max((rep.deposited / rep.injected - 1.0).abs());
        }
        if !mirror_symmetric(&s.state().z) {
            asymmetric_steps += 1;
        }
        if rep.t + half >= next_snap {
            let snap = snapshot(s);
            info!("t = {:.4}: {} wet nodes, {} boundary pieces", snap.t, snap.wet, snap.polylines.len());
            snapshots.push(snap);
            next_snap += cfg.snap;
        }
    })?;
    Ok(FacetOutcome {
        snapshots,
        steps: solver.state().k,
        monotonicity_violations: solver.diagnostics().monotonicity_violations,
        max_balance_error,
        asymmetric_steps,
        final_z: solver.state().z.clone(),
    })
}

/// Polyline points as CSV rows `t,piece,x1,x2`.
pub fn write_snapshots(snapshots: &[Snapshot], path: impl AsRef<Path>) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "t,piece,x1,x2")?;
    for s in snapshots {
        for (k, line) in s.polylines.iter().enumerate() {
            for p in &line.points {
                writeln!(w, "{},{},{},{}", s.t, k, p[0], p[1])?;
            }
            if line.closed {
                if let Some(p) = line.points.first() {
                    writeln!(w, "{},{},{},{}", s.t, k, p[0], p[1])?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}
