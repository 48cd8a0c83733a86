//! `hsfront`: homogenized free-boundary velocities from the command line.
//!
//! Gradients are reported with positive components, q = (m1 σ, m2 σ);
//! internally the boundary flux is q1 < 0 on the strip.

mod config;

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::{info, warn};

use hsfront::coeffs::CoefficientField;
use hsfront::multigrid::{benchmark_residuals, MgParams};
use hsfront::ode1d;
use hsfront::stefan::{run_facet, write_snapshots, DiskSource, FacetConfig};
use hsfront::sweep::{
    compare_axis, render_contour_svg, sweep2d, write_compare_csv_to, write_contour_matrix, write_csv_to,
    write_timings, CompareConfig, ContourMatrix, DirectionSet, RunOverrides, RunStatus, SweepConfig,
};

#[derive(Debug, Parser)]
#[command(name = "hsfront", version, about = "Homogenized velocity of periodic Hele-Shaw fronts")]
struct Cli {
    /// Flat `key = value` file mirroring the flags; flags given on the
    /// command line win.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// More log output (-v info, -vv debug). RUST_LOG overrides.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// 1D front speed r(|q|) as CSV `qmag,r`.
    #[command(args_override_self = true)]
    R1d(R1dArgs),
    /// One 2D breakthrough run in direction (m1, m2).
    #[command(args_override_self = true)]
    R2d(R2dArgs),
    /// 2D runs over all directions with |m1|, |m2| ≤ mmax in one quadrant.
    #[command(args_override_self = true)]
    Sweep(SweepArgs),
    /// 2D against 1D speeds for q on the negative x1-axis.
    #[command(args_override_self = true)]
    Compare(CompareArgs),
    /// Source-driven growth on the torus with boundary snapshots.
    #[command(args_override_self = true)]
    Facet(FacetArgs),
    /// Residual history of the multigrid benchmark layout.
    #[command(args_override_self = true)]
    Mgcheck(MgcheckArgs),
}

/// Solver overrides shared by the 2D subcommands.
#[derive(Debug, Args)]
struct RunArgs {
    /// Stefan parameter λ.
    #[arg(long)]
    lambda: Option<f64>,
    /// Time step as a multiple of h.
    #[arg(long)]
    tau_factor: Option<f64>,
    /// V-cycles per time step.
    #[arg(long)]
    cycles: Option<usize>,
    /// Initial front position.
    #[arg(long)]
    l0: Option<f64>,
    /// Gate position.
    #[arg(long)]
    l1: Option<f64>,
    /// Step budget before a run is reported as a timeout.
    #[arg(long)]
    max_steps: Option<usize>,
}

impl RunArgs {
    fn overrides(&self) -> RunOverrides {
        RunOverrides {
            lambda: self.lambda,
            tau_over_h: self.tau_factor,
            cycles: self.cycles,
            l0: self.l0,
            l1: self.l1,
            max_steps: self.max_steps,
        }
    }
}

#[derive(Debug, Args)]
struct R1dArgs {
    /// Coefficient: builtin name or expression.
    #[arg(long)]
    g: String,
    /// Gradient magnitudes, comma-separated.
    #[arg(long, value_delimiter = ',', required = true)]
    qmag: Vec<f64>,
    #[arg(long)]
    eps: f64,
    /// Horizon in slow time.
    #[arg(long = "T", default_value_t = ode1d::DEFAULT_HORIZON)]
    horizon: f64,
    /// RK4 steps per fast period.
    #[arg(long, default_value_t = ode1d::DEFAULT_STEPS_PER_PERIOD)]
    steps_per_period: usize,
    /// Output CSV; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct R2dArgs {
    #[arg(long)]
    g: String,
    #[arg(long, allow_hyphen_values = true)]
    m1: i64,
    #[arg(long, allow_hyphen_values = true)]
    m2: i64,
    /// Lattice spacing; 6.4/M when absent.
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long = "M")]
    m: usize,
    #[command(flatten)]
    run: RunArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long)]
    g: String,
    #[arg(long = "M")]
    m: usize,
    #[arg(long)]
    mmax: i64,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[command(flatten)]
    run: RunArgs,
    #[arg(long)]
    out: PathBuf,
    /// Contour matrix of r over the (m1, m2) grid.
    #[arg(long)]
    contour: Option<PathBuf>,
    /// SVG of the level curves of r.
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Number of contour levels in the SVG.
    #[arg(long, default_value_t = 10)]
    levels: usize,
    /// Per-run wall times, kept out of the main CSV.
    #[arg(long)]
    timings: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[arg(long)]
    g: String,
    #[arg(long = "M")]
    m: usize,
    #[arg(long)]
    eps_inv: u64,
    /// |q1| values, comma-separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    q: Vec<f64>,
    /// Horizon of the 1D reference.
    #[arg(long = "T", default_value_t = ode1d::DEFAULT_HORIZON)]
    horizon: f64,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[command(flatten)]
    run: RunArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FacetArgs {
    #[arg(long = "M")]
    m: usize,
    #[arg(long)]
    eps_inv: u64,
    #[arg(long)]
    tmax: f64,
    /// Snapshot spacing.
    #[arg(long)]
    snap: f64,
    /// Boundary polylines as CSV `t,piece,x1,x2`.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "tw(1.05,-1)")]
    g: String,
    #[arg(long, default_value_t = 2)]
    cycles: usize,
    #[arg(long, default_value_t = 1e-7)]
    lambda: f64,
    /// Initial enthalpy inside the source disk.
    #[arg(long, default_value_t = 1e-3)]
    z_init: f64,
    #[arg(long, default_value_t = DiskSource::default().radius)]
    source_radius: f64,
    #[arg(long, default_value_t = DiskSource::default().peak)]
    source_peak: f64,
}

#[derive(Debug, Args)]
struct MgcheckArgs {
    #[arg(long = "M")]
    m: usize,
    #[arg(long, default_value_t = 4)]
    cycles: usize,
    /// Neumann flux on the inflow edge.
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    q1: f64,
}

/// CSV target: a file when given, stdout otherwise.
fn sink(path: Option<&PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn r1d(a: &R1dArgs) -> Result<ExitCode> {
    let g = CoefficientField::from_spec(&a.g)?;
    let rows = ode1d::sweep_r1_with(&g, &a.qmag, a.eps, a.horizon, a.steps_per_period)?;
    let mut w = sink(a.out.as_ref())?;
    writeln!(w, "qmag,r")?;
    for (q, r) in rows {
        writeln!(w, "{q},{r}")?;
    }
    w.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn r2d(a: &R2dArgs) -> Result<ExitCode> {
    let mut cfg = SweepConfig::new(a.g.clone(), a.m, DirectionSet::List(vec![(a.m1, a.m2)]));
    cfg.sigma = a.sigma;
    cfg.run = a.run.overrides();
    let recs = sweep2d(&cfg)?;
    write_csv_to(&recs, sink(a.out.as_ref())?)?;
    match recs.first().map(|r| r.status) {
        Some(RunStatus::Ok) => Ok(ExitCode::SUCCESS),
        other => {
            warn!("run finished with status {other:?}");
            Ok(ExitCode::from(2))
        }
    }
}

fn sweep(a: &SweepArgs) -> Result<ExitCode> {
    if a.mmax < 1 {
        bail!("--mmax must be at least 1");
    }
    let mut cfg = SweepConfig::new(a.g.clone(), a.m, DirectionSet::Quadrant { mmax: a.mmax });
    cfg.sigma = a.sigma;
    cfg.workers = a.workers;
    cfg.run = a.run.overrides();
    let recs = sweep2d(&cfg)?;
    write_csv_to(&recs, File::create(&a.out).with_context(|| format!("creating {}", a.out.display()))?)?;
    info!("{} records written to {}", recs.len(), a.out.display());
    if let Some(p) = &a.timings {
        write_timings(&recs, p)?;
    }
    if a.contour.is_some() || a.svg.is_some() {
        let mat = match &a.contour {
            Some(p) => write_contour_matrix(&recs, p)?,
            None => ContourMatrix::from_records(&recs)?,
        };
        if let Some(p) = &a.svg {
            let paths = render_contour_svg(&mat, &mat.default_levels(a.levels), p)?;
            info!("{paths} contour paths written to {}", p.display());
        }
    }
    let bad = recs.iter().filter(|r| r.status != RunStatus::Ok).count();
    if bad > 0 {
        warn!("{bad} of {} runs did not finish", recs.len());
    }
    Ok(ExitCode::SUCCESS)
}

fn compare(a: &CompareArgs) -> Result<ExitCode> {
    let mut cfg = CompareConfig::new(a.g.clone(), a.m, a.eps_inv, a.q.clone());
    cfg.horizon = a.horizon;
    cfg.workers = a.workers;
    cfg.run = a.run.overrides();
    let table = compare_axis(&cfg)?;
    write_compare_csv_to(&table, sink(a.out.as_ref())?)?;
    eprintln!("max |r_2D - r_1D| = {}", table.max_error);
    Ok(ExitCode::SUCCESS)
}

fn facet(a: &FacetArgs) -> Result<ExitCode> {
    let mut cfg = FacetConfig::new(a.m, a.eps_inv, a.tmax, a.snap);
    cfg.coefficient = a.g.clone();
    cfg.cycles = a.cycles;
    cfg.lambda = a.lambda;
    cfg.z_init = a.z_init;
    cfg.source.radius = a.source_radius;
    cfg.source.peak = a.source_peak;
    let out = run_facet(&cfg)?;
    write_snapshots(&out.snapshots, &a.out)?;
    eprintln!(
        "{} steps, {} snapshots, {} asymmetric steps, {} retreats, max balance error {:.4}",
        out.steps,
        out.snapshots.len(),
        out.asymmetric_steps,
        out.monotonicity_violations,
        out.max_balance_error
    );
    Ok(ExitCode::SUCCESS)
}

fn mgcheck(a: &MgcheckArgs) -> Result<ExitCode> {
    let res = benchmark_residuals(a.m, a.q1, a.cycles, MgParams::default())?;
    let mut w = BufWriter::new(io::stdout().lock());
    write!(w, "{:<14}", "iteration k")?;
    for k in 0..res.len() {
        write!(w, " {k:>9}")?;
    }
    writeln!(w)?;
    write!(w, "{:<14}", "||r^(k)||")?;
    for r in &res {
        write!(w, " {:>9}", format!("{r:.2e}"))?;
    }
    writeln!(w)?;
    w.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn run(args: Vec<OsString>) -> Result<ExitCode> {
    let args = config::expand(args)?;
    let cli = Cli::parse_from(args);
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match &cli.command {
        Command::R1d(a) => r1d(a),
        Command::R2d(a) => r2d(a),
        Command::Sweep(a) => sweep(a),
        Command::Compare(a) => compare(a),
        Command::Facet(a) => facet(a),
        Command::Mgcheck(a) => mgcheck(a),
    }
}

fn main() -> ExitCode {
    match run(std::env::args_os().collect()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
