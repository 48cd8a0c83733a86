//! End-to-end acceptance checks. Runs without the libtest harness so every
//! criterion prints one PASS/FAIL line; exits non-zero if any fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::Instant;

use hsfront::coeffs::CoefficientField;
use hsfront::multigrid::{self, benchmark_residuals, MgParams, SolveControl, Topology};
use hsfront::ode1d::{estimate_r1, sweep_r1};
use hsfront::stefan::{run_facet, write_snapshots, BbrSolver, FacetConfig, RunParams};
use hsfront::sweep::{compare_axis, sweep2d, write_csv, CompareConfig, DirectionSet, RunStatus, SweepConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn field(spec: &str) -> CoefficientField {
    CoefficientField::from_spec(spec).expect("valid coefficient")
}

fn out_dir() -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    std::fs::create_dir_all(&dir).expect("create output directory");
    dir
}

fn averaging_laws() -> Outcome {
    let cases = [("2 + sin(0,0,1)", 2.0), ("2 + sin(1,0,0)", 3f64.sqrt())];
    let mut worst: f64 = 0.0;
    for (spec, mean) in cases {
        for q in [0.5, 1.0, 2.0] {
            let r = estimate_r1(&field(spec), q, 1e-3, 20.0).map_err(|e| e.to_string())?;
            let rel = (r / (mean * q) - 1.0).abs();
            worst = worst.max(rel);
            if rel > 1e-3 {
                return Err(format!("{spec}, |q| = {q}: r = {r}, expected {}", mean * q));
            }
        }
    }
    Ok(format!("max relative error {worst:.2e}"))
}

fn pinning() -> Outcome {
    let g = field("tw(2,-1)");
    let r = |q: f64| estimate_r1(&g, q, 1e-3, 20.0).map_err(|e| e.to_string());
    let mut worst: f64 = 0.0;
    for q in [0.35, 0.5, 0.9] {
        let v = r(q)?;
        worst = worst.max((v - 1.0).abs());
        if (v - 1.0).abs() > 1e-3 {
            return Err(format!("|q| = {q}: r = {v}, expected 1"));
        }
    }
    let (above, below) = (r(1.1)?, r(0.3)?);
    if !(above > 1.01 && below < 0.99) {
        return Err(format!("r(1.1) = {above}, r(0.3) = {below}"));
    }
    Ok(format!("pinned |r − 1| ≤ {worst:.1e}; r(0.3) = {below:.4}, r(1.1) = {above:.4}"))
}

/// Widest run of consecutive samples with |r − level| < tol, as a q-width.
fn widest_plateau(samples: &[(f64, f64)], level: f64, tol: f64) -> f64 {
    let mut best: f64 = 0.0;
    let mut start: Option<f64> = None;
    for &(q, r) in samples {
        if (r - level).abs() < tol {
            let s = *start.get_or_insert(q);
            best = best.max(q - s);
        } else {
            start = None;
        }
    }
    best
}

fn double_wave_plateaus() -> Outcome {
    let qs: Vec<f64> = (0..=380).map(|i| 0.2 + 0.01 * i as f64).collect();
    let samples = sweep_r1(&field("fig1"), &qs, 1e-2, 10.0).map_err(|e| e.to_string())?;
    let w1 = widest_plateau(&samples, 1.0, 5e-3);
    let w3 = widest_plateau(&samples, 3.0, 5e-3);
    let msg = format!("plateau widths: r = 1 → {w1:.2}, r = 3 → {w3:.2}");
    if w1 >= 0.05 - 1e-9 && w3 >= 0.05 - 1e-9 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn multigrid_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let control = SolveControl::Tolerance { tol: 1e-13, max_cycles: 400 };
    let mut worst: f64 = 0.0;
    for topology in [Topology::Strip, Topology::Torus] {
        for m in [4, 8, 16] {
            for _ in 0..50 {
                let (a, f, q1) = common::random_instance(&mut rng, m, topology);
                let u = multigrid::solve(&a, &f, q1, control, None, MgParams::default()).map_err(|e| e.to_string())?;
                let exact = common::dense_solve(&a, &f, q1);
                let err = u.as_slice().iter().zip(&exact).fold(0.0f64, |acc, (x, y)| acc.max((x - y).abs()));
                worst = worst.max(err);
            }
        }
    }
    let msg = format!("300 instances, max error {worst:.1e}");
    if worst <= 1e-9 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn benchmark_contraction() -> Outcome {
    let res = benchmark_residuals(1024, -1.0, 4, MgParams::default()).map_err(|e| e.to_string())?;
    let factors: Vec<f64> = res.windows(2).map(|w| w[0] / w[1]).collect();
    let shown: Vec<String> = factors.iter().map(|f| format!("{f:.1}")).collect();
    let msg = format!("initial residual {:.3e}, factors [{}]", res[0], shown.join(", "));
    if factors.iter().all(|&f| f >= 8.0) {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn speeds_2d_vs_1d() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for (m, eps_inv, bound) in [(128, 16, 0.1), (256, 32, 0.05)] {
        let mut cfg = CompareConfig::new("tw(2,-1)", m, eps_inv, vec![0.5, 0.7, 1.5, 2.0]);
        cfg.run.cycles = Some(3);
        let table = compare_axis(&cfg).map_err(|e| e.to_string())?;
        for row in &table.rows {
            println!(
                "      M = {m:3}, 1/ε = {eps_inv:2}, q1 = {:4}: r_2D = {:.4}, r_1D = {:.4}, contraction min {:.2} mean {:.2}",
                row.q1, row.r_2d, row.r_1d, row.min_contraction, row.mean_contraction
            );
        }
        ok &= table.max_error <= bound;
        lines.push(format!("M = {m}: max error {:.4} (≤ {bound})", table.max_error));
    }
    let msg = lines.join("; ");
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn constant_medium() -> Outcome {
    let mut s = BbrSolver::strip(RunParams::new(128, -1.0), field("1")).map_err(|e| e.to_string())?;
    let b = s.run_breakthrough().map_err(|e| e.to_string())?;
    let msg = format!("r = {:.4} after {} steps", b.r, b.steps);
    if (b.r - 1.0).abs() <= 0.05 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn symmetry_of_r() -> Outcome {
    let pairs = [(1, 0), (2, 0), (3, 0), (2, 1), (3, 1), (3, 2), (4, 1), (4, 3), (5, 1), (5, 2)];
    let mut all = Vec::new();
    for &(a, b) in &pairs {
        all.push((a, b));
        all.push((b, a));
    }
    let cfg = SweepConfig::new("g2", 128, DirectionSet::List(all));
    let recs = sweep2d(&cfg).map_err(|e| e.to_string())?;
    let find = |m1: i64, m2: i64| recs.iter().find(|r| r.m1 == m1 && r.m2 == m2);
    let mut worst: f64 = 0.0;
    for (a, b) in pairs {
        let (Some(x), Some(y)) = (find(a, b), find(b, a)) else {
            return Err(format!("missing record for ({a}, {b})"));
        };
        if x.status != RunStatus::Ok || y.status != RunStatus::Ok {
            return Err(format!("({a}, {b}): status {:?} / {:?}", x.status, y.status));
        }
        worst = worst.max((x.r_est - y.r_est).abs());
    }
    let msg = format!("10 pairs, max |r(a,b) − r(b,a)| = {worst:.2e}");
    if worst <= 5e-2 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn facet() -> Outcome {
    let cfg = FacetConfig::new(256, 16, 0.16, 0.02);
    let out = run_facet(&cfg).map_err(|e| e.to_string())?;
    let path = out_dir().join("facet_polylines.csv");
    write_snapshots(&out.snapshots, &path).map_err(|e| e.to_string())?;
    let written = out.snapshots.iter().all(|s| !s.polylines.is_empty());
    let msg = format!(
        "{} steps, {} snapshots, asymmetric steps {}, retreats {}, max balance error {:.3}; polylines in {}",
        out.steps,
        out.snapshots.len(),
        out.asymmetric_steps,
        out.monotonicity_violations,
        out.max_balance_error,
        path.display()
    );
    let symmetric = out.asymmetric_steps == 0 && out.snapshots.iter().all(|s| s.symmetric);
    if symmetric && out.monotonicity_violations == 0 && out.max_balance_error <= 0.1 && written {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn determinism() -> Outcome {
    let dir = out_dir();
    let mut bytes = Vec::new();
    for workers in [1, 8] {
        let mut cfg = SweepConfig::new("g2", 32, DirectionSet::Quadrant { mmax: 3 });
        cfg.workers = workers;
        let recs = sweep2d(&cfg).map_err(|e| e.to_string())?;
        let path = dir.join(format!("sweep_w{workers}.csv"));
        write_csv(&recs, &path).map_err(|e| e.to_string())?;
        bytes.push(std::fs::read(&path).map_err(|e| e.to_string())?);
    }
    if bytes[0] == bytes[1] {
        Ok(format!("{} bytes identical for 1 and 8 workers", bytes[0].len()))
    } else {
        Err("CSV output differs between 1 and 8 workers".into())
    }
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("1D averaging laws", averaging_laws),
        ("pinning interval", pinning),
        ("double-wave plateaus", double_wave_plateaus),
        ("multigrid dense oracle", multigrid_oracle),
        ("multigrid contraction", benchmark_contraction),
        ("2D vs 1D speeds", speeds_2d_vs_1d),
        ("constant medium", constant_medium),
        ("symmetry of r", symmetry_of_r),
        ("facet experiment", facet),
        ("sweep determinism", determinism),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:2} {name} ({secs:.1} s): {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:2} {name} ({secs:.1} s): {detail}", k + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
