use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use serde::Serialize;

use super::{CompareTable, SweepRecord};
use crate::contour::{contour, Grid2};
use crate::error::{argument, Result};

fn write_rows<T: Serialize>(rows: impl IntoIterator<Item = T>, out: impl io::Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

const SWEEP_HEADER: &str = "m1,m2,q1,q2,q_norm,eps_inv,t_eps,r_est,steps,monotonicity_violations,resolved,status\n";

/// Sweep records as CSV with a header line; wall time is left out so that
/// repeated runs are byte-identical.
pub fn write_csv(records: &[SweepRecord], path: impl AsRef<Path>) -> Result<()> {
    write_csv_to(records, fs::File::create(path)?)
}

pub fn write_csv_to(records: &[SweepRecord], mut out: impl io::Write) -> Result<()> {
    if records.is_empty() {
        // serde only emits the header together with the first row
        out.write_all(SWEEP_HEADER.as_bytes())?;
        return Ok(());
    }
    write_rows(records, out)
}

/// Per-run wall times, kept apart from the deterministic sweep CSV.
pub fn write_timings(records: &[SweepRecord], path: impl AsRef<Path>) -> Result<()> {
    #[derive(Serialize)]
    struct Row {
        m1: i64,
        m2: i64,
        steps: usize,
        wall_seconds: f64,
    }
    write_rows(
        records.iter().map(|r| Row { m1: r.m1, m2: r.m2, steps: r.steps, wall_seconds: r.wall_seconds }),
        fs::File::create(path)?,
    )
}

pub fn write_compare_csv(table: &CompareTable, path: impl AsRef<Path>) -> Result<()> {
    write_compare_csv_to(table, fs::File::create(path)?)
}

pub fn write_compare_csv_to(table: &CompareTable, out: impl io::Write) -> Result<()> {
    write_rows(&table.rows, out)
}

/// r on the full rectangular (m1, m2) grid spanned by a set of records.
#[derive(Debug, Clone, PartialEq)]
pub struct ContourMatrix {
    /// Column coordinates, m1 ascending.
    pub q1: Vec<f64>,
    /// Row coordinates, m2 ascending.
    pub q2: Vec<f64>,
    /// `r[row][col]`; NaN where no record exists.
    pub r: Vec<Vec<f64>>,
}

impl ContourMatrix {
    pub fn from_records(records: &[SweepRecord]) -> Result<Self> {
        if records.is_empty() {
            return Err(argument("no records"));
        }
        let m1_min = records.iter().map(|r| r.m1).min().expect("non-empty");
        let m1_max = records.iter().map(|r| r.m1).max().expect("non-empty");
        let m2_min = records.iter().map(|r| r.m2).min().expect("non-empty");
        let m2_max = records.iter().map(|r| r.m2).max().expect("non-empty");
        // σ from any record with a non-zero index
        let sigma = records
            .iter()
            .find_map(|r| {
                if r.m1 != 0 {
                    Some(r.q1 / r.m1 as f64)
                } else if r.m2 != 0 {
                    Some(r.q2 / r.m2 as f64)
                } else {
                    None
                }
            })
            .ok_or_else(|| argument("records carry no direction"))?;
        let by_index: BTreeMap<(i64, i64), f64> = records.iter().map(|r| ((r.m1, r.m2), r.r_est)).collect();
        let q1 = (m1_min..=m1_max).map(|m| m as f64 * sigma).collect();
        let q2 = (m2_min..=m2_max).map(|m| m as f64 * sigma).collect();
        let r = (m2_min..=m2_max)
            .map(|m2| {
                (m1_min..=m1_max)
                    .map(|m1| by_index.get(&(m1, m2)).copied().unwrap_or(f64::NAN))
                    .collect()
            })
            .collect();
        Ok(Self { q1, q2, r })
    }

    /// Finite r range, if any.
    pub fn range(&self) -> Option<(f64, f64)> {
        let mut it = self.r.iter().flatten().copied().filter(|v| v.is_finite());
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), v| (lo.min(v), hi.max(v))))
    }

    /// `n` levels evenly spaced strictly inside the finite range.
    pub fn default_levels(&self, n: usize) -> Vec<f64> {
        match self.range() {
            Some((lo, hi)) if hi > lo => (1..=n).map(|k| lo + (hi - lo) * k as f64 / (n + 1) as f64).collect(),
            _ => Vec::new(),
        }
    }
}

/// Whitespace-separated matrix: line 1 the q1 coordinates of the columns,
/// line 2 the q2 coordinates of the rows, then one line of r per row.
pub fn write_contour_matrix(records: &[SweepRecord], path: impl AsRef<Path>) -> Result<ContourMatrix> {
    let mat = ContourMatrix::from_records(records)?;
    let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
    let mut s = String::new();
    writeln!(s, "{}", join(&mat.q1)).expect("write to String");
    writeln!(s, "{}", join(&mat.q2)).expect("write to String");
    for row in &mat.r {
        writeln!(s, "{}", join(row)).expect("write to String");
    }
    fs::write(path, s)?;
    Ok(mat)
}

/// Level curves of r over the (q1, q2) grid, one `<path>` per level that
/// has a curve. Returns the number of paths written.
pub fn render_contour_svg(mat: &ContourMatrix, levels: &[f64], path: impl AsRef<Path>) -> Result<usize> {
    const SIZE: f64 = 480.0;
    const PAD: f64 = 40.0;
    let (nx, ny) = (mat.q1.len(), mat.q2.len());
    if nx < 2 || ny < 2 {
        return Err(argument("need at least a 2×2 grid for contours"));
    }
    let grid = Grid2 {
        nx,
        ny,
        x0: mat.q1[0],
        dx: mat.q1[1] - mat.q1[0],
        y0: mat.q2[0],
        dy: mat.q2[1] - mat.q2[0],
        periodic_x: false,
        periodic_y: false,
    };
    let mut values = vec![f64::NAN; nx * ny];
    for (iy, row) in mat.r.iter().enumerate() {
        for (ix, &v) in row.iter().enumerate() {
            values[ix * ny + iy] = v;
        }
    }
    let (x_lo, x_hi) = (mat.q1[0], mat.q1[nx - 1]);
    let (y_lo, y_hi) = (mat.q2[0], mat.q2[ny - 1]);
    let span = (x_hi - x_lo).max(y_hi - y_lo);
    let px = |p: [f64; 2]| {
        let s = (SIZE - 2.0 * PAD) / span;
        (PAD + (p[0] - x_lo) * s, SIZE - PAD - (p[1] - y_lo) * s)
    };

    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    )
    .expect("write to String");
    let (ax0, ay0) = px([x_lo, y_lo]);
    let (ax1, ay1) = px([x_hi, y_hi]);
    writeln!(
        svg,
        r#"<rect x="{ax0:.2}" y="{ay1:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="gray"/>"#,
        ax1 - ax0,
        ay0 - ay1
    )
    .expect("write to String");
    writeln!(svg, r#"<text x="{:.2}" y="{:.2}" font-size="12">q1</text>"#, ax1 - 12.0, ay0 + 16.0).expect("write");
    writeln!(svg, r#"<text x="{:.2}" y="{:.2}" font-size="12">q2</text>"#, ax0 - 24.0, ay1 + 12.0).expect("write");
    let mut paths = 0;
    for &level in levels {
        let lines = contour(&values, &grid, level);
        if lines.is_empty() {
            continue;
        }
        let mut d = String::new();
        for line in &lines {
            for (k, p) in line.points.iter().enumerate() {
                let (x, y) = px(*p);
                write!(d, "{}{x:.2},{y:.2} ", if k == 0 { 'M' } else { 'L' }).expect("write to String");
            }
            if line.closed {
                d.push_str("Z ");
            }
        }
        writeln!(
            svg,
            r#"<path data-level="{level}" d="{}" fill="none" stroke="black" stroke-width="1"/>"#,
            d.trim_end()
        )
        .expect("write to String");
        paths += 1;
    }
    svg.push_str("</svg>\n");
    fs::write(path, svg)?;
    Ok(paths)
}
