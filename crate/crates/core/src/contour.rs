//! Marching-squares level curves on a uniform node grid.
//!
//! Saddle cells are resolved with the cell-centre average. Segments are
//! chained through shared edges into polylines; on periodic axes a polyline
//! is split where it would jump across the seam.

use std::collections::HashMap;

/// Uniform node grid. Node (ix, iy) sits at (x0 + ix dx, y0 + iy dy) and its
/// value is `values[ix * ny + iy]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2 {
    pub nx: usize,
    pub ny: usize,
    pub x0: f64,
    pub dx: f64,
    pub y0: f64,
    pub dy: f64,
    pub periodic_x: bool,
    pub periodic_y: bool,
}

impl Grid2 {
    /// Nodes x = i h on [0,1)², h = 1/m.
    pub fn unit(m: usize, periodic_x: bool, periodic_y: bool) -> Self {
        let h = 1.0 / m as f64;
        Self { nx: m, ny: m, x0: 0.0, dx: h, y0: 0.0, dy: h, periodic_x, periodic_y }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    pub points: Vec<[f64; 2]>,
    pub closed: bool,
}

/// Edge between node (ix, iy) and its +x neighbour (`dir` 0) or +y neighbour (`dir` 1).
type EdgeKey = (u8, usize, usize);

struct Tracer<'a> {
    values: &'a [f64],
    g: &'a Grid2,
    level: f64,
    points: HashMap<EdgeKey, [f64; 2]>,
}

impl Tracer<'_> {
    fn value(&self, ix: usize, iy: usize) -> f64 {
        self.values[(ix % self.g.nx) * self.g.ny + iy % self.g.ny]
    }

    fn canon(&self, (dir, ix, iy): EdgeKey) -> EdgeKey {
        (dir, ix % self.g.nx, iy % self.g.ny)
    }

    /// Crossing point on an edge, in the coordinates of the cell that
    /// first asked for it.
    fn point(&mut self, key: EdgeKey) -> EdgeKey {
        let (dir, ix, iy) = key;
        let canon = self.canon(key);
        if !self.points.contains_key(&canon) {
            let (jx, jy) = if dir == 0 { (ix + 1, iy) } else { (ix, iy + 1) };
            let a = self.value(ix, iy) - self.level;
            let b = self.value(jx, jy) - self.level;
            let s = if a == b { 0.5 } else { a / (a - b) };
            let x = self.g.x0 + (ix as f64 + s * (jx - ix) as f64) * self.g.dx;
            let y = self.g.y0 + (iy as f64 + s * (jy - iy) as f64) * self.g.dy;
            self.points.insert(canon, [x, y]);
        }
        canon
    }
}

/// Level curves of `values` at `level`. Cells with a non-finite corner are
/// skipped, so missing data leaves gaps rather than being interpolated.
pub fn contour(values: &[f64], grid: &Grid2, level: f64) -> Vec<Polyline> {
    assert_eq!(values.len(), grid.nx * grid.ny, "value array does not match grid");
    let cx = if grid.periodic_x { grid.nx } else { grid.nx.saturating_sub(1) };
    let cy = if grid.periodic_y { grid.ny } else { grid.ny.saturating_sub(1) };
    let mut tr = Tracer { values, g: grid, level, points: HashMap::new() };
    let mut segments: Vec<(EdgeKey, EdgeKey)> = Vec::new();

    for ix in 0..cx {
        for iy in 0..cy {
            // corners counter-clockwise from (ix, iy)
            let v = [
                tr.value(ix, iy),
                tr.value(ix + 1, iy),
                tr.value(ix + 1, iy + 1),
                tr.value(ix, iy + 1),
            ];
            if v.iter().any(|x| !x.is_finite()) {
                continue;
            }
            let above = v.map(|x| x > level);
            let code = above.iter().enumerate().fold(0u8, |c, (k, &a)| c | ((a as u8) << k));
            if code == 0 || code == 15 {
                continue;
            }
            // edges: 0 bottom, 1 right, 2 top, 3 left
            let edges: [EdgeKey; 4] = [(0, ix, iy), (1, ix + 1, iy), (0, ix, iy + 1), (1, ix, iy)];
            let pairs: &[(usize, usize)] = match code {
                1 | 14 => &[(3, 0)],
                2 | 13 => &[(0, 1)],
                3 | 12 => &[(3, 1)],
                4 | 11 => &[(1, 2)],
                6 | 9 => &[(0, 2)],
                7 | 8 => &[(3, 2)],
                5 | 10 => {
                    let centre_above = v.iter().sum::<f64>() / 4.0 > level;
                    // corners 0 and 2 share a side for code 5
                    if (code == 5) == centre_above {
                        &[(3, 2), (0, 1)]
                    } else {
                        &[(3, 0), (1, 2)]
                    }
                }
                _ => unreachable!(),
            };
            for &(e0, e1) in pairs {
                let a = tr.point(edges[e0]);
                let b = tr.point(edges[e1]);
                segments.push((a, b));
            }
        }
    }
    chain(&segments, &tr.points, grid)
}

fn chain(segments: &[(EdgeKey, EdgeKey)], points: &HashMap<EdgeKey, [f64; 2]>, g: &Grid2) -> Vec<Polyline> {
    let mut at: HashMap<EdgeKey, Vec<usize>> = HashMap::new();
    for (k, &(a, b)) in segments.iter().enumerate() {
        at.entry(a).or_default().push(k);
        at.entry(b).or_default().push(k);
    }
    let mut used = vec![false; segments.len()];
    let mut out = Vec::new();

    let next = |key: EdgeKey, used: &[bool]| -> Option<usize> {
        at.get(&key).and_then(|v| v.iter().copied().find(|&s| !used[s]))
    };
    let other = |s: usize, key: EdgeKey| if segments[s].0 == key { segments[s].1 } else { segments[s].0 };

    for start in 0..segments.len() {
        if used[start] {
            continue;
        }
        used[start] = true;
        let (a, b) = segments[start];
        let mut keys = vec![a, b];
        let mut tail = b;
        while let Some(s) = next(tail, &used) {
            used[s] = true;
            tail = other(s, tail);
            keys.push(tail);
        }
        let closed = keys.len() > 2 && keys.first() == keys.last();
        if !closed {
            let mut head = a;
            let mut front = Vec::new();
            while let Some(s) = next(head, &used) {
                used[s] = true;
                head = other(s, head);
                front.push(head);
            }
            front.reverse();
            front.extend(keys);
            keys = front;
        }
        let pts: Vec<[f64; 2]> = keys.iter().map(|k| points[k]).collect();
        out.extend(split_at_seams(pts, closed, g));
    }
    out
}

fn split_at_seams(pts: Vec<[f64; 2]>, closed: bool, g: &Grid2) -> Vec<Polyline> {
    let half_x = 0.5 * g.nx as f64 * g.dx.abs();
    let half_y = 0.5 * g.ny as f64 * g.dy.abs();
    let jumps = |p: &[f64; 2], q: &[f64; 2]| {
        (g.periodic_x && (p[0] - q[0]).abs() > half_x) || (g.periodic_y && (p[1] - q[1]).abs() > half_y)
    };
    let mut pieces: Vec<Vec<[f64; 2]>> = vec![Vec::new()];
    for (k, p) in pts.iter().enumerate() {
        if k > 0 && jumps(&pts[k - 1], p) {
            pieces.push(Vec::new());
        }
        pieces.last_mut().expect("non-empty").push(*p);
    }
    if pieces.len() == 1 {
        return vec![Polyline { points: pieces.pop().expect("one piece"), closed }];
    }
    if closed {
        // the closing point duplicates the first; glue the last piece to the first
        let last = pieces.pop().expect("several pieces");
        let first = std::mem::take(&mut pieces[0]);
        let mut glued = last;
        glued.extend(first.into_iter().skip(1));
        pieces[0] = glued;
    }
    pieces
        .into_iter()
        .filter(|p| p.len() >= 2)
        .map(|points| Polyline { points, closed: false })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(m: usize, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let h = 1.0 / m as f64;
        let mut v = Vec::with_capacity(m * m);
        for i in 0..m {
            for j in 0..m {
                v.push(f(i as f64 * h, j as f64 * h));
            }
        }
        v
    }

    #[test]
    fn vertical_line() {
        let m = 32;
        let v = sample(m, |x, _| x - 0.5 - 0.25 / m as f64);
        let lines = contour(&v, &Grid2::unit(m, false, true), 0.0);
        assert_eq!(lines.len(), 1);
        let line = &lines[0];
        assert_eq!(line.points.len(), m);
        for p in &line.points {
            assert!((p[0] - 0.5 - 0.25 / m as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn circle_within_one_cell() {
        let m = 64;
        let h = 1.0 / m as f64;
        let v = sample(m, |x, y| 0.1 - ((x - 0.5).powi(2) + (y - 0.5).powi(2)).sqrt());
        let lines = contour(&v, &Grid2::unit(m, true, true), 0.0);
        assert_eq!(lines.len(), 1);
        assert!(lines[0].closed);
        for p in &lines[0].points {
            let r = ((p[0] - 0.5).powi(2) + (p[1] - 0.5).powi(2)).sqrt();
            assert!((r - 0.1).abs() <= h, "{r}");
        }
    }

    #[test]
    fn empty_set_has_no_lines() {
        let v = vec![-1.0; 16 * 16];
        assert!(contour(&v, &Grid2::unit(16, true, true), 0.0).is_empty());
    }

    #[test]
    fn nan_cells_leave_gaps() {
        let m = 16;
        let mut v = sample(m, |x, _| x - 0.53);
        let full = contour(&v, &Grid2::unit(m, false, false), 0.0);
        assert_eq!(full.len(), 1);
        v[8 * m + 8] = f64::NAN;
        let gapped = contour(&v, &Grid2::unit(m, false, false), 0.0);
        assert_eq!(gapped.len(), 2);
    }

    #[test]
    fn band_across_seam_is_split() {
        let m = 32;
        // wet where x is within 0.1 of 0 on the torus
        let v = sample(m, |x, _| 0.1 - x.min(1.0 - x));
        let lines = contour(&v, &Grid2::unit(m, true, true), 0.0);
        assert_eq!(lines.len(), 2);
        for l in &lines {
            let x = l.points[0][0];
            assert!(l.points.iter().all(|p| (p[0] - x).abs() < 1e-12));
        }
    }

    #[test]
    fn saddle_gives_two_segments() {
        let g = Grid2 { nx: 2, ny: 2, x0: 0.0, dx: 1.0, y0: 0.0, dy: 1.0, periodic_x: false, periodic_y: false };
        // node order: (0,0), (0,1), (1,0), (1,1)
        let lines = contour(&[1.0, -1.0, -1.0, 1.0], &g, 0.0);
        assert_eq!(lines.len(), 2);
        assert!(lines.iter().all(|l| l.points.len() == 2));
    }
}
