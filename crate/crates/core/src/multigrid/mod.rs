//! Geometric multigrid for `a u − h² Δu = f` on M×M nodes.
//!
//! Two topologies share one 5-point stencil:
//!
//! * [`Topology::Strip`]: (0,1) × 𝕋. Row i = 0 carries the Neumann condition
//!   through the ghost node v₋₁ = v₁ − 2 q₁ h, the Dirichlet row i = M is
//!   implicit zero, and j is periodic.
//! * [`Topology::Torus`]: both indices periodic.
//!
//! Unknowns are stored row-major with j (the periodic x2 index) fastest.

mod hierarchy;

use std::ops::{Index, IndexMut};

use crate::error::{argument, config, Error, Result};

pub use hierarchy::{Hierarchy, MgParams, SolveControl};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Topology {
    Strip,
    Torus,
}

/// M×M nodal values, node (i, j) at (i h, j h), h = 1/M.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    m: usize,
    topology: Topology,
    data: Vec<f64>,
}

impl GridField {
    pub fn zeros(m: usize, topology: Topology) -> Self {
        Self::filled(m, topology, 0.0)
    }

    pub fn filled(m: usize, topology: Topology, value: f64) -> Self {
        assert!(m.is_power_of_two(), "grid size must be a power of two, got {m}");
        Self { m, topology, data: vec![value; m * m] }
    }

    pub fn from_fn(m: usize, topology: Topology, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut g = Self::zeros(m, topology);
        for i in 0..m {
            for j in 0..m {
                g.data[i * m + j] = f(i, j);
            }
        }
        g
    }

    pub fn from_vec(m: usize, topology: Topology, data: Vec<f64>) -> Result<Self> {
        if !m.is_power_of_two() {
            return Err(argument(format!("grid size must be a power of two, got {m}")));
        }
        if data.len() != m * m {
            return Err(argument(format!("expected {} values, got {}", m * m, data.len())));
        }
        Ok(Self { m, topology, data })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn h(&self) -> f64 {
        1.0 / self.m as f64
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    fn check_same(&self, other: &GridField) -> Result<()> {
        if self.m != other.m {
            return Err(Error::ShapeMismatch { expected: self.m, found: other.m });
        }
        if self.topology != other.topology {
            return Err(argument("topology mismatch"));
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for GridField {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.m + j]
    }
}

impl IndexMut<(usize, usize)> for GridField {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.m + j]
    }
}

// ---------------------------------------------------------------------------
// Slice kernels shared by the free functions and the hierarchy.

/// Rows entering the x1-direction of the stencil at row i.
#[inline(always)]
fn neighbor_rows<'a>(
    m: usize,
    topology: Topology,
    i: usize,
    v: &'a [f64],
    zeros: &'a [f64],
) -> (&'a [f64], &'a [f64]) {
    let row = |k: usize| &v[k * m..(k + 1) * m];
    match topology {
        Topology::Strip => {
            // i = 0 sees row 1 twice (ghost node); i = M−1 sees the Dirichlet zero.
            let up = if i == 0 { row(1) } else { row(i - 1) };
            let dn = if i + 1 == m { zeros } else { row(i + 1) };
            (up, dn)
        }
        Topology::Torus => (row((i + m - 1) % m), row((i + 1) % m)),
    }
}

/// Calls `f(index, v[index], neighbour sum)` for every node in row-major order.
#[inline(always)]
fn stencil_pass<F: FnMut(usize, f64, f64)>(
    m: usize,
    topology: Topology,
    v: &[f64],
    zeros: &[f64],
    mut f: F,
) {
    debug_assert!(m >= 2);
    for i in 0..m {
        let (up, dn) = neighbor_rows(m, topology, i, v, zeros);
        let row = &v[i * m..(i + 1) * m];
        let base = i * m;
        f(base, row[0], up[0] + dn[0] + (row[m - 1] + row[1]));
        for j in 1..m - 1 {
            f(base + j, row[j], up[j] + dn[j] + (row[j - 1] + row[j + 1]));
        }
        f(base + m - 1, row[m - 1], up[m - 1] + dn[m - 1] + (row[m - 2] + row[0]));
    }
}

fn apply_into(m: usize, topology: Topology, diag: &[f64], v: &[f64], zeros: &[f64], out: &mut [f64]) {
    stencil_pass(m, topology, v, zeros, |k, c, nsum| {
        out[k] = diag[k] * c - nsum;
    });
}

fn residual_into(
    m: usize,
    topology: Topology,
    diag: &[f64],
    v: &[f64],
    b: &[f64],
    zeros: &[f64],
    out: &mut [f64],
) {
    stencil_pass(m, topology, v, zeros, |k, c, nsum| {
        out[k] = b[k] - (diag[k] * c - nsum);
    });
}

fn residual_max(m: usize, topology: Topology, diag: &[f64], v: &[f64], b: &[f64], zeros: &[f64]) -> f64 {
    let mut mx: f64 = 0.0;
    stencil_pass(m, topology, v, zeros, |k, c, nsum| {
        mx = mx.max((b[k] - (diag[k] * c - nsum)).abs());
    });
    mx
}

/// One damped Jacobi sweep: out = v + ω (b − A v) / (4 + a).
#[allow(clippy::too_many_arguments)]
fn jacobi_into(
    m: usize,
    topology: Topology,
    diag: &[f64],
    inv_diag: &[f64],
    omega: f64,
    v: &[f64],
    b: &[f64],
    zeros: &[f64],
    out: &mut [f64],
) {
    stencil_pass(m, topology, v, zeros, |k, c, nsum| {
        out[k] = c + omega * (b[k] - (diag[k] * c - nsum)) * inv_diag[k];
    });
}

/// Full weighting, `coarse = scale · I_h^{2h} fine`.
fn restrict_into(mf: usize, topology: Topology, fine: &[f64], scale: f64, coarse: &mut [f64]) {
    let mc = mf / 2;
    for i in 0..mc {
        let fi = 2 * i;
        let rc = &fine[fi * mf..(fi + 1) * mf];
        // Strip: even reflection v₋₁ = v₁ at the Neumann edge; 2i+1 ≤ M−1 always.
        let up_i = match topology {
            Topology::Strip => {
                if fi == 0 {
                    1
                } else {
                    fi - 1
                }
            }
            Topology::Torus => (fi + mf - 1) % mf,
        };
        let dn_i = (fi + 1) % mf;
        let ru = &fine[up_i * mf..(up_i + 1) * mf];
        let rd = &fine[dn_i * mf..(dn_i + 1) * mf];
        for j in 0..mc {
            let fj = 2 * j;
            let l = (fj + mf - 1) % mf;
            let r = fj + 1;
            let center = rc[fj];
            let edges = ru[fj] + rd[fj] + rc[l] + rc[r];
            let corners = ru[l] + ru[r] + rd[l] + rd[r];
            coarse[i * mc + j] = scale * (0.25 * center + 0.125 * edges + 0.0625 * corners);
        }
    }
}

/// Bilinear interpolation, `fine += I_{2h}^h coarse` (or `=` when `add` is false).
fn prolong_into(mc: usize, topology: Topology, coarse: &[f64], fine: &mut [f64], add: bool) {
    let mf = 2 * mc;
    let zeros_row = vec![0.0; mc];
    for i in 0..mc {
        let c0 = &coarse[i * mc..(i + 1) * mc];
        let c1: &[f64] = if i + 1 < mc {
            &coarse[(i + 1) * mc..(i + 2) * mc]
        } else {
            match topology {
                Topology::Strip => &zeros_row,
                Topology::Torus => &coarse[0..mc],
            }
        };
        for j in 0..mc {
            let jn = (j + 1) % mc;
            let vals = [
                c0[j],
                0.5 * (c0[j] + c0[jn]),
                0.5 * (c0[j] + c1[j]),
                0.25 * (c0[j] + c0[jn] + c1[j] + c1[jn]),
            ];
            let idx = [
                2 * i * mf + 2 * j,
                2 * i * mf + 2 * j + 1,
                (2 * i + 1) * mf + 2 * j,
                (2 * i + 1) * mf + 2 * j + 1,
            ];
            for (k, v) in idx.into_iter().zip(vals) {
                if add {
                    fine[k] += v;
                } else {
                    fine[k] = v;
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Public operators.

fn diag_of(a: &GridField) -> Vec<f64> {
    a.data.iter().map(|&x| 4.0 + x).collect()
}

fn require_stencil_size(m: usize) -> Result<()> {
    if m < 2 {
        return Err(argument("the 5-point stencil needs M ≥ 2"));
    }
    Ok(())
}

/// A v for the system matrix with coefficient `a`.
pub fn apply_a(a: &GridField, v: &GridField) -> Result<GridField> {
    a.check_same(v)?;
    require_stencil_size(a.m)?;
    let zeros = vec![0.0; a.m];
    let mut out = GridField::zeros(a.m, a.topology);
    apply_into(a.m, a.topology, &diag_of(a), &v.data, &zeros, &mut out.data);
    Ok(out)
}

/// b − A v.
pub fn residual(a: &GridField, v: &GridField, b: &GridField) -> Result<GridField> {
    a.check_same(v)?;
    a.check_same(b)?;
    require_stencil_size(a.m)?;
    let zeros = vec![0.0; a.m];
    let mut out = GridField::zeros(a.m, a.topology);
    residual_into(a.m, a.topology, &diag_of(a), &v.data, &b.data, &zeros, &mut out.data);
    Ok(out)
}

/// `iters` damped Jacobi sweeps starting from `v`.
pub fn smooth_jacobi(a: &GridField, v: &GridField, b: &GridField, omega: f64, iters: usize) -> Result<GridField> {
    a.check_same(v)?;
    a.check_same(b)?;
    require_stencil_size(a.m)?;
    let diag = diag_of(a);
    let inv: Vec<f64> = diag.iter().map(|d| 1.0 / d).collect();
    let zeros = vec![0.0; a.m];
    let mut cur = v.clone();
    let mut next = GridField::zeros(a.m, a.topology);
    for _ in 0..iters {
        jacobi_into(a.m, a.topology, &diag, &inv, omega, &cur.data, &b.data, &zeros, &mut next.data);
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(cur)
}

/// Full-weighting restriction to the M/2 grid.
pub fn restrict(fine: &GridField) -> Result<GridField> {
    if fine.m < 2 {
        return Err(argument("cannot restrict a 1×1 grid"));
    }
    let mut out = GridField::zeros(fine.m / 2, fine.topology);
    restrict_into(fine.m, fine.topology, &fine.data, 1.0, &mut out.data);
    Ok(out)
}

/// Bilinear prolongation to the 2M grid.
pub fn prolong(coarse: &GridField) -> GridField {
    let mut out = GridField::zeros(coarse.m * 2, coarse.topology);
    prolong_into(coarse.m, coarse.topology, &coarse.data, &mut out.data, false);
    out
}

/// Right-hand side of the discrete system: f, plus −2 q₁ h on row 0 of a strip.
pub fn assemble_rhs(f: &GridField, q1: f64) -> GridField {
    let mut b = f.clone();
    if f.topology == Topology::Strip && q1 != 0.0 {
        let flux = -2.0 * q1 * f.h();
        for v in &mut b.data[..f.m] {
            *v += flux;
        }
    }
    b
}

/// Solves `a u − h²Δu = f` with Neumann flux `q1` (strip only).
pub fn solve(
    a: &GridField,
    f: &GridField,
    q1: f64,
    control: SolveControl,
    initial_guess: Option<&GridField>,
    params: MgParams,
) -> Result<GridField> {
    a.check_same(f)?;
    if a.topology == Topology::Torus && q1 != 0.0 {
        return Err(config("a Neumann flux has no meaning on the torus"));
    }
    let mut hier = Hierarchy::new(a, params)?;
    let b = assemble_rhs(f, q1);
    let mut v = match initial_guess {
        Some(g) => {
            a.check_same(g)?;
            g.clone()
        }
        None => GridField::zeros(a.m, a.topology),
    };
    hier.solve(&mut v, &b, control)?;
    Ok(v)
}

/// Coefficient layout of the residual-history benchmark: 1000 h² where
/// x_i + 0.1 sin(6π x_j) > 0.5, h² elsewhere.
pub fn benchmark_coefficient(m: usize) -> GridField {
    let h = 1.0 / m as f64;
    GridField::from_fn(m, Topology::Strip, |i, j| {
        let (xi, xj) = (i as f64 * h, j as f64 * h);
        if xi + 0.1 * (6.0 * std::f64::consts::PI * xj).sin() > 0.5 {
            1000.0 * h * h
        } else {
            h * h
        }
    })
}

/// Max-norm residuals before and after each of `cycles` V-cycles on the
/// benchmark layout with f = 0, zero initial guess and boundary flux `q1`.
pub fn benchmark_residuals(m: usize, q1: f64, cycles: usize, params: MgParams) -> Result<Vec<f64>> {
    let a = benchmark_coefficient(m);
    let b = assemble_rhs(&GridField::zeros(m, Topology::Strip), q1);
    let mut hier = Hierarchy::new(&a, params)?;
    let mut v = GridField::zeros(m, Topology::Strip);
    let mut out = vec![hier.residual_norm(&v, &b)?];
    for _ in 0..cycles {
        hier.v_cycle(&mut v, &b)?;
        out.push(hier.residual_norm(&v, &b)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn apply_constant_strip() {
        let m = 8;
        let a = GridField::zeros(m, Topology::Strip);
        let v = GridField::filled(m, Topology::Strip, 1.0);
        let av = apply_a(&a, &v).unwrap();
        for j in 0..m {
            assert_eq!(av[(0, j)], 0.0);
            for i in 1..m - 1 {
                assert_eq!(av[(i, j)], 0.0);
            }
            assert_eq!(av[(m - 1, j)], 1.0);
        }
    }

    #[test]
    fn apply_constant_torus() {
        let a = GridField::zeros(8, Topology::Torus);
        let v = GridField::filled(8, Topology::Torus, 1.0);
        assert_eq!(apply_a(&a, &v).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn apply_linear_profile() {
        let m = 16;
        let h = 1.0 / m as f64;
        let a = GridField::filled(m, Topology::Strip, h * h);
        let v = GridField::from_fn(m, Topology::Strip, |i, _| 1.0 - i as f64 * h);
        let av = apply_a(&a, &v).unwrap();
        for i in 1..m {
            for j in 0..m {
                close(av[(i, j)], h * h * (1.0 - i as f64 * h), 1e-14);
            }
        }
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let a = GridField::zeros(8, Topology::Strip);
        let v = GridField::zeros(4, Topology::Strip);
        assert!(matches!(apply_a(&a, &v), Err(Error::ShapeMismatch { expected: 8, found: 4 })));
        assert!(residual(&a, &a, &v).is_err());
    }

    #[test]
    fn residual_trivial_cases() {
        let m = 8;
        let a = GridField::from_fn(m, Topology::Strip, |i, j| (i + 2 * j) as f64 * 0.01);
        let b = GridField::from_fn(m, Topology::Strip, |i, j| (i as f64 - j as f64).sin());
        let r0 = residual(&a, &GridField::zeros(m, Topology::Strip), &b).unwrap();
        assert_eq!(r0, b);
        let v = GridField::from_fn(m, Topology::Strip, |i, j| (i * j) as f64);
        let av = apply_a(&a, &v).unwrap();
        assert_eq!(residual(&a, &v, &av).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn jacobi_single_step_and_zero_iters() {
        let m = 8;
        let a = GridField::from_fn(m, Topology::Torus, |i, j| 0.1 + (i + j) as f64 * 0.02);
        let b = GridField::from_fn(m, Topology::Torus, |i, j| (i as f64).cos() + j as f64);
        let v = GridField::from_fn(m, Topology::Torus, |i, j| (i * 3 + j) as f64);
        assert_eq!(smooth_jacobi(&a, &v, &b, 2.0 / 3.0, 0).unwrap(), v);
        let z = GridField::zeros(m, Topology::Torus);
        let one = smooth_jacobi(&a, &z, &b, 2.0 / 3.0, 1).unwrap();
        for i in 0..m {
            for j in 0..m {
                close(one[(i, j)], 2.0 / 3.0 * b[(i, j)] / (4.0 + a[(i, j)]), 1e-15);
            }
        }
    }

    #[test]
    fn restrict_examples() {
        let one = GridField::filled(16, Topology::Strip, 1.0);
        let r = restrict(&one).unwrap();
        assert!(r.as_slice().iter().all(|&x| (x - 1.0).abs() < 1e-15));

        let mut imp = GridField::zeros(16, Topology::Strip);
        imp[(6, 8)] = 1.0;
        let r = restrict(&imp).unwrap();
        assert_eq!(r[(3, 4)], 0.25);
        assert_eq!(r.sum(), 0.25);

        let mut edge = GridField::zeros(16, Topology::Strip);
        edge[(1, 8)] = 1.0;
        let r = restrict(&edge).unwrap();
        assert_eq!(r[(0, 4)], 0.25);
        assert_eq!(r[(1, 4)], 0.125);

        assert!(restrict(&GridField::zeros(1, Topology::Torus)).is_err());
    }

    #[test]
    fn prolong_examples() {
        let c = GridField::filled(8, Topology::Torus, 3.0);
        assert!(prolong(&c).as_slice().iter().all(|&x| x == 3.0));

        let mut imp = GridField::zeros(8, Topology::Torus);
        imp[(3, 5)] = 1.0;
        let f = prolong(&imp);
        assert_eq!(f[(6, 10)], 1.0);
        for (di, dj) in [(1, 0), (0, 1)] {
            assert_eq!(f[(6 + di, 10 + dj)], 0.5);
            assert_eq!(f[(6 - di, 10 - dj)], 0.5);
        }
        for (i, j) in [(5, 9), (5, 11), (7, 9), (7, 11)] {
            assert_eq!(f[(i, j)], 0.25);
        }
        assert_eq!(f.sum(), 4.0);

        // linear in j is reproduced away from the seam
        let lin = GridField::from_fn(8, Topology::Torus, |_, j| j as f64);
        let f = prolong(&lin);
        for i in 0..16 {
            for j in 0..14 {
                close(f[(i, j)], j as f64 / 2.0, 1e-15);
            }
        }
    }

    #[test]
    fn strip_prolong_uses_dirichlet_zero() {
        let c = GridField::filled(4, Topology::Strip, 2.0);
        let f = prolong(&c);
        assert_eq!(f[(7, 0)], 1.0);
        assert_eq!(f[(6, 0)], 2.0);
    }

    #[test]
    fn rhs_adds_flux_on_neumann_row() {
        let f = GridField::zeros(4, Topology::Strip);
        let b = assemble_rhs(&f, -1.0);
        assert_eq!(b[(0, 2)], 0.5);
        assert_eq!(b[(1, 2)], 0.0);
        let t = GridField::zeros(4, Topology::Torus);
        assert_eq!(assemble_rhs(&t, -1.0), t);
    }
}
