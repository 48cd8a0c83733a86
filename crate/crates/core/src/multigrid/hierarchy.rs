use super::{
    jacobi_into, prolong_into, residual_into, residual_max, restrict_into, GridField, Topology,
};
use crate::error::{argument, config, Error, Result};

/// Smoother and cycle settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MgParams {
    /// Jacobi damping ω.
    pub omega: f64,
    /// Pre-smoothing sweeps k₁.
    pub pre_smooth: usize,
    /// Post-smoothing sweeps k₂.
    pub post_smooth: usize,
    /// Recursive cycles γ used to solve each coarse correction from zero.
    pub coarse_cycles: usize,
}

impl Default for MgParams {
    fn default() -> Self {
        Self { omega: 2.0 / 3.0, pre_smooth: 4, post_smooth: 4, coarse_cycles: 2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolveControl {
    /// Exactly this many V-cycles.
    Cycles(usize),
    /// Cycle until the max-norm residual is ≤ `tol`.
    Tolerance { tol: f64, max_cycles: usize },
}

#[derive(Debug, Clone)]
struct Level {
    m: usize,
    topology: Topology,
    a: Vec<f64>,
    diag: Vec<f64>,
    inv_diag: Vec<f64>,
    v: Vec<f64>,
    b: Vec<f64>,
    scratch: Vec<f64>,
    zeros: Vec<f64>,
}

impl Level {
    fn new(m: usize, topology: Topology) -> Self {
        let n = m * m;
        Self {
            m,
            topology,
            a: vec![0.0; n],
            diag: vec![4.0; n],
            inv_diag: vec![0.25; n],
            v: vec![0.0; n],
            b: vec![0.0; n],
            scratch: vec![0.0; n],
            zeros: vec![0.0; m],
        }
    }

    fn refresh_diag(&mut self) {
        for ((d, inv), &a) in self.diag.iter_mut().zip(&mut self.inv_diag).zip(&self.a) {
            *d = 4.0 + a;
            *inv = 1.0 / *d;
        }
    }

    fn smooth(&mut self, omega: f64, iters: usize) {
        for _ in 0..iters {
            jacobi_into(
                self.m,
                self.topology,
                &self.diag,
                &self.inv_diag,
                omega,
                &self.v,
                &self.b,
                &self.zeros,
                &mut self.scratch,
            );
            std::mem::swap(&mut self.v, &mut self.scratch);
        }
    }

    /// Residual into `scratch`.
    fn residual(&mut self) {
        residual_into(self.m, self.topology, &self.diag, &self.v, &self.b, &self.zeros, &mut self.scratch);
    }

    /// Dense column-major matrix of the level operator, assembled by applying
    /// the stencil to unit vectors.
    fn dense(&self) -> Vec<f64> {
        let n = self.m * self.m;
        let mut mat = vec![0.0; n * n];
        let mut e = vec![0.0; n];
        let mut col = vec![0.0; n];
        for k in 0..n {
            e[k] = 1.0;
            super::apply_into(self.m, self.topology, &self.diag, &e, &self.zeros, &mut col);
            mat[k * n..(k + 1) * n].copy_from_slice(&col);
            e[k] = 0.0;
        }
        mat
    }
}

/// LU factors with partial pivoting of a small dense matrix.
#[derive(Debug, Clone)]
struct DenseLu {
    n: usize,
    /// Row-major combined L (unit diagonal, below) and U.
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl DenseLu {
    fn factor(n: usize, col_major: &[f64]) -> Result<Self> {
        let mut lu = vec![0.0; n * n];
        for r in 0..n {
            for c in 0..n {
                lu[r * n + c] = col_major[c * n + r];
            }
        }
        let scale = lu.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let p = (k..n)
                .max_by(|&x, &y| lu[x * n + k].abs().total_cmp(&lu[y * n + k].abs()))
                .unwrap_or(k);
            if !(lu[p * n + k].abs() > scale * 1e-300) {
                return Err(config("coarsest multigrid system is singular"));
            }
            if p != k {
                for c in 0..n {
                    lu.swap(k * n + c, p * n + c);
                }
                perm.swap(k, p);
            }
            for r in k + 1..n {
                let factor = lu[r * n + k] / lu[k * n + k];
                lu[r * n + k] = factor;
                for c in k + 1..n {
                    lu[r * n + c] -= factor * lu[k * n + c];
                }
            }
        }
        Ok(Self { n, lu, perm })
    }

    fn solve(&self, b: &[f64], x: &mut [f64]) {
        let n = self.n;
        for r in 0..n {
            let mut s = b[self.perm[r]];
            for c in 0..r {
                s -= self.lu[r * n + c] * x[c];
            }
            x[r] = s;
        }
        for r in (0..n).rev() {
            let mut s = x[r];
            for c in r + 1..n {
                s -= self.lu[r * n + c] * x[c];
            }
            x[r] = s / self.lu[r * n + r];
        }
    }
}

/// Grid levels from M down to 2 with coefficients `a^{2h} = 4 I_h^{2h} a^h`
/// and an exact solver on the 2×2 level.
#[derive(Debug, Clone)]
pub struct Hierarchy {
    levels: Vec<Level>,
    coarse: DenseLu,
    params: MgParams,
}

impl Hierarchy {
    pub fn new(a: &GridField, params: MgParams) -> Result<Self> {
        let m = a.m();
        if m < 2 {
            return Err(argument("multigrid needs M ≥ 2"));
        }
        if params.coarse_cycles == 0 {
            return Err(argument("coarse_cycles must be at least 1"));
        }
        let mut levels = Vec::new();
        let mut mm = m;
        while mm >= 2 {
            levels.push(Level::new(mm, a.topology()));
            mm /= 2;
        }
        let n = 4;
        let mut hier = Self {
            levels,
            coarse: DenseLu { n, lu: vec![0.0; n * n], perm: (0..n).collect() },
            params,
        };
        hier.set_coefficient(a)?;
        Ok(hier)
    }

    pub fn params(&self) -> MgParams {
        self.params
    }

    pub fn m(&self) -> usize {
        self.levels[0].m
    }

    pub fn topology(&self) -> Topology {
        self.levels[0].topology
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    /// Replaces the finest-level coefficient and rebuilds the coarse ones.
    pub fn set_coefficient(&mut self, a: &GridField) -> Result<()> {
        self.set_coefficient_slice(a.m(), a.topology(), a.as_slice())
    }

    pub(crate) fn set_coefficient_slice(&mut self, m: usize, topology: Topology, a: &[f64]) -> Result<()> {
        if m != self.m() {
            return Err(Error::ShapeMismatch { expected: self.m(), found: m });
        }
        if topology != self.topology() {
            return Err(argument("topology mismatch"));
        }
        if let Some(bad) = a.iter().find(|x| !(**x >= 0.0) || !x.is_finite()) {
            return Err(argument(format!("coefficient a must be finite and ≥ 0, found {bad}")));
        }
        if topology == Topology::Torus && a.iter().all(|&x| x == 0.0) {
            return Err(config("torus system with a ≡ 0 is singular"));
        }
        self.levels[0].a.copy_from_slice(a);
        self.levels[0].refresh_diag();
        for l in 1..self.levels.len() {
            let (fine, coarse) = self.levels.split_at_mut(l);
            let f = &fine[l - 1];
            let c = &mut coarse[0];
            restrict_into(f.m, f.topology, &f.a, 4.0, &mut c.a);
            c.refresh_diag();
        }
        let last = self.levels.last().expect("at least one level");
        self.coarse = DenseLu::factor(last.m * last.m, &last.dense())?;
        Ok(())
    }

    /// Coefficient stored on `level` (0 = finest).
    pub fn level_coefficient(&self, level: usize) -> Option<GridField> {
        self.levels
            .get(level)
            .map(|l| GridField { m: l.m, topology: l.topology, data: l.a.clone() })
    }

    fn check(&self, v: &GridField, b: &GridField) -> Result<()> {
        for g in [v, b] {
            if g.m() != self.m() {
                return Err(Error::ShapeMismatch { expected: self.m(), found: g.m() });
            }
            if g.topology() != self.topology() {
                return Err(argument("topology mismatch"));
            }
        }
        Ok(())
    }

    /// One V-cycle on the finest level.
    pub fn v_cycle(&mut self, v: &mut GridField, b: &GridField) -> Result<()> {
        self.v_cycle_at(0, v, b)
    }

    /// One V-cycle for the system stored at `level`.
    pub fn v_cycle_at(&mut self, level: usize, v: &mut GridField, b: &GridField) -> Result<()> {
        let Some(l) = self.levels.get(level) else {
            return Err(argument(format!("level {level} out of range (depth {})", self.depth())));
        };
        if v.m() != l.m || b.m() != l.m {
            return Err(Error::ShapeMismatch { expected: l.m, found: v.m().max(b.m()) });
        }
        let lv = &mut self.levels[level];
        lv.v.copy_from_slice(v.as_slice());
        lv.b.copy_from_slice(b.as_slice());
        cycle(&mut self.levels[level..], &self.coarse, &self.params);
        v.as_mut_slice().copy_from_slice(&self.levels[level].v);
        Ok(())
    }

    /// Runs cycles on `v` in place.
    pub fn solve(&mut self, v: &mut GridField, b: &GridField, control: SolveControl) -> Result<usize> {
        self.check(v, b)?;
        self.solve_slices(v.as_mut_slice(), b.as_slice(), control, |_| {})
    }

    /// Slice-level solve; `on_cycle` receives the residual norm after each
    /// cycle when a tolerance is used, and is not called otherwise.
    pub(crate) fn solve_slices(
        &mut self,
        v: &mut [f64],
        b: &[f64],
        control: SolveControl,
        mut on_cycle: impl FnMut(f64),
    ) -> Result<usize> {
        let l0 = &mut self.levels[0];
        l0.v.copy_from_slice(v);
        l0.b.copy_from_slice(b);
        let done = match control {
            SolveControl::Cycles(n) => {
                for _ in 0..n {
                    cycle(&mut self.levels, &self.coarse, &self.params);
                }
                n
            }
            SolveControl::Tolerance { tol, max_cycles } => {
                let mut k = 0;
                loop {
                    let r = self.finest_residual_norm();
                    if r <= tol {
                        break;
                    }
                    if k == max_cycles {
                        return Err(config(format!(
                            "multigrid did not reach tolerance {tol:e} in {max_cycles} cycles (residual {r:e})"
                        )));
                    }
                    cycle(&mut self.levels, &self.coarse, &self.params);
                    k += 1;
                    on_cycle(r);
                }
                k
            }
        };
        v.copy_from_slice(&self.levels[0].v);
        Ok(done)
    }

    fn finest_residual_norm(&self) -> f64 {
        let l = &self.levels[0];
        residual_max(l.m, l.topology, &l.diag, &l.v, &l.b, &l.zeros)
    }

    /// ‖b − A v‖∞ on the finest level.
    pub fn residual_norm(&self, v: &GridField, b: &GridField) -> Result<f64> {
        self.check(v, b)?;
        Ok(self.residual_norm_slices(v.as_slice(), b.as_slice()))
    }

    pub(crate) fn residual_norm_slices(&self, v: &[f64], b: &[f64]) -> f64 {
        let l = &self.levels[0];
        residual_max(l.m, l.topology, &l.diag, v, b, &l.zeros)
    }

    /// Runs `n` cycles on slices. With `track`, pushes the max-norm residual
    /// before the first cycle and after each one onto `history`.
    /// Cycles until the max-norm residual is at most `tol` or `max` cycles ran.
    pub(crate) fn cycles_until(&mut self, v: &mut [f64], b: &[f64], tol: f64, max: usize) -> usize {
        let l0 = &mut self.levels[0];
        l0.v.copy_from_slice(v);
        l0.b.copy_from_slice(b);
        let mut n = 0;
        while n < max && self.finest_residual_norm() > tol {
            cycle(&mut self.levels, &self.coarse, &self.params);
            n += 1;
        }
        v.copy_from_slice(&self.levels[0].v);
        n
    }

    pub(crate) fn cycles_tracked(&mut self, v: &mut [f64], b: &[f64], n: usize, track: bool, history: &mut Vec<f64>) {
        let l0 = &mut self.levels[0];
        l0.v.copy_from_slice(v);
        l0.b.copy_from_slice(b);
        if track {
            history.push(self.finest_residual_norm());
        }
        for _ in 0..n {
            cycle(&mut self.levels, &self.coarse, &self.params);
            if track {
                history.push(self.finest_residual_norm());
            }
        }
        v.copy_from_slice(&self.levels[0].v);
    }
}

/// Recursive cycle on `levels[0]` using `levels[0].v` and `levels[0].b`.
fn cycle(levels: &mut [Level], coarse_lu: &DenseLu, p: &MgParams) {
    let (fine, rest) = levels.split_first_mut().expect("non-empty hierarchy");
    if rest.is_empty() {
        coarse_lu.solve(&fine.b, &mut fine.v);
        return;
    }
    fine.smooth(p.omega, p.pre_smooth);
    fine.residual();
    {
        let coarse = &mut rest[0];
        restrict_into(fine.m, fine.topology, &fine.scratch, 4.0, &mut coarse.b);
        coarse.v.fill(0.0);
    }
    for _ in 0..p.coarse_cycles {
        cycle(rest, coarse_lu, p);
        // the 2×2 level is exact after one solve
        if rest.len() == 1 {
            break;
        }
    }
    prolong_into(rest[0].m, rest[0].topology, &rest[0].v, &mut fine.v, true);
    fine.smooth(p.omega, p.post_smooth);
}
