//! Dense reference solutions for the multigrid tests.
#![allow(dead_code)]

use hsfront::multigrid::{GridField, Topology};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

/// Dense matrix and right-hand side of `a u − h²Δu = f`, written out node by
/// node from the stencil with the ghost node folded into the right-hand side.
pub fn dense_system(a: &GridField, f: &GridField, q1: f64) -> (DMatrix<f64>, DVector<f64>) {
    let m = a.m();
    let n = m * m;
    let h = 1.0 / m as f64;
    let idx = |i: usize, j: usize| i * m + j;
    let mut mat = DMatrix::<f64>::zeros(n, n);
    let mut rhs = DVector::<f64>::zeros(n);
    for i in 0..m {
        for j in 0..m {
            let k = idx(i, j);
            mat[(k, k)] += 4.0 + a[(i, j)];
            rhs[k] = f[(i, j)];
            mat[(k, idx(i, (j + 1) % m))] -= 1.0;
            mat[(k, idx(i, (j + m - 1) % m))] -= 1.0;
            match a.topology() {
                Topology::Torus => {
                    mat[(k, idx((i + 1) % m, j))] -= 1.0;
                    mat[(k, idx((i + m - 1) % m, j))] -= 1.0;
                }
                Topology::Strip => {
                    if i + 1 < m {
                        mat[(k, idx(i + 1, j))] -= 1.0;
                    }
                    if i == 0 {
                        // ghost u₋₁ = u₁ − 2 q₁ h
                        mat[(k, idx(1, j))] -= 1.0;
                        rhs[k] -= 2.0 * q1 * h;
                    } else {
                        mat[(k, idx(i - 1, j))] -= 1.0;
                    }
                }
            }
        }
    }
    (mat, rhs)
}

pub fn dense_solve(a: &GridField, f: &GridField, q1: f64) -> Vec<f64> {
    let (mat, rhs) = dense_system(a, f, q1);
    mat.lu().solve(&rhs).expect("dense system is nonsingular").iter().copied().collect()
}

pub fn random_instance(rng: &mut impl Rng, m: usize, topology: Topology) -> (GridField, GridField, f64) {
    let jumpy = rng.gen_bool(0.5);
    let a = GridField::from_fn(m, topology, |_, _| {
        if jumpy && rng.gen_bool(0.5) {
            rng.gen_range(5.0..50.0)
        } else {
            rng.gen_range(0.05..1.0)
        }
    });
    let f = GridField::from_fn(m, topology, |_, _| rng.gen_range(-1.0..1.0));
    let q1 = match topology {
        Topology::Strip => rng.gen_range(-2.0..2.0),
        Topology::Torus => 0.0,
    };
    (a, f, q1)
}
