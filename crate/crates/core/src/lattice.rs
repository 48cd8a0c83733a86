//! Rational directions q = (m1 σ, m2 σ) and the oscillation scale ε that
//! keeps the rotated coefficient 1-periodic across the front.

use crate::error::{argument, Result};

pub fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Splits (m1, m2) into a coprime pair and the gcd.
pub fn reduce(m1: i64, m2: i64) -> Result<([i64; 2], i64)> {
    if m1 == 0 && m2 == 0 {
        return Err(argument("zero direction"));
    }
    let g = gcd(m1, m2);
    Ok(([m1 / g, m2 / g], g))
}

/// Smallest s > 0 with s ζ⊥ ∈ ℤ² for a coprime direction: (m1² + m2²)^½.
pub fn minimal_period(m1: i64, m2: i64) -> Result<f64> {
    if m1 == 0 && m2 == 0 {
        return Err(argument("zero direction"));
    }
    if gcd(m1, m2) != 1 {
        return Err(argument(format!("({m1}, {m2}) is not coprime")));
    }
    Ok(norm(m1, m2))
}

fn norm(m1: i64, m2: i64) -> f64 {
    ((m1 * m1 + m2 * m2) as f64).sqrt()
}

/// ζ = −q/|q| and ζ⊥ = (−ζ2, ζ1). The canonical case q = (q1, 0), q1 < 0
/// yields the identity frame.
pub fn frame(q: [f64; 2]) -> Result<([f64; 2], [f64; 2])> {
    let mag = q[0].hypot(q[1]);
    if !(mag > 0.0) {
        return Err(argument("zero direction"));
    }
    let zeta = [-q[0] / mag, -q[1] / mag];
    Ok((zeta, [-zeta[1], zeta[0]]))
}

/// d = max(1, round(9M / (64 |m|))), rounding half away from zero.
pub fn resolution_multiplier(m1: i64, m2: i64, grid: usize) -> Result<u64> {
    if m1 == 0 && m2 == 0 {
        return Err(argument("zero direction"));
    }
    let d = (9.0 * grid as f64 / (64.0 * norm(m1, m2))).round();
    Ok((d as u64).max(1))
}

fn check_grid(grid: usize) -> Result<()> {
    if grid < 2 || !grid.is_power_of_two() {
        return Err(argument(format!("grid size must be a power of two ≥ 2, got {grid}")));
    }
    Ok(())
}

/// ε = gcd(m1, m2) / (d |m|): the coarsest admissible scale for this d.
pub fn choose_epsilon(m1: i64, m2: i64, grid: usize) -> Result<(f64, u64)> {
    check_grid(grid)?;
    let d = resolution_multiplier(m1, m2, grid)?;
    let g = gcd(m1, m2) as f64;
    Ok((g / (d as f64 * norm(m1, m2)), d))
}

/// ε = 1 / (d |m|) with d computed from the unreduced indices, so that
/// neighbouring sweep points get similar ε.
pub fn sweep_epsilon(m1: i64, m2: i64, grid: usize) -> Result<(f64, u64)> {
    check_grid(grid)?;
    let d = resolution_multiplier(m1, m2, grid)?;
    Ok((1.0 / (d as f64 * norm(m1, m2)), d))
}

/// How ε is picked for a [`Direction`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpsilonRule {
    /// [`sweep_epsilon`] for grid size M.
    Sweep(usize),
    /// [`choose_epsilon`] for grid size M.
    Reduced(usize),
    /// ε = 1/n; n must be a multiple of the minimal period.
    Inverse(u64),
}

/// A rational direction with its frame, minimal period and ε.
#[derive(Debug, Clone, PartialEq)]
pub struct Direction {
    pub m1: i64,
    pub m2: i64,
    pub sigma: f64,
    pub q: [f64; 2],
    pub qmag: f64,
    pub gcd: i64,
    pub reduced: [i64; 2],
    pub zeta: [f64; 2],
    pub zeta_perp: [f64; 2],
    pub period: f64,
    pub epsilon: f64,
    pub d: u64,
}

impl Direction {
    pub fn new(m1: i64, m2: i64, sigma: f64, rule: EpsilonRule) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(argument(format!("σ must be positive, got {sigma}")));
        }
        let (reduced, g) = reduce(m1, m2)?;
        let period = minimal_period(reduced[0], reduced[1])?;
        let q = [m1 as f64 * sigma, m2 as f64 * sigma];
        let (zeta, zeta_perp) = frame(q)?;
        let (epsilon, d) = match rule {
            EpsilonRule::Sweep(grid) => sweep_epsilon(m1, m2, grid)?,
            EpsilonRule::Reduced(grid) => choose_epsilon(m1, m2, grid)?,
            EpsilonRule::Inverse(n) => {
                if n == 0 {
                    return Err(argument("1/ε must be positive"));
                }
                let per = n as f64 / period;
                if (per - per.round()).abs() > 1e-9 || per.round() < 1.0 {
                    return Err(argument(format!(
                        "1/ε = {n} is not a multiple of the minimal period {period} of ({m1}, {m2})"
                    )));
                }
                (1.0 / n as f64, per.round() as u64)
            }
        };
        Ok(Self {
            m1,
            m2,
            sigma,
            q,
            qmag: q[0].hypot(q[1]),
            gcd: g,
            reduced,
            zeta,
            zeta_perp,
            period,
            epsilon,
            d,
        })
    }

    /// Direction q = (−|q1|, 0) along the negative x1-axis.
    pub fn axis(qmag: f64, eps_inv: u64) -> Result<Self> {
        Self::new(-1, 0, qmag, EpsilonRule::Inverse(eps_inv))
    }

    /// Number of rotated coefficient periods across the unit x2-interval,
    /// 1/(ε s). Integer for every admissible ε.
    pub fn periods_per_domain(&self) -> f64 {
        1.0 / (self.epsilon * self.period)
    }

    pub fn eps_inv(&self) -> f64 {
        1.0 / self.epsilon
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reduce_examples() {
        assert_eq!(reduce(4, 6).unwrap(), ([2, 3], 2));
        assert_eq!(reduce(1, 0).unwrap(), ([1, 0], 1));
        assert_eq!(reduce(0, -5).unwrap(), ([0, -1], 5));
        assert!(reduce(0, 0).is_err());
    }

    #[test]
    fn minimal_period_examples() {
        assert_eq!(minimal_period(2, 3).unwrap(), 13f64.sqrt());
        assert_eq!(minimal_period(1, 0).unwrap(), 1.0);
        assert!(minimal_period(2, 4).is_err());
    }

    #[test]
    fn minimal_period_brute_force_diagonal() {
        // No candidate s' = (p/q)√2 < √2 with q ≤ 50 puts s' ζ⊥ on the lattice.
        let (_, perp) = frame([1.0, 1.0]).unwrap();
        let s = minimal_period(1, 1).unwrap();
        assert!((s - 2f64.sqrt()).abs() < 1e-15);
        let on_lattice = |v: f64| (v - v.round()).abs() < 1e-3;
        for qd in 1..=50 {
            for p in 1..qd {
                let cand = p as f64 / qd as f64 * s;
                assert!(!(on_lattice(cand * perp[0]) && on_lattice(cand * perp[1])), "{p}/{qd}");
            }
        }
        assert!(on_lattice(s * perp[0]) && on_lattice(s * perp[1]));
    }

    #[test]
    fn epsilon_examples() {
        let (e, d) = choose_epsilon(1, 0, 256).unwrap();
        assert_eq!(d, 36);
        assert!((e - 1.0 / 36.0).abs() < 1e-15);
        let (e, d) = choose_epsilon(1, 1, 256).unwrap();
        assert_eq!(d, 25);
        assert!((e - 1.0 / (25.0 * 2f64.sqrt())).abs() < 1e-15);
        let (e, d) = choose_epsilon(3, 0, 256).unwrap();
        assert_eq!(d, 12);
        assert!((e - 1.0 / 12.0).abs() < 1e-15);
        let (e, _) = sweep_epsilon(3, 0, 256).unwrap();
        assert!((e - 1.0 / 36.0).abs() < 1e-15);
        assert!(choose_epsilon(0, 0, 256).is_err());
        assert!(choose_epsilon(1, 0, 100).is_err());
    }

    #[test]
    fn frame_examples() {
        let (z, p) = frame([-1.0, 0.0]).unwrap();
        assert_eq!((z, p), ([1.0, 0.0], [-0.0, 1.0]));
        let (z, p) = frame([0.0, -2.0]).unwrap();
        assert_eq!(z, [-0.0, 1.0]);
        assert_eq!(p, [-1.0, -0.0]);
        let (z, _) = frame([-1.0, -1.0]).unwrap();
        let r = 1.0 / 2f64.sqrt();
        assert!((z[0] - r).abs() < 1e-15 && (z[1] - r).abs() < 1e-15);
        assert!(frame([0.0, 0.0]).is_err());
    }

    #[test]
    fn axis_direction() {
        let d = Direction::axis(0.7, 32).unwrap();
        assert_eq!(d.q, [-0.7, 0.0]);
        assert_eq!(d.zeta, [1.0, 0.0]);
        assert_eq!(d.epsilon, 1.0 / 32.0);
        assert!(Direction::new(2, 3, 0.1, EpsilonRule::Inverse(32)).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn lattice_invariants(m1 in -64i64..=64, m2 in -64i64..=64, p in 4u32..11) {
            prop_assume!(m1 != 0 || m2 != 0);
            let grid = 1usize << p;
            let (red, g) = reduce(m1, m2).unwrap();
            prop_assert_eq!(gcd(red[0], red[1]), 1);
            prop_assert_eq!([red[0] * g, red[1] * g], [m1, m2]);

            for rule in [EpsilonRule::Sweep(grid), EpsilonRule::Reduced(grid)] {
                let dir = Direction::new(m1, m2, 0.05, rule).unwrap();
                let norm_z = dir.zeta[0].hypot(dir.zeta[1]);
                prop_assert!((norm_z - 1.0).abs() < 1e-12);
                let lat = [dir.period * dir.zeta_perp[0], dir.period * dir.zeta_perp[1]];
                prop_assert!((lat[0] - lat[0].round()).abs() < 1e-9);
                prop_assert!((lat[1] - lat[1].round()).abs() < 1e-9);
                let per = dir.periods_per_domain();
                prop_assert!((per - per.round()).abs() < 1e-9 && per.round() >= 1.0);
            }

            let (e1, _) = sweep_epsilon(m1, m2, grid).unwrap();
            let (e2, _) = sweep_epsilon(-m1, -m2, grid).unwrap();
            prop_assert_eq!(e1, e2);
            let (e1, _) = choose_epsilon(m1, m2, grid).unwrap();
            let (e2, _) = choose_epsilon(-m1, -m2, grid).unwrap();
            prop_assert_eq!(e1, e2);
        }
    }
}
