//! Periodic coefficient fields g(x, t).
//!
//! A field is a constant plus a sum of scaled products of integer-wavevector
//! sinusoids, which keeps it 1-periodic in x1, x2 and t and lets the time
//! derivative of 1/g be evaluated term by term. Rotation and the oscillation
//! scale are stored on the field and applied lazily in [`CoefficientField::eval`].

mod expr;

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use crate::error::{argument, config, Error, Result};

pub use expr::parse_expression;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trig {
    Sin,
    Cos,
}

/// `amplitude * trig(2π(k·x + ω t))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveTerm {
    pub amplitude: f64,
    pub kind: Trig,
    pub k: [i32; 2],
    pub omega: i32,
}

impl WaveTerm {
    pub fn sin(k1: i32, k2: i32, omega: i32) -> Self {
        Self { amplitude: 1.0, kind: Trig::Sin, k: [k1, k2], omega }
    }

    pub fn cos(k1: i32, k2: i32, omega: i32) -> Self {
        Self { amplitude: 1.0, kind: Trig::Cos, k: [k1, k2], omega }
    }

    #[inline]
    fn phase(&self, x: [f64; 2], t: f64) -> f64 {
        TAU * (f64::from(self.k[0]) * x[0] + f64::from(self.k[1]) * x[1] + f64::from(self.omega) * t)
    }

    /// Value and time derivative at (x, t).
    #[inline]
    fn value_and_dt(&self, x: [f64; 2], t: f64) -> (f64, f64) {
        let (s, c) = self.phase(x, t).sin_cos();
        let w = TAU * f64::from(self.omega) * self.amplitude;
        match self.kind {
            Trig::Sin => (self.amplitude * s, w * c),
            Trig::Cos => (self.amplitude * c, -w * s),
        }
    }

    #[inline]
    fn value(&self, x: [f64; 2], t: f64) -> f64 {
        let p = self.phase(x, t);
        match self.kind {
            Trig::Sin => self.amplitude * p.sin(),
            Trig::Cos => self.amplitude * p.cos(),
        }
    }
}

/// `coeff * Π factors`.
#[derive(Debug, Clone, PartialEq)]
pub struct Product {
    pub coeff: f64,
    pub factors: Vec<WaveTerm>,
}

impl Product {
    pub fn new(coeff: f64, factors: Vec<WaveTerm>) -> Self {
        Self { coeff, factors }
    }

    fn magnitude_bound(&self) -> f64 {
        self.factors.iter().fold(self.coeff.abs(), |acc, w| acc * w.amplitude.abs())
    }
}

/// Named coefficients used throughout the experiments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Builtin {
    /// sin(2π(x1 + t)) + 2
    G1,
    /// sin(2π(x1 + t)) + sin(2π(x2 + t)) + 3
    G2,
    /// ½ cos(2πt) (sin(2πx1) + sin(2πx2)) + 2
    G3,
    /// sin(2π(x1 + t)) + sin(2π(x1 + 3t)) + 3
    G4,
    /// sin(2π(x1 − t)) + sin(2π(x1 − 3t)) + 3.
    ///
    /// The double traveling wave written in the frame where the front
    /// advances toward +x1, which is the frame of the 1D front ODE. In the
    /// frame where the front advances toward −x1 this is [`Builtin::G4`].
    Fig1,
    /// sin(2π(x1 + sign·t)) + c
    TravelingWave { c: f64, sign: i8 },
}

impl FromStr for Builtin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "g1" => return Ok(Builtin::G1),
            "g2" => return Ok(Builtin::G2),
            "g3" => return Ok(Builtin::G3),
            "g4" => return Ok(Builtin::G4),
            "fig1" => return Ok(Builtin::Fig1),
            _ => {}
        }
        // tw(c,+1) / tw(c,-1) / tw(c,+) / tw(c,-)
        let inner = s
            .strip_prefix("tw(")
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| config(format!("unknown builtin coefficient '{s}'")))?;
        let (c, sign) = inner
            .split_once(',')
            .ok_or_else(|| config(format!("tw expects tw(c,sign), got '{s}'")))?;
        let c: f64 = c
            .trim()
            .parse()
            .map_err(|_| config(format!("bad tw constant in '{s}'")))?;
        let sign = match sign.trim() {
            "+" | "+1" | "1" => 1,
            "-" | "-1" => -1,
            other => return Err(config(format!("bad tw sign '{other}'"))),
        };
        Ok(Builtin::TravelingWave { c, sign })
    }
}

/// g(x, t) = c + Σ coeff · Π wave, evaluated as g(F x / ε, t / ε).
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField {
    constant: f64,
    terms: Vec<Product>,
    /// Columns are ζ and ζ⊥: `F x = x1 ζ + x2 ζ⊥`.
    frame: [[f64; 2]; 2],
    scale: f64,
}

const IDENTITY: [[f64; 2]; 2] = [[1.0, 0.0], [0.0, 1.0]];

impl CoefficientField {
    /// Builds an unrotated, unscaled field; rejects fields that are not
    /// bounded away from zero.
    pub fn new(constant: f64, terms: Vec<Product>) -> Result<Self> {
        let field = Self { constant, terms, frame: IDENTITY, scale: 1.0 };
        let (lo, _) = field.bounds();
        if !(lo > 0.0) || !lo.is_finite() {
            return Err(config(format!(
                "coefficient is not bounded away from zero (lower bound {lo})"
            )));
        }
        Ok(field)
    }

    pub fn constant(c: f64) -> Result<Self> {
        Self::new(c, Vec::new())
    }

    pub fn builtin(which: Builtin) -> Self {
        use Builtin::*;
        let wave = |k1, k2, w| Product::new(1.0, vec![WaveTerm::sin(k1, k2, w)]);
        let (c, terms) = match which {
            G1 => (2.0, vec![wave(1, 0, 1)]),
            G2 => (3.0, vec![wave(1, 0, 1), wave(0, 1, 1)]),
            G3 => (
                2.0,
                vec![
                    Product::new(0.5, vec![WaveTerm::cos(0, 0, 1), WaveTerm::sin(1, 0, 0)]),
                    Product::new(0.5, vec![WaveTerm::cos(0, 0, 1), WaveTerm::sin(0, 1, 0)]),
                ],
            ),
            G4 => (3.0, vec![wave(1, 0, 1), wave(1, 0, 3)]),
            Fig1 => (3.0, vec![wave(1, 0, -1), wave(1, 0, -3)]),
            TravelingWave { c, sign } => (c, vec![wave(1, 0, i32::from(sign.signum()))]),
        };
        // Builtins with c ≤ 1 would be rejected by `new`; only tw can hit that.
        Self { constant: c, terms, frame: IDENTITY, scale: 1.0 }
    }

    /// Resolves a builtin name (`g1`..`g4`, `fig1`, `tw(c,±1)`) or parses
    /// an expression such as `2 + 0.5*cos(0,0,1)*sin(1,0,0)`.
    pub fn from_spec(spec: &str) -> Result<Self> {
        match spec.parse::<Builtin>() {
            Ok(b) => {
                let field = Self::builtin(b);
                Self::new(field.constant, field.terms)
            }
            Err(_) => parse_expression(spec),
        }
    }

    pub fn constant_term(&self) -> f64 {
        self.constant
    }

    pub fn terms(&self) -> &[Product] {
        &self.terms
    }

    pub fn frame(&self) -> [[f64; 2]; 2] {
        self.frame
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    #[inline]
    fn to_cell(&self, x: [f64; 2], t: f64) -> ([f64; 2], f64) {
        let f = &self.frame;
        let inv = 1.0 / self.scale;
        let p = [
            (f[0][0] * x[0] + f[0][1] * x[1]) * inv,
            (f[1][0] * x[0] + f[1][1] * x[1]) * inv,
        ];
        (p, t * inv)
    }

    /// g(F x / ε, t / ε).
    #[inline]
    pub fn eval(&self, x: [f64; 2], t: f64) -> f64 {
        let (p, s) = self.to_cell(x, t);
        let mut g = self.constant;
        for term in &self.terms {
            let mut prod = term.coeff;
            for w in &term.factors {
                prod *= w.value(p, s);
            }
            g += prod;
        }
        g
    }

    /// ∂/∂t (1/g) = −g_t / g², including the 1/ε chain-rule factor.
    pub fn eval_dt_inv(&self, x: [f64; 2], t: f64) -> f64 {
        let (p, s) = self.to_cell(x, t);
        let mut g = self.constant;
        let mut gt = 0.0;
        let mut vals: Vec<(f64, f64)> = Vec::new();
        for term in &self.terms {
            vals.clear();
            vals.extend(term.factors.iter().map(|w| w.value_and_dt(p, s)));
            let prod: f64 = vals.iter().fold(term.coeff, |acc, v| acc * v.0);
            g += prod;
            // Product rule without dividing by possibly-zero factors.
            for i in 0..vals.len() {
                let mut d = term.coeff * vals[i].1;
                for (j, v) in vals.iter().enumerate() {
                    if j != i {
                        d *= v.0;
                    }
                }
                gt += d;
            }
        }
        -gt / (g * g * self.scale)
    }

    /// Field composed with the frame `x ↦ x1 ζ + x2 ζ⊥`, ζ⊥ = (−ζ2, ζ1).
    pub fn rotated(&self, zeta: [f64; 2]) -> Result<Self> {
        let norm = zeta[0].hypot(zeta[1]);
        if (norm - 1.0).abs() > 1e-12 {
            return Err(argument(format!("rotation vector must be a unit vector, |ζ| = {norm}")));
        }
        let z = [[zeta[0], -zeta[1]], [zeta[1], zeta[0]]];
        let f = &self.frame;
        let mut out = self.clone();
        for r in 0..2 {
            for c in 0..2 {
                out.frame[r][c] = f[r][0] * z[0][c] + f[r][1] * z[1][c];
            }
        }
        Ok(out)
    }

    /// Field evaluated as g(x/ε, t/ε) on top of any existing scale.
    pub fn rescaled(&self, eps: f64) -> Result<Self> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(argument(format!("scale must be positive, got {eps}")));
        }
        let mut out = self.clone();
        out.scale *= eps;
        Ok(out)
    }

    /// Enclosing interval `[c − Σ|a|, c + Σ|a|]` of the range of g.
    pub fn bounds(&self) -> (f64, f64) {
        let spread: f64 = self.terms.iter().map(Product::magnitude_bound).sum();
        (self.constant - spread, self.constant + spread)
    }

    /// True when no term depends on t.
    pub fn is_time_independent(&self) -> bool {
        self.terms.iter().all(|p| p.factors.iter().all(|w| w.omega == 0))
    }
}

impl fmt::Display for CoefficientField {
    /// Prints the unrotated, unscaled expression in the parser's syntax.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.constant)?;
        for term in &self.terms {
            write!(f, " + {}", term.coeff)?;
            for w in &term.factors {
                let name = match w.kind {
                    Trig::Sin => "sin",
                    Trig::Cos => "cos",
                };
                if w.amplitude != 1.0 {
                    write!(f, "*{}", w.amplitude)?;
                }
                write!(f, "*{}({},{},{})", name, w.k[0], w.k[1], w.omega)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn builtin_values() {
        let g1 = CoefficientField::builtin(Builtin::G1);
        close(g1.eval([0.0, 0.0], 0.0), 2.0, 1e-15);
        close(g1.eval([0.25, 0.0], 0.0), 3.0, 1e-15);
        let g2 = CoefficientField::builtin(Builtin::G2);
        close(g2.eval([0.25, 0.25], 0.0), 5.0, 1e-15);
        let g3 = CoefficientField::builtin(Builtin::G3);
        close(g3.eval([0.25, 0.25], 0.0), 3.0, 1e-15);
        close(g3.eval([0.25, 0.25], 0.25), 2.0, 1e-15);
    }

    #[test]
    fn unknown_builtin_is_config_error() {
        assert!(matches!("g9".parse::<Builtin>(), Err(Error::Config(_))));
        assert!(matches!(CoefficientField::from_spec("g9"), Err(Error::Parse { .. })));
    }

    #[test]
    fn traveling_wave_spec() {
        let b: Builtin = "tw(1.05,-)".parse().unwrap();
        assert_eq!(b, Builtin::TravelingWave { c: 1.05, sign: -1 });
        let g = CoefficientField::from_spec("tw(2,-1)").unwrap();
        // sin(2π(x − t)) + 2 at x = 0, t = −¼ ... evaluate at x = ¼, t = 0
        close(g.eval([0.25, 0.0], 0.0), 3.0, 1e-15);
        close(g.eval([0.25, 0.0], 0.25), 2.0, 1e-15);
        assert!(CoefficientField::from_spec("tw(0.5,+)").is_err());
    }

    #[test]
    fn rescale_and_rotate_examples() {
        let g1 = CoefficientField::builtin(Builtin::G1);
        let half = g1.rescaled(0.5).unwrap();
        close(half.eval([0.125, 0.0], 0.0), 3.0, 1e-15);

        // ζ = (0,1): ζ⊥ = (−1,0), so x = (0,¼) maps to (−¼, 0).
        let rot = g1.rotated([0.0, 1.0]).unwrap();
        close(rot.eval([0.0, 0.25], 0.0), 1.0, 1e-15);
        // ζ = (0,−1): ζ⊥ = (1,0), so x = (0,¼) maps to (¼, 0).
        let rot = g1.rotated([0.0, -1.0]).unwrap();
        close(rot.eval([0.0, 0.25], 0.0), 3.0, 1e-15);

        let c = CoefficientField::constant(2.0).unwrap();
        close(c.eval([0.3, 0.7], 1.3), 2.0, 0.0);
    }

    #[test]
    fn identity_frame_and_unit_scale_are_no_ops() {
        let g = CoefficientField::builtin(Builtin::G3);
        let r = g.rotated([1.0, 0.0]).unwrap().rescaled(1.0).unwrap();
        for &(x1, x2, t) in &[(0.1, 0.2, 0.3), (0.7, 0.05, 1.9), (-3.2, 4.4, 0.0)] {
            assert_eq!(g.eval([x1, x2], t), r.eval([x1, x2], t));
        }
    }

    #[test]
    fn non_unit_rotation_rejected() {
        let g = CoefficientField::builtin(Builtin::G1);
        assert!(matches!(g.rotated([1.0, 1.0]), Err(Error::Argument(_))));
        assert!(g.rescaled(0.0).is_err());
    }

    #[test]
    fn dt_inv_examples() {
        let c = CoefficientField::constant(2.0).unwrap();
        assert_eq!(c.eval_dt_inv([0.3, 0.1], 0.4), 0.0);

        let g1 = CoefficientField::builtin(Builtin::G1);
        close(g1.eval_dt_inv([0.0, 0.0], 0.0), -PI / 2.0, 1e-14);
        // central difference of 1/g
        let dt = 1e-6;
        let fd = (1.0 / g1.eval([0.0, 0.0], dt) - 1.0 / g1.eval([0.0, 0.0], -dt)) / (2.0 * dt);
        close(fd, -PI / 2.0, 1e-6);

        let q = g1.rescaled(0.25).unwrap();
        close(q.eval_dt_inv([0.0, 0.0], 0.0), -2.0 * PI, 1e-13);
    }

    #[test]
    fn dt_inv_second_order_consistency() {
        // Richardson slope of the central difference error.
        for b in [Builtin::G1, Builtin::G2, Builtin::G3, Builtin::G4, Builtin::Fig1] {
            let g = CoefficientField::builtin(b);
            let x = [0.137, 0.611];
            let t = 0.29;
            let exact = g.eval_dt_inv(x, t);
            let err = |dt: f64| {
                let fd = (1.0 / g.eval(x, t + dt) - 1.0 / g.eval(x, t - dt)) / (2.0 * dt);
                (fd - exact).abs()
            };
            let (e1, e2) = (err(1e-3), err(5e-4));
            let slope = (e1 / e2).log2();
            assert!(slope >= 1.9, "{b:?}: slope {slope} ({e1:e}, {e2:e})");
        }
    }

    #[test]
    fn bounds_examples() {
        assert_eq!(CoefficientField::builtin(Builtin::G1).bounds(), (1.0, 3.0));
        assert_eq!(CoefficientField::builtin(Builtin::G2).bounds(), (1.0, 5.0));
        assert_eq!(CoefficientField::builtin(Builtin::G3).bounds(), (1.0, 3.0));
    }

    #[test]
    fn g3_bounds_contain_sampled_range() {
        let g = CoefficientField::builtin(Builtin::G3);
        let (lo, hi) = g.bounds();
        let n = 256;
        let (mut mn, mut mx) = (f64::INFINITY, f64::NEG_INFINITY);
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let v = g.eval([a as f64 / n as f64, b as f64 / n as f64], c as f64 / n as f64);
                    mn = mn.min(v);
                    mx = mx.max(v);
                }
            }
        }
        assert!(lo <= mn && mx <= hi, "[{mn}, {mx}] not in [{lo}, {hi}]");
    }

    #[test]
    fn rejects_nonpositive_field() {
        let r = CoefficientField::new(1.0, vec![Product::new(1.0, vec![WaveTerm::sin(1, 0, 0)])]);
        assert!(matches!(r, Err(Error::Config(_))));
    }

    #[test]
    fn display_round_trips_through_parser() {
        for b in [Builtin::G1, Builtin::G2, Builtin::G3, Builtin::G4, Builtin::Fig1] {
            let g = CoefficientField::builtin(b);
            let back = parse_expression(&g.to_string()).unwrap();
            for &(x1, x2, t) in &[(0.1, 0.2, 0.3), (0.7, 0.05, 1.9)] {
                close(g.eval([x1, x2], t), back.eval([x1, x2], t), 1e-14);
            }
        }
    }
}
