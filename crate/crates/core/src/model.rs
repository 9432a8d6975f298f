use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;

/// Quadrature tolerance used for atom-aware integrals of a [`MixedLaw`].
pub const LAW_QUAD_TOL: f64 = 1e-12;

/// Switching rate, speed and horizon of a telegraph process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    lambda: f64,
    c: f64,
    t: f64,
    #[serde(skip)]
    ct: f64,
}

impl ModelParams {
    pub fn new(lambda: f64, c: f64, t: f64) -> Result<Self> {
        for (name, v) in [("lambda", lambda), ("c", c), ("t", t)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParams(format!(
                    "{name} must be finite and > 0, got {v}"
                )));
            }
        }
        Ok(Self {
            lambda,
            c,
            t,
            ct: c * t,
        })
    }

    /// Kac scaling: `lambda = alpha`, `c = sqrt(alpha)`.
    pub fn kac(alpha: f64, t: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidParams(format!("alpha must be > 0, got {alpha}")));
        }
        Self::new(alpha, alpha.sqrt(), t)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// Support bound `c t`.
    pub fn ct(&self) -> f64 {
        self.ct
    }

    /// `lambda t`, the mean number of switches.
    pub fn lt(&self) -> f64 {
        self.lambda * self.t
    }

    /// Same rate and speed, different horizon.
    pub fn with_horizon(&self, t: f64) -> Result<Self> {
        Self::new(self.lambda, self.c, t)
    }
}

impl fmt::Display for ModelParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "lambda={}, c={}, t={}", self.lambda, self.c, self.t)
    }
}

/// Sign of a velocity; the magnitude is always `c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Velocity {
    Plus,
    Minus,
}

impl Velocity {
    pub fn sign(self) -> f64 {
        match self {
            Velocity::Plus => 1.0,
            Velocity::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Velocity::Plus => Velocity::Minus,
            Velocity::Minus => Velocity::Plus,
        }
    }

    pub const BOTH: [Velocity; 2] = [Velocity::Plus, Velocity::Minus];
}

/// Initial condition of the unconditioned process.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InitialVelocity {
    Fixed(Velocity),
    /// `V(0) = ±c` with probability 1/2 each.
    Symmetric,
}

impl From<Velocity> for InitialVelocity {
    fn from(v: Velocity) -> Self {
        InitialVelocity::Fixed(v)
    }
}

/// A point value of a law that may be a density or an atom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LawValue {
    Density(f64),
    Atom(f64),
}

impl LawValue {
    pub fn density(self) -> Option<f64> {
        match self {
            LawValue::Density(d) => Some(d),
            LawValue::Atom(_) => None,
        }
    }

    pub fn atom(self) -> Option<f64> {
        match self {
            LawValue::Atom(m) => Some(m),
            LawValue::Density(_) => None,
        }
    }

    pub fn value(self) -> f64 {
        match self {
            LawValue::Density(v) | LawValue::Atom(v) => v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub location: f64,
    pub mass: f64,
}

type DensityFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A law made of finitely many atoms plus a density on an interval.
///
/// Integrals split at every atom location and every registered breakpoint,
/// so quadrature never straddles an atom or a branch change of the density.
#[derive(Clone)]
pub struct MixedLaw {
    atoms: Vec<Atom>,
    support: (f64, f64),
    density: DensityFn,
    breakpoints: Vec<f64>,
}

impl fmt::Debug for MixedLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MixedLaw")
            .field("atoms", &self.atoms)
            .field("support", &self.support)
            .field("breakpoints", &self.breakpoints)
            .finish_non_exhaustive()
    }
}

impl MixedLaw {
    pub fn new<F>(atoms: Vec<Atom>, support: (f64, f64), density: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            atoms,
            support,
            density: Arc::new(density),
            breakpoints: Vec::new(),
        }
    }

    pub fn with_breakpoints(mut self, points: impl IntoIterator<Item = f64>) -> Self {
        self.breakpoints.extend(points);
        self
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    /// Density of the continuous part; zero off the support.
    pub fn density(&self, x: f64) -> f64 {
        let (a, b) = self.support;
        if x < a || x > b {
            0.0
        } else {
            (self.density)(x)
        }
    }

    pub fn atom_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }

    fn panels(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut pts: Vec<f64> = std::iter::once(lo)
            .chain(self.atoms.iter().map(|a| a.location))
            .chain(self.breakpoints.iter().copied())
            .chain(std::iter::once(hi))
            .filter(|p| *p >= lo && *p <= hi)
            .collect();
        pts.sort_by(|a, b| a.partial_cmp(b).expect("NaN breakpoint"));
        pts.dedup();
        pts
    }

    /// `∫ g(x) density(x) dx` over `[lo, hi] ∩ support`.
    pub fn integrate_density<G: Fn(f64) -> f64>(&self, g: G, lo: f64, hi: f64) -> f64 {
        let lo = lo.max(self.support.0);
        let hi = hi.min(self.support.1);
        if hi <= lo {
            return 0.0;
        }
        let pts = self.panels(lo, hi);
        quad::integrate_pieces(|x| g(x) * (self.density)(x), &pts, LAW_QUAD_TOL)
    }

    pub fn continuous_mass(&self) -> f64 {
        self.integrate_density(|_| 1.0, self.support.0, self.support.1)
    }

    pub fn total_mass(&self) -> f64 {
        self.atom_mass() + self.continuous_mass()
    }

    /// `E[g(X)]` counting atoms and density.
    pub fn expect<G: Fn(f64) -> f64>(&self, g: G) -> f64 {
        let atoms: f64 = self.atoms.iter().map(|a| a.mass * g(a.location)).sum();
        atoms + self.integrate_density(&g, self.support.0, self.support.1)
    }

    pub fn expect_complex<G: Fn(f64) -> Complex64>(&self, g: G) -> Complex64 {
        let re = self.expect(|x| g(x).re);
        let im = self.expect(|x| g(x).im);
        Complex64::new(re, im)
    }

    /// `P{X <= x}` by quadrature; atoms at `x` are included.
    pub fn cdf(&self, x: f64) -> f64 {
        let atoms: f64 = self
            .atoms
            .iter()
            .filter(|a| a.location <= x)
            .map(|a| a.mass)
            .sum();
        (atoms + self.integrate_density(|_| 1.0, self.support.0, x)).clamp(0.0, 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_validate() {
        assert!(ModelParams::new(1.0, 1.0, 1.0).is_ok());
        assert!(ModelParams::new(0.0, 1.0, 1.0).is_err());
        assert!(ModelParams::new(1.0, -1.0, 1.0).is_err());
        assert!(ModelParams::new(1.0, 1.0, f64::NAN).is_err());
        let p = ModelParams::new(2.0, 0.5, 3.0).unwrap();
        assert_eq!(p.ct(), 1.5);
        assert_eq!(p.lt(), 6.0);
        let k = ModelParams::kac(16.0, 1.0).unwrap();
        assert_eq!(k.c(), 4.0);
        assert!(ModelParams::kac(-1.0, 1.0).is_err());
    }

    #[test]
    fn mixed_law_uniform_plus_atom() {
        let law = MixedLaw::new(
            vec![Atom {
                location: 1.0,
                mass: 0.5,
            }],
            (0.0, 1.0),
            |_| 0.5,
        );
        assert!((law.total_mass() - 1.0).abs() < 1e-14);
        assert!((law.cdf(0.5) - 0.25).abs() < 1e-14);
        assert!((law.cdf(1.0) - 1.0).abs() < 1e-14);
        assert!((law.expect(|x| x) - 0.75).abs() < 1e-14);
        assert_eq!(law.density(2.0), 0.0);
    }
}
