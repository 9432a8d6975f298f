use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::model::ModelParams;
use crate::quad::{self, integrate_doubling};
use crate::special::{bessel_i_scaled, sinhc};
use crate::telegraph::nonneg_min_prob;

const GUARD: f64 = 1e-9;
const CONV_NODES: usize = 256;
const CONV_TOL: f64 = 1e-10;

/// A frequency `γ` with `|γ| <= (1 - 1e-9)·λ/c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyArg {
    gamma: f64,
}

impl FrequencyArg {
    pub fn new(params: &ModelParams, gamma: f64) -> Result<Self> {
        let bound = (1.0 - GUARD) * params.lambda() / params.c();
        if !(gamma.abs() <= bound) {
            return domain(format!("|gamma| = {} exceeds (1 - 1e-9)·lambda/c = {bound}", gamma.abs()));
        }
        Ok(Self { gamma })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

/// `sinh(sκ)/κ`, `cosh(sκ)` for `κ² = λ² - c²γ²` of either sign, each times `e^{-λs}`.
#[derive(Debug, Clone, Copy)]
struct Hyperbolic {
    kappa2: f64,
    lambda: f64,
}

impl Hyperbolic {
    fn sinh_over(&self, s: f64) -> f64 {
        if self.kappa2 >= 0.0 {
            let k = self.kappa2.sqrt();
            s * sinhc(s * k) * (-self.lambda * s).exp()
        } else {
            let w = (-self.kappa2).sqrt();
            let y = s * w;
            let sinc = if y.abs() < 1e-3 { 1.0 - y * y / 6.0 } else { y.sin() / y };
            s * sinc * (-self.lambda * s).exp()
        }
    }

    fn cosh(&self, s: f64) -> f64 {
        if self.kappa2 >= 0.0 {
            let k = self.kappa2.sqrt();
            // cosh(sκ) e^{-λs} without overflow
            0.5 * ((s * (k - self.lambda)).exp() + (-s * (k + self.lambda)).exp())
        } else {
            (s * (-self.kappa2).sqrt()).cos() * (-self.lambda * s).exp()
        }
    }
}

fn scaled_i0(x: f64) -> f64 {
    bessel_i_scaled(0.0, x).expect("argument is nonnegative")
}

/// `e^{-λt} G(γ, t)` and `e^{-λt} ∂ₜG(γ, t)`.
fn g_scaled(params: &ModelParams, gamma: f64) -> (Complex64, Complex64) {
    let (lambda, c, t) = (params.lambda(), params.c(), params.t());
    let h = Hyperbolic {
        kappa2: lambda * lambda - c * c * gamma * gamma,
        lambda,
    };
    let conv_g = if gamma == 0.0 {
        0.0
    } else {
        integrate_doubling(
            |s| h.sinh_over(s) * scaled_i0(lambda * (t - s)),
            0.0,
            t,
            CONV_NODES,
            CONV_TOL,
        )
    };
    let conv_gt = if gamma == 0.0 {
        0.0
    } else {
        integrate_doubling(
            |s| h.cosh(t - s) * scaled_i0(lambda * s),
            0.0,
            t,
            CONV_NODES,
            CONV_TOL,
        )
    };
    let g = Complex64::new(c * h.sinh_over(t), c * c * gamma * conv_g);
    let gt = Complex64::new(c * h.cosh(t), c * c * gamma * conv_gt);
    (g, gt)
}

/// `G(γ, t) = ∫_0^{ct} e^{iγx} I_0((λ/c)√(c²t² − x²)) dx`, from the
/// closed sinh term and a sinh–`I_0` convolution.
pub fn g_integral(params: &ModelParams, gamma: FrequencyArg) -> Complex64 {
    g_scaled(params, gamma.gamma).0 * params.lt().exp()
}

/// `G(γ, t)` by direct adaptive quadrature of its defining integral.
pub fn g_integral_direct(params: &ModelParams, gamma: f64) -> Complex64 {
    let (lambda, c, ct) = (params.lambda(), params.c(), params.ct());
    let i0 = |x: f64| {
        let z = lambda / c * ((ct - x) * (ct + x)).max(0.0).sqrt();
        scaled_i0(z) * z.exp()
    };
    let re = quad::integrate(|x| (gamma * x).cos() * i0(x), 0.0, ct, 1e-13);
    let im = quad::integrate(|x| (gamma * x).sin() * i0(x), 0.0, ct, 1e-13);
    Complex64::new(re, im)
}

/// `∫_0^{ct} cos(γx) I_0((λ/c)√(c²t² − x²)) dx = c·sinh(tκ)/κ`, `κ = √(λ² − c²γ²)`.
pub fn cosine_integral(params: &ModelParams, gamma: FrequencyArg) -> f64 {
    let (lambda, c, t) = (params.lambda(), params.c(), params.t());
    let h = Hyperbolic {
        kappa2: lambda * lambda - c * c * gamma.gamma * gamma.gamma,
        lambda,
    };
    c * h.sinh_over(t) * params.lt().exp()
}

fn charfn_from_scaled(params: &ModelParams, gamma: f64) -> Complex64 {
    if gamma == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    let (lambda, c) = (params.lambda(), params.c());
    let (g, gt) = g_scaled(params, gamma);
    let i = Complex64::i();
    let num = i * gt - i * c * scaled_i0(params.lt()) + Complex64::new(c * gamma, lambda) * g;
    Complex64::new(1.0, 0.0) + gamma * num / (lambda * nonneg_min_prob(params))
}

/// Characteristic function `E[e^{iγ T⁺(t)}]` for `|γ| < λ/c`.
pub fn meander_charfn(params: &ModelParams, gamma: FrequencyArg) -> Complex64 {
    charfn_from_scaled(params, gamma.gamma)
}

/// Experimental: the same expression for any real `γ`, with `sinh`/`cosh`
/// replaced by `sin`/`cos` once `c|γ| > λ`.
pub fn meander_charfn_continued(params: &ModelParams, gamma: f64) -> Complex64 {
    charfn_from_scaled(params, gamma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meander::endpoint::meander_endpoint_law;
    use crate::meander::moments::meander_mean;

    fn unit() -> ModelParams {
        ModelParams::new(1.0, 1.0, 1.0).unwrap()
    }

    fn by_quadrature(params: &ModelParams, gamma: f64) -> Complex64 {
        meander_endpoint_law(params).expect_complex(|x| Complex64::new(0.0, gamma * x).exp())
    }

    #[test]
    fn guard() {
        let p = ModelParams::new(2.0, 4.0, 1.0).unwrap();
        assert!(FrequencyArg::new(&p, 0.4999).is_ok());
        assert!(FrequencyArg::new(&p, 0.5).is_err());
        assert!(FrequencyArg::new(&p, -0.6).is_err());
        assert!(FrequencyArg::new(&p, f64::NAN).is_err());
    }

    #[test]
    fn g_at_zero_and_against_quadrature() {
        let p = unit();
        let g0 = g_integral(&p, FrequencyArg::new(&p, 0.0).unwrap());
        assert!((g0.re - 1f64.sinh()).abs() < 1e-13 && g0.im == 0.0);
        for gamma in [0.5, -0.3, 0.9] {
            let g = g_integral(&p, FrequencyArg::new(&p, gamma).unwrap());
            let d = g_integral_direct(&p, gamma);
            assert!((g - d).norm() < 1e-10, "gamma={gamma}: {g} vs {d}");
        }
        let edge = FrequencyArg::new(&p, 1.0 - 1e-9).unwrap();
        assert!((cosine_integral(&p, edge) - p.ct()).abs() < 1e-8);
    }

    #[test]
    fn charfn_matches_law() {
        for p in [unit(), ModelParams::new(2.0, 0.5, 3.0).unwrap()] {
            let bound = p.lambda() / p.c();
            for frac in [0.0, 0.3, -0.3, 0.9, -0.9] {
                let gamma = frac * bound;
                let phi = meander_charfn(&p, FrequencyArg::new(&p, gamma).unwrap());
                assert!((phi - by_quadrature(&p, gamma)).norm() < 1e-9, "{p} gamma={gamma}");
            }
        }
    }

    #[test]
    fn derivative_at_zero_is_the_mean() {
        let p = unit();
        let h = 1e-4;
        let f = |g: f64| meander_charfn(&p, FrequencyArg::new(&p, g).unwrap());
        let d = (f(h) - f(-h)) / (2.0 * h);
        assert!((d.im - meander_mean(&p)).abs() < 1e-7);
    }

    #[test]
    fn continuation_agrees_beyond_the_strip() {
        let p = unit();
        for gamma in [1.0, 1.5, 4.0, -2.5] {
            let phi = meander_charfn_continued(&p, gamma);
            assert!((phi - by_quadrature(&p, gamma)).norm() < 1e-8, "gamma={gamma}");
        }
    }
}
