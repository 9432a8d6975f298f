use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::model::ModelParams;
use crate::special::{bessel_i, bessel_i_scaled, gamma_fn};
use crate::telegraph::nonneg_min_prob;

/// A moment order `p > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentOrder(f64);

impl MomentOrder {
    pub fn new(p: f64) -> Result<Self> {
        if !(p > 0.0) || !p.is_finite() {
            return domain(format!("moment order must be > 0, got {p}"));
        }
        Ok(Self(p))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// `E[T⁺(t)^p]` in closed form.
///
/// The two bracketed terms cancel to leading order as `λt -> 0`, so relative
/// accuracy degrades like `ε/(λt)` for very small `λt`.
pub fn meander_moment(params: &ModelParams, p: f64) -> Result<f64> {
    let p = MomentOrder::new(p)?.value();
    let lt = params.lt();
    let scale = (2.0 * params.c() * params.c() * params.t() / params.lambda()).powf(0.5 * p);
    let h = 0.5 * p;
    let bracket = gamma_fn(h + 1.0)? * (bessel_i_scaled(h, lt)? + bessel_i_scaled(h - 1.0, lt)?)
        - h * gamma_fn(0.5 * (p + 1.0))? * (2.0 / lt).sqrt() * bessel_i_scaled(0.5 * (p - 1.0), lt)?;
    Ok(scale * bracket / nonneg_min_prob(params))
}

/// `E[T⁺(t)] = c(e^{λt} − I_0(λt)) / (λ(I_0(λt) + I_1(λt)))`.
pub fn meander_mean(params: &ModelParams) -> f64 {
    let lt = params.lt();
    let i0 = bessel_i_scaled(0.0, lt).expect("lambda t > 0");
    params.c() * (1.0 - i0) / (params.lambda() * nonneg_min_prob(params))
}

/// `Var[T⁺(t)]` from the closed second-moment expression.
pub fn meander_variance(params: &ModelParams) -> f64 {
    let (lambda, c) = (params.lambda(), params.c());
    let lt = params.lt();
    let i0 = bessel_i_scaled(0.0, lt).expect("lambda t > 0");
    let i1 = bessel_i_scaled(1.0, lt).expect("lambda t > 0");
    let e2 = (-2.0 * lt).exp();
    let (sinh, cosh) = (0.5 * (1.0 - e2), 0.5 * (1.0 + e2));
    let s = i0 + i1;
    2.0 * params.t() * c * c / lambda
        - c * c * (i0 * i0 + 1.0 + 2.0 * (i1 * sinh - i0 * cosh)) / (lambda * lambda * s * s)
}

/// `∫_0^{ct} x^p I_0((λ/c)√(c²t² − x²)) dx` in closed form.
pub fn moment_integral_identity(params: &ModelParams, p: f64) -> Result<f64> {
    let p = MomentOrder::new(p)?.value();
    let a = 0.5 * (p + 1.0);
    let scale = (2.0 * params.c() * params.c() * params.t() / params.lambda()).powf(a);
    Ok(0.5 * gamma_fn(a)? * scale * bessel_i(a, params.lt())?)
}
