//! Damped Bessel terms of the light-cone argument `z = (lambda/c) sqrt(c²t² − x²)`.
//!
//! All laws carry a factor `e^{-lambda t}` in front of `I_nu(z)`. Since
//! `z <= lambda t`, the product `e^{-lambda t} I_nu(z) = e^{z - lambda t} · e^{-z} I_nu(z)`
//! is computed from a damping factor in `(0, 1]` times a scaled Bessel value,
//! which never overflows.

use crate::model::ModelParams;
use crate::special::bessel_i_over_pow_scaled;

#[derive(Debug, Clone, Copy)]
pub(crate) struct ConeKernel {
    /// `e^{-λt} I_0(z)`
    pub e_i0: f64,
    /// `e^{-λt} I_1(z) / z`
    pub e_i1z: f64,
    /// `e^{-λt} I_2(z) / z²`
    pub e_i2zz: f64,
}

impl ConeKernel {
    pub fn at(params: &ModelParams, x: f64) -> Self {
        Self::at_time(params.lambda(), params.c(), params.t(), x)
    }

    pub fn at_time(lambda: f64, c: f64, t: f64, x: f64) -> Self {
        let ct = c * t;
        let ax = x.abs();
        let r = if ax >= ct {
            0.0
        } else {
            ((ct - ax) * (ct + ax)).sqrt()
        };
        let z = lambda / c * r;
        let damp = (z - lambda * t).exp();
        Self {
            e_i0: damp * bessel_i_over_pow_scaled(0, z),
            e_i1z: damp * bessel_i_over_pow_scaled(1, z),
            e_i2zz: damp * bessel_i_over_pow_scaled(2, z),
        }
    }
}
