use crate::error::{domain, Result};
use crate::kernel::ConeKernel;
use crate::model::{Atom, MixedLaw, ModelParams};
use crate::telegraph::{nonneg_min_prob, p_minus};

/// Mass of the unswitched path at `ct`: `1 / (I_0(λt) + I_1(λt))`.
pub fn meander_atom(params: &ModelParams) -> f64 {
    (-params.lt()).exp() / nonneg_min_prob(params)
}

/// Continuous part `q(x)` of the law of `T⁺(t)`, supported on `[0, ct)`.
pub fn meander_density(params: &ModelParams, x: f64) -> f64 {
    let ct = params.ct();
    if !(x >= 0.0 && x < ct) {
        return 0.0;
    }
    let lc = params.lambda() / params.c();
    let k = ConeKernel::at(params, x);
    let num = lc * x / (ct + x) * k.e_i0 + lc * k.e_i1z * (lc * x + (ct - x) / (ct + x));
    num / nonneg_min_prob(params)
}

/// `P{T⁺(t) <= x}`, including the atom at `ct`.
pub fn meander_cdf(params: &ModelParams, x: f64) -> f64 {
    let ct = params.ct();
    if x < 0.0 {
        return 0.0;
    }
    if x >= ct {
        return 1.0;
    }
    let lc = params.lambda() / params.c();
    let k = ConeKernel::at(params, x);
    1.0 - (k.e_i0 + lc * (ct - x) * k.e_i1z) / nonneg_min_prob(params)
}

pub fn meander_endpoint_law(params: &ModelParams) -> MixedLaw {
    let p = *params;
    MixedLaw::new(
        vec![Atom {
            location: params.ct(),
            mass: meander_atom(params),
        }],
        (0.0, params.ct()),
        move |x| meander_density(&p, x),
    )
}

/// `q(x)` as `-∂ₓ p₋(x) / p₋(0)` with a central difference of step `h`.
pub fn meander_density_via_derivative(params: &ModelParams, x: f64, h: f64) -> Result<f64> {
    let ct = params.ct();
    if !(h > 0.0 && h < 0.5 * ct) {
        return domain(format!("step h = {h} must lie in (0, ct/2)"));
    }
    if !(x > h && x < ct - h) {
        return domain(format!("x = {x} must lie in (h, ct - h)"));
    }
    let d = (p_minus(params, x + h) - p_minus(params, x - h)) / (2.0 * h);
    Ok(-d / p_minus(params, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::bessel_i;
    use approx::assert_relative_eq;

    fn unit() -> ModelParams {
        ModelParams::new(1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn reference_values() {
        let (i0, i1) = (bessel_i(0.0, 1.0).unwrap(), bessel_i(1.0, 1.0).unwrap());
        let p = unit();
        assert_relative_eq!(meander_atom(&p), 1.0 / (i0 + i1), max_relative = 1e-13);
        assert_relative_eq!(meander_density(&p, 0.0), i1 / (i0 + i1), max_relative = 1e-13);
        assert!((meander_atom(&p) - 0.54608).abs() < 1e-4);
        assert!((meander_density(&p, 0.0) - 0.30862).abs() < 1e-4);
    }

    #[test]
    fn limit_at_cone_boundary() {
        let p = ModelParams::new(1.5, 0.8, 1.1).unwrap();
        let (lambda, c, lt) = (p.lambda(), p.c(), p.lt());
        let s = bessel_i(0.0, lt).unwrap() + bessel_i(1.0, lt).unwrap();
        let want = lambda * (1.0 + lt) / (2.0 * c) / s;
        assert_relative_eq!(meander_density(&p, p.ct() * (1.0 - 1e-10)), want, max_relative = 1e-8);
    }

    #[test]
    fn cdf_endpoints_and_quadrature() {
        let p = ModelParams::new(2.0, 0.5, 3.0).unwrap();
        let law = meander_endpoint_law(&p);
        assert!(meander_cdf(&p, 0.0).abs() < 1e-15);
        assert_eq!(meander_cdf(&p, -1.0), 0.0);
        assert_eq!(meander_cdf(&p, p.ct()), 1.0);
        let below = meander_cdf(&p, p.ct() * (1.0 - 1e-12));
        assert!((below - (1.0 - meander_atom(&p))).abs() < 1e-9);
        for x in [0.1, 0.4, 0.9, 1.3] {
            assert!((law.cdf(x) - meander_cdf(&p, x)).abs() < 1e-10);
        }
        assert!((law.total_mass() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn derivative_representation() {
        let p = unit();
        let exact = meander_density(&p, 0.4);
        let e1 = (meander_density_via_derivative(&p, 0.4, 1e-2).unwrap() - exact).abs();
        let e2 = (meander_density_via_derivative(&p, 0.4, 5e-3).unwrap() - exact).abs();
        assert!((e1 / e2 - 4.0).abs() < 0.1, "ratio {}", e1 / e2);
        assert!((meander_density_via_derivative(&p, 0.4, 1e-4).unwrap() - exact).abs() < 1e-8);
        assert!(meander_density_via_derivative(&p, 0.4, 0.6).is_err());
        assert!(meander_density_via_derivative(&p, 0.99, 0.05).is_err());
    }

    #[test]
    fn large_rate_is_finite() {
        let p = ModelParams::kac(1024.0, 1.0).unwrap();
        for x in [0.0, 0.5, 1.0, 3.0, 20.0] {
            let q = meander_density(&p, x);
            assert!(q.is_finite() && q >= 0.0);
        }
        let target = 1.0 * (-0.5f64).exp();
        assert!((meander_density(&p, 1.0) - target).abs() < 0.05);
        assert!(meander_atom(&p) < 1e-300);
    }
}
