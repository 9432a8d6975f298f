use proptest::prelude::*;

use telemeander::meander::{
    cond_meander_cdf, cond_meander_moment, meander_cdf, meander_charfn, meander_density, meander_endpoint_law,
    meander_mean, meander_moment, positivity_prob_given_n, FrequencyArg,
};
use telemeander::special::{bessel_i, bessel_i_scaled};
use telemeander::telegraph::{
    min_law, min_survival, p_minus, p_plus, telegraph_density, telegraph_law,
};
use telemeander::{InitialVelocity, ModelParams, Velocity};

fn params() -> impl Strategy<Value = ModelParams> {
    (0.2f64..5.0, 0.2f64..5.0, 0.2f64..5.0).prop_map(|(l, c, t)| ModelParams::new(l, c, t).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn laws_have_unit_mass(p in params()) {
        for init in [InitialVelocity::Symmetric, Velocity::Plus.into(), Velocity::Minus.into()] {
            prop_assert!((telegraph_law(&p, init).total_mass() - 1.0).abs() < 1e-9);
        }
        for v in Velocity::BOTH {
            prop_assert!((min_law(&p, v).total_mass() - 1.0).abs() < 1e-9);
        }
        prop_assert!((meander_endpoint_law(&p).total_mass() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn telegraph_density_symmetries(p in params(), u in -0.999f64..0.999) {
        let x = u * p.ct();
        let scale = telegraph_density(&p, 0.0).max(1e-300);
        prop_assert!((telegraph_density(&p, x) - telegraph_density(&p, -x)).abs() <= 1e-13 * scale);
        prop_assert!((p_plus(&p, x) - p_minus(&p, -x)).abs() <= 1e-13 * scale);
        let mix = 0.5 * (p_plus(&p, x) + p_minus(&p, x));
        prop_assert!((mix - telegraph_density(&p, x)).abs() <= 1e-12 * scale);
    }

    #[test]
    fn meander_cdf_is_a_distribution(p in params(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (f_lo, f_hi) = (meander_cdf(&p, lo * p.ct()), meander_cdf(&p, hi * p.ct()));
        prop_assert!((0.0..=1.0).contains(&f_lo) && (0.0..=1.0).contains(&f_hi));
        prop_assert!(f_lo <= f_hi + 1e-15);
        prop_assert!(meander_density(&p, lo * p.ct()) >= 0.0);
    }

    #[test]
    fn min_survival_is_monotone(p in params(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        for v in Velocity::BOTH {
            let deep = min_survival(&p, v, -hi * p.ct()).unwrap();
            let shallow = min_survival(&p, v, -lo * p.ct()).unwrap();
            prop_assert!(shallow <= deep + 1e-12, "{v:?}: {shallow} > {deep}");
            prop_assert!((0.0..=1.0).contains(&deep));
        }
    }

    #[test]
    fn bessel_recurrence_and_derivative(nu in 0.0f64..6.0, x in 0.05f64..60.0) {
        let (a, b, c) = (
            bessel_i_scaled(nu - 1.0, x).unwrap(),
            bessel_i_scaled(nu, x).unwrap(),
            bessel_i_scaled(nu + 1.0, x).unwrap(),
        );
        // I_{ν−1} − I_{ν+1} = (2ν/x) I_ν and I_{ν−1} + I_{ν+1} = 2 I'_ν
        prop_assert!((a - c - 2.0 * nu / x * b).abs() <= 1e-12 * a.max(1e-300));
        if x < 20.0 {
            let h = 1e-5 * x.max(1.0);
            let d = (bessel_i(nu, x + h).unwrap() - bessel_i(nu, x - h).unwrap()) / (2.0 * h);
            let want = 0.5 * (a + c) * x.exp();
            prop_assert!((d - want).abs() <= 1e-7 * want.max(1e-12));
        }
    }

    #[test]
    fn charfn_is_bounded(p in params(), frac in -0.99f64..0.99) {
        let gamma = frac * p.lambda() / p.c();
        let phi = meander_charfn(&p, FrequencyArg::new(&p, gamma).unwrap());
        prop_assert!(phi.norm() <= 1.0 + 1e-10);
    }

    #[test]
    fn moments_are_ordered(p in params()) {
        // Jensen: E[X]^2 <= E[X^2] and E[X] <= ct
        let m1 = meander_mean(&p);
        let m2 = meander_moment(&p, 2.0).unwrap();
        prop_assert!(m1 > 0.0 && m1 <= p.ct() * (1.0 + 1e-12));
        prop_assert!(m1 * m1 <= m2 * (1.0 + 1e-9));
    }

    #[test]
    fn conditional_laws_behave(n in 1u32..200, u in 0.0f64..1.0, order in 0.1f64..4.0) {
        let p = ModelParams::new(1.0, 1.0, 1.0).unwrap();
        let f = cond_meander_cdf(&p, n, u);
        prop_assert!((0.0..=1.0).contains(&f));
        let m = cond_meander_moment(&p, n, order).unwrap();
        prop_assert!(m > 0.0 && m <= 1.0);
        prop_assert!(positivity_prob_given_n(n + 1) <= positivity_prob_given_n(n));
    }

    #[test]
    fn scaled_moment_tends_to_a_finite_limit(k in 1u32..40, order in 0.5f64..3.0) {
        // n^{p/2} E[T⁺^p | N = n] increases with n towards a finite limit
        let p = ModelParams::new(1.0, 1.0, 1.0).unwrap();
        let scaled = |n: u32| (n as f64).powf(0.5 * order) * cond_meander_moment(&p, n, order).unwrap();
        let (a, b) = (scaled(2 * k), scaled(2 * k + 2));
        prop_assert!(a <= b * (1.0 + 1e-12), "{a} > {b}");
        prop_assert!(b < 10.0);
    }
}
