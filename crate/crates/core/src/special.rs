//! Modified Bessel functions of the first kind and Gamma helpers.
//!
//! Every law in this crate multiplies `I_nu` by `e^{-lambda t}`, so the
//! workhorse is [`bessel_i_scaled`], which returns `e^{-x} I_nu(x)` and stays
//! finite for arguments far past the overflow point of `I_nu` itself.
//!
//! Evaluation regimes:
//!
//! * `x < 30`: the defining power series. All terms are positive, so there is
//!   no cancellation.
//! * `x >= 30` and `4 nu^2 <= x`: the large-argument expansion
//!   `e^{-x} I_nu(x) ~ (2 pi x)^{-1/2} sum_k (-1)^k a_k(nu) / x^k`, truncated at
//!   its smallest term.
//! * otherwise: the power series summed outward from its peak term, with the
//!   `e^{-x}` factor folded into the peak.
//!
//! Orders `±1/2` use the closed hyperbolic forms.

use std::f64::consts::PI;

use crate::error::{domain, Result};

/// Arguments below this use the power series.
pub const SERIES_CUTOFF: f64 = 30.0;

const MAX_TERMS: usize = 2000;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `Gamma(z)` for `z > 0`.
pub fn gamma_fn(z: f64) -> Result<f64> {
    if !(z > 0.0) || !z.is_finite() {
        return domain(format!("gamma_fn requires z > 0, got {z}"));
    }
    Ok(gamma_unchecked(z))
}

/// `ln Gamma(z)` for `z > 0`.
pub fn ln_gamma(z: f64) -> Result<f64> {
    if !(z > 0.0) || !z.is_finite() {
        return domain(format!("ln_gamma requires z > 0, got {z}"));
    }
    Ok(ln_gamma_unchecked(z))
}

fn lanczos_sum(z: f64) -> f64 {
    LANCZOS[1..]
        .iter()
        .enumerate()
        .fold(LANCZOS[0], |acc, (i, c)| acc + c / (z + (i + 1) as f64))
}

pub(crate) fn gamma_unchecked(z: f64) -> f64 {
    if z < 0.5 {
        // reflection; z in (0, 1/2)
        return PI / ((PI * z).sin() * gamma_unchecked(1.0 - z));
    }
    if z == z.floor() && z <= 21.0 {
        return (1..z as u64).fold(1.0, |acc, k| acc * k as f64);
    }
    let z = z - 1.0;
    let t = z + LANCZOS_G + 0.5;
    let half = t.powf(0.5 * (z + 0.5));
    (2.0 * PI).sqrt() * half * ((-t).exp() * half) * lanczos_sum(z)
}

pub(crate) fn ln_gamma_unchecked(z: f64) -> f64 {
    if z < 0.5 {
        return (PI / (PI * z).sin()).ln() - ln_gamma_unchecked(1.0 - z);
    }
    if z < 20.0 {
        return gamma_unchecked(z).ln();
    }
    let z = z - 1.0;
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + lanczos_sum(z).ln()
}

fn check_args(nu: f64, x: f64) -> Result<f64> {
    if !x.is_finite() && x != f64::INFINITY || x < 0.0 || x.is_nan() {
        return domain(format!("Bessel argument must be >= 0, got {x}"));
    }
    if nu.is_nan() || nu < -1.0 || !nu.is_finite() {
        return domain(format!("unsupported Bessel order {nu}"));
    }
    // I_{-n} = I_n for integer n
    if nu < 0.0 && nu == nu.floor() {
        Ok(-nu)
    } else {
        Ok(nu)
    }
}

/// `I_nu(x)` for `x >= 0` and real order `nu >= -1`.
///
/// Overflows to `+inf` past `x ~ 710`; use [`bessel_i_scaled`] there.
pub fn bessel_i(nu: f64, x: f64) -> Result<f64> {
    let nu = check_args(nu, x)?;
    if x < SERIES_CUTOFF {
        return Ok(series(nu, x));
    }
    let scaled = scaled_large(nu, x);
    let ex = x.exp();
    Ok(if ex.is_infinite() { f64::INFINITY } else { scaled * ex })
}

/// `e^{-x} I_nu(x)` for `x >= 0` and real order `nu >= -1`.
pub fn bessel_i_scaled(nu: f64, x: f64) -> Result<f64> {
    let nu = check_args(nu, x)?;
    if x == f64::INFINITY {
        return Ok(0.0);
    }
    if x > 0.0 && (nu - 0.5).abs() < 1e-15 {
        return Ok((2.0 / (PI * x)).sqrt() * 0.5 * -(-2.0 * x).exp_m1());
    }
    if x > 0.0 && (nu + 0.5).abs() < 1e-15 {
        return Ok((2.0 / (PI * x)).sqrt() * 0.5 * (1.0 + (-2.0 * x).exp()));
    }
    if x < SERIES_CUTOFF {
        return Ok(series(nu, x) * (-x).exp());
    }
    Ok(scaled_large(nu, x))
}

/// `e^{-z} I_n(z) / z^n` for integer `n >= 0`, regular at `z = 0`.
///
/// At `z = 0` this is `1 / (2^n n!)`; the `I_1(z)/z -> 1/2` limit used by
/// the laws is the `n = 1` case.
pub fn bessel_i_over_pow_scaled(n: u32, z: f64) -> f64 {
    debug_assert!(z >= 0.0);
    if z < SERIES_CUTOFF {
        let q = 0.25 * z * z;
        let nf = n as f64;
        let mut term = 1.0 / (2f64.powi(n as i32) * gamma_unchecked(nf + 1.0));
        let mut sum = term;
        for k in 1..MAX_TERMS {
            let kf = k as f64;
            term *= q / (kf * (kf + nf));
            sum += term;
            if term < 1e-17 * sum {
                break;
            }
        }
        sum * (-z).exp()
    } else {
        scaled_large(n as f64, z) / z.powi(n as i32)
    }
}

fn series(nu: f64, x: f64) -> f64 {
    if x == 0.0 {
        return if nu == 0.0 {
            1.0
        } else if nu > 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
    }
    let half = 0.5 * x;
    let q = half * half;
    let mut term = half.powf(nu) / gamma_unchecked(nu + 1.0);
    let mut sum = term;
    for k in 1..MAX_TERMS {
        let kf = k as f64;
        term *= q / (kf * (kf + nu));
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum
}

fn scaled_large(nu: f64, x: f64) -> f64 {
    if 4.0 * nu * nu <= x {
        asymptotic_scaled(nu, x)
    } else {
        peak_series_scaled(nu, x)
    }
}

fn asymptotic_scaled(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..MAX_TERMS {
        let odd = (2 * k - 1) as f64;
        let next = -term * (mu - odd * odd) / (8.0 * k as f64 * x);
        if next.abs() >= prev || next == 0.0 {
            break;
        }
        prev = next.abs();
        term = next;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum / (2.0 * PI * x).sqrt()
}

fn peak_series_scaled(nu: f64, x: f64) -> f64 {
    let half = 0.5 * x;
    let q = half * half;
    let kstar = (0.5 * ((nu * nu + x * x).sqrt() - nu)).floor().max(0.0);
    let log_peak = (2.0 * kstar + nu) * half.ln()
        - ln_gamma_unchecked(kstar + 1.0)
        - ln_gamma_unchecked(kstar + nu + 1.0);
    let peak = (log_peak - x).exp();
    let mut sum = peak;
    // upward
    let mut term = peak;
    let mut k = kstar;
    for _ in 0..MAX_TERMS * 10 {
        k += 1.0;
        term *= q / (k * (k + nu));
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    // downward
    let mut term = peak;
    let mut k = kstar;
    while k >= 1.0 {
        term *= k * (k + nu) / q;
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
        k -= 1.0;
    }
    sum
}

/// `sinh(y) / y`, accurate near zero.
pub(crate) fn sinhc(y: f64) -> f64 {
    if y.abs() < 1e-3 {
        let y2 = y * y;
        1.0 + y2 / 6.0 * (1.0 + y2 / 20.0 * (1.0 + y2 / 42.0))
    } else {
        y.sinh() / y
    }
}

/// `C(2k, k) / 4^k` by the product recursion.
pub(crate) fn central_binomial_ratio(k: u64) -> f64 {
    if k > 100_000 {
        let kf = k as f64;
        return (ln_gamma_unchecked(2.0 * kf + 1.0)
            - 2.0 * ln_gamma_unchecked(kf + 1.0)
            - 2.0 * kf * std::f64::consts::LN_2)
            .exp();
    }
    (1..=k).fold(1.0, |acc, j| acc * (2 * j - 1) as f64 / (2 * j) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    // Reference values from a 50-digit evaluation (mpmath.besseli / mpmath.gamma).
    const I0_1: f64 = 1.266_065_877_752_008_3;
    const I1_1: f64 = 0.565_159_103_992_485_0;
    const I0_30_SCALED: f64 = 0.073_145_946_482_237_29;
    const I0_700_SCALED: f64 = 0.015_081_295_651_531_358;
    const I2_5: f64 = 17.505_614_966_624_236;
    const I_QUARTER_3: f64 = 4.807_759_173_690_731;

    fn high_precision_series(nu: f64, x: f64) -> f64 {
        // Kahan-compensated 50-term sum, independent of the library loop.
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        for k in 0..50 {
            let kf = k as f64;
            let lt = (2.0 * kf + nu) * (0.5 * x).ln()
                - ln_gamma_unchecked(kf + 1.0)
                - ln_gamma_unchecked(kf + nu + 1.0);
            let y = lt.exp() - comp;
            let t = sum + y;
            comp = (t - sum) - y;
            sum = t;
        }
        sum
    }

    #[test]
    fn trivial_values() {
        assert_eq!(bessel_i(0.0, 0.0).unwrap(), 1.0);
        assert_eq!(bessel_i(1.0, 0.0).unwrap(), 0.0);
        assert_eq!(bessel_i_scaled(0.0, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn series_matches_reference() {
        assert_relative_eq!(bessel_i(0.0, 1.0).unwrap(), I0_1, max_relative = 1e-14);
        assert_relative_eq!(bessel_i(1.0, 1.0).unwrap(), I1_1, max_relative = 1e-14);
        assert_relative_eq!(bessel_i(2.0, 5.0).unwrap(), I2_5, max_relative = 1e-13);
        assert_relative_eq!(bessel_i(0.25, 3.0).unwrap(), I_QUARTER_3, max_relative = 1e-13);
        for &(nu, x) in &[(0.0, 1.0), (1.0, 2.5), (2.0, 7.0), (1.5, 0.3), (-0.75, 4.0)] {
            assert_relative_eq!(
                bessel_i(nu, x).unwrap(),
                high_precision_series(nu, x),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn large_argument_reference() {
        assert_relative_eq!(bessel_i_scaled(0.0, 30.0).unwrap(), I0_30_SCALED, max_relative = 1e-13);
        let v = bessel_i_scaled(0.0, 700.0).unwrap();
        assert_relative_eq!(v, I0_700_SCALED, max_relative = 1e-13);
        assert_relative_eq!(v, 1.0 / (2.0 * PI * 700.0).sqrt(), max_relative = 2e-4);
        let far = bessel_i_scaled(1.0, 1e6).unwrap();
        assert!(far.is_finite() && far > 0.0);
    }

    #[test]
    fn half_order_closed_form() {
        for &x in &[1e-6f64, 0.1, 1.0, 10.0, 40.0, 500.0] {
            let want = x.sinh() * (2.0 / (PI * x)).sqrt() * (-x).exp();
            if want.is_finite() {
                assert_relative_eq!(bessel_i_scaled(0.5, x).unwrap(), want, max_relative = 1e-13);
            }
            let series = series(0.5, x.min(25.0)) * (-(x.min(25.0))).exp();
            assert_relative_eq!(
                bessel_i_scaled(0.5, x.min(25.0)).unwrap(),
                series,
                max_relative = 1e-13
            );
        }
    }

    #[test]
    fn regime_switch_is_continuous() {
        for &nu in &[0.0, 0.5, 1.0, 1.5, 2.0, -0.25, 0.75] {
            let below = series(nu, SERIES_CUTOFF) * (-SERIES_CUTOFF).exp();
            let above = scaled_large(nu, SERIES_CUTOFF);
            assert!(((below - above) / below).abs() < 1e-10, "nu = {nu}");
        }
    }

    #[test]
    fn peak_series_agrees_with_direct_series() {
        for &(nu, x) in &[(4.0, 30.0), (6.5, 45.0), (3.0, 31.0)] {
            let direct = series(nu, x) * (-x).exp();
            assert_relative_eq!(peak_series_scaled(nu, x), direct, max_relative = 1e-12);
        }
    }

    #[test]
    fn domain_errors() {
        assert!(bessel_i(0.0, -1.0).is_err());
        assert!(bessel_i_scaled(-2.0, 1.0).is_err());
        assert!(gamma_fn(0.0).is_err());
        assert!(gamma_fn(-1.5).is_err());
    }

    #[test]
    fn gamma_values() {
        assert_relative_eq!(gamma_fn(1.0).unwrap(), 1.0, max_relative = 1e-14);
        assert_relative_eq!(gamma_fn(0.5).unwrap(), PI.sqrt(), max_relative = 1e-13);
        assert_relative_eq!(gamma_fn(2.5).unwrap(), 1.5 * 0.5 * PI.sqrt(), max_relative = 1e-13);
        // Gamma(0.1) from mpmath
        assert_relative_eq!(gamma_fn(0.1).unwrap(), 9.513_507_698_668_731, max_relative = 1e-13);
        assert_relative_eq!(gamma_fn(30.5).unwrap(), 4.822_696_933_490_909e31, max_relative = 1e-12);
        assert_relative_eq!(
            ln_gamma(100.0).unwrap(),
            359.134_205_369_575_4,
            max_relative = 1e-14
        );
    }

    #[test]
    fn integer_order_over_power_limit() {
        assert_relative_eq!(bessel_i_over_pow_scaled(1, 0.0), 0.5);
        assert_relative_eq!(bessel_i_over_pow_scaled(2, 0.0), 0.125);
        let z = 3.7;
        assert_relative_eq!(
            bessel_i_over_pow_scaled(1, z),
            bessel_i_scaled(1.0, z).unwrap() / z,
            max_relative = 1e-14
        );
        let z = 250.0;
        assert_relative_eq!(
            bessel_i_over_pow_scaled(2, z),
            bessel_i_scaled(2.0, z).unwrap() / (z * z),
            max_relative = 1e-14
        );
    }

    #[test]
    fn central_binomial() {
        assert_eq!(central_binomial_ratio(0), 1.0);
        assert_eq!(central_binomial_ratio(1), 0.5);
        assert_eq!(central_binomial_ratio(2), 0.375);
    }
}
