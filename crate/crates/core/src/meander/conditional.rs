//! Law of `T⁺(t)` given `N(t) = n` switches.

use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};

use crate::error::{domain, Result};
use crate::model::{Atom, LawValue, MixedLaw, ModelParams};
use crate::report::VerificationReport;
use crate::telegraph::{nonneg_min_prob, poisson_pmf};

/// Density of `T⁺(t)` given `N(t) = n`; `n = 0` is a unit atom at `ct`.
pub fn cond_meander_density(params: &ModelParams, n: u32, x: f64) -> LawValue {
    let ct = params.ct();
    if n == 0 {
        return if x == ct {
            LawValue::Atom(1.0)
        } else {
            LawValue::Density(0.0)
        };
    }
    LawValue::Density(density_n(n, x / ct) / ct)
}

/// Density in `u = x/ct` on `[0, 1)`.
fn density_n(n: u32, u: f64) -> f64 {
    if !(u >= 0.0 && u < 1.0) {
        return 0.0;
    }
    let k = (n / 2) as i32;
    if n % 2 == 0 {
        2.0 * k as f64 * u * (1.0 - u * u).powi(k - 1)
    } else {
        (1.0 + n as f64 * u) * (1.0 - u).powi(k) * (1.0 + u).powi(k - 1)
    }
}

pub fn cond_meander_law(params: &ModelParams, n: u32) -> MixedLaw {
    let ct = params.ct();
    if n == 0 {
        return MixedLaw::new(
            vec![Atom {
                location: ct,
                mass: 1.0,
            }],
            (0.0, ct),
            |_| 0.0,
        );
    }
    MixedLaw::new(Vec::new(), (0.0, ct), move |x| density_n(n, x / ct) / ct)
}

/// `P{T⁺(t) <= x | N(t) = n}`; for `n = 0` the unit step at `ct`.
pub fn cond_meander_cdf(params: &ModelParams, n: u32, x: f64) -> f64 {
    let ct = params.ct();
    if x < 0.0 {
        return 0.0;
    }
    if x >= ct {
        return 1.0;
    }
    if n == 0 {
        return 0.0;
    }
    let u = x / ct;
    let k = (n / 2) as i32;
    let tail = (1.0 - u * u).powi(k);
    if n % 2 == 0 {
        1.0 - tail
    } else {
        1.0 - tail * (1.0 - u)
    }
}

/// Point of maximum of the conditional density.
///
/// For `n = 1` the density is flat on `[0, ct)`; the formula's value
/// `ct(√2 − 1)` is returned but any point is a maximiser.
pub fn cond_meander_mode(params: &ModelParams, n: u32) -> f64 {
    let ct = params.ct();
    if n == 0 {
        return ct;
    }
    let k = (n / 2) as f64;
    if n % 2 == 0 {
        ct / (2.0 * k - 1.0).sqrt()
    } else {
        ct * ((2.0 * k + 2.0).sqrt() - 1.0) / (2.0 * k + 1.0)
    }
}

/// `E[T⁺(t)^p | N(t) = n]`.
pub fn cond_meander_moment(params: &ModelParams, n: u32, p: f64) -> Result<f64> {
    if !(p > 0.0) || !p.is_finite() {
        return domain(format!("moment order must be > 0, got {p}"));
    }
    let scale = params.ct().powf(p);
    if n == 0 {
        return Ok(scale);
    }
    let h = 0.5 * p;
    // k! Γ(a) / Γ(a + k) as a running product, stable for large k
    let ratio = |a: f64| -> f64 { (0..(n / 2)).map(|j| (j + 1) as f64 / (a + j as f64)).product() };
    let even = ratio(h + 1.0);
    if n % 2 == 0 {
        return Ok(scale * even);
    }
    let a = 0.5 * (p + 1.0);
    // (p/2) Γ(a) k! / Γ(a + 1 + k) = (p/2)/a · k! Γ(a + 1) / Γ(a + 1 + k)
    let odd = h / a * ratio(a + 1.0);
    Ok(scale * (even - odd))
}

fn binomial(n: u64, k: u64) -> BigInt {
    let mut acc = BigInt::one();
    for j in 0..k {
        acc = acc * BigInt::from(n - j) / BigInt::from(j + 1);
    }
    acc
}

/// `P{min_{s<=t} T(s) >= 0 | N(t) = n, V(0) = +c}` as an exact rational.
pub fn positivity_prob_exact(n: u32) -> BigRational {
    let n = n as u64;
    let k = n / 2;
    if n == 0 {
        return BigRational::one();
    }
    let den = BigInt::one() << (n as usize);
    if n % 2 == 0 {
        BigRational::new(binomial(2 * k, k), den)
    } else {
        BigRational::new(binomial(2 * k + 1, k), den)
    }
}

/// `1`, `C(2k,k)/4^k` or `C(2k+1,k)/2^{2k+1}` for `n = 0`, `2k`, `2k+1`.
pub fn positivity_prob_given_n(n: u32) -> f64 {
    positivity_prob_exact(n)
        .to_f64()
        .expect("a probability is representable")
}

/// `P{N(t) = n | min >= 0}` for `n = 0..=n_max`.
pub fn cond_meander_weights(params: &ModelParams, n_max: u32) -> Vec<f64> {
    let s = nonneg_min_prob(params);
    let lt = params.lt();
    (0..=n_max)
        .map(|n| poisson_pmf(lt, n) * positivity_prob_given_n(n) / s)
        .collect()
}

/// Checks `P{T⁺ >= x | N = 2k+1} <= P{T⁺ >= x | N = 2k}` for `k = 1..=k_max`
/// on `points` equally spaced `x` in `[0, ct]`. The metric is the largest
/// violation (0 when the ordering holds everywhere).
pub fn dominance_scan(params: &ModelParams, k_max: u32, points: usize) -> VerificationReport {
    let start = Instant::now();
    let ct = params.ct();
    let mut worst = 0.0f64;
    for k in 1..=k_max {
        for i in 0..points {
            let x = ct * i as f64 / (points.max(2) - 1) as f64;
            let odd = 1.0 - cond_meander_cdf(params, 2 * k + 1, x);
            let even = 1.0 - cond_meander_cdf(params, 2 * k, x);
            worst = worst.max(odd - even);
        }
    }
    VerificationReport::new("stochastic dominance (odd <= even)", worst, 0.0)
        .with("k_max", k_max)
        .with("grid_points", points)
        .timed(start)
}
