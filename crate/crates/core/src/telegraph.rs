//! Laws of the unconditioned telegraph process.
//!
//! Positions live in `[-ct, ct]`. Densities vanish off the open interval;
//! the mass of unswitched paths sits in atoms at `±ct`.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::kernel::ConeKernel;
use crate::model::{Atom, InitialVelocity, LawValue, MixedLaw, ModelParams, Velocity, LAW_QUAD_TOL};
use crate::quad;
use crate::report::VerificationReport;
use crate::sim::{fold_paths, McConfig, SimMode};
use crate::special::{bessel_i_scaled, central_binomial_ratio};

/// Absolutely continuous part of the law of `T(t)` for a symmetric start.
pub fn telegraph_density(params: &ModelParams, x: f64) -> f64 {
    if x.abs() >= params.ct() {
        return 0.0;
    }
    let k = ConeKernel::at(params, x);
    0.5 * params.lambda() / params.c() * (k.e_i0 + params.lt() * k.e_i1z)
}

/// Continuous part of the law of `T(t)` given `V(0) = -c`.
pub fn p_minus(params: &ModelParams, x: f64) -> f64 {
    p_minus_at(params.lambda(), params.c(), params.t(), x)
}

/// Continuous part of the law of `T(t)` given `V(0) = +c`; equals `p_minus(-x)`.
pub fn p_plus(params: &ModelParams, x: f64) -> f64 {
    p_minus(params, -x)
}

pub(crate) fn p_minus_at(lambda: f64, c: f64, t: f64, x: f64) -> f64 {
    let ct = c * t;
    if x.abs() >= ct {
        return 0.0;
    }
    let k = ConeKernel::at_time(lambda, c, t, x);
    0.5 * lambda / c * (k.e_i0 + lambda / c * (ct - x) * k.e_i1z)
}

/// Continuous density of `T(t)` for the given initial condition.
pub fn density_given(params: &ModelParams, init: InitialVelocity, x: f64) -> f64 {
    match init {
        InitialVelocity::Symmetric => telegraph_density(params, x),
        InitialVelocity::Fixed(Velocity::Minus) => p_minus(params, x),
        InitialVelocity::Fixed(Velocity::Plus) => p_plus(params, x),
    }
}

/// Full law of `T(t)`: atoms at the cone boundary plus the density.
pub fn telegraph_law(params: &ModelParams, init: InitialVelocity) -> MixedLaw {
    let ct = params.ct();
    let e = (-params.lt()).exp();
    let atoms = match init {
        InitialVelocity::Symmetric => vec![
            Atom {
                location: -ct,
                mass: 0.5 * e,
            },
            Atom {
                location: ct,
                mass: 0.5 * e,
            },
        ],
        InitialVelocity::Fixed(v) => vec![Atom {
            location: v.sign() * ct,
            mass: e,
        }],
    };
    let p = *params;
    MixedLaw::new(atoms, (-ct, ct), move |x| density_given(&p, init, x)).with_breakpoints([0.0])
}

/// Law of `T(t)` given `N(t) = n` switches and `V(0) = v0`.
///
/// `n = 0` is a unit atom at `v0·ct`; an `Atom` is returned there and
/// `Density(0)` elsewhere. For `n >= 1` the density is written in `u = x/ct`
/// as a polynomial, so it stays bounded up to the cone boundary.
pub fn cond_density_given_n(params: &ModelParams, v0: Velocity, n: u32, x: f64) -> LawValue {
    let ct = params.ct();
    if n == 0 {
        return if x == v0.sign() * ct {
            LawValue::Atom(1.0)
        } else {
            LawValue::Density(0.0)
        };
    }
    if x.abs() >= ct {
        return LawValue::Density(0.0);
    }
    let u = x / ct;
    let k = n / 2;
    let ck = central_binomial_ratio(k as u64);
    let d = if n % 2 == 1 {
        0.5 * n as f64 * ck * (1.0 - u * u).powi(k as i32) / ct
    } else {
        let su = v0.sign() * u;
        k as f64 * ck * (1.0 + su).powi(k as i32) * (1.0 - su).powi(k as i32 - 1) / ct
    };
    LawValue::Density(d)
}

/// Poisson probability `P{N(t) = n}` for mean `m`, computed in log space.
pub fn poisson_pmf(m: f64, n: u32) -> f64 {
    if m == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let nf = n as f64;
    (nf * m.ln() - m - crate::special::ln_gamma_unchecked(nf + 1.0)).exp()
}

/// `e^{-λt}(I_0(λt) + I_1(λt))`, the probability that the minimum is zero given `V(0) = +c`.
pub fn nonneg_min_prob(params: &ModelParams) -> f64 {
    let lt = params.lt();
    bessel_i_scaled(0.0, lt).expect("lambda t > 0") + bessel_i_scaled(1.0, lt).expect("lambda t > 0")
}

fn min_density_plus(params: &ModelParams, x: f64) -> f64 {
    let ct = params.ct();
    if !(x >= -ct && x < 0.0) {
        return 0.0;
    }
    let lc = params.lambda() / params.c();
    let k = ConeKernel::at(params, x);
    let d = ct - x;
    params.lt() / d * k.e_i0 + (ct + x) * (lc - 1.0 / d) * lc * k.e_i1z
}

fn min_density_minus(params: &ModelParams, x: f64) -> f64 {
    let ct = params.ct();
    if !(x > -ct && x <= 0.0) {
        return 0.0;
    }
    let (lambda, c, t) = (params.lambda(), params.c(), params.t());
    let k = ConeKernel::at(params, x);
    // d/dt I_0(z) = I_1(z) dz/dt with dz/dt = λ c t / sqrt(c²t² − x²)
    let dt_i0 = lambda / c * k.e_i1z * lambda * c * t;
    (lambda * k.e_i0 + dt_i0) / c
}

/// Density of `min_{s<=t} T(s)` given `V(0) = v0`, off its atom.
pub fn min_density(params: &ModelParams, v0: Velocity, x: f64) -> f64 {
    match v0 {
        Velocity::Plus => min_density_plus(params, x),
        Velocity::Minus => min_density_minus(params, x),
    }
}

/// Law of the running minimum over `[0, t]` given `V(0) = v0`.
pub fn min_law(params: &ModelParams, v0: Velocity) -> MixedLaw {
    let ct = params.ct();
    let p = *params;
    match v0 {
        Velocity::Plus => MixedLaw::new(
            vec![Atom {
                location: 0.0,
                mass: nonneg_min_prob(params),
            }],
            (-ct, 0.0),
            move |x| min_density_plus(&p, x),
        ),
        Velocity::Minus => MixedLaw::new(
            vec![Atom {
                location: -ct,
                mass: (-params.lt()).exp(),
            }],
            (-ct, 0.0),
            move |x| min_density_minus(&p, x),
        ),
    }
}

/// `m_v(β, t) = P{min_{s<=t} T(s) >= β | V(0) = v}` for `β <= 0`.
pub fn min_survival(params: &ModelParams, v0: Velocity, beta: f64) -> Result<f64> {
    if !(beta <= 0.0) {
        return domain(format!("min_survival needs beta <= 0, got {beta}"));
    }
    Ok(min_survival_at(params.lambda(), params.c(), params.t(), v0, beta))
}

pub(crate) fn min_survival_at(lambda: f64, c: f64, t: f64, v0: Velocity, beta: f64) -> f64 {
    let ct = c * t;
    if beta <= -ct {
        return 1.0;
    }
    let params = ModelParams::new(lambda, c, t).expect("validated by caller");
    match v0 {
        Velocity::Plus => {
            let tail = quad::integrate(|x| min_density_plus(&params, x), beta, 0.0, LAW_QUAD_TOL);
            (nonneg_min_prob(&params) + tail).min(1.0)
        }
        Velocity::Minus => {
            if beta == 0.0 {
                return 0.0;
            }
            // 2∫_β^0 p = ∫_β^{-β} p by symmetry of p
            let lc = lambda / c;
            quad::integrate(
                |x| {
                    let k = ConeKernel::at_time(lambda, c, t, x);
                    lc * (k.e_i0 + lambda * t * k.e_i1z)
                },
                beta,
                0.0,
                LAW_QUAD_TOL,
            )
            .min(1.0)
        }
    }
}

/// Arguments of the joint law of position, final velocity and running minimum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointMinQuery {
    /// Position at time `t`.
    pub x: f64,
    /// Velocity at time `t`.
    pub v: Velocity,
    /// The event is `min >= -beta`; `beta >= 0`.
    pub beta: f64,
    /// Velocity at time 0.
    pub v0: Velocity,
}

/// `P{T(t) ∈ dx, V(t) = v, min T >= -β | V(0) = v0}`.
///
/// Unswitched paths give atoms at `x = ±ct` (returned as `Atom`). Elsewhere
/// the value is a density with three branches in `β`: zero below
/// `max(0, -x)`, a reflected correction up to `(ct - x)/2`, and the
/// unconstrained law above (ties go to the unconstrained branch).
pub fn joint_pos_vel_min(params: &ModelParams, q: &JointMinQuery) -> Result<LawValue> {
    if !(q.beta >= 0.0) {
        return Err(Error::Domain(format!("beta must be >= 0, got {}", q.beta)));
    }
    Ok(joint_kernel(params.lambda(), params.c(), params.t(), q.v0, q.v, q.x, q.beta))
}

/// Relative tolerance used to recognise the cone boundary as an atom location.
const ATOM_EPS: f64 = 1e-12;

pub(crate) fn joint_kernel(lambda: f64, c: f64, t: f64, v0: Velocity, v: Velocity, x: f64, beta: f64) -> LawValue {
    let ct = c * t;
    let e = (-lambda * t).exp();
    if (x - ct).abs() <= ATOM_EPS * ct && v0 == Velocity::Plus && v == Velocity::Plus {
        return LawValue::Atom(if beta >= 0.0 { e } else { 0.0 });
    }
    if (x + ct).abs() <= ATOM_EPS * ct && v0 == Velocity::Minus && v == Velocity::Minus {
        return LawValue::Atom(if beta >= ct { e } else { 0.0 });
    }
    LawValue::Density(joint_density(lambda, c, t, v0, v, x, beta))
}

/// Continuous part of [`joint_kernel`].
pub(crate) fn joint_density(lambda: f64, c: f64, t: f64, v0: Velocity, v: Velocity, x: f64, beta: f64) -> f64 {
    let ct = c * t;
    if x.abs() >= ct || beta < 0.0 || beta < -x {
        return 0.0;
    }
    let lc = lambda / c;
    let pref = 0.5 * lc;
    let k = ConeKernel::at_time(lambda, c, t, x);
    let middle = beta < 0.5 * (ct - x);
    let ky = middle.then(|| {
        let y = 2.0 * beta + x;
        (y, ConeKernel::at_time(lambda, c, t, y))
    });
    match (v0, v) {
        (Velocity::Plus, Velocity::Plus) | (Velocity::Minus, Velocity::Minus) => {
            let s = v.sign();
            let mut val = (ct + s * x) * lc * k.e_i1z;
            if let Some((y, ky)) = ky {
                val -= (ct - y) * lc * ky.e_i1z;
            }
            pref * val
        }
        (Velocity::Minus, Velocity::Plus) => {
            let mut val = k.e_i0;
            if let Some((_, ky)) = ky {
                val -= ky.e_i0;
            }
            pref * val
        }
        (Velocity::Plus, Velocity::Minus) => {
            let mut val = k.e_i0;
            if let Some((y, ky)) = ky {
                let a = (ct - y) * lc;
                val -= a * a * ky.e_i2zz;
            }
            pref * val
        }
    }
}

/// Compares the law of the maximum given `V(0) = +c` with `2 p(x)` on `grid ⊂ [0, ct)`.
///
/// The maximum given `+c` is the mirrored minimum given `-c`, whose density is
/// evaluated from its own closed form (with the explicit time derivative of
/// `I_0`), independently of [`telegraph_density`].
pub fn max_law_identity_check(params: &ModelParams, grid: &[f64]) -> Result<VerificationReport> {
    let start = Instant::now();
    let ct = params.ct();
    if let Some(&bad) = grid.iter().find(|&&x| !(0.0..ct).contains(&x)) {
        return domain(format!("grid point {bad} outside [0, ct)"));
    }
    let mut worst = 0.0f64;
    for &x in grid {
        let left = min_density(params, Velocity::Minus, -x);
        let right = 2.0 * telegraph_density(params, x);
        worst = worst.max((left - right).abs());
    }
    Ok(VerificationReport::new("max-law identity", worst, 1e-9)
        .with("grid_points", grid.len())
        .with("params", params.to_string())
        .timed(start))
}

/// Monte Carlo check of the reflection principle
/// `P{T(t) ∈ dx, max >= y | +c} = p_-(2y - x) dx` for `x ∈ [2y - ct, y)`.
///
/// The window is cut into `bins` equal bins; the metric is the largest
/// per-bin deviation in units of the binomial standard error, to be compared
/// with 4.
pub fn reflection_identity_check(
    params: &ModelParams,
    y: f64,
    cfg: &McConfig,
    bins: usize,
) -> Result<VerificationReport> {
    let start = Instant::now();
    let ct = params.ct();
    if !(0.0..ct).contains(&y) {
        return domain(format!("level y = {y} outside [0, ct)"));
    }
    if bins == 0 {
        return Err(Error::InvalidParams("bins must be >= 1".into()));
    }
    let lo = 2.0 * y - ct;
    let width = (y - lo) / bins as f64;
    let (counts, stats) = fold_paths(
        params,
        &SimMode::Free(InitialVelocity::Fixed(Velocity::Plus)),
        cfg,
        || vec![0u64; bins],
        |acc, path| {
            if path.maximum >= y && path.endpoint >= lo && path.endpoint < y {
                let b = (((path.endpoint - lo) / width) as usize).min(bins - 1);
                acc[b] += 1;
            }
        },
        |a, b| a.iter_mut().zip(b).for_each(|(x, y)| *x += y),
    )?;
    let n = stats.attempts as f64;
    let mut worst = 0.0f64;
    let mut cum_obs = 0.0;
    let mut cum_exp = 0.0;
    let mut sup_gap = 0.0f64;
    for (b, &count) in counts.iter().enumerate() {
        let a = lo + b as f64 * width;
        let expected = quad::integrate(|x| p_minus(params, 2.0 * y - x), a, a + width, 1e-13);
        let observed = count as f64 / n;
        let se = (expected * (1.0 - expected) / n).sqrt();
        worst = worst.max((observed - expected).abs() / se);
        cum_obs += observed;
        cum_exp += expected;
        sup_gap = sup_gap.max((cum_obs - cum_exp).abs());
    }
    let hits: u64 = counts.iter().sum();
    if hits < cfg.min_accepted {
        return Err(Error::InsufficientSamples {
            got: hits as usize,
            need: cfg.min_accepted as usize,
        });
    }
    Ok(VerificationReport::new("reflection principle (MC)", worst, 4.0)
        .with("sup_cumulative_gap", sup_gap)
        .with("paths", stats.attempts)
        .with("hits", hits)
        .with("bins", bins)
        .with("seed", cfg.seed)
        .with("y", y)
        .timed(start))
}
