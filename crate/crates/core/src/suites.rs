//! Named verification suites. Each check returns a [`VerificationReport`].

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kac::{kac_reports, SweepConfig, DEFAULT_ALPHAS};
use crate::meander::{
    cond_meander_cdf, cond_meander_density, cond_meander_law, cond_meander_mode, cond_meander_weights,
    cosine_integral, dominance_scan, fdd_component_with, fdd_density, g_integral, g_integral_direct, meander_atom,
    meander_cdf, meander_charfn, meander_density, meander_density_via_derivative, meander_endpoint_law, meander_mean,
    meander_moment, meander_variance, positivity_prob_given_n, FddQuery, FrequencyArg, Segment,
};
use crate::model::{InitialVelocity, ModelParams, Velocity};
use crate::pde::{
    brownian_meander_pde_residual, heat_operator_on_brownian_meander, meander_pde_residual,
    meander_residual_without_a, p_minus_pde_residual, telegraph_operator_on_gaussian, telegraph_pde_residual,
    GridSpec, ResidualSummary,
};
use crate::quad::GaussLegendre;
use crate::report::VerificationReport;
use crate::sim::{fold_paths, fold_until_accepted, ks_statistic, McConfig, SimMode, MAX_ATTEMPTS};
use crate::telegraph::{max_law_identity_check, min_law, min_survival, reflection_identity_check, telegraph_law};

/// Parameter sets shared by the deterministic checks.
pub const REFERENCE_PARAMS: [(f64, f64, f64); 3] = [(1.0, 1.0, 1.0), (2.0, 0.5, 3.0), (0.3, 4.0, 0.8)];

/// Significance level of the KS checks.
pub const KS_LEVEL: f64 = 0.01;

/// Monte Carlo bands are `Z_BAND` standard errors wide.
pub const Z_BAND: f64 = 4.0;

pub fn reference_params() -> Vec<ModelParams> {
    REFERENCE_PARAMS
        .iter()
        .map(|&(l, c, t)| ModelParams::new(l, c, t).expect("positive constants"))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Pde,
    Identities,
    Moments,
    Dominance,
    MonteCarlo,
    Kac,
    All,
}

impl Suite {
    pub const NAMES: [&'static str; 7] = ["pde", "identities", "moments", "dominance", "monte-carlo", "kac", "all"];
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "pde" => Suite::Pde,
            "identities" => Suite::Identities,
            "moments" => Suite::Moments,
            "dominance" => Suite::Dominance,
            "monte-carlo" => Suite::MonteCarlo,
            "kac" => Suite::Kac,
            "all" => Suite::All,
            other => {
                return Err(Error::InvalidParams(format!(
                    "unknown suite {other:?}; expected one of {}",
                    Suite::NAMES.join(", ")
                )))
            }
        })
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let i = [
            Suite::Pde,
            Suite::Identities,
            Suite::Moments,
            Suite::Dominance,
            Suite::MonteCarlo,
            Suite::Kac,
            Suite::All,
        ]
        .iter()
        .position(|s| s == self)
        .expect("listed");
        f.write_str(Suite::NAMES[i])
    }
}

/// Seed, worker count and sample sizes for the Monte Carlo checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteOptions {
    pub seed: u64,
    pub workers: usize,
    /// Attempted paths for the meander and reflection checks.
    pub mc_paths: u64,
    /// Attempted paths per `n` for the conditional-on-N checks.
    pub given_n_paths: u64,
    /// Accepted meander paths for the two-time histogram.
    pub fdd_accepted: u64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            seed: 20_240_917,
            workers: rayon::current_num_threads(),
            mc_paths: 1_000_000,
            given_n_paths: 200_000,
            fdd_accepted: 1_000_000,
        }
    }
}

impl SuiteOptions {
    fn mc(&self, n_paths: u64, salt: u64) -> McConfig {
        McConfig::new(n_paths, self.seed.wrapping_add(salt)).workers(self.workers)
    }
}

pub fn run_suite(suite: Suite, opts: &SuiteOptions) -> Result<Vec<VerificationReport>> {
    Ok(match suite {
        Suite::Pde => pde_suite()?,
        Suite::Identities => identity_suite(opts)?,
        Suite::Moments => moment_suite()?,
        Suite::Dominance => vec![dominance_check()],
        Suite::MonteCarlo => monte_carlo_suite(opts)?,
        Suite::Kac => kac_reports(&DEFAULT_ALPHAS, &SweepConfig::default())?,
        Suite::All => {
            let mut out = Vec::new();
            for s in [
                Suite::Pde,
                Suite::Identities,
                Suite::Moments,
                Suite::Dominance,
                Suite::MonteCarlo,
                Suite::Kac,
            ] {
                out.extend(run_suite(s, opts)?);
            }
            out
        }
    })
}

pub fn pde_suite() -> Result<Vec<VerificationReport>> {
    Ok(vec![telegraph_pde_check()?, meander_pde_check()?, brownian_pde_check()?])
}

pub fn identity_suite(opts: &SuiteOptions) -> Result<Vec<VerificationReport>> {
    let mut out = vec![normalization_check()];
    for p in reference_params() {
        out.push(representation_check(&p)?);
    }
    out.push(max_law_check()?);
    out.push(reflection_check(opts)?);
    for p in reference_params() {
        out.push(charfn_check(&p)?);
    }
    out.push(g_integral_check()?);
    Ok(out)
}

pub fn moment_suite() -> Result<Vec<VerificationReport>> {
    reference_params().iter().map(moment_check).collect()
}

pub fn monte_carlo_suite(opts: &SuiteOptions) -> Result<Vec<VerificationReport>> {
    let unit = ModelParams::new(1.0, 1.0, 1.0)?;
    let mut out = meander_mc_checks(&unit, &opts.mc(opts.mc_paths, 0))?;
    out.extend(conditional_mc_checks(&unit, opts)?);
    Ok(out)
}

// ---------------------------------------------------------------------------
// deterministic checks

/// Total mass of every closed-form law, by atom-aware quadrature.
pub fn normalization_check() -> VerificationReport {
    let start = Instant::now();
    let params = reference_params();
    let worst = params
        .par_iter()
        .map(|p| {
            let mut laws = vec![
                telegraph_law(p, InitialVelocity::Symmetric),
                telegraph_law(p, Velocity::Plus.into()),
                telegraph_law(p, Velocity::Minus.into()),
                min_law(p, Velocity::Plus),
                min_law(p, Velocity::Minus),
                meander_endpoint_law(p),
            ];
            laws.extend((0..=30).map(|n| cond_meander_law(p, n)));
            laws.iter().map(|l| (l.total_mass() - 1.0).abs()).fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    let elapsed = start.elapsed().as_secs_f64();
    VerificationReport::new("normalization of all laws", worst, 1e-9)
        .with("param_sets", params.len())
        .with("cond_n_max", 30)
        .require(elapsed < 10.0, "runtime under 10 s")
        .timed(start)
}

/// `−∂ₓp₋(x)/p₋(0)` against `q(x)` on 200 interior points at steps `h` and `h/2`.
/// The metric is `|error ratio − 4|`.
pub fn representation_check(params: &ModelParams) -> Result<VerificationReport> {
    let start = Instant::now();
    let ct = params.ct();
    let h = 0.01 * ct;
    let points: Vec<f64> = (0..200).map(|i| ct * (0.02 + 0.96 * i as f64 / 199.0)).collect();
    let max_err = |h: f64| -> Result<f64> {
        let mut worst = 0.0f64;
        for &x in &points {
            let fd = meander_density_via_derivative(params, x, h)?;
            worst = worst.max((fd - meander_density(params, x)).abs());
        }
        Ok(worst)
    };
    let (e1, e2) = (max_err(h)?, max_err(0.5 * h)?);
    let ratio = e1 / e2;
    Ok(
        VerificationReport::new(format!("representation -dp_-/p_-(0) = q ({params})"), (ratio - 4.0).abs(), 0.5)
            .with("error_h", e1)
            .with("error_h_half", e2)
            .with("ratio", ratio)
            .with("h", h)
            .timed(start),
    )
}

pub fn max_law_check() -> Result<VerificationReport> {
    let p = ModelParams::new(1.0, 1.0, 1.0)?;
    let grid: Vec<f64> = (0..200).map(|i| p.ct() * i as f64 / 200.0).collect();
    max_law_identity_check(&p, &grid)
}

pub fn reflection_check(opts: &SuiteOptions) -> Result<VerificationReport> {
    let p = ModelParams::new(1.0, 1.0, 1.0)?;
    reflection_identity_check(&p, 0.3, &opts.mc(opts.mc_paths, 1), 20)
}

/// Closed-form moments against quadrature of the law, plus the mean and
/// variance expressions.
pub fn moment_check(params: &ModelParams) -> Result<VerificationReport> {
    let start = Instant::now();
    let law = meander_endpoint_law(params);
    let mut worst = 0.0f64;
    for p in [0.5, 1.0, 2.0, 3.5] {
        let want = law.expect(|x| x.powf(p));
        worst = worst.max((meander_moment(params, p)? / want - 1.0).abs());
    }
    let m1 = meander_moment(params, 1.0)?;
    let mean_gap = (m1 - meander_mean(params)).abs() / m1;
    let var_gap = (meander_moment(params, 2.0)? - m1 * m1 - meander_variance(params)).abs();
    Ok(VerificationReport::new(format!("moments vs quadrature ({params})"), worst, 1e-8)
        .with("mean_rel_gap", mean_gap)
        .with("variance_abs_gap", var_gap)
        .require(mean_gap < 1e-12, "p = 1 equals the closed mean")
        .require(var_gap < 1e-10, "p = 2 minus mean squared equals the variance")
        .timed(start))
}

/// Characteristic function against quadrature over the mixed law.
pub fn charfn_check(params: &ModelParams) -> Result<VerificationReport> {
    let start = Instant::now();
    let law = meander_endpoint_law(params);
    let bound = params.lambda() / params.c();
    let mut worst = 0.0f64;
    for frac in [0.0, 0.3, -0.3, 0.9, -0.9] {
        let gamma = frac * bound;
        let phi = meander_charfn(params, FrequencyArg::new(params, gamma)?);
        let want = law.expect_complex(|x| num_complex::Complex64::new(0.0, gamma * x).exp());
        worst = worst.max((phi - want).norm());
    }
    Ok(VerificationReport::new(format!("characteristic function ({params})"), worst, 1e-8).timed(start))
}

/// `G(γ, t)` and the cosine integral against direct quadrature.
pub fn g_integral_check() -> Result<VerificationReport> {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for p in reference_params() {
        let bound = p.lambda() / p.c();
        for frac in [0.0, 0.3, -0.3, 0.9, -0.9] {
            let arg = FrequencyArg::new(&p, frac * bound)?;
            let direct = g_integral_direct(&p, arg.gamma());
            worst = worst
                .max((g_integral(&p, arg) - direct).norm())
                .max((cosine_integral(&p, arg) - direct.re).abs());
        }
    }
    Ok(VerificationReport::new("G integral and cosine identity", worst, 1e-8).timed(start))
}

fn pde_report(
    name: &str,
    solutions: &[ResidualSummary],
    controls: &[ResidualSummary],
) -> VerificationReport {
    let worst = solutions.iter().map(|r| r.max_abs_residual).fold(0.0, f64::max);
    let orders: Vec<f64> = solutions.iter().map(|r| r.refinement_order).collect();
    let control = controls.iter().map(|r| r.max_abs_residual).fold(f64::INFINITY, f64::min);
    VerificationReport::new(name, worst, 1e-4)
        .with("refinement_orders", orders.clone())
        .with("negative_control_residual", control)
        .with("h", solutions[0].grid.h)
        .require(orders.iter().all(|o| (1.7..=2.3).contains(o)), "refinement order in [1.7, 2.3]")
        .require(control > 1e-2, "negative control residual above 1e-2")
}

pub fn telegraph_pde_check() -> Result<VerificationReport> {
    let start = Instant::now();
    let p = ModelParams::new(1.0, 1.0, 1.0)?;
    let g = GridSpec::around(0.2, 1.0, 0.1, 0.1, 8, 1e-3)?;
    let sols = [telegraph_pde_residual(&p, &g)?, p_minus_pde_residual(&p, &g)?];
    let controls = [telegraph_operator_on_gaussian(&p, &g)?];
    Ok(pde_report("pde telegraph equation (p, p_-)", &sols, &controls).timed(start))
}

pub fn meander_pde_check() -> Result<VerificationReport> {
    let start = Instant::now();
    let p = ModelParams::new(1.0, 1.0, 1.0)?;
    let g = GridSpec::around(0.3, 1.0, 0.1, 0.1, 8, 1e-3)?;
    let sols = [meander_pde_residual(&p, &g)?];
    let controls = [meander_residual_without_a(&p, &g)?];
    Ok(pde_report("pde meander equation (q)", &sols, &controls).timed(start))
}

pub fn brownian_pde_check() -> Result<VerificationReport> {
    let start = Instant::now();
    let g = GridSpec::around(1.0, 1.0, 0.3, 0.3, 8, 1e-3)?;
    let sols = [brownian_meander_pde_residual(&g)?];
    let controls = [heat_operator_on_brownian_meander(&g)?];
    Ok(pde_report("pde brownian meander equation", &sols, &controls).timed(start))
}

pub fn dominance_check() -> VerificationReport {
    dominance_scan(&ModelParams::new(1.0, 1.0, 1.0).expect("unit params"), 50, 500)
}

/// Mixture of the conditional-on-N densities against `q` on 200 points.
pub fn mixture_check() -> Result<VerificationReport> {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for p in reference_params() {
        let n_max = 60 + (8.0 * p.lt()) as u32;
        let w = cond_meander_weights(&p, n_max);
        for i in 0..200 {
            let x = p.ct() * i as f64 / 200.0;
            let mix: f64 = (1..=n_max)
                .map(|n| w[n as usize] * cond_meander_density(&p, n, x).value())
                .sum();
            worst = worst.max((mix - meander_density(&p, x)).abs());
        }
    }
    Ok(VerificationReport::new("conditional mixture reconstructs q", worst, 1e-9).timed(start))
}

/// Modes of the `n = 2` and `n = 3` conditional laws.
pub fn conditional_mode_check() -> Result<VerificationReport> {
    let p = ModelParams::new(1.0, 1.0, 1.0)?;
    let ct = p.ct();
    let gap = (cond_meander_mode(&p, 2) - ct).abs().max((cond_meander_mode(&p, 3) - ct / 3.0).abs());
    Ok(VerificationReport::new("conditional modes (n = 2: ct, n = 3: ct/3)", gap, 1e-12))
}

/// Pointwise `|fdd(t − ε, x) − q(x)|` on 200 interior points.
pub fn fdd_terminal_check(params: &ModelParams, eps: f64) -> Result<VerificationReport> {
    let start = Instant::now();
    let t1 = params.t() - eps;
    let ct1 = params.c() * t1;
    let worst = (0..200)
        .into_par_iter()
        .map(|i| {
            let x = ct1 * (0.01 + 0.98 * i as f64 / 199.0);
            let f = fdd_density(params, &FddQuery::new(vec![t1], vec![x]))?;
            Ok((f - meander_density(params, x)).abs())
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(VerificationReport::new("fdd near-terminal limit equals q", worst, 1e-3)
        .with("epsilon", eps)
        .timed(start))
}

// ---------------------------------------------------------------------------
// Monte Carlo checks

fn ks_report(name: String, sample: &mut [f64], cdf: impl Fn(f64) -> f64) -> Result<VerificationReport> {
    sample.sort_by(|a, b| a.total_cmp(b));
    let ks = ks_statistic(sample, cdf)?;
    // pass iff p-value >= level
    Ok(VerificationReport::new(name, 1.0 - ks.p_value, 1.0 - KS_LEVEL)
        .with("ks_statistic", ks.statistic)
        .with("p_value", ks.p_value)
        .with("n", ks.n))
}

#[derive(Default)]
struct MeanderTally {
    atoms: u64,
    continuous: Vec<f64>,
}

/// Acceptance rate, atom frequency and a KS test of the continuous part for
/// the rejection-sampled meander.
pub fn meander_mc_checks(params: &ModelParams, cfg: &McConfig) -> Result<Vec<VerificationReport>> {
    let start = Instant::now();
    let (tally, stats) = fold_paths(
        params,
        &SimMode::Meander,
        cfg,
        MeanderTally::default,
        |acc, path| {
            if path.n_switches() == 0 {
                acc.atoms += 1;
            } else {
                acc.continuous.push(path.endpoint);
            }
        },
        |a, b| {
            a.atoms += b.atoms;
            a.continuous.extend(b.continuous);
        },
    )?;
    let s = crate::telegraph::nonneg_min_prob(params);
    let n = stats.attempts as f64;
    let rate_z = (stats.acceptance_rate() - s).abs() / (s * (1.0 - s) / n).sqrt();
    let atom = meander_atom(params);
    let m = stats.accepted as f64;
    let freq = tally.atoms as f64 / m;
    let atom_z = (freq - atom).abs() / (atom * (1.0 - atom) / m).sqrt();
    let elapsed = start.elapsed().as_secs_f64();
    let rate = VerificationReport::new("meander acceptance rate (MC)", rate_z, Z_BAND)
        .with("observed", stats.acceptance_rate())
        .with("expected", s)
        .with("attempts", stats.attempts)
        .with("seed", cfg.seed)
        .require(elapsed < 60.0, "runtime under 60 s")
        .timed(start);
    let atom_report = VerificationReport::new("meander atom frequency (MC)", atom_z, Z_BAND)
        .with("observed", freq)
        .with("expected", atom)
        .with("accepted", stats.accepted);
    let mut cont = tally.continuous;
    let ks = ks_report("meander continuous part KS (MC)".into(), &mut cont, |x| {
        meander_cdf(params, x) / (1.0 - atom)
    })?;
    Ok(vec![rate, atom_report, ks])
}

/// Given-N checks: KS for `n = 1, 2`, acceptance frequencies for `n <= 6`,
/// conditional modes, dominance and the mixture identity.
pub fn conditional_mc_checks(params: &ModelParams, opts: &SuiteOptions) -> Result<Vec<VerificationReport>> {
    let mut out = Vec::new();
    let mut worst_z = 0.0f64;
    let mut rates = Vec::new();
    for n in 1..=6u32 {
        let cfg = opts.mc(opts.given_n_paths, 100 + n as u64);
        let mode = SimMode::GivenN {
            n,
            v0: Velocity::Plus,
            conditioned: true,
        };
        let (mut ends, stats) = fold_paths(
            params,
            &mode,
            &cfg,
            Vec::new,
            |acc: &mut Vec<f64>, path| acc.push(path.endpoint),
            |a, b| a.extend(b),
        )?;
        let want = positivity_prob_given_n(n);
        let z = (stats.acceptance_rate() - want).abs() / (want * (1.0 - want) / stats.attempts as f64).sqrt();
        worst_z = worst_z.max(z);
        rates.push(stats.acceptance_rate());
        if n <= 2 {
            out.push(ks_report(format!("given N = {n} endpoint law KS (MC)"), &mut ends, |x| {
                cond_meander_cdf(params, n, x)
            })?);
        }
    }
    out.push(
        VerificationReport::new("given-N acceptance frequencies n <= 6 (MC)", worst_z, Z_BAND)
            .with("observed", rates)
            .with("paths_per_n", opts.given_n_paths),
    );
    out.push(conditional_mode_check()?);
    out.push(dominance_check());
    out.push(mixture_check()?);
    Ok(out)
}

/// `m_v(−x, s)` on a uniform grid with local cubic interpolation.
struct SurvivalTable {
    step: f64,
    reach: f64,
    values: [Vec<f64>; 2],
}

impl SurvivalTable {
    fn new(params: &ModelParams, s: f64, nodes: usize) -> Result<Self> {
        let p = params.with_horizon(s)?;
        let reach = p.ct();
        let step = reach / (nodes - 1) as f64;
        let column = |v: Velocity| -> Result<Vec<f64>> {
            (0..nodes)
                .into_par_iter()
                .map(|k| {
                    // left limit at the cone edge, where the minus law has an atom
                    let x = (k as f64 * step).min(reach * (1.0 - 1e-14));
                    min_survival(&p, v, -x)
                })
                .collect()
        };
        Ok(Self {
            step,
            reach,
            values: [column(Velocity::Plus)?, column(Velocity::Minus)?],
        })
    }

    fn get(&self, v: Velocity, x: f64) -> f64 {
        if x >= self.reach {
            return 1.0;
        }
        let col = &self.values[if v == Velocity::Plus { 0 } else { 1 }];
        let last = col.len() - 1;
        let u = x / self.step;
        let i0 = (u.floor() as usize).saturating_sub(1).min(last - 3);
        let mut acc = 0.0;
        for j in 0..4 {
            let xj = (i0 + j) as f64;
            let mut l = 1.0;
            for m in 0..4 {
                if m != j {
                    let xm = (i0 + m) as f64;
                    l *= (u - xm) / (xj - xm);
                }
            }
            acc += l * col[i0 + j];
        }
        acc
    }
}

/// Mass of the diffuse-diffuse fdd component on `[a1, b1] × [a2, b2]`.
fn fdd_cell_mass(params: &ModelParams, times: [f64; 2], cell: [f64; 4], survival: &SurvivalTable) -> Result<f64> {
    let [a1, b1, a2, b2] = cell;
    let gl = GaussLegendre::cached(12);
    let span = params.c() * (times[1] - times[0]);
    let reach = survival.reach;
    let pattern = [Segment::Diffuse, Segment::Diffuse];
    let density = |x1: f64, x2: f64| -> Result<f64> {
        fdd_component_with(params, &FddQuery::new(times.to_vec(), vec![x1, x2]), &pattern, |v, x| {
            survival.get(v, x)
        })
    };
    let inner = |x1: f64| -> Result<f64> {
        let lo = a2.max(x1 - span);
        let hi = b2.min(x1 + span);
        if !(lo < hi) {
            return Ok(0.0);
        }
        let mut cuts = vec![lo, hi];
        cuts.extend([span - x1, reach].into_iter().filter(|&c| c > lo && c < hi));
        cuts.sort_by(|a, b| a.total_cmp(b));
        let mut sum = 0.0;
        for w in cuts.windows(2) {
            for (x2, wt) in gl.mapped(w[0], w[1]) {
                sum += wt * density(x1, x2)?;
            }
        }
        Ok(sum)
    };
    let mut cuts = vec![a1, b1];
    cuts.extend(
        [a2 - span, b2 - span, a2 + span, b2 + span, span - a2, span - b2, span - reach]
            .into_iter()
            .filter(|&c| c > a1 && c < b1),
    );
    cuts.sort_by(|a, b| a.total_cmp(b));
    let mut sum = 0.0;
    for w in cuts.windows(2) {
        for (x1, wt) in gl.mapped(w[0], w[1]) {
            sum += wt * inner(x1)?;
        }
    }
    Ok(sum)
}

/// Integrates `f` with 12-point Gauss-Legendre on each piece of `[lo, hi]`
/// cut at the `breaks` lying inside it.
fn integrate_cut<F: Fn(f64) -> Result<f64>>(lo: f64, hi: f64, breaks: &[f64], f: F) -> Result<f64> {
    if !(lo < hi) {
        return Ok(0.0);
    }
    let gl = GaussLegendre::cached(12);
    let mut cuts = vec![lo, hi];
    cuts.extend(breaks.iter().copied().filter(|&c| c > lo && c < hi));
    cuts.sort_by(|a, b| a.total_cmp(b));
    let mut sum = 0.0;
    for w in cuts.windows(2) {
        for (x, wt) in gl.mapped(w[0], w[1]) {
            sum += wt * f(x)?;
        }
    }
    Ok(sum)
}

/// Mass of the singular fdd components in cell `(i, j)`: no switch before
/// `t_1` puts `x_1 = ct_1` in the last row; no switch in `(t_1, t_2]` puts
/// `x_2 = x_1 ± cΔt` on a line.
fn singular_cell_mass(
    params: &ModelParams,
    times: [f64; 2],
    cell: [f64; 4],
    last_row: bool,
    last_col: bool,
    survival: &SurvivalTable,
) -> Result<f64> {
    use Segment::{Ballistic, Diffuse};
    let [a1, b1, a2, b2] = cell;
    let ct1 = params.c() * times[0];
    let span = params.c() * (times[1] - times[0]);
    let reach = survival.reach;
    let component = |x1: f64, x2: f64, pattern: [Segment; 2], only: Option<Velocity>| {
        fdd_component_with(params, &FddQuery::new(times.to_vec(), vec![x1, x2]), &pattern, |v, x| {
            if only.is_some_and(|o| o != v) {
                0.0
            } else {
                survival.get(v, x)
            }
        })
    };
    let mut mass = 0.0;
    if last_row {
        mass += integrate_cut(a2, b2, &[ct1 - span, ct1 + span, span - ct1, reach], |x2| {
            component(0.0, x2, [Ballistic, Diffuse], None)
        })?;
        if last_col {
            mass += component(0.0, 0.0, [Ballistic, Ballistic], None)?;
        }
    }
    for v in Velocity::BOTH {
        let shift = v.sign() * span;
        let (lo, hi) = (a1.max(a2 - shift), b1.min(b2 - shift));
        mass += integrate_cut(lo, hi, &[reach - shift, span], |x1| {
            component(x1, 0.0, [Diffuse, Ballistic], Some(v))
        })?;
    }
    Ok(mass)
}

/// Two-time histogram of accepted meander paths against the closed-form fdd
/// (all four components) on `bins × bins` cells of `[0, ct_1] × [0, ct_2]`.
/// The metric is the largest per-cell deviation in binomial standard errors.
pub fn fdd_histogram_check(
    params: &ModelParams,
    times: [f64; 2],
    bins: usize,
    wanted: u64,
    cfg: &McConfig,
) -> Result<VerificationReport> {
    let start = Instant::now();
    let [t1, t2] = times;
    if !(0.0 < t1 && t1 < t2 && t2 < params.t()) || bins == 0 {
        return Err(Error::Domain(format!("need 0 < t1 < t2 < t and bins >= 1, got {times:?}, {bins}")));
    }
    let (w1, w2) = (params.c() * t1 / bins as f64, params.c() * t2 / bins as f64);
    let p = *params;
    let (counts, stats) = fold_until_accepted(
        params,
        &SimMode::Meander,
        cfg,
        wanted,
        MAX_ATTEMPTS,
        || vec![0u64; bins * bins],
        |acc, path| {
            let i = ((path.position(&p, t1) / w1) as usize).min(bins - 1);
            let j = ((path.position(&p, t2) / w2) as usize).min(bins - 1);
            acc[i * bins + j] += 1;
        },
        |a, b| a.iter_mut().zip(b).for_each(|(x, y)| *x += y),
    )?;
    let survival = SurvivalTable::new(params, params.t() - t2, 4001)?;
    let expected = (0..bins * bins)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / bins, k % bins);
            let cell = [i as f64 * w1, (i + 1) as f64 * w1, j as f64 * w2, (j + 1) as f64 * w2];
            Ok(fdd_cell_mass(params, times, cell, &survival)?
                + singular_cell_mass(params, times, cell, i == bins - 1, j == bins - 1, &survival)?)
        })
        .collect::<Result<Vec<f64>>>()?;
    let m = stats.accepted as f64;
    let mut worst = 0.0f64;
    let mut worst_cell = (0, 0, 0.0, 0.0);
    let mut empty_mismatch = 0u64;
    for (k, (&c, &e)) in counts.iter().zip(&expected).enumerate() {
        let obs = c as f64 / m;
        if e <= 0.0 {
            if c > 0 {
                empty_mismatch += c;
            }
            continue;
        }
        let z = (obs - e).abs() / (e * (1.0 - e) / m).sqrt();
        if z > worst {
            worst = z;
            worst_cell = (k / bins, k % bins, obs, e);
        }
    }
    let total_expected: f64 = expected.iter().sum();
    let sparse = expected.iter().filter(|&&e| e > 0.0 && e * m < 5.0).count();
    Ok(VerificationReport::new(format!("fdd two-time histogram {bins}x{bins} (MC)"), worst, Z_BAND)
        .with("accepted", stats.accepted)
        .with("attempts", stats.attempts)
        .with("seed", cfg.seed)
        .with("total_mass_expected", total_expected)
        .with("cells_expecting_under_5", sparse)
        .with("worst_cell", vec![worst_cell.0 as f64, worst_cell.1 as f64])
        .with("worst_cell_observed", worst_cell.2)
        .with("worst_cell_expected", worst_cell.3)
        .require(empty_mismatch == 0, "no paths in cells of zero mass")
        .require((total_expected - 1.0).abs() < 1e-6, "cell masses sum to one")
        .timed(start))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meander::fdd_component;
    use crate::quad;

    #[test]
    fn suite_names_round_trip() {
        for name in Suite::NAMES {
            assert_eq!(name.parse::<Suite>().unwrap().to_string(), name);
        }
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn deterministic_suites_pass() {
        for r in pde_suite().unwrap().into_iter().chain(moment_suite().unwrap()) {
            assert!(r.passed(), "{}", r.line());
        }
        for r in [normalization_check(), g_integral_check().unwrap(), mixture_check().unwrap()] {
            assert!(r.passed(), "{}", r.line());
        }
    }

    #[test]
    fn representation_ratio_is_four() {
        for p in reference_params() {
            let r = representation_check(&p).unwrap();
            assert!(r.passed(), "{} {:?}", r.line(), r.metadata);
        }
    }

    #[test]
    fn survival_table_interpolates() {
        let p = ModelParams::new(1.0, 1.0, 1.0).unwrap();
        let table = SurvivalTable::new(&p, 0.4, 801).unwrap();
        let q = p.with_horizon(0.4).unwrap();
        for x in [0.0, 0.0123, 0.2, 0.3991, 0.5] {
            for v in Velocity::BOTH {
                let want = if x >= 0.4 { 1.0 } else { min_survival(&q, v, -x).unwrap() };
                assert!((table.get(v, x) - want).abs() < 1e-9, "{v:?} {x}");
            }
        }
    }

    #[test]
    fn cell_masses_cover_the_diffuse_component() {
        let p = ModelParams::new(1.0, 1.0, 1.0).unwrap();
        let table = SurvivalTable::new(&p, 0.4, 2001).unwrap();
        let whole = fdd_cell_mass(&p, [0.3, 0.6], [0.0, 0.3, 0.0, 0.6], &table).unwrap();
        let split: f64 = [[0.0, 0.15, 0.0, 0.3], [0.0, 0.15, 0.3, 0.6], [0.15, 0.3, 0.0, 0.3], [0.15, 0.3, 0.3, 0.6]]
            .iter()
            .map(|&c| fdd_cell_mass(&p, [0.3, 0.6], c, &table).unwrap())
            .sum();
        assert!((whole - split).abs() < 1e-6, "{whole} vs {split}");
        // diffuse-diffuse mass = 1 minus the three singular components
        let q = |x1: f64, x2: f64, pat: [Segment; 2]| {
            fdd_component(&p, &FddQuery::new(vec![0.3, 0.6], vec![x1, x2]), &pat).unwrap()
        };
        let bd = quad::integrate(|x2| q(0.0, x2, [Segment::Ballistic, Segment::Diffuse]), 0.0, 0.6, 1e-10);
        let db = quad::integrate(|x1| q(x1, 0.0, [Segment::Diffuse, Segment::Ballistic]), 0.0, 0.3, 1e-10);
        let bb = q(0.0, 0.0, [Segment::Ballistic; 2]);
        assert!((whole + bd + db + bb - 1.0).abs() < 1e-6, "{whole} {bd} {db} {bb}");
        let bins = 4;
        let total: f64 = (0..bins * bins)
            .map(|k| {
                let (i, j) = (k / bins, k % bins);
                let cell = [0.075 * i as f64, 0.075 * (i + 1) as f64, 0.15 * j as f64, 0.15 * (j + 1) as f64];
                singular_cell_mass(&p, [0.3, 0.6], cell, i == bins - 1, j == bins - 1, &table).unwrap()
            })
            .sum();
        assert!((total - bd - db - bb).abs() < 1e-6, "{total} vs {}", bd + db + bb);
    }
}
