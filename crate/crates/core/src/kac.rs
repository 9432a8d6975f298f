//! Convergence of telegraph-meander laws to Brownian-meander laws under the
//! Kac scaling `λ = α`, `c = √α`.

use std::f64::consts::PI;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::meander::{fdd_density, meander_density, meander_moment, FddQuery, MAX_FDD_POINTS};
use crate::model::ModelParams;
use crate::quad;
use crate::report::VerificationReport;

/// Default sweep.
pub const DEFAULT_ALPHAS: [f64; 5] = [4.0, 16.0, 64.0, 256.0, 1024.0];

/// Required ratio `gap(α_last) / gap(α_first)` for the sweep to pass.
/// A chosen threshold, not a property of the limit theorem.
pub const DECREASE_FACTOR: f64 = 0.05;

/// Largest fdd dimension used by the gap checks.
pub const MAX_KAC_FDD_POINTS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KacScale {
    alpha: f64,
}

impl KacScale {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidParams(format!("alpha must be finite and > 0, got {alpha}")));
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn params(&self, t: f64) -> Result<ModelParams> {
        ModelParams::kac(self.alpha, t)
    }
}

/// Brownian meander on `[0, t]`: endpoint law and finite-dimensional densities.
pub mod brownian {
    use super::*;

    pub fn endpoint_density(t: f64, x: f64) -> f64 {
        if x < 0.0 {
            0.0
        } else {
            x / t * (-x * x / (2.0 * t)).exp()
        }
    }

    pub fn endpoint_cdf(t: f64, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            -(-x * x / (2.0 * t)).exp_m1()
        }
    }

    fn gauss(s: f64, y: f64) -> f64 {
        (-y * y / (2.0 * s)).exp() / (2.0 * PI * s).sqrt()
    }

    /// Transition density of Brownian motion killed at 0.
    pub fn killed_kernel(s: f64, x: f64, y: f64) -> f64 {
        gauss(s, y - x) - gauss(s, y + x)
    }

    /// `P_x{min over [0, s] > 0}`.
    pub fn survival(s: f64, x: f64) -> f64 {
        libm::erf(x / (2.0 * s).sqrt())
    }

    /// Joint density of `(B⁺(t_1), ..., B⁺(t_n))` for `0 < t_1 < ... < t_n < t`.
    pub fn fdd_density(t: f64, times: &[f64], points: &[f64]) -> f64 {
        let (t1, x1) = (times[0], points[0]);
        if points.iter().any(|&x| x <= 0.0) {
            return 0.0;
        }
        let mut f = x1 / t1 * (t / t1).sqrt() * (-x1 * x1 / (2.0 * t1)).exp();
        for k in 1..times.len() {
            f *= killed_kernel(times[k] - times[k - 1], points[k - 1], points[k]);
        }
        let (tn, xn) = (times[times.len() - 1], points[points.len() - 1]);
        f * survival(t - tn, xn)
    }

    /// `E[B⁺(t)^p]` by quadrature of the endpoint density.
    pub fn moment(t: f64, p: f64) -> f64 {
        let hi = 40.0 * t.sqrt();
        quad::integrate(|x| x.powf(p) * endpoint_density(t, x), 0.0, hi, 1e-13)
    }
}

fn check_alpha(alpha: f64) -> Result<ModelParams> {
    KacScale::new(alpha)?.params(1.0)
}

/// Evenly spaced grid on `[0, min(√α·t, x_max))`, excluding the right end.
pub fn default_endpoint_grid(alpha: f64, t: f64, x_max: f64, n: usize) -> Vec<f64> {
    let hi = (alpha.sqrt() * t).min(x_max);
    (0..n).map(|i| hi * i as f64 / n as f64).collect()
}

/// `sup |q_{α,√α}(x, t) − (x/t)e^{−x²/2t}|` over `grid`.
pub fn endpoint_density_gap(alpha: f64, t: f64, grid: &[f64]) -> Result<f64> {
    let params = KacScale::new(alpha)?.params(t)?;
    let ct = params.ct();
    if let Some(&x) = grid.iter().find(|&&x| !(x >= 0.0 && x < ct)) {
        return Err(Error::Domain(format!("grid point {x} outside [0, {ct})")));
    }
    Ok(grid
        .iter()
        .map(|&x| (meander_density(&params, x) - brownian::endpoint_density(t, x)).abs())
        .fold(0.0, f64::max))
}

/// `|fdd density of the scaled meander − Brownian meander fdd|` at one query.
pub fn fdd_gap(alpha: f64, t: f64, times: &[f64], points: &[f64]) -> Result<f64> {
    if times.len() > MAX_KAC_FDD_POINTS {
        return Err(Error::EnumerationLimit {
            n: times.len(),
            limit: MAX_KAC_FDD_POINTS.min(MAX_FDD_POINTS),
        });
    }
    let params = KacScale::new(alpha)?.params(t)?;
    let q = FddQuery::new(times.to_vec(), points.to_vec());
    let telegraph = fdd_density(&params, &q)?;
    Ok((telegraph - brownian::fdd_density(t, times, points)).abs())
}

/// `|E[T⁺_α(t)^p] − E[B⁺(t)^p]|`.
pub fn moment_gap(alpha: f64, t: f64, p: f64) -> Result<f64> {
    let params = KacScale::new(alpha)?.params(t)?;
    Ok((meander_moment(&params, p)? - brownian::moment(t, p)).abs())
}

/// Queries evaluated by [`kac_sweep`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub t: f64,
    pub x_max: f64,
    pub grid_points: usize,
    pub fdd_times: Vec<f64>,
    pub fdd_points: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            t: 1.0,
            x_max: 4.0,
            grid_points: 400,
            fdd_times: vec![0.3, 0.6],
            fdd_points: vec![0.5, 0.5],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KacRow {
    pub alpha: f64,
    pub endpoint_gap: f64,
    pub fdd_gap: f64,
    pub moment_gap_p1: f64,
    pub moment_gap_p2: f64,
}

impl KacRow {
    pub fn gaps(&self) -> [(&'static str, f64); 4] {
        [
            ("endpoint_gap", self.endpoint_gap),
            ("fdd_gap", self.fdd_gap),
            ("moment_gap_p1", self.moment_gap_p1),
            ("moment_gap_p2", self.moment_gap_p2),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KacSweep {
    pub rows: Vec<KacRow>,
    pub config: SweepConfig,
}

impl KacSweep {
    fn column(&self, i: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r.gaps()[i].1).collect()
    }

    /// `(name, strictly decreasing, last/first ratio)` per gap; `None` for fewer than two rows.
    pub fn trends(&self) -> Option<Vec<(&'static str, bool, f64)>> {
        if self.rows.len() < 2 {
            return None;
        }
        let names = self.rows[0].gaps().map(|g| g.0);
        Some(
            names
                .iter()
                .enumerate()
                .map(|(i, &name)| {
                    let col = self.column(i);
                    let strict = col.windows(2).all(|w| w[1] < w[0]);
                    (name, strict, col[col.len() - 1] / col[0])
                })
                .collect(),
        )
    }

    /// Every gap decreases strictly along the sweep.
    pub fn monotone(&self) -> Option<bool> {
        self.trends().map(|t| t.iter().all(|g| g.1))
    }

    /// One report per gap for the strict decrease (metric: number of
    /// non-decreasing steps) and one for the decrease factor.
    pub fn reports(&self) -> Vec<VerificationReport> {
        let Some(trends) = self.trends() else {
            return Vec::new();
        };
        let alphas: Vec<f64> = self.rows.iter().map(|r| r.alpha).collect();
        let mut out = Vec::new();
        for (i, (name, _, ratio)) in trends.into_iter().enumerate() {
            let col = self.column(i);
            let bad = col.windows(2).filter(|w| !(w[1] < w[0])).count();
            out.push(
                VerificationReport::new(format!("kac {name} strictly decreasing"), bad as f64, 0.0)
                    .with("alphas", alphas.clone())
                    .with("gaps", col.clone()),
            );
            out.push(
                VerificationReport::new(format!("kac {name} decrease factor"), ratio, DECREASE_FACTOR)
                    .with("alphas", alphas.clone())
                    .with("note", "the 0.05 factor is a chosen threshold, not part of the limit theorem"),
            );
        }
        out
    }
}

/// Evaluates all gaps for each `α`, in parallel.
pub fn kac_sweep(alphas: &[f64], config: &SweepConfig) -> Result<KacSweep> {
    if alphas.is_empty() {
        return Err(Error::InvalidParams("alpha list is empty".into()));
    }
    for &a in alphas {
        check_alpha(a)?;
    }
    let t = config.t;
    let rows = alphas
        .par_iter()
        .map(|&alpha| {
            let grid = default_endpoint_grid(alpha, t, config.x_max, config.grid_points);
            Ok(KacRow {
                alpha,
                endpoint_gap: endpoint_density_gap(alpha, t, &grid)?,
                fdd_gap: fdd_gap(alpha, t, &config.fdd_times, &config.fdd_points)?,
                moment_gap_p1: moment_gap(alpha, t, 1.0)?,
                moment_gap_p2: moment_gap(alpha, t, 2.0)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(KacSweep {
        rows,
        config: config.clone(),
    })
}

/// Sweep reports plus an overflow guard at the largest `α`.
pub fn kac_reports(alphas: &[f64], config: &SweepConfig) -> Result<Vec<VerificationReport>> {
    let start = Instant::now();
    let sweep = kac_sweep(alphas, config)?;
    let finite = sweep
        .rows
        .iter()
        .flat_map(|r| r.gaps())
        .filter(|g| !g.1.is_finite())
        .count();
    let mut out = sweep.reports();
    out.push(VerificationReport::new("kac evaluations finite", finite as f64, 0.0).timed(start));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn brownian_targets() {
        let m = quad::integrate(|x| brownian::endpoint_density(1.0, x), 0.0, 40.0, 1e-13);
        assert_relative_eq!(m, 1.0, max_relative = 1e-12);
        assert_relative_eq!(brownian::moment(1.0, 1.0), (PI / 2.0).sqrt(), max_relative = 1e-12);
        assert_relative_eq!(brownian::moment(1.0, 2.0), 2.0, max_relative = 1e-12);
        assert_relative_eq!(brownian::endpoint_cdf(2.0, 1.3), 1.0 - (-1.3f64 * 1.3 / 4.0).exp(), max_relative = 1e-14);
        assert_eq!(brownian::fdd_density(1.0, &[0.3, 0.6], &[0.0, 0.5]), 0.0);
    }

    #[test]
    fn brownian_fdd_normalises_and_reduces_to_endpoint() {
        let one = quad::integrate(|x| brownian::fdd_density(1.0, &[0.4], &[x]), 0.0, 12.0, 1e-12);
        assert_relative_eq!(one, 1.0, max_relative = 1e-10);
        let near = brownian::fdd_density(1.0, &[1.0 - 1e-12], &[0.7]);
        assert_relative_eq!(near, brownian::endpoint_density(1.0, 0.7), max_relative = 1e-6);
    }

    #[test]
    fn large_alpha_stays_finite() {
        let p = KacScale::new(1024.0).unwrap().params(1.0).unwrap();
        assert!(meander_density(&p, 0.0) < 0.02);
        let grid = default_endpoint_grid(1024.0, 1.0, 4.0, 100);
        assert!(endpoint_density_gap(1024.0, 1.0, &grid).unwrap().is_finite());
        assert!(fdd_gap(1024.0, 1.0, &[0.3, 0.6], &[0.5, 0.5]).unwrap().is_finite());
    }

    #[test]
    fn validation() {
        assert!(KacScale::new(0.0).is_err());
        assert!(kac_sweep(&[], &SweepConfig::default()).is_err());
        assert!(matches!(
            fdd_gap(4.0, 1.0, &[0.1, 0.2, 0.3, 0.4], &[0.1; 4]),
            Err(Error::EnumerationLimit { .. })
        ));
        assert!(endpoint_density_gap(4.0, 1.0, &[3.0]).is_err());
    }

    #[test]
    fn gaps_shrink_like_inverse_root_alpha() {
        let sweep = kac_sweep(&DEFAULT_ALPHAS, &SweepConfig::default()).unwrap();
        // each quadrupling of alpha roughly halves every gap once alpha >= 16
        for w in sweep.rows[1..].windows(2) {
            for (a, b) in w[0].gaps().iter().zip(w[1].gaps()) {
                let r = b.1 / a.1;
                assert!((0.4..0.6).contains(&r), "{} {r}", a.0);
            }
        }
        let trends = sweep.trends().unwrap();
        for (name, strict, _) in &trends {
            assert_eq!(*strict, *name != "fdd_gap", "{name}");
        }
        assert!(sweep.rows[0].fdd_gap < sweep.rows[1].fdd_gap);
        assert!(kac_sweep(&[16.0], &SweepConfig::default()).unwrap().monotone().is_none());
    }
}
