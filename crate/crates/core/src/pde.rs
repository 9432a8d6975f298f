//! Finite-difference residuals of the closed-form laws under their PDEs.
//!
//! Each residual is the operator applied with second-order central
//! differences (`h_t = h`, `h_x = c·h`) at every grid node. The refinement
//! order compares the maximum residual at `h` and `h/2`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::meander::meander_density;
use crate::model::ModelParams;
use crate::special::bessel_i_scaled;
use crate::telegraph::{p_minus, telegraph_density};

/// Stencil steps of clearance required between grid nodes and the support boundary.
pub const CONE_MARGIN_STEPS: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_lo: f64,
    pub x_hi: f64,
    pub t_lo: f64,
    pub t_hi: f64,
    pub nx: usize,
    pub nt: usize,
    /// Time step of the stencil.
    pub h: f64,
}

impl GridSpec {
    pub fn new(x_lo: f64, x_hi: f64, t_lo: f64, t_hi: f64, nx: usize, nt: usize, h: f64) -> Result<Self> {
        if nx < 8 || nt < 8 {
            return Err(Error::InvalidParams(format!("need nx, nt >= 8, got {nx}, {nt}")));
        }
        if !(x_lo < x_hi) || !(t_lo < t_hi) || !(t_lo > 0.0) {
            return Err(Error::InvalidParams("grid bounds must satisfy x_lo < x_hi, 0 < t_lo < t_hi".into()));
        }
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidParams(format!("step must be > 0, got {h}")));
        }
        Ok(Self {
            x_lo,
            x_hi,
            t_lo,
            t_hi,
            nx,
            nt,
            h,
        })
    }

    /// `n × n` grid on `[x0 - dx, x0 + dx] × [t0 - dt, t0 + dt]`.
    pub fn around(x0: f64, t0: f64, dx: f64, dt: f64, n: usize, h: f64) -> Result<Self> {
        Self::new(x0 - dx, x0 + dx, t0 - dt, t0 + dt, n, n, h)
    }

    pub fn with_step(self, h: f64) -> Self {
        Self { h, ..self }
    }

    pub fn nodes(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.nx * self.nt);
        for j in 0..self.nt {
            let t = self.t_lo + (self.t_hi - self.t_lo) * j as f64 / (self.nt - 1) as f64;
            for i in 0..self.nx {
                let x = self.x_lo + (self.x_hi - self.x_lo) * i as f64 / (self.nx - 1) as f64;
                out.push((x, t));
            }
        }
        out
    }

    /// Checks that every stencil stays inside `|x| < ct` (and `x > 0` when
    /// `positive`) with a margin of [`CONE_MARGIN_STEPS`] steps.
    fn check_cone(&self, c: f64, positive: bool) -> Result<()> {
        let hx = c * self.h;
        let margin = CONE_MARGIN_STEPS * hx;
        let reach = self.x_lo.abs().max(self.x_hi.abs());
        if reach + margin > c * self.t_lo {
            return Err(Error::GridOutsideCone(format!(
                "|x| up to {reach} needs c·t_lo >= {}, got {}",
                reach + margin,
                c * self.t_lo
            )));
        }
        if positive && self.x_lo < margin {
            return Err(Error::GridOutsideCone(format!(
                "x_lo = {} must be >= {margin} for a law on x >= 0",
                self.x_lo
            )));
        }
        Ok(())
    }

    fn check_half_plane(&self) -> Result<()> {
        let margin = CONE_MARGIN_STEPS * self.h;
        if self.x_lo < margin || self.t_lo < margin {
            return Err(Error::GridOutsideCone(format!(
                "grid must keep x, t >= {margin}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualSummary {
    pub max_abs_residual: f64,
    /// Root mean square over the nodes.
    pub l2_residual: f64,
    pub grid: GridSpec,
    /// `log2(max residual at h / max residual at h/2)`.
    pub refinement_order: f64,
}

/// Differential operators, written as `L u` with `L u = 0` for the matching law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PdeOperator {
    /// `u_tt − c²u_xx + 2λu_t`
    Telegraph { lambda: f64, c: f64 },
    /// `u_tt − c²u_xx + 2λu_t − (2a/t)u_t − (λ/t − 2a/t²)u`, `a = I_1(λt)/(I_0(λt)+I_1(λt))`
    Meander { lambda: f64, c: f64 },
    /// The meander operator with the `a(t)` terms removed.
    MeanderWithoutA { lambda: f64, c: f64 },
    /// `½u_xx − u_t + u/(2t)`
    BrownianMeander,
    /// `½u_xx − u_t`
    Heat,
}

/// `a(t) = I_1(λt) / (I_0(λt) + I_1(λt))`.
pub fn meander_drift_coefficient(lambda_t: f64) -> f64 {
    let i0 = bessel_i_scaled(0.0, lambda_t).expect("lambda t >= 0");
    let i1 = bessel_i_scaled(1.0, lambda_t).expect("lambda t >= 0");
    i1 / (i0 + i1)
}

impl PdeOperator {
    fn speed(&self) -> f64 {
        match *self {
            PdeOperator::Telegraph { c, .. }
            | PdeOperator::Meander { c, .. }
            | PdeOperator::MeanderWithoutA { c, .. } => c,
            PdeOperator::BrownianMeander | PdeOperator::Heat => 1.0,
        }
    }

    /// `L u` at `(x, t)` with time step `h`.
    pub fn apply<U: Fn(f64, f64) -> f64>(&self, u: &U, x: f64, t: f64, h: f64) -> f64 {
        let hx = self.speed() * h;
        let u0 = u(x, t);
        let (up, um) = (u(x, t + h), u(x, t - h));
        let (ur, ul) = (u(x + hx, t), u(x - hx, t));
        let u_t = (up - um) / (2.0 * h);
        let u_tt = (up - 2.0 * u0 + um) / (h * h);
        let u_xx = (ur - 2.0 * u0 + ul) / (hx * hx);
        match *self {
            PdeOperator::Telegraph { lambda, c } => u_tt - c * c * u_xx + 2.0 * lambda * u_t,
            PdeOperator::Meander { lambda, c } => {
                let a = meander_drift_coefficient(lambda * t);
                u_tt - c * c * u_xx + 2.0 * lambda * u_t - 2.0 * a / t * u_t
                    - (lambda / t - 2.0 * a / (t * t)) * u0
            }
            PdeOperator::MeanderWithoutA { lambda, c } => {
                u_tt - c * c * u_xx + 2.0 * lambda * u_t - lambda / t * u0
            }
            PdeOperator::BrownianMeander => 0.5 * u_xx - u_t + u0 / (2.0 * t),
            PdeOperator::Heat => 0.5 * u_xx - u_t,
        }
    }
}

fn max_and_rms<U: Fn(f64, f64) -> f64 + Sync>(op: &PdeOperator, u: &U, grid: &GridSpec, h: f64) -> (f64, f64) {
    let nodes = grid.nodes();
    let res: Vec<f64> = nodes.par_iter().map(|&(x, t)| op.apply(u, x, t, h).abs()).collect();
    let max = res.iter().copied().fold(0.0, f64::max);
    let rms = (res.iter().map(|r| r * r).sum::<f64>() / res.len() as f64).sqrt();
    (max, rms)
}

/// Residual of `u` under `op` on `grid`, with a refinement study `h -> h/2`.
/// No support checks are made here.
pub fn residual_summary<U: Fn(f64, f64) -> f64 + Sync>(op: PdeOperator, u: U, grid: &GridSpec) -> ResidualSummary {
    let (max, rms) = max_and_rms(&op, &u, grid, grid.h);
    let (max_half, _) = max_and_rms(&op, &u, grid, 0.5 * grid.h);
    ResidualSummary {
        max_abs_residual: max,
        l2_residual: rms,
        grid: *grid,
        refinement_order: (max / max_half).log2(),
    }
}

fn at_time(params: &ModelParams, t: f64) -> ModelParams {
    params.with_horizon(t).expect("grid times are positive")
}

/// Telegraph equation applied to the symmetric-start density `p(x, t)`.
pub fn telegraph_pde_residual(params: &ModelParams, grid: &GridSpec) -> Result<ResidualSummary> {
    grid.check_cone(params.c(), false)?;
    let p = *params;
    Ok(residual_summary(
        PdeOperator::Telegraph {
            lambda: p.lambda(),
            c: p.c(),
        },
        move |x, t| telegraph_density(&at_time(&p, t), x),
        grid,
    ))
}

/// Telegraph equation applied to `p₋(x, t)`.
pub fn p_minus_pde_residual(params: &ModelParams, grid: &GridSpec) -> Result<ResidualSummary> {
    grid.check_cone(params.c(), false)?;
    let p = *params;
    Ok(residual_summary(
        PdeOperator::Telegraph {
            lambda: p.lambda(),
            c: p.c(),
        },
        move |x, t| p_minus(&at_time(&p, t), x),
        grid,
    ))
}

/// Meander equation applied to the endpoint density `q(x, t)`.
pub fn meander_pde_residual(params: &ModelParams, grid: &GridSpec) -> Result<ResidualSummary> {
    grid.check_cone(params.c(), true)?;
    let p = *params;
    Ok(residual_summary(
        PdeOperator::Meander {
            lambda: p.lambda(),
            c: p.c(),
        },
        move |x, t| meander_density(&at_time(&p, t), x),
        grid,
    ))
}

/// Brownian meander endpoint density `(x/t) e^{-x²/2t}`.
pub fn brownian_meander_density(x: f64, t: f64) -> f64 {
    if x < 0.0 {
        0.0
    } else {
        x / t * (-x * x / (2.0 * t)).exp()
    }
}

/// `½u_xx − u_t + u/(2t)` applied to the Brownian meander endpoint density.
pub fn brownian_meander_pde_residual(grid: &GridSpec) -> Result<ResidualSummary> {
    grid.check_half_plane()?;
    Ok(residual_summary(PdeOperator::BrownianMeander, brownian_meander_density, grid))
}

/// Negative control: the telegraph operator on the heat kernel.
pub fn telegraph_operator_on_gaussian(params: &ModelParams, grid: &GridSpec) -> Result<ResidualSummary> {
    grid.check_cone(params.c(), false)?;
    Ok(residual_summary(
        PdeOperator::Telegraph {
            lambda: params.lambda(),
            c: params.c(),
        },
        |x: f64, t: f64| (-x * x / (2.0 * t)).exp() / (2.0 * std::f64::consts::PI * t).sqrt(),
        grid,
    ))
}

/// Negative control: the meander operator without its `a(t)` terms, on `q`.
pub fn meander_residual_without_a(params: &ModelParams, grid: &GridSpec) -> Result<ResidualSummary> {
    grid.check_cone(params.c(), true)?;
    let p = *params;
    Ok(residual_summary(
        PdeOperator::MeanderWithoutA {
            lambda: p.lambda(),
            c: p.c(),
        },
        move |x, t| meander_density(&at_time(&p, t), x),
        grid,
    ))
}

/// Negative control: the bare heat operator on the Brownian meander density.
pub fn heat_operator_on_brownian_meander(grid: &GridSpec) -> Result<ResidualSummary> {
    grid.check_half_plane()?;
    Ok(residual_summary(PdeOperator::Heat, brownian_meander_density, grid))
}
