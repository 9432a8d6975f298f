use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::model::{ModelParams, Velocity};
use crate::telegraph::{joint_density, min_survival_at, nonneg_min_prob};

/// Largest number of query times accepted by the velocity-sequence enumeration.
pub const MAX_FDD_POINTS: usize = 12;

/// Query times `0 < t_1 < ... < t_n < t` and positions `x_1..x_n >= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FddQuery {
    pub times: Vec<f64>,
    pub points: Vec<f64>,
}

impl FddQuery {
    pub fn new(times: Vec<f64>, points: Vec<f64>) -> Self {
        Self { times, points }
    }

    fn validate_times(&self, params: &ModelParams) -> Result<()> {
        let n = self.times.len();
        if n == 0 || n != self.points.len() {
            return domain(format!(
                "need matching, non-empty times and points (got {} and {})",
                n,
                self.points.len()
            ));
        }
        if n > MAX_FDD_POINTS {
            return Err(Error::EnumerationLimit {
                n,
                limit: MAX_FDD_POINTS,
            });
        }
        let mut prev = 0.0;
        for &s in &self.times {
            if !(s > prev) {
                return domain(format!("times must be strictly increasing and > 0, got {:?}", self.times));
            }
            prev = s;
        }
        if !(prev < params.t()) {
            return domain(format!("last time {prev} must be < horizon {}", params.t()));
        }
        Ok(())
    }

    fn validate(&self, params: &ModelParams, pattern: &[Segment]) -> Result<()> {
        self.validate_times(params)?;
        if pattern.len() != self.times.len() {
            return domain("pattern length must match the number of times");
        }
        let c = params.c();
        let (mut t0, mut x0) = (0.0, 0.0);
        for ((&s, &x), seg) in self.times.iter().zip(&self.points).zip(pattern) {
            if *seg == Segment::Ballistic {
                // the position is fixed by the velocity sequence; skip checks
                t0 = s;
                x0 = f64::NAN;
                continue;
            }
            if !(x >= 0.0) {
                return Err(Error::Reachability(format!("point {x} is negative")));
            }
            if x0.is_finite() && (x - x0).abs() > c * (s - t0) * (1.0 + 1e-12) {
                return Err(Error::Reachability(format!(
                    "|{x} - {x0}| exceeds c·({s} - {t0})"
                )));
            }
            if x0.is_nan() && x > c * s {
                return Err(Error::Reachability(format!("point {x} beyond c·{s}")));
            }
            t0 = s;
            x0 = x;
        }
        Ok(())
    }
}

/// How the path moves between consecutive query times.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Segment {
    /// At least one switch: the increment has a density.
    Diffuse,
    /// No switch: the path moves at full speed, carrying mass `e^{-λΔt}`.
    Ballistic,
}

/// Joint density of `(T⁺(t_1), ..., T⁺(t_n))` at `q.points`, for paths
/// switching at least once between consecutive query times.
///
/// Paths without a switch on some interval are singular with respect to
/// Lebesgue measure; see [`fdd_component`].
pub fn fdd_density(params: &ModelParams, q: &FddQuery) -> Result<f64> {
    fdd_component(params, q, &vec![Segment::Diffuse; q.times.len()])
}

/// One singular component of the fdd.
///
/// Diffuse segments contribute a density in the corresponding coordinate;
/// ballistic segments contribute a point mass whose location is determined
/// by the velocity sequence (`q.points` is ignored there). The result is
/// summed over all velocity sequences and is a density in the diffuse
/// coordinates only.
pub fn fdd_component(params: &ModelParams, q: &FddQuery, pattern: &[Segment]) -> Result<f64> {
    let (lambda, c, t) = (params.lambda(), params.c(), params.t());
    let tn = *q.times.last().unwrap_or(&0.0);
    fdd_component_with(params, q, pattern, |v, x| {
        min_survival_at(lambda, c, t - tn, v, -x)
    })
}

/// [`fdd_component`] with a caller-supplied terminal survival
/// `(v, x) -> m_v(-x, t - t_n)`, e.g. a cached one.
pub fn fdd_component_with<S>(params: &ModelParams, q: &FddQuery, pattern: &[Segment], survival: S) -> Result<f64>
where
    S: Fn(Velocity, f64) -> f64,
{
    q.validate(params, pattern)?;
    let walker = Walker {
        lambda: params.lambda(),
        c: params.c(),
        times: &q.times,
        points: &q.points,
        pattern,
        survival: &survival,
    };
    let total = walker.walk(0, 0.0, 0.0, Velocity::Plus, 1.0);
    Ok(total / nonneg_min_prob(params))
}

struct Walker<'a, S> {
    lambda: f64,
    c: f64,
    times: &'a [f64],
    points: &'a [f64],
    pattern: &'a [Segment],
    survival: &'a S,
}

impl<S: Fn(Velocity, f64) -> f64> Walker<'_, S> {
    /// Depth-first enumeration of the velocity sequences.
    fn walk(&self, k: usize, t_prev: f64, x_prev: f64, v_prev: Velocity, weight: f64) -> f64 {
        if weight == 0.0 {
            return 0.0;
        }
        if k == self.times.len() {
            return weight * (self.survival)(v_prev, x_prev);
        }
        let dt = self.times[k] - t_prev;
        match self.pattern[k] {
            Segment::Ballistic => {
                let x = x_prev + v_prev.sign() * self.c * dt;
                if x < 0.0 {
                    return 0.0;
                }
                let w = weight * (-self.lambda * dt).exp();
                self.walk(k + 1, self.times[k], x, v_prev, w)
            }
            Segment::Diffuse => {
                let x = self.points[k];
                Velocity::BOTH
                    .iter()
                    .map(|&v| {
                        let f = joint_density(self.lambda, self.c, dt, v_prev, v, x - x_prev, x_prev);
                        self.walk(k + 1, self.times[k], x, v, weight * f)
                    })
                    .sum()
            }
        }
    }
}
