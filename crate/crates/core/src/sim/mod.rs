//! Exact path simulation of the telegraph process and its conditioned variants.
//!
//! Paths are generated from their switch times; positions are piecewise linear
//! between switches, so the running minimum and maximum are exact (they are
//! attained at switch times or at the endpoints).
//!
//! Path `i` of a run draws from its own ChaCha8 stream keyed by
//! `(seed, i)`. Paths are processed in fixed-size batches whose partial results
//! are merged in batch order, so estimates are bit-identical for any worker
//! count.

mod ks;
mod rng;

pub use ks::{kolmogorov_survival, ks_statistic, KsResult};
pub use rng::PathRng;

use rand::Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{InitialVelocity, ModelParams, Velocity};

/// Upper bound on attempted paths for rejection runs.
pub const MAX_ATTEMPTS: u64 = 1_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McConfig {
    /// Number of attempted paths.
    pub n_paths: u64,
    pub seed: u64,
    pub n_workers: usize,
    /// Paths per batch; the unit of parallel work and of deterministic merging.
    pub batch: u64,
    /// Minimum number of accepted paths a check needs to be meaningful.
    pub min_accepted: u64,
}

impl McConfig {
    pub fn new(n_paths: u64, seed: u64) -> Self {
        Self {
            n_paths,
            seed,
            n_workers: rayon::current_num_threads(),
            batch: 4096,
            min_accepted: 1,
        }
    }

    pub fn workers(mut self, n: usize) -> Self {
        self.n_workers = n.max(1);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_paths == 0 {
            return Err(Error::InvalidParams("n_paths must be >= 1".into()));
        }
        if self.batch == 0 {
            return Err(Error::InvalidParams("batch must be >= 1".into()));
        }
        Ok(())
    }
}

/// What to simulate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SimMode {
    /// Unconditioned telegraph process.
    Free(InitialVelocity),
    /// `V(0) = +c`, accepted iff the running minimum stays `>= 0`.
    Meander,
    /// Exactly `n` switches, placed as sorted uniforms on `[0, t]`.
    /// With `conditioned`, `V(0) = +c` and paths with negative minimum are rejected.
    GivenN {
        n: u32,
        v0: Velocity,
        conditioned: bool,
    },
}

/// One simulated trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    pub v0: Velocity,
    pub switch_times: Vec<f64>,
    pub endpoint: f64,
    pub minimum: f64,
    pub maximum: f64,
}

impl PathSample {
    /// Builds the path and its cached summaries from sorted switch times in `(0, t)`.
    pub fn from_switches(params: &ModelParams, v0: Velocity, switch_times: Vec<f64>) -> Self {
        let c = params.c();
        let mut pos = 0.0;
        let mut vel = v0.sign() * c;
        let mut prev = 0.0;
        let mut minimum = 0.0f64;
        let mut maximum = 0.0f64;
        for &tau in &switch_times {
            pos += vel * (tau - prev);
            minimum = minimum.min(pos);
            maximum = maximum.max(pos);
            vel = -vel;
            prev = tau;
        }
        pos += vel * (params.t() - prev);
        minimum = minimum.min(pos);
        maximum = maximum.max(pos);
        Self {
            v0,
            switch_times,
            endpoint: pos,
            minimum,
            maximum,
        }
    }

    pub fn n_switches(&self) -> usize {
        self.switch_times.len()
    }

    pub fn final_velocity(&self) -> Velocity {
        if self.switch_times.len() % 2 == 0 {
            self.v0
        } else {
            self.v0.flip()
        }
    }

    /// Position at time `s` in `[0, t]`.
    pub fn position(&self, params: &ModelParams, s: f64) -> f64 {
        let c = params.c();
        let mut pos = 0.0;
        let mut vel = self.v0.sign() * c;
        let mut prev = 0.0;
        for &tau in &self.switch_times {
            if tau >= s {
                break;
            }
            pos += vel * (tau - prev);
            vel = -vel;
            prev = tau;
        }
        pos + vel * (s - prev)
    }

    /// Number of switches in the half-open window `(a, b]`.
    pub fn switches_in(&self, a: f64, b: f64) -> usize {
        self.switch_times
            .iter()
            .filter(|&&s| s > a && s <= b)
            .count()
    }
}

/// Draws path `index` of the run keyed by `seed`; `None` when rejected.
pub fn sample_path(params: &ModelParams, mode: &SimMode, seed: u64, index: u64) -> Option<PathSample> {
    let mut rng = PathRng::new(seed).stream(index);
    sample_with(params, mode, &mut rng)
}

fn sample_with<R: Rng>(params: &ModelParams, mode: &SimMode, rng: &mut R) -> Option<PathSample> {
    let t = params.t();
    match *mode {
        SimMode::Free(init) => {
            let v0 = match init {
                InitialVelocity::Fixed(v) => v,
                InitialVelocity::Symmetric => {
                    if rng.random::<bool>() {
                        Velocity::Plus
                    } else {
                        Velocity::Minus
                    }
                }
            };
            Some(PathSample::from_switches(params, v0, poisson_switches(params, rng)))
        }
        SimMode::Meander => {
            let path = PathSample::from_switches(params, Velocity::Plus, poisson_switches(params, rng));
            (path.minimum >= 0.0).then_some(path)
        }
        SimMode::GivenN { n, v0, conditioned } => {
            let mut times: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * t).collect();
            times.sort_by(|a, b| a.partial_cmp(b).expect("uniform draw is never NaN"));
            let v0 = if conditioned { Velocity::Plus } else { v0 };
            let path = PathSample::from_switches(params, v0, times);
            (!conditioned || path.minimum >= 0.0).then_some(path)
        }
    }
}

fn poisson_switches<R: Rng>(params: &ModelParams, rng: &mut R) -> Vec<f64> {
    let exp = Exp::new(params.lambda()).expect("lambda > 0 validated by ModelParams");
    let mut times = Vec::new();
    let mut s = exp.sample(rng);
    while s < params.t() {
        times.push(s);
        s += exp.sample(rng);
    }
    times
}

/// Attempt and acceptance counts of a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunStats {
    pub attempts: u64,
    pub accepted: u64,
}

impl RunStats {
    pub fn acceptance_rate(&self) -> f64 {
        if self.attempts == 0 {
            0.0
        } else {
            self.accepted as f64 / self.attempts as f64
        }
    }

    /// Binomial standard error of the acceptance rate.
    pub fn acceptance_std_error(&self) -> f64 {
        let p = self.acceptance_rate();
        (p * (1.0 - p) / self.attempts.max(1) as f64).sqrt()
    }
}

fn pool(n_workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(n_workers.max(1))
        .build()
        .map_err(|e| Error::InvalidParams(format!("cannot build worker pool: {e}")))
}

fn fold_range<A, I, F>(
    params: &ModelParams,
    mode: &SimMode,
    cfg: &McConfig,
    first_batch: u64,
    n_batches: u64,
    end: u64,
    init: &I,
    fold: &F,
) -> Vec<(A, RunStats)>
where
    A: Send,
    I: Fn() -> A + Sync,
    F: Fn(&mut A, &PathSample) + Sync,
{
    let key = PathRng::new(cfg.seed);
    (first_batch..first_batch + n_batches)
        .into_par_iter()
        .map(|b| {
            let lo = b * cfg.batch;
            let hi = ((b + 1) * cfg.batch).min(end);
            let mut acc = init();
            let mut stats = RunStats::default();
            for i in lo..hi {
                stats.attempts += 1;
                let mut rng = key.stream(i);
                if let Some(path) = sample_with(params, mode, &mut rng) {
                    stats.accepted += 1;
                    fold(&mut acc, &path);
                }
            }
            (acc, stats)
        })
        .collect()
}

/// Parallel map-reduce over `cfg.n_paths` attempted paths.
///
/// `fold` sees accepted paths only. Batch results are merged in batch order.
pub fn fold_paths<A, I, F, M>(
    params: &ModelParams,
    mode: &SimMode,
    cfg: &McConfig,
    init: I,
    fold: F,
    merge: M,
) -> Result<(A, RunStats)>
where
    A: Send,
    I: Fn() -> A + Sync,
    F: Fn(&mut A, &PathSample) + Sync,
    M: Fn(&mut A, A),
{
    cfg.validate()?;
    let n_batches = cfg.n_paths.div_ceil(cfg.batch);
    let parts = pool(cfg.n_workers)?
        .install(|| fold_range(params, mode, cfg, 0, n_batches, cfg.n_paths, &init, &fold));
    let mut acc = init();
    let mut stats = RunStats::default();
    for (part, s) in parts {
        merge(&mut acc, part);
        stats.attempts += s.attempts;
        stats.accepted += s.accepted;
    }
    if stats.accepted < cfg.min_accepted {
        return Err(Error::InsufficientSamples {
            got: stats.accepted as usize,
            need: cfg.min_accepted as usize,
        });
    }
    Ok((acc, stats))
}

/// Like [`fold_paths`], but keeps drawing batches until at least `wanted`
/// paths are accepted. Fails with [`Error::AcceptanceStarvation`] after
/// `max_attempts` attempts.
pub fn fold_until_accepted<A, I, F, M>(
    params: &ModelParams,
    mode: &SimMode,
    cfg: &McConfig,
    wanted: u64,
    max_attempts: u64,
    init: I,
    fold: F,
    merge: M,
) -> Result<(A, RunStats)>
where
    A: Send,
    I: Fn() -> A + Sync,
    F: Fn(&mut A, &PathSample) + Sync,
    M: Fn(&mut A, A),
{
    cfg.validate()?;
    let pool = pool(cfg.n_workers)?;
    let mut acc = init();
    let mut stats = RunStats::default();
    let round = 64u64;
    let mut next_batch = 0u64;
    let cap_batches = max_attempts.div_ceil(cfg.batch);
    while stats.accepted < wanted {
        if next_batch >= cap_batches {
            return Err(Error::AcceptanceStarvation {
                accepted: stats.accepted as usize,
                attempts: stats.attempts,
                wanted: wanted as usize,
            });
        }
        let n = round.min(cap_batches - next_batch);
        let end = max_attempts;
        let parts = pool.install(|| fold_range(params, mode, cfg, next_batch, n, end, &init, &fold));
        next_batch += n;
        for (part, s) in parts {
            merge(&mut acc, part);
            stats.attempts += s.attempts;
            stats.accepted += s.accepted;
        }
    }
    Ok((acc, stats))
}

/// Sequential stream of accepted paths from `cfg.n_paths` attempts.
#[derive(Debug, Clone)]
pub struct PathStream {
    params: ModelParams,
    mode: SimMode,
    key: PathRng,
    next: u64,
    end: u64,
    stats: RunStats,
}

impl PathStream {
    pub fn new(params: ModelParams, mode: SimMode, cfg: &McConfig) -> Self {
        Self {
            params,
            mode,
            key: PathRng::new(cfg.seed),
            next: 0,
            end: cfg.n_paths,
            stats: RunStats::default(),
        }
    }

    /// Counts so far; final once the stream is exhausted.
    pub fn stats(&self) -> RunStats {
        self.stats
    }

    pub fn acceptance_rate(&self) -> f64 {
        self.stats.acceptance_rate()
    }
}

impl Iterator for PathStream {
    type Item = PathSample;

    fn next(&mut self) -> Option<PathSample> {
        while self.next < self.end {
            let i = self.next;
            self.next += 1;
            self.stats.attempts += 1;
            let mut rng = self.key.stream(i);
            if let Some(p) = sample_with(&self.params, &self.mode, &mut rng) {
                self.stats.accepted += 1;
                return Some(p);
            }
        }
        None
    }
}

pub fn simulate_free(params: &ModelParams, cfg: &McConfig, v0: InitialVelocity) -> PathStream {
    PathStream::new(*params, SimMode::Free(v0), cfg)
}

/// Rejection sampler for the meander; the stream's acceptance rate estimates
/// `P{min >= 0 | V(0) = +c}`.
pub fn simulate_meander(params: &ModelParams, cfg: &McConfig) -> PathStream {
    PathStream::new(*params, SimMode::Meander, cfg)
}

pub fn simulate_given_n(params: &ModelParams, cfg: &McConfig, n: u32, v0: Velocity, conditioned: bool) -> PathStream {
    PathStream::new(
        *params,
        SimMode::GivenN {
            n,
            v0,
            conditioned,
        },
        cfg,
    )
}

/// Running mean and variance, mergeable in a fixed order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub n: u64,
    pub mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, other: Moments) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = other;
            return;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        self.mean += d * other.n as f64 / n as f64;
        self.m2 += other.m2 + d * d * (self.n as f64 * other.n as f64) / n as f64;
        self.n = n;
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn std_error(&self) -> f64 {
        (self.variance() / self.n.max(1) as f64).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> ModelParams {
        ModelParams::new(1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn path_summaries_match_piecewise_evaluation() {
        let p = ModelParams::new(2.0, 1.5, 2.0).unwrap();
        let path = PathSample::from_switches(&p, Velocity::Plus, vec![0.3, 0.9, 1.7]);
        // +1.5*0.3, -1.5*0.6, +1.5*0.8, -1.5*0.3
        let want = 1.5 * (0.3 - 0.6 + 0.8 - 0.3);
        assert!((path.endpoint - want).abs() < 1e-14);
        assert!((path.position(&p, 2.0) - want).abs() < 1e-14);
        assert!((path.minimum - (1.5 * 0.3 - 1.5 * 0.6)).abs() < 1e-14);
        assert_eq!(path.final_velocity(), Velocity::Minus);
        assert_eq!(path.switches_in(0.0, 1.0), 2);
    }

    #[test]
    fn tiny_rate_gives_straight_paths() {
        let p = ModelParams::new(1e-9, 1.0, 1.0).unwrap();
        let cfg = McConfig::new(2000, 3);
        for path in simulate_free(&p, &cfg, InitialVelocity::Symmetric) {
            assert_eq!(path.endpoint.abs(), 1.0);
        }
    }

    #[test]
    fn given_zero_switches_is_deterministic() {
        let cfg = McConfig::new(10, 1);
        for path in simulate_given_n(&unit(), &cfg, 0, Velocity::Minus, true) {
            assert_eq!(path.endpoint, 1.0);
            assert_eq!(path.v0, Velocity::Plus);
        }
    }

    #[test]
    fn streams_and_folds_agree() {
        let cfg = McConfig::new(5000, 11);
        let seq: Vec<f64> = simulate_meander(&unit(), &cfg).map(|p| p.endpoint).collect();
        let (par, stats) = fold_paths(
            &unit(),
            &SimMode::Meander,
            &cfg.workers(3),
            Vec::new,
            |v: &mut Vec<f64>, p| v.push(p.endpoint),
            |a, b| a.extend(b),
        )
        .unwrap();
        assert_eq!(seq, par);
        assert_eq!(stats.accepted as usize, seq.len());
    }

    #[test]
    fn estimates_do_not_depend_on_worker_count() {
        let run = |w| {
            let cfg = McConfig::new(20_000, 42).workers(w);
            fold_paths(
                &unit(),
                &SimMode::Free(InitialVelocity::Symmetric),
                &cfg,
                Moments::default,
                |m, p| m.push(p.endpoint),
                |a, b| a.merge(b),
            )
            .unwrap()
            .0
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn starvation_is_reported() {
        let p = ModelParams::new(1.0, 1.0, 1.0).unwrap();
        let mode = SimMode::GivenN {
            n: 40,
            v0: Velocity::Plus,
            conditioned: true,
        };
        let cfg = McConfig::new(1, 5);
        let err = fold_until_accepted(&p, &mode, &cfg, 1_000_000, 10_000, || 0u64, |a, _| *a += 1, |a, b| *a += b)
            .unwrap_err();
        assert!(matches!(err, Error::AcceptanceStarvation { .. }));
    }

    #[test]
    fn moments_merge_matches_sequential() {
        let xs: Vec<f64> = (0..100).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut all = Moments::default();
        xs.iter().for_each(|&x| all.push(x));
        let mut a = Moments::default();
        let mut b = Moments::default();
        xs[..37].iter().for_each(|&x| a.push(x));
        xs[37..].iter().for_each(|&x| b.push(x));
        a.merge(b);
        assert!((a.mean - all.mean).abs() < 1e-14);
        assert!((a.variance() - all.variance()).abs() < 1e-13);
    }
}
