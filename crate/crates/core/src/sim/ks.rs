use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
}

impl KsResult {
    pub fn passes(&self, level: f64) -> bool {
        self.p_value >= level
    }
}

/// Two-sided Kolmogorov–Smirnov statistic of a sorted sample against `cdf`,
/// with the asymptotic p-value (Stephens' small-sample correction).
pub fn ks_statistic<F: Fn(f64) -> f64>(sorted: &[f64], cdf: F) -> Result<KsResult> {
    if sorted.is_empty() {
        return Err(Error::EmptySample);
    }
    let n = sorted.len();
    let nf = n as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        let lo = i as f64 / nf;
        let hi = (i + 1) as f64 / nf;
        d = d.max((f - lo).abs()).max((hi - f).abs());
    }
    let sq = nf.sqrt();
    let p_value = kolmogorov_survival((sq + 0.12 + 0.11 / sq) * d);
    Ok(KsResult {
        statistic: d,
        p_value,
        n,
    })
}

/// `P{K > x}` for the Kolmogorov distribution.
pub fn kolmogorov_survival(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < 1.0 {
        // theta-function form, fast for small x
        let pi2 = std::f64::consts::PI.powi(2);
        let s: f64 = (1..=20)
            .map(|k| {
                let m = (2 * k - 1) as f64;
                (-m * m * pi2 / (8.0 * x * x)).exp()
            })
            .sum();
        return (1.0 - (2.0 * std::f64::consts::PI).sqrt() / x * s).clamp(0.0, 1.0);
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * x * x).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}
