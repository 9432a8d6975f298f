//! Shared fixtures for the criterion benchmarks.

use telemeander::ModelParams;

/// Parameter sets spanning few, moderate and many expected switches.
pub fn fixtures() -> Vec<(&'static str, ModelParams)> {
    [("sparse", 0.3, 4.0, 0.8), ("unit", 1.0, 1.0, 1.0), ("dense", 8.0, 1.0, 4.0)]
        .into_iter()
        .map(|(name, l, c, t)| (name, ModelParams::new(l, c, t).expect("valid fixture")))
        .collect()
}

/// `n` evenly spaced points strictly inside `(0, c·t)`.
pub fn interior_grid(params: &ModelParams, n: usize) -> Vec<f64> {
    let ct = params.ct();
    (1..=n).map(|i| ct * i as f64 / (n + 1) as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_stays_inside_support() {
        for (_, p) in fixtures() {
            let g = interior_grid(&p, 10);
            assert_eq!(g.len(), 10);
            assert!(g.iter().all(|&x| x > 0.0 && x < p.ct()));
        }
    }
}
