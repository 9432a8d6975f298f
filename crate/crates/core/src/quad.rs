//! Gauss–Legendre quadrature: fixed rules and an adaptive bisection driver.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// A Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Builds the `n`-point rule by Newton iteration on `P_n`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_and_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_and_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Shared rule for `n` nodes, built once per process.
    pub fn cached(n: usize) -> Arc<Self> {
        static RULES: OnceLock<Mutex<HashMap<usize, Arc<GaussLegendre>>>> = OnceLock::new();
        let mut map = RULES
            .get_or_init(|| Mutex::new(HashMap::new()))
            .lock()
            .expect("quadrature rule cache poisoned");
        map.entry(n).or_insert_with(|| Arc::new(Self::new(n))).clone()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mid + half * x, w * half))
    }
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

const ADAPTIVE_NODES: usize = 20;
const MAX_DEPTH: u32 = 40;

/// Adaptive Gauss–Legendre on `[a, b]` to absolute tolerance `tol`.
///
/// Each panel is accepted when the 20-point rule on the panel and the sum of
/// the rule over its two halves agree within the panel's share of `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    if b < a {
        return -integrate(f, b, a, tol);
    }
    let rule = GaussLegendre::cached(ADAPTIVE_NODES);
    let whole = rule.integrate(a, b, &f);
    recurse(&f, &rule, a, b, whole, tol, 0)
}

fn recurse<F: Fn(f64) -> f64>(
    f: &F,
    rule: &GaussLegendre,
    a: f64,
    b: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let mid = 0.5 * (a + b);
    let left = rule.integrate(a, mid, f);
    let right = rule.integrate(mid, b, f);
    let refined = left + right;
    if (refined - whole).abs() <= tol.max(1e-15 * refined.abs()) || depth >= MAX_DEPTH {
        return refined;
    }
    recurse(f, rule, a, mid, left, 0.5 * tol, depth + 1)
        + recurse(f, rule, mid, b, right, 0.5 * tol, depth + 1)
}

/// Integrates across `points` (sorted breakpoints, including both ends),
/// never placing a panel across a breakpoint.
pub fn integrate_pieces<F: Fn(f64) -> f64>(f: F, points: &[f64], tol: f64) -> f64 {
    let pieces = points.len().saturating_sub(1).max(1) as f64;
    points
        .windows(2)
        .map(|w| integrate(&f, w[0], w[1], tol / pieces))
        .sum()
}

/// Fixed-rule integration with node doubling: starts at `n0` nodes and
/// doubles until successive results differ by less than `tol`.
pub fn integrate_doubling<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n0: usize, tol: f64) -> f64 {
    let mut n = n0;
    let mut prev = GaussLegendre::cached(n).integrate(a, b, &f);
    for _ in 0..4 {
        n *= 2;
        let next = GaussLegendre::cached(n).integrate(a, b, &f);
        if (next - prev).abs() < tol {
            return next;
        }
        prev = next;
    }
    prev
}
