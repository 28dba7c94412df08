use faer::Mat;
use faer::linalg::solvers::Solve;
use serde::Serialize;
use std::f64::consts::PI;

#[derive(Clone, Debug, Serialize)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// Legendre polynomial `P_n(x)` and its derivative.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Gauss–Legendre rule with `n` points mapped to `[a, b]`.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> QuadratureRule {
    assert!(n >= 1 && a < b, "gauss_legendre: need n >= 1 and a < b");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = mid - half * x;
        nodes[n - 1 - i] = mid + half * x;
        weights[i] = half * w;
        weights[n - 1 - i] = half * w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = mid;
    }
    QuadratureRule { nodes, weights }
}

/// Interpolatory weights `w` with `sum_j w_j p(t_j) = ∫_{-1}^{1} p` for all
/// polynomials of degree below `t.len()`.
pub fn interpolatory_weights(t: &[f64]) -> Vec<f64> {
    let n = t.len();
    let a = Mat::<f64>::from_fn(n, n, |k, j| (k as f64 * t[j].clamp(-1.0, 1.0).acos()).cos());
    let rhs = Mat::<f64>::from_fn(n, 1, |k, _| if k % 2 == 0 { 2.0 / (1.0 - (k * k) as f64) } else { 0.0 });
    let w = a.partial_piv_lu().solve(&rhs);
    (0..n).map(|j| w[(j, 0)]).collect()
}
