//! Chebyshev collocation on `(0, R]` for functions with a definite parity.
//!
//! The grid takes the `K` positive points of an odd-degree Chebyshev grid on
//! `[-R, R]`, so `r = 0` is never a node. A mode-`n` radial factor extends to
//! `[-R, R]` with parity `(-1)^n`, which folds the full differentiation matrix
//! onto the positive half.

use super::quadrature::interpolatory_weights;
use faer::Mat;
use serde::Serialize;
use std::f64::consts::PI;

/// Chebyshev points `cos(jπ/N)` and the differentiation matrix on `[-1, 1]`.
pub fn cheb(n: usize) -> (Vec<f64>, Mat<f64>) {
    let x: Vec<f64> = (0..=n).map(|j| (PI * j as f64 / n as f64).cos()).collect();
    let c = |j: usize| -> f64 {
        let e = if j == 0 || j == n { 2.0 } else { 1.0 };
        if j % 2 == 0 { e } else { -e }
    };
    let mut d = Mat::<f64>::zeros(n + 1, n + 1);
    for i in 0..=n {
        let mut row = 0.0;
        for j in 0..=n {
            if i != j {
                let v = c(i) / c(j) / (x[i] - x[j]);
                d[(i, j)] = v;
                row += v;
            }
        }
        d[(i, i)] = -row;
    }
    (x, d)
}

/// Fold a full `(N+1)x(N+1)` matrix onto the first `K = (N+1)/2` columns for
/// functions with `f(-x) = parity * f(x)`. Rows are restricted to the first `K`.
pub fn fold(m: &Mat<f64>, parity: f64) -> Mat<f64> {
    let n = m.nrows() - 1;
    let k = m.nrows() / 2;
    Mat::from_fn(k, k, |i, j| m[(i, j)] + parity * m[(i, n - j)])
}

#[derive(Clone, Debug, Serialize)]
pub struct CollocationGrid {
    /// Radial nodes, `points[0] = R`, decreasing towards the origin.
    pub points: Vec<f64>,
    #[serde(skip)]
    pub d1: Mat<f64>,
    #[serde(skip)]
    pub d2: Mat<f64>,
    /// `true` for even extension (mode index `n` even).
    pub even: bool,
}

impl CollocationGrid {
    /// `k` positive nodes on `(0, r]` for Fourier mode `n`.
    pub fn new(k: usize, r: f64, n: usize) -> Self {
        assert!(k >= 2);
        let nn = 2 * k - 1;
        let (x, d) = cheb(nn);
        let d2 = &d * &d;
        let parity = if n % 2 == 0 { 1.0 } else { -1.0 };
        let d1 = fold(&d, parity) * faer::Scale(1.0 / r);
        let d2 = fold(&d2, parity) * faer::Scale(1.0 / (r * r));
        CollocationGrid { points: x[..k].iter().map(|s| s * r).collect(), d1, d2, even: n % 2 == 0 }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Weights `w_j` on the positive nodes `s_j = cos(jπ/(2K-1))`, `j` in `range`,
/// such that `sum_j w_j g(s_j) ≈ ∫_0^1 g(s) s ds` for even smooth `g`.
///
/// With `u = s²` the integral becomes `∫ G(u) du / 2`, which is integrated by
/// the interpolatory rule in `t = 2u - 1 = cos(2jπ/(2K-1))`.
pub fn even_radial_weights(k: usize, range: std::ops::Range<usize>) -> Vec<f64> {
    let nn = (2 * k - 1) as f64;
    let t: Vec<f64> = range.clone().map(|j| (2.0 * PI * j as f64 / nn).cos()).collect();
    interpolatory_weights(&t).into_iter().map(|w| 0.25 * w).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_of_powers() {
        let k = 24;
        let r = 3.0;
        for n in 0..2 {
            let g = CollocationGrid::new(k, r, n);
            for p in (n..=k).step_by(2) {
                let f: Vec<f64> = g.points.iter().map(|x| x.powi(p as i32)).collect();
                for i in 0..k {
                    let mut d1 = 0.0;
                    let mut d2 = 0.0;
                    for j in 0..k {
                        d1 += g.d1[(i, j)] * f[j];
                        d2 += g.d2[(i, j)] * f[j];
                    }
                    let x = g.points[i];
                    let e1 = p as f64 * x.powi(p as i32 - 1);
                    let e2 = if p >= 2 { (p * (p - 1)) as f64 * x.powi(p as i32 - 2) } else { 0.0 };
                    let scale = r.powi(p as i32);
                    assert!((d1 - e1).abs() <= 1e-10 * scale, "p={p} i={i}");
                    assert!((d2 - e2).abs() <= 1e-8 * scale, "p={p} i={i}");
                }
            }
        }
    }

    #[test]
    fn second_derivative_is_square_of_first() {
        // D1 maps parity p to parity -p, so the square uses both folds.
        for n in 0..2 {
            let g = CollocationGrid::new(16, 1.0, n);
            let h = CollocationGrid::new(16, 1.0, n + 1);
            let sq = &h.d1 * &g.d1;
            for i in 1..16 {
                for j in 0..16 {
                    assert!((g.d2[(i, j)] - sq[(i, j)]).abs() < 1e-8 * g.d2.norm_max());
                }
            }
        }
    }

    #[test]
    fn radial_weights_exact_on_even_polynomials() {
        let k = 12;
        for range in [0..k, 1..k] {
            let w = even_radial_weights(k, range.clone());
            assert!(w.iter().all(|&x| x > 0.0));
            let nn = (2 * k - 1) as f64;
            for p in 0..(range.len() as i32) {
                let got: f64 = range
                    .clone()
                    .zip(&w)
                    .map(|(j, w)| w * (PI * j as f64 / nn).cos().powi(2 * p))
                    .sum();
                let exact = 1.0 / (2.0 * p as f64 + 2.0);
                assert!((got - exact).abs() < 1e-13, "p={p}");
            }
        }
    }
}
