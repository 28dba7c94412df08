//! Chebyshev–Fourier collocation on the unit disk.
//!
//! Nodes are `(s_i, θ_k)` with `s_i = cos(iπ/(2K−1))`, `i < K` (so `s_0 = 1` is
//! the boundary ring and the origin is never a node) and `θ_k = 2πk/Nθ`. A
//! smooth function satisfies `f(−s, θ) = f(s, θ + π)`, which folds the radial
//! Chebyshev matrix onto the positive half.

use crate::numerics::{cheb, even_radial_weights};
use faer::Mat;
use std::f64::consts::PI;

/// Angular functions used on each ring. The Nyquist mode `cos(Nθ θ/2)` is
/// excluded: first-derivative Fourier matrices annihilate it, so it would be
/// unconstrained by the Laplacian.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RingBasis {
    Cos,
    Sin,
    Both,
}

#[derive(Clone, Debug)]
pub struct DiskGrid {
    pub k: usize,
    pub nt: usize,
    pub s: Vec<f64>,
    pub theta: Vec<f64>,
    /// `∂_s` and `∂_θ` on the node vector.
    pub ds: Mat<f64>,
    pub dth: Mat<f64>,
    /// Cartesian derivatives in the computational disk.
    pub dxi: Mat<f64>,
    pub deta: Mat<f64>,
    /// Fourier differentiation on one ring.
    pub fourier_d: Mat<f64>,
    /// `∫_0^1 g s ds` weights using all rings.
    pub w_radial: Vec<f64>,
    /// Same, using rings `1..K` only; entry 0 (boundary ring) is zero.
    pub w_radial_interior: Vec<f64>,
}

/// Periodic spectral differentiation matrix on `n` (even) equispaced points.
pub fn fourier_diff(n: usize) -> Mat<f64> {
    assert!(n % 2 == 0 && n >= 4);
    let h = 2.0 * PI / n as f64;
    Mat::from_fn(n, n, |k, l| {
        if k == l {
            0.0
        } else {
            let d = k as f64 - l as f64;
            let sign = if (k + n - l) % 2 == 0 { 1.0 } else { -1.0 };
            0.5 * sign / (0.5 * d * h).tan()
        }
    })
}

/// Band-limited interpolation weight of node `l` at angle `t` on `n` nodes.
fn periodic_sinc(n: usize, t: f64, l: usize) -> f64 {
    let x = t - 2.0 * PI * l as f64 / n as f64;
    let half = 0.5 * x;
    let sh = half.sin();
    if sh.abs() < 1e-14 {
        // x is a multiple of 2π
        return 1.0;
    }
    (0.5 * n as f64 * x).sin() * half.cos() / (n as f64 * sh)
}

impl DiskGrid {
    pub fn new(k: usize, nt: usize) -> Self {
        assert!(k >= 4 && nt >= 8 && nt % 2 == 0);
        let nn = 2 * k - 1;
        let (x, d) = cheb(nn);
        let s: Vec<f64> = x[..k].to_vec();
        let theta: Vec<f64> = (0..nt).map(|j| 2.0 * PI * j as f64 / nt as f64).collect();
        let np = k * nt;
        let idx = |i: usize, j: usize| i * nt + j;
        let mut ds = Mat::<f64>::zeros(np, np);
        for i in 0..k {
            for j in 0..k {
                for t in 0..nt {
                    ds[(idx(i, t), idx(j, t))] += d[(i, j)];
                    ds[(idx(i, t), idx(j, (t + nt / 2) % nt))] += d[(i, nn - j)];
                }
            }
        }
        let fd = fourier_diff(nt);
        let mut dth = Mat::<f64>::zeros(np, np);
        for i in 0..k {
            for a in 0..nt {
                for b in 0..nt {
                    dth[(idx(i, a), idx(i, b))] = fd[(a, b)];
                }
            }
        }
        let dxi = Mat::from_fn(np, np, |p, q| {
            let (i, t) = (p / nt, p % nt);
            theta[t].cos() * ds[(p, q)] - theta[t].sin() / s[i] * dth[(p, q)]
        });
        let deta = Mat::from_fn(np, np, |p, q| {
            let (i, t) = (p / nt, p % nt);
            theta[t].sin() * ds[(p, q)] + theta[t].cos() / s[i] * dth[(p, q)]
        });
        DiskGrid {
            k,
            nt,
            w_radial: even_radial_weights(k, 0..k),
            w_radial_interior: std::iter::once(0.0).chain(even_radial_weights(k, 1..k)).collect(),
            s,
            theta,
            ds,
            dth,
            dxi,
            deta,
            fourier_d: fd,
        }
    }

    pub fn len(&self) -> usize {
        self.k * self.nt
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn idx(&self, i: usize, t: usize) -> usize {
        i * self.nt + t
    }

    /// Computational Cartesian coordinates of node `p`.
    pub fn xi_eta(&self, p: usize) -> (f64, f64) {
        let (i, t) = (p / self.nt, p % self.nt);
        (self.s[i] * self.theta[t].cos(), self.s[i] * self.theta[t].sin())
    }

    /// `(n, is_sin)` for the functions of one ring, `n ≤ n_max < Nθ/2`.
    pub fn ring_modes(&self, kind: RingBasis, n_max: usize) -> Vec<(usize, bool)> {
        let top = n_max.min(self.nt / 2 - 1) + 1;
        let cos = (0..top).map(|n| (n, false));
        let sin = (1..top).map(|n| (n, true));
        match kind {
            RingBasis::Cos => cos.collect(),
            RingBasis::Sin => sin.collect(),
            RingBasis::Both => cos.chain(sin).collect(),
        }
    }

    /// Synthesis (`nodes × coefficients`) and analysis (`coefficients × nodes`)
    /// matrices of the ring-wise Fourier basis; `analysis · synthesis = I`.
    pub fn ring_basis(&self, kind: RingBasis, n_max: usize) -> (Mat<f64>, Mat<f64>) {
        let modes = self.ring_modes(kind, n_max);
        let per = modes.len();
        let (np, nt) = (self.len(), self.nt);
        let f = |n: usize, is_sin: bool, t: usize| {
            let a = n as f64 * self.theta[t];
            if is_sin { a.sin() } else { a.cos() }
        };
        let syn = Mat::from_fn(np, self.k * per, |p, c| {
            if p / nt != c / per {
                return 0.0;
            }
            let (n, is_sin) = modes[c % per];
            f(n, is_sin, p % nt)
        });
        let ana = Mat::from_fn(self.k * per, np, |c, p| {
            if p / nt != c / per {
                return 0.0;
            }
            let (n, is_sin) = modes[c % per];
            let eps = if n == 0 { 1.0 } else { 2.0 };
            eps / nt as f64 * f(n, is_sin, p % nt)
        });
        (syn, ana)
    }

    /// Row vector interpolating nodal values to the point `(s, θ)`, `s` in `[0, 1]`.
    pub fn interp_row(&self, s: f64, th: f64) -> Vec<f64> {
        let nn = 2 * self.k - 1;
        let mut row = vec![0.0; self.len()];
        let xs: Vec<f64> = (0..=nn).map(|j| (PI * j as f64 / nn as f64).cos()).collect();
        let bw = |j: usize| -> f64 {
            let w = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == nn { 0.5 * w } else { w }
        };
        let hit = xs.iter().position(|&x| (x - s).abs() < 1e-15);
        let cweights: Vec<f64> = match hit {
            Some(j) => (0..=nn).map(|l| if l == j { 1.0 } else { 0.0 }).collect(),
            None => {
                let raw: Vec<f64> = (0..=nn).map(|j| bw(j) / (s - xs[j])).collect();
                let tot: f64 = raw.iter().sum();
                raw.iter().map(|r| r / tot).collect()
            }
        };
        for (j, &cw) in cweights.iter().enumerate() {
            if cw == 0.0 {
                continue;
            }
            let (ring, t) = if j < self.k { (j, th) } else { (nn - j, th + PI) };
            for l in 0..self.nt {
                row[self.idx(ring, l)] += cw * periodic_sinc(self.nt, t, l);
            }
        }
        row
    }
}
