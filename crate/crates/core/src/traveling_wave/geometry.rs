//! Star-shaped domains `r < R0 + ρ(θ)` with `ρ = Σ ρ_n cos nθ`, and the
//! harmonic-polynomial map from the unit disk onto them.
//!
//! The map is `F(z) = R0 z + ρ_0 z + Σ_{n≥1} (ρ_n/2)(z^{n+1} + z̄^{n−1})`, whose
//! boundary values are exactly `(R0 + ρ(θ)) e^{iθ}` and which is smooth at the
//! origin.

use super::disk::DiskGrid;
use faer::{c64, Mat};
use std::f64::consts::PI;

#[derive(Clone, Debug, PartialEq)]
pub struct Shape {
    pub r0: f64,
    /// Cosine coefficients `ρ_0, ρ_1, …`.
    pub modes: Vec<f64>,
}

impl Shape {
    pub fn disk(r0: f64, n_modes: usize) -> Self {
        Shape { r0, modes: vec![0.0; n_modes] }
    }

    pub fn rho(&self, th: f64) -> f64 {
        self.modes.iter().enumerate().map(|(n, a)| a * (n as f64 * th).cos()).sum()
    }

    /// `(S, S′, S″)` with `S = R0 + ρ`.
    pub fn radius(&self, th: f64) -> (f64, f64, f64) {
        let mut s = self.r0;
        let (mut s1, mut s2) = (0.0, 0.0);
        for (n, a) in self.modes.iter().enumerate() {
            let nf = n as f64;
            let (sn, cn) = (nf * th).sin_cos();
            s += a * cn;
            s1 -= a * nf * sn;
            s2 -= a * nf * nf * cn;
        }
        (s, s1, s2)
    }

    pub fn area(&self) -> f64 {
        let a0 = self.r0 + self.modes.first().copied().unwrap_or(0.0);
        PI * a0 * a0 + 0.5 * PI * self.modes.iter().skip(1).map(|a| a * a).sum::<f64>()
    }

    pub fn curvature(&self, th: f64) -> f64 {
        let (s, s1, s2) = self.radius(th);
        (s * s + 2.0 * s1 * s1 - s * s2) / (s * s + s1 * s1).powf(1.5)
    }

    /// Outward unit normal and arc speed `|X_θ|`.
    pub fn normal(&self, th: f64) -> ([f64; 2], f64) {
        let (s, s1, _) = self.radius(th);
        let (sn, cn) = th.sin_cos();
        let g = (s * s + s1 * s1).sqrt();
        ([(s * cn + s1 * sn) / g, (s * sn - s1 * cn) / g], g)
    }

    /// `(x, y)` and the Wirtinger derivatives `(f_z, f_z̄)` at `z`.
    fn map_point(&self, z: c64) -> (c64, c64, c64) {
        let rho0 = self.modes.first().copied().unwrap_or(0.0);
        let zb = z.conj();
        let mut f = z * (self.r0 + rho0);
        let mut fz = c64::new(self.r0 + rho0, 0.0);
        let mut fzb = c64::new(0.0, 0.0);
        for (n, &a) in self.modes.iter().enumerate().skip(1) {
            let h = 0.5 * a;
            f += (z.powi(n as i32 + 1) + zb.powi(n as i32 - 1)) * h;
            fz += z.powi(n as i32) * (h * (n as f64 + 1.0));
            if n >= 2 {
                fzb += zb.powi(n as i32 - 2) * (h * (n as f64 - 1.0));
            }
        }
        (f, fz, fzb)
    }
}

/// Geometry of a mapped grid: physical node positions, inverse Jacobian
/// entries, quadrature weights and boundary data.
#[derive(Clone, Debug)]
pub struct MappedGrid {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub jac: Vec<f64>,
    /// `∂_x = ax_xi ∂_ξ + ax_eta ∂_η`, similarly for `∂_y`.
    pub ax_xi: Vec<f64>,
    pub ax_eta: Vec<f64>,
    pub ay_xi: Vec<f64>,
    pub ay_eta: Vec<f64>,
    /// Area quadrature over all nodes.
    pub weights: Vec<f64>,
    /// Area quadrature using interior rings only.
    pub weights_interior: Vec<f64>,
    pub nu: Vec<[f64; 2]>,
    pub arc_speed: Vec<f64>,
    pub kappa: Vec<f64>,
    pub area: f64,
}

impl MappedGrid {
    pub fn new(grid: &DiskGrid, shape: &Shape) -> Self {
        let np = grid.len();
        let h = 2.0 * PI / grid.nt as f64;
        let mut mg = MappedGrid {
            x: vec![0.0; np],
            y: vec![0.0; np],
            jac: vec![0.0; np],
            ax_xi: vec![0.0; np],
            ax_eta: vec![0.0; np],
            ay_xi: vec![0.0; np],
            ay_eta: vec![0.0; np],
            weights: vec![0.0; np],
            weights_interior: vec![0.0; np],
            nu: Vec::with_capacity(grid.nt),
            arc_speed: Vec::with_capacity(grid.nt),
            kappa: Vec::with_capacity(grid.nt),
            area: shape.area(),
        };
        for p in 0..np {
            let (xi, eta) = grid.xi_eta(p);
            let (f, a, b) = shape.map_point(c64::new(xi, eta));
            let u_xi = (a + b).re;
            let v_xi = (a + b).im;
            let u_eta = -(a - b).im;
            let v_eta = (a - b).re;
            let j = u_xi * v_eta - u_eta * v_xi;
            mg.x[p] = f.re;
            mg.y[p] = f.im;
            mg.jac[p] = j;
            mg.ax_xi[p] = v_eta / j;
            mg.ax_eta[p] = -v_xi / j;
            mg.ay_xi[p] = -u_eta / j;
            mg.ay_eta[p] = u_xi / j;
            let i = p / grid.nt;
            mg.weights[p] = h * grid.w_radial[i] * j.abs();
            mg.weights_interior[p] = h * grid.w_radial_interior[i] * j.abs();
        }
        for &th in &grid.theta {
            let (nu, g) = shape.normal(th);
            mg.nu.push(nu);
            mg.arc_speed.push(g);
            mg.kappa.push(shape.curvature(th));
        }
        mg
    }

    pub fn min_jacobian(&self) -> f64 {
        self.jac.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// `(∂_x f, ∂_y f)` at the nodes.
    pub fn gradient(&self, grid: &DiskGrid, f: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let fxi = matvec(&grid.dxi, f);
        let feta = matvec(&grid.deta, f);
        let fx = (0..f.len()).map(|p| self.ax_xi[p] * fxi[p] + self.ax_eta[p] * feta[p]).collect();
        let fy = (0..f.len()).map(|p| self.ay_xi[p] * fxi[p] + self.ay_eta[p] * feta[p]).collect();
        (fx, fy)
    }

    /// Dense `∂_x`, `∂_y` matrices.
    pub fn diff_matrices(&self, grid: &DiskGrid) -> (Mat<f64>, Mat<f64>) {
        let np = grid.len();
        let dx = Mat::from_fn(np, np, |p, q| {
            self.ax_xi[p] * grid.dxi[(p, q)] + self.ax_eta[p] * grid.deta[(p, q)]
        });
        let dy = Mat::from_fn(np, np, |p, q| {
            self.ay_xi[p] * grid.dxi[(p, q)] + self.ay_eta[p] * grid.deta[(p, q)]
        });
        (dx, dy)
    }

    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.weights.iter().zip(f).map(|(w, v)| w * v).sum()
    }
}

pub(crate) fn matvec(m: &Mat<f64>, v: &[f64]) -> Vec<f64> {
    let col = faer::ColRef::from_slice(v);
    let out = m * col;
    (0..out.nrows()).map(|i| out[i]).collect()
}
