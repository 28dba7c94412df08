//! Traveling waves: Newton solver on a mapped disk, natural-parameter
//! continuation in `V`, and quantities derived from the branch.
//!
//! Unknowns are `Φ` at the collocation nodes with `θ_k ∈ [0, π]` (even
//! symmetry), the cosine modes of `ρ`, and the normalization `Λ` of the myosin
//! density `m = Λ e^{Φ−Vx}`. The mass `M = ∫ m` is an output.

pub mod disk;
pub mod geometry;

pub use disk::{DiskGrid, RingBasis};
pub use geometry::{MappedGrid, Shape};

use crate::bifurcation::PhiD;
use crate::error::{Error, Result};
use crate::export::CsvWriter;
use crate::model::{radial_state, ModelParams};
use faer::linalg::solvers::{Solve, SolveLstsq};
use faer::Mat;
use geometry::matvec;
use serde::Serialize;
use std::f64::consts::PI;
use std::io::Write;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TwControls {
    /// Radial nodes including the boundary ring.
    pub n_radial: usize,
    /// Angular nodes (even).
    pub n_theta: usize,
    /// Number of shape modes `ρ_0..ρ_{n_shape−1}`.
    pub n_shape: usize,
    pub newton_tol: f64,
    pub max_iter: usize,
    /// Step for the finite-difference columns of the Jacobian.
    pub fd_step: f64,
}

impl Default for TwControls {
    fn default() -> Self {
        TwControls { n_radial: 16, n_theta: 32, n_shape: 15, newton_tol: 1e-10, max_iter: 12, fd_step: 1e-6 }
    }
}

impl TwControls {
    pub fn validate(&self) -> Result<()> {
        if self.n_radial < 6 || self.n_theta < 8 || self.n_theta % 2 != 0 {
            return Err(Error::InvalidParams(format!(
                "grid {}x{} too small (need n_radial >= 6, even n_theta >= 8)",
                self.n_radial, self.n_theta
            )));
        }
        if self.n_shape < 3 || self.n_shape >= self.n_theta / 2 {
            return Err(Error::InvalidParams(format!(
                "n_shape = {} must lie in 3..{}",
                self.n_shape,
                self.n_theta / 2
            )));
        }
        if !(self.newton_tol > 0.0) || !(self.fd_step > 0.0) || self.max_iter == 0 {
            return Err(Error::InvalidParams("newton_tol, fd_step and max_iter must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TravelingWave {
    pub v: f64,
    pub lambda: f64,
    pub mass: f64,
    pub area: f64,
    pub r0: f64,
    pub rho_modes: Vec<f64>,
    /// `Φ` at every node of the disk grid, ring by ring from the boundary.
    pub phi: Vec<f64>,
    pub residual_norm: f64,
    pub newton_iters: usize,
    pub n_radial: usize,
    pub n_theta: usize,
}

impl TravelingWave {
    pub fn shape(&self) -> Shape {
        Shape { r0: self.r0, modes: self.rho_modes.clone() }
    }

    pub fn rho_sup(&self) -> f64 {
        (0..1024)
            .map(|j| self.shape().rho(PI * j as f64 / 1023.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Discretization of the traveling-wave system for one parameter set.
#[derive(Clone, Debug)]
pub struct TwSolver {
    pub params: ModelParams,
    pub r0: f64,
    pub controls: TwControls,
    pub grid: DiskGrid,
    /// Cosine ring basis carrying the unknown `Φ`.
    synthesis: Mat<f64>,
    analysis: Mat<f64>,
    m0: f64,
}

struct Residual {
    values: Vec<f64>,
    /// Neumann condition on the boundary ring, PDE elsewhere.
    nodal: Vec<f64>,
    young_laplace: Vec<f64>,
    /// `e^{Φ−Vx}` at all nodes.
    expo: Vec<f64>,
    mapped: MappedGrid,
}

impl TwSolver {
    pub fn new(params: &ModelParams, r0: f64, controls: TwControls) -> Result<Self> {
        controls.validate()?;
        let st = radial_state(params, r0)?;
        let grid = DiskGrid::new(controls.n_radial, controls.n_theta);
        let (synthesis, analysis) = grid.ring_basis(RingBasis::Cos, controls.n_theta / 2 - 1);
        Ok(TwSolver { params: *params, r0, controls, grid, synthesis, analysis, m0: st.m0 })
    }

    fn n_phi(&self) -> usize {
        self.synthesis.ncols()
    }

    fn n_unknowns(&self) -> usize {
        self.n_phi() + self.controls.n_shape + 1
    }

    /// The radial state as a `V = 0` wave.
    pub fn radial(&self) -> TravelingWave {
        let phi = vec![self.m0 / self.params.zeta; self.grid.len()];
        let shape = Shape::disk(self.r0, self.controls.n_shape);
        TravelingWave {
            v: 0.0,
            lambda: self.m0 * (-self.m0 / self.params.zeta).exp(),
            mass: PI * self.r0 * self.r0 * self.m0,
            area: shape.area(),
            r0: self.r0,
            rho_modes: shape.modes,
            phi,
            residual_norm: 0.0,
            newton_iters: 0,
            n_radial: self.grid.k,
            n_theta: self.grid.nt,
        }
    }

    /// First-order guess `Φ ≈ m0/ζ + V Φ_D(r) cos θ` about the radial state.
    pub fn tangent_guess(&self, v: f64) -> Result<TravelingWave> {
        let pd = PhiD::new(self.r0, self.m0, self.params.zeta)?;
        let mut tw = self.radial();
        for p in 0..self.grid.len() {
            let (i, t) = (p / self.grid.nt, p % self.grid.nt);
            tw.phi[p] += v * pd.value(self.r0 * self.grid.s[i]) * self.grid.theta[t].cos();
        }
        tw.v = v;
        Ok(tw)
    }

    fn pack(&self, tw: &TravelingWave) -> Vec<f64> {
        let mut u = matvec(&self.analysis, &tw.phi);
        u.extend_from_slice(&tw.rho_modes[..self.controls.n_shape]);
        u.push(tw.lambda);
        u
    }

    fn unpack<'a>(&self, u: &'a [f64]) -> (Vec<f64>, &'a [f64], f64) {
        let ne = self.n_phi();
        let ns = self.controls.n_shape;
        (matvec(&self.synthesis, &u[..ne]), &u[ne..ne + ns], u[ne + ns])
    }

    fn residual(&self, u: &[f64], v: f64) -> Residual {
        let g = &self.grid;
        let (phi, modes, lambda) = self.unpack(u);
        let shape = Shape { r0: self.r0, modes: modes.to_vec() };
        let mg = MappedGrid::new(g, &shape);
        let (px, py) = mg.gradient(g, &phi);
        let (pxx, _) = mg.gradient(g, &px);
        let (_, pyy) = mg.gradient(g, &py);
        let expo: Vec<f64> = (0..g.len()).map(|p| (phi[p] - v * mg.x[p]).exp()).collect();
        let zeta = self.params.zeta;
        let nodal: Vec<f64> = (0..g.len())
            .map(|p| {
                if p < g.nt {
                    let nu = mg.nu[p];
                    nu[0] * px[p] + nu[1] * py[p] - v * nu[0]
                } else {
                    pxx[p] + pyy[p] + lambda * expo[p] - zeta * phi[p]
                }
            })
            .collect();
        let mut values = matvec(&self.analysis, &nodal);
        let ps = self.params.p_star(mg.area);
        let young_laplace: Vec<f64> =
            (0..g.nt).map(|t| zeta * phi[t] - ps + self.params.gamma * mg.kappa[t]).collect();
        for n in 0..self.controls.n_shape {
            values.push(cos_coefficient(&young_laplace, &g.theta, n));
        }
        let rho_nodes: Vec<f64> = g.theta.iter().map(|&th| shape.rho(th)).collect();
        values.push(cos_coefficient(&rho_nodes, &g.theta, 1));
        Residual { values, nodal, young_laplace, expo, mapped: mg }
    }

    fn jacobian(&self, u: &[f64], v: f64, base: &Residual) -> Mat<f64> {
        let g = &self.grid;
        let np = g.len();
        let nu_count = self.n_unknowns();
        let ne = self.n_phi();
        let ns = self.controls.n_shape;
        let (_, _, lambda) = self.unpack(u);
        let mg = &base.mapped;
        let (dx, dy) = mg.diff_matrices(g);
        let lap = &dx * &dx + &dy * &dy;
        let zeta = self.params.zeta;
        let nodal = Mat::from_fn(np, np, |p, q| {
            if p < g.nt {
                mg.nu[p][0] * dx[(p, q)] + mg.nu[p][1] * dy[(p, q)]
            } else {
                lap[(p, q)] + if p == q { lambda * base.expo[p] - zeta } else { 0.0 }
            }
        });
        let jphi = &self.analysis * (&nodal * &self.synthesis);
        let dlambda: Vec<f64> = (0..np).map(|p| if p < g.nt { 0.0 } else { base.expo[p] }).collect();
        let jlambda = matvec(&self.analysis, &dlambda);
        let mut jac = Mat::<f64>::zeros(nu_count, nu_count);
        for r in 0..ne {
            for c in 0..ne {
                jac[(r, c)] = jphi[(r, c)];
            }
            jac[(r, nu_count - 1)] = jlambda[r];
        }
        // Young–Laplace rows depend on the boundary-ring coefficients of Φ
        for n in 0..ns {
            let eps = if n == 0 { 1.0 } else { 2.0 } / g.nt as f64;
            for c in 0..ne {
                let d: f64 = (0..g.nt).map(|t| (n as f64 * g.theta[t]).cos() * self.synthesis[(t, c)]).sum();
                jac[(ne + n, c)] = zeta * eps * d;
            }
        }
        let h = self.controls.fd_step * self.r0.max(1.0);
        let mut up = u.to_vec();
        for n in 0..ns {
            let col = ne + n;
            up[col] = u[col] + h;
            let rp = self.residual(&up, v).values;
            up[col] = u[col] - h;
            let rm = self.residual(&up, v).values;
            up[col] = u[col];
            for r in 0..nu_count {
                jac[(r, col)] = (rp[r] - rm[r]) / (2.0 * h);
            }
        }
        jac
    }

    /// Newton iteration from `guess` (whose `V` is ignored).
    pub fn solve(&self, v: f64, guess: &TravelingWave) -> Result<TravelingWave> {
        if !v.is_finite() {
            return Err(Error::InvalidParams(format!("V = {v} is not finite")));
        }
        if guess.phi.len() != self.grid.len() || guess.rho_modes.len() != self.controls.n_shape {
            return Err(Error::InvalidParams("initial guess does not match the grid".into()));
        }
        let mut u = self.pack(guess);
        let mut res = self.checked_residual(&u, v)?;
        let mut norm = inf_norm(&res.values);
        let mut iters = 0;
        while norm > self.controls.newton_tol {
            if iters == self.controls.max_iter {
                return Err(Error::NewtonFailed { v, residual: norm, iters });
            }
            iters += 1;
            let jac = self.jacobian(&u, v, &res);
            let rhs = Mat::from_fn(u.len(), 1, |i, _| res.values[i]);
            let delta = jac.partial_piv_lu().solve(&rhs);
            let mut step = 1.0;
            loop {
                let trial: Vec<f64> = (0..u.len()).map(|i| u[i] - step * delta[(i, 0)]).collect();
                let r = self.checked_residual(&trial, v);
                let better = matches!(&r, Ok(r) if inf_norm(&r.values) < norm);
                if better || step < 0.1 {
                    res = r?;
                    u = trial;
                    break;
                }
                step *= 0.5;
            }
            let new_norm = inf_norm(&res.values);
            if !new_norm.is_finite() {
                return Err(Error::NewtonFailed { v, residual: new_norm, iters });
            }
            norm = new_norm;
        }
        let (phi, modes, lambda) = self.unpack(&u);
        let mass = lambda * res.mapped.integrate(&res.expo);
        Ok(TravelingWave {
            v,
            lambda,
            mass,
            area: res.mapped.area,
            r0: self.r0,
            rho_modes: modes.to_vec(),
            phi,
            residual_norm: norm,
            newton_iters: iters,
            n_radial: self.grid.k,
            n_theta: self.grid.nt,
        })
    }

    fn checked_residual(&self, u: &[f64], v: f64) -> Result<Residual> {
        let r = self.residual(u, v);
        if !(r.mapped.min_jacobian() > 0.0) {
            return Err(Error::NewtonFailed { v, residual: f64::INFINITY, iters: 0 });
        }
        if !(self.params.p_star(r.mapped.area) > 0.0) {
            return Err(Error::Domain(format!(
                "area {} left the range where p★ > 0 at V = {v}",
                r.mapped.area
            )));
        }
        Ok(r)
    }

    /// Residual of the wave's equations on a finer collocation grid, using
    /// spectral interpolation of `Φ`.
    pub fn residual_on_grid(&self, tw: &TravelingWave, fine: &TwControls) -> Result<f64> {
        let solver = TwSolver::new(&self.params, self.r0, *fine)?;
        let fg = &solver.grid;
        let phi: Vec<f64> = (0..fg.len())
            .map(|p| {
                let (i, t) = (p / fg.nt, p % fg.nt);
                let row = self.grid.interp_row(fg.s[i], fg.theta[t]);
                row.iter().zip(&tw.phi).map(|(a, b)| a * b).sum()
            })
            .collect();
        let mut modes = tw.rho_modes.clone();
        modes.resize(fine.n_shape, 0.0);
        let fine_tw = TravelingWave { phi, rho_modes: modes, ..tw.clone() };
        let u = solver.pack(&fine_tw);
        let r = solver.residual(&u, tw.v);
        Ok(inf_norm(&r.nodal).max(inf_norm(&r.young_laplace)))
    }

    /// `Φ` on the boundary at an arbitrary angle.
    pub fn boundary_phi(&self, tw: &TravelingWave, th: f64) -> f64 {
        let row = self.grid.interp_row(1.0, th);
        row.iter().zip(&tw.phi).map(|(a, b)| a * b).sum()
    }

    /// Young–Laplace residual `ζΦ − p★(|Ω|) + γκ` at an arbitrary angle.
    pub fn young_laplace_residual(&self, tw: &TravelingWave, th: f64) -> f64 {
        let shape = tw.shape();
        self.params.zeta * self.boundary_phi(tw, th) - self.params.p_star(shape.area())
            + self.params.gamma * shape.curvature(th)
    }
}

/// `(ε_n/N) Σ f_k cos(nθ_k)`, the discrete cosine coefficient.
fn cos_coefficient(f: &[f64], theta: &[f64], n: usize) -> f64 {
    let eps = if n == 0 { 1.0 } else { 2.0 };
    eps / f.len() as f64 * f.iter().zip(theta).map(|(a, t)| a * (n as f64 * t).cos()).sum::<f64>()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| if x.is_nan() { f64::NAN } else { m.max(x.abs()) })
}

/// Solve one wave, starting from the radial state.
pub fn solve_tw(solver: &TwSolver, v: f64, initial_guess: Option<&TravelingWave>) -> Result<TravelingWave> {
    if v == 0.0 {
        return Ok(solver.radial());
    }
    match initial_guess {
        Some(g) => solver.solve(v, g),
        None => solver.solve(v, &solver.tangent_guess(v)?),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Branch {
    pub params: ModelParams,
    pub r0: f64,
    pub controls: TwControls,
    pub points: Vec<TravelingWave>,
    /// Independent solve at `−V_1`, for the symmetry and `M′(0)` checks.
    pub mirror: Option<TravelingWave>,
}

impl Branch {
    pub fn velocities(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.v).collect()
    }
}

/// Lagrange extrapolation of the unknowns from up to three previous waves.
fn extrapolate(solver: &TwSolver, hist: &[TravelingWave], v: f64) -> Result<TravelingWave> {
    let last = hist.last().expect("history is never empty");
    if hist.len() == 1 && last.v == 0.0 {
        return solver.tangent_guess(v);
    }
    let pts = &hist[hist.len().saturating_sub(3)..];
    let weights: Vec<f64> = (0..pts.len())
        .map(|j| {
            (0..pts.len())
                .filter(|&l| l != j)
                .map(|l| (v - pts[l].v) / (pts[j].v - pts[l].v))
                .product()
        })
        .collect();
    let comb = |f: &dyn Fn(&TravelingWave) -> &[f64]| -> Vec<f64> {
        let n = f(last).len();
        (0..n).map(|i| pts.iter().zip(&weights).map(|(p, w)| w * f(p)[i]).sum()).collect()
    };
    let mut tw = last.clone();
    tw.phi = comb(&|p| &p.phi);
    tw.rho_modes = comb(&|p| &p.rho_modes);
    tw.lambda = pts.iter().zip(&weights).map(|(p, w)| w * p.lambda).sum();
    tw.v = v;
    Ok(tw)
}

fn advance(solver: &TwSolver, hist: &[TravelingWave], target: f64, depth: usize) -> Result<TravelingWave> {
    let guess = extrapolate(solver, hist, target)?;
    match solver.solve(target, &guess) {
        Ok(tw) => Ok(tw),
        Err(_) if depth < 4 => {
            let mid = 0.5 * (hist.last().expect("nonempty").v + target);
            let tw_mid = advance(solver, hist, mid, depth + 1)?;
            let mut h2 = hist.to_vec();
            h2.push(tw_mid);
            advance(solver, &h2, target, depth + 1)
        }
        Err(e) => Err(e),
    }
}

/// Continuation through the given velocities (increasing, starting above 0).
/// The `V = 0` radial state is prepended.
pub fn continue_through(solver: &TwSolver, velocities: &[f64], with_mirror: bool) -> Result<Branch> {
    let mut points = vec![solver.radial()];
    for &v in velocities {
        let prev = points.last().expect("nonempty").v;
        if !(v > prev) {
            return Err(Error::InvalidParams(format!("velocities must increase from 0, got {v} after {prev}")));
        }
        match advance(solver, &points, v, 0) {
            Ok(tw) => points.push(tw),
            Err(_) => return Err(Error::BranchFailed { v, reached: prev }),
        }
    }
    let mirror = if with_mirror && points.len() > 1 {
        let first = &points[1];
        let guess = mirrored(solver, first);
        Some(solver.solve(-first.v, &guess).map_err(|_| Error::BranchFailed { v: -first.v, reached: 0.0 })?)
    } else {
        None
    };
    Ok(Branch { params: solver.params, r0: solver.r0, controls: solver.controls, points, mirror })
}

/// `V_k = k V_max / steps`, `k = 0..=steps`, plus the mirror point at `−V_1`.
pub fn continue_branch(solver: &TwSolver, v_max: f64, steps: usize) -> Result<Branch> {
    if steps == 0 || !(v_max > 0.0) || !v_max.is_finite() {
        return Err(Error::InvalidParams(format!("need v_max > 0 and steps > 0, got {v_max}, {steps}")));
    }
    let vs: Vec<f64> = (1..=steps).map(|k| v_max * k as f64 / steps as f64).collect();
    continue_through(solver, &vs, true)
}

/// The wave at `−V` obtained from the one at `V` by `x ↦ −x`.
pub fn mirrored(solver: &TwSolver, tw: &TravelingWave) -> TravelingWave {
    let g = &solver.grid;
    let mut out = tw.clone();
    out.v = -tw.v;
    for p in 0..g.len() {
        let (i, t) = (p / g.nt, p % g.nt);
        let tm = (t + g.nt / 2) % g.nt;
        let tm = (g.nt - tm) % g.nt;
        out.phi[p] = tw.phi[g.idx(i, tm)];
    }
    for (n, r) in out.rho_modes.iter_mut().enumerate() {
        if n % 2 == 1 {
            *r = -*r;
        }
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct MassDerivatives {
    pub v: Vec<f64>,
    pub mass: Vec<f64>,
    /// Centered differences; the `V = 0` entry uses the mirror point.
    pub m_prime: Vec<f64>,
    pub m_dd0: f64,
    pub fit_residual: f64,
}

impl MassDerivatives {
    /// `M′` at a branch velocity.
    pub fn at(&self, v: f64) -> Option<f64> {
        self.v.iter().position(|&x| (x - v).abs() <= 1e-12 * v.abs().max(1.0)).map(|j| self.m_prime[j])
    }
}

pub fn mass_derivatives(branch: &Branch) -> Result<MassDerivatives> {
    let pts = &branch.points;
    if pts.len() < 5 || pts[0].v != 0.0 {
        return Err(Error::InvalidParams(format!(
            "mass_derivatives needs >= 5 points starting at V = 0, got {}",
            pts.len()
        )));
    }
    let h = pts[1].v;
    for (k, p) in pts.iter().enumerate() {
        if (p.v - k as f64 * h).abs() > 1e-9 * h {
            return Err(Error::InvalidParams("mass_derivatives needs a uniform V grid".into()));
        }
    }
    let v: Vec<f64> = pts.iter().map(|p| p.v).collect();
    let m: Vec<f64> = pts.iter().map(|p| p.mass).collect();
    let n = m.len();
    let mut mp = vec![0.0; n];
    mp[0] = match &branch.mirror {
        Some(w) => (m[1] - w.mass) / (2.0 * h),
        None => 0.0,
    };
    for k in 1..n - 1 {
        mp[k] = (m[k + 1] - m[k - 1]) / (2.0 * h);
    }
    mp[n - 1] = (3.0 * m[n - 1] - 4.0 * m[n - 2] + m[n - 3]) / (2.0 * h);

    // least squares M = a + b V² + c V⁴ over the lower half of the branch
    let vmax = v[n - 1];
    let sel: Vec<usize> = (0..n).filter(|&k| v[k] <= 0.5 * vmax + 1e-12).collect();
    let sel = if sel.len() < 4 { (0..n.min(4)).collect() } else { sel };
    let scale = vmax * vmax;
    let design = Mat::from_fn(sel.len(), 3, |r, c| (v[sel[r]] * v[sel[r]] / scale).powi(c as i32));
    let rhs = Mat::from_fn(sel.len(), 1, |r, _| m[sel[r]]);
    let qr = design.qr();
    let coef = qr.solve_lstsq(&rhs);
    let fit = &design * &coef;
    let fit_residual = (0..sel.len()).map(|r| (fit[(r, 0)] - rhs[(r, 0)]).abs()).fold(0.0, f64::max);
    Ok(MassDerivatives { v, mass: m, m_prime: mp, m_dd0: 2.0 * coef[(1, 0)] / scale, fit_residual })
}

/// `(x, y, m)` at every node.
pub fn myosin_field(tw: &TravelingWave) -> Vec<[f64; 3]> {
    let grid = DiskGrid::new(tw.n_radial, tw.n_theta);
    let mg = MappedGrid::new(&grid, &tw.shape());
    (0..grid.len())
        .map(|p| [mg.x[p], mg.y[p], tw.lambda * (tw.phi[p] - tw.v * mg.x[p]).exp()])
        .collect()
}

/// Quadrature mass of the myosin field.
pub fn myosin_mass(tw: &TravelingWave) -> f64 {
    let grid = DiskGrid::new(tw.n_radial, tw.n_theta);
    let mg = MappedGrid::new(&grid, &tw.shape());
    let field: Vec<f64> = myosin_field(tw).iter().map(|r| r[2]).collect();
    mg.integrate(&field)
}

#[derive(Clone, Debug, Serialize)]
pub struct Extrapolated {
    pub value: f64,
    pub error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Expansion {
    pub rho_10: Extrapolated,
    pub rho_12: Extrapolated,
    pub m_1: Extrapolated,
    /// Largest `|ρ_1|/V²` over the points used.
    pub rho_11: f64,
    /// Mode-1 content of `(Φ − m0/ζ − VΦ_D cos θ)/V²` on the boundary at the smallest `V`.
    pub phi_11: f64,
    pub converged: bool,
}

/// Extrapolate `q(V) = a + b V² + …` to `V = 0` with polynomial fits in `V²`
/// of degree 1 and 2; the difference is the error estimate.
fn extrapolate_even(v: &[f64], q: &[f64]) -> Extrapolated {
    let fit = |deg: usize| -> f64 {
        let a = Mat::from_fn(v.len(), deg + 1, |r, c| (v[r] * v[r]).powi(c as i32));
        let b = Mat::from_fn(v.len(), 1, |r, _| q[r]);
        a.qr().solve_lstsq(&b)[(0, 0)]
    };
    let hi = fit(2);
    Extrapolated { value: hi, error: (hi - fit(1)).abs() }
}

/// Small-`V` coefficients of `ρ_tw` and `M` from branch points with
/// `0 < V <= 0.1 V_max` (at least four).
pub fn extract_expansion(solver: &TwSolver, branch: &Branch, v_max: f64) -> Result<Expansion> {
    let pts: Vec<&TravelingWave> =
        branch.points.iter().filter(|p| p.v > 0.0 && p.v <= 0.1 * v_max * (1.0 + 1e-12)).collect();
    if pts.len() < 4 {
        return Err(Error::InvalidParams(format!(
            "extract_expansion needs >= 4 points with 0 < V <= {}, got {}",
            0.1 * v_max,
            pts.len()
        )));
    }
    let m0_mass = branch.points[0].mass;
    let v: Vec<f64> = pts.iter().map(|p| p.v).collect();
    let q = |f: &dyn Fn(&TravelingWave) -> f64| -> Vec<f64> { pts.iter().map(|p| f(p) / (p.v * p.v)).collect() };
    let rho_10 = extrapolate_even(&v, &q(&|p| p.rho_modes[0]));
    let rho_12 = extrapolate_even(&v, &q(&|p| p.rho_modes[2]));
    let m_1 = extrapolate_even(&v, &q(&|p| p.mass - m0_mass));
    let rho_11 = pts.iter().map(|p| (p.rho_modes[1] / (p.v * p.v)).abs()).fold(0.0, f64::max);

    let first = pts[0];
    let pd = PhiD::new(solver.r0, solver.m0, solver.params.zeta)?;
    let g = &solver.grid;
    let rem: Vec<f64> = (0..g.nt)
        .map(|t| {
            (first.phi[t] - solver.m0 / solver.params.zeta - first.v * pd.value(solver.r0) * g.theta[t].cos())
                / (first.v * first.v)
        })
        .collect();
    let phi_11 = cos_coefficient(&rem, &g.theta, 1);
    let rel = |e: &Extrapolated| e.error <= 0.02 * e.value.abs().max(1e-12);
    let converged = rel(&rho_10) && rel(&rho_12) && rel(&m_1);
    Ok(Expansion { rho_10, rho_12, m_1, rho_11, phi_11, converged })
}

pub fn write_shape_csv<W: Write>(tw: &TravelingWave, out: W) -> std::io::Result<W> {
    let shape = tw.shape();
    let mut w = CsvWriter::new(out, &["phi", "rho", "x", "y"])?;
    for j in 0..256 {
        let th = 2.0 * PI * j as f64 / 256.0;
        let (s, _, _) = shape.radius(th);
        w.row(&[th, shape.rho(th), s * th.cos(), s * th.sin()])?;
    }
    w.finish()
}

pub fn write_myosin_csv<W: Write>(tw: &TravelingWave, out: W) -> std::io::Result<W> {
    let mut w = CsvWriter::new(out, &["x", "y", "m"])?;
    for row in myosin_field(tw) {
        w.row(&row)?;
    }
    w.finish()
}

pub fn write_branch_csv<W: Write>(branch: &Branch, out: W) -> std::io::Result<W> {
    let mut w = CsvWriter::new(out, &["V", "M", "Lambda", "rho0", "rho2", "area", "newton_iters", "residual"])?;
    for p in &branch.points {
        w.row(&[
            p.v,
            p.mass,
            p.lambda,
            p.rho_modes[0],
            p.rho_modes[2],
            p.area,
            p.newton_iters as f64,
            p.residual_norm,
        ])?;
    }
    w.finish()
}
