//! Fourier-mode discretization of the linearization around a radial state.
//!
//! Mode `n` acts on `(m̂(r), ρ̂)` with `m = m̂ cos nφ`, `ρ = ρ̂ cos nφ`. The
//! potential is eliminated by a Helmholtz solve with the Young–Laplace data
//! on `r = R`, and the no-flux condition `∂_r m̂(R) = 0` removes the boundary
//! value of `m̂` from the unknowns.

use crate::error::{Error, Result};
use crate::export::CsvWriter;
use crate::model::{ModelParams, RadialState};
use crate::numerics::{dense_eig, gauss_legendre, CollocationGrid, EigenDecomposition};
use faer::linalg::solvers::Solve;
use faer::{c64, Mat};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;
use std::io::Write;

pub const DEFAULT_N_RADIAL: usize = 64;
pub const DEFAULT_N_MODES: usize = 16;
/// Eigenvalues below this modulus count as zero.
pub const ZERO_TOL: f64 = 1e-5;

#[derive(Clone, Debug)]
pub struct ModeOperator {
    pub n: usize,
    pub r: f64,
    pub grid: CollocationGrid,
    /// Columns: `m̂` at the interior nodes `grid.points[1..]`, then `ρ̂`.
    pub matrix: Mat<f64>,
}

impl ModeOperator {
    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    /// Apply to `(m̂ at interior nodes, ρ̂)`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.size();
        (0..n).map(|i| (0..n).map(|j| self.matrix[(i, j)] * x[j]).sum()).collect()
    }
}

/// Dirichlet value of `φ̂` on `r = R` per unit `ρ̂`.
fn phi_boundary_coefficient(params: &ModelParams, r: f64, n: usize) -> f64 {
    let nn = (n * n) as f64;
    let mut c = params.gamma * (1.0 - nn) / (r * r);
    if n == 0 {
        c += 2.0 * PI * r * params.p_star_prime();
    }
    c / params.zeta
}

pub fn assemble_mode(
    state: &RadialState,
    params: &ModelParams,
    n: usize,
    n_radial: usize,
) -> Result<ModeOperator> {
    if n_radial < 16 {
        return Err(Error::Domain(format!("assemble_mode: n_radial = {n_radial} < 16")));
    }
    let r = state.r;
    let m0 = state.m0;
    let zeta = params.zeta;
    let k = n_radial + 1;
    let grid = CollocationGrid::new(k, r, n);
    let nn = (n * n) as f64;
    let pts = &grid.points;
    let lap = Mat::<f64>::from_fn(k, k, |i, j| {
        let diag = if i == j { -nn / (pts[i] * pts[i]) } else { 0.0 };
        grid.d2[(i, j)] + grid.d1[(i, j)] / pts[i] + diag
    });
    // Full m̂ from interior values via the no-flux row.
    let d00 = grid.d1[(0, 0)];
    let lift = Mat::<f64>::from_fn(k, n_radial, |i, j| {
        if i == 0 {
            -grid.d1[(0, j + 1)] / d00
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    let mut helm = Mat::<f64>::from_fn(k, k, |i, j| lap[(i, j)] - if i == j { zeta } else { 0.0 });
    for j in 0..k {
        helm[(0, j)] = if j == 0 { 1.0 } else { 0.0 };
    }
    let bc = phi_boundary_coefficient(params, r, n);
    // Right-hand sides: columns for each interior m̂ value, then ρ̂.
    let rhs = Mat::<f64>::from_fn(k, k, |i, j| {
        if j < n_radial {
            if i == j + 1 { -1.0 } else { 0.0 }
        } else if i == 0 {
            bc
        } else {
            0.0
        }
    });
    let lu = helm.partial_piv_lu();
    let phi = lu.solve(&rhs);
    if !phi.norm_max().is_finite() {
        return Err(Error::Degenerate("singular Helmholtz elimination".into()));
    }
    let lap_lift = &lap * &lift;
    let dphi = &grid.d1 * &phi;
    let size = n_radial + 1;
    let matrix = Mat::<f64>::from_fn(size, size, |i, j| {
        if i < n_radial {
            let row = i + 1;
            let mut v = -m0 * zeta * phi[(row, j)];
            if j < n_radial {
                v += lap_lift[(row, j)];
                if j == i {
                    v += m0;
                }
            }
            v
        } else {
            dphi[(0, j)]
        }
    });
    Ok(ModeOperator { n, r, grid, matrix })
}

#[derive(Clone, Debug, Serialize)]
pub struct EigReport {
    pub n: usize,
    #[serde(serialize_with = "crate::export::ser_complex_vec")]
    pub eigenvalues: Vec<c64>,
    /// `‖A v‖/‖v‖` for the known kernel vectors of this mode.
    pub structural_zero_residuals: Vec<f64>,
    /// Movability eigenvalue (mode 1 only).
    pub e_value: Option<f64>,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Known kernel vectors of mode `n`: the shift `(0, 1)` for `n = 1` and the
/// area mode `(2πRp★′ + γ/R², 1)` for `n = 0`.
pub fn structural_kernel(op: &ModeOperator, params: &ModelParams) -> Option<Vec<f64>> {
    let s = op.size();
    match op.n {
        0 => {
            let c = 2.0 * PI * op.r * params.p_star_prime() + params.gamma / (op.r * op.r);
            let mut v = vec![c; s];
            v[s - 1] = 1.0;
            Some(v)
        }
        1 => {
            let mut v = vec![0.0; s];
            v[s - 1] = 1.0;
            Some(v)
        }
        _ => None,
    }
}

pub fn mode_spectrum(op: &ModeOperator, params: &ModelParams) -> Result<(EigReport, EigenDecomposition)> {
    let e = dense_eig(&op.matrix)?;
    let residuals = structural_kernel(op, params)
        .map(|v| vec![norm(&op.apply(&v)) / norm(&v)])
        .unwrap_or_default();
    let e_value = if op.n == 1 { Some(identify_movability(&e).e) } else { None };
    Ok((
        EigReport { n: op.n, eigenvalues: e.values.clone(), structural_zero_residuals: residuals, e_value },
        e,
    ))
}

#[derive(Clone, Debug, Serialize)]
pub struct Movability {
    pub e: f64,
    /// Eigenvalue identified as the shift zero.
    pub structural_zero: f64,
    /// Set when the two best shift candidates tie within 1e-12 in projection.
    pub ambiguous: bool,
    pub candidates: Vec<f64>,
}

/// Remove the eigenvalue whose eigenvector projects most onto `(0, ρ̂ = 1)`
/// and return the largest remaining real part.
fn identify_movability(e: &EigenDecomposition) -> Movability {
    let n = e.vectors.nrows();
    let mut proj: Vec<(usize, f64)> = (0..e.len())
        .map(|j| {
            let nrm: f64 = (0..n).map(|i| e.vectors[(i, j)].norm_sqr()).sum::<f64>().sqrt();
            (j, e.vectors[(n - 1, j)].norm() / nrm)
        })
        .collect();
    proj.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let zero = proj[0].0;
    let ambiguous = proj.len() > 1 && (proj[0].1 - proj[1].1).abs() <= 1e-12;
    let e_max = (0..e.len())
        .filter(|&j| j != zero)
        .map(|j| e.values[j].re)
        .fold(f64::NEG_INFINITY, f64::max);
    let candidates = if ambiguous {
        vec![e.values[proj[0].0].re, e.values[proj[1].0].re]
    } else {
        vec![e.values[zero].re]
    };
    Movability { e: e_max, structural_zero: e.values[zero].re, ambiguous, candidates }
}

/// Movability eigenvalue from the mode-1 collocation operator.
#[allow(non_snake_case)]
pub fn movability_E_operator(state: &RadialState, params: &ModelParams, n_radial: usize) -> Result<Movability> {
    let op = assemble_mode(state, params, 1, n_radial)?;
    let e = dense_eig(&op.matrix)?;
    Ok(identify_movability(&e))
}

/// Galerkin data for the mode-1 Rayleigh quotient.
struct RayleighBasis {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    m: Vec<Vec<(f64, f64)>>,
    psi: Vec<Vec<(f64, f64)>>,
}

fn legendre_with_derivative(n: usize, u: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    let (mut p0, mut p1) = (1.0, u);
    let (mut d0, mut d1) = (0.0, 1.0);
    for k in 0..n {
        match k {
            0 => out.push((1.0, 0.0)),
            1 => out.push((u, 1.0)),
            _ => {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * u * p1 - (kf - 1.0) * p0) / kf;
                let d2 = d0 + (2.0 * kf - 1.0) * p1;
                p0 = p1;
                p1 = p2;
                d0 = d1;
                d1 = d2;
                out.push((p2, d2));
            }
        }
    }
    out
}

impl RayleighBasis {
    fn new(r: f64, nm: usize, nphi: usize) -> Self {
        let q = gauss_legendre(2 * (nm + nphi) + 16, 0.0, r);
        let mut m = Vec::new();
        let mut psi = Vec::new();
        for &x in &q.nodes {
            let s = x / r;
            let u = 2.0 * s * s - 1.0;
            let du = 4.0 * x / (r * r);
            let p = legendre_with_derivative(nm.max(nphi), u);
            // m_k = s P_k(u), ψ_l = s(1 − s²) P_l(u)
            m.push((0..nm).map(|k| (s * p[k].0, p[k].0 / r + s * p[k].1 * du)).collect());
            let g = s * (1.0 - s * s);
            let dg = (1.0 - 3.0 * s * s) / r;
            psi.push((0..nphi).map(|l| (g * p[l].0, dg * p[l].0 + g * p[l].1 * du)).collect());
        }
        RayleighBasis { nodes: q.nodes, weights: q.weights, m, psi }
    }
}

/// Movability eigenvalue as `−min E_ζ(m)/∫m²` over `m = m̂(r) cos φ`, with `φ`
/// solving `Δφ + m = ζφ`, `φ = 0` on the boundary. Realized as the extreme
/// eigenvalue of a symmetric generalized eigenproblem.
#[allow(non_snake_case)]
pub fn movability_E_rayleigh(state: &RadialState, params: &ModelParams, n_radial: usize) -> Result<f64> {
    let nm = (n_radial / 2).max(16);
    let nphi = 2 * nm;
    let r = state.r;
    let (m0, zeta) = (state.m0, params.zeta);
    let b = RayleighBasis::new(r, nm, nphi);
    let mut mass = Mat::<f64>::zeros(nm, nm);
    let mut stiff = Mat::<f64>::zeros(nm, nm);
    let mut kphi = Mat::<f64>::zeros(nphi, nphi);
    let mut coup = Mat::<f64>::zeros(nphi, nm);
    for (q, (&x, &w)) in b.nodes.iter().zip(&b.weights).enumerate() {
        let wr = w * x;
        let inv_r2 = 1.0 / (x * x);
        for k in 0..nm {
            let (mk, dk) = b.m[q][k];
            for l in 0..nm {
                let (ml, dl) = b.m[q][l];
                mass[(k, l)] += wr * mk * ml;
                stiff[(k, l)] += wr * (dk * dl + mk * ml * inv_r2);
            }
        }
        for k in 0..nphi {
            let (pk, dk) = b.psi[q][k];
            for l in 0..nphi {
                let (pl, dl) = b.psi[q][l];
                kphi[(k, l)] += wr * (dk * dl + pk * pl * inv_r2 + zeta * pk * pl);
            }
            for l in 0..nm {
                coup[(k, l)] += wr * pk * b.m[q][l].0;
            }
        }
    }
    let kphi_inv_b = kphi
        .llt(faer::Side::Lower)
        .map_err(|_| Error::Degenerate("Helmholtz stiffness is not positive definite".into()))?
        .solve(&coup);
    let coupling = coup.transpose() * &kphi_inv_b;
    let a = Mat::<f64>::from_fn(nm, nm, |i, j| {
        stiff[(i, j)] - m0 * mass[(i, j)] + m0 * zeta * 0.5 * (coupling[(i, j)] + coupling[(j, i)])
    });
    let llt = mass
        .llt(faer::Side::Lower)
        .map_err(|_| Error::Degenerate("indefinite mass matrix".into()))?;
    let l = llt.L().to_owned();
    // C = L⁻¹ A L⁻ᵀ
    let linv_a = l.as_ref().partial_piv_lu().solve(&a);
    let c = l.as_ref().partial_piv_lu().solve(linv_a.transpose()).transpose().to_owned();
    let c = Mat::<f64>::from_fn(nm, nm, |i, j| 0.5 * (c[(i, j)] + c[(j, i)]));
    let vals = c
        .self_adjoint_eigenvalues(faer::Side::Lower)
        .map_err(|_| Error::EigFailed { n: nm, max_abs: c.norm_max(), finite: c.norm_max().is_finite() })?;
    Ok(-vals[0])
}

#[derive(Clone, Debug, Serialize)]
pub struct StationaryReport {
    pub r: f64,
    pub modes: Vec<EigReport>,
    pub e_operator: f64,
    pub e_ambiguous: bool,
    pub e_rayleigh: f64,
    /// Largest real part among eigenvalues with `|λ| > ZERO_TOL`, excluding `E`.
    pub max_re_nonzero: f64,
    /// Number of eigenvalues with `|λ| <= ZERO_TOL` over all computed modes
    /// (cosine modes only; sine modes duplicate modes `n >= 1`).
    pub zero_multiplicity: usize,
    /// `max Re λ` over the highest computed mode, a bound on truncated modes.
    pub highest_mode_max_re: f64,
}

pub fn stationary_report(
    state: &RadialState,
    params: &ModelParams,
    n_radial: usize,
    n_modes: usize,
) -> Result<StationaryReport> {
    let spectra: Vec<Result<(EigReport, Movability)>> = (0..=n_modes)
        .into_par_iter()
        .map(|n| {
            let op = assemble_mode(state, params, n, n_radial)?;
            let (rep, e) = mode_spectrum(&op, params)?;
            let mov = if n == 1 { identify_movability(&e) } else { Movability { e: 0.0, structural_zero: 0.0, ambiguous: false, candidates: vec![] } };
            Ok((rep, mov))
        })
        .collect();
    let mut modes = Vec::new();
    let mut mov = None;
    for s in spectra {
        let (rep, m) = s?;
        if rep.n == 1 {
            mov = Some(m);
        }
        modes.push(rep);
    }
    let mov = mov.expect("mode 1 is always computed");
    let mut zero_multiplicity = 0;
    let mut max_re: f64 = f64::NEG_INFINITY;
    for rep in &modes {
        let mut skipped_e = rep.n != 1;
        for v in &rep.eigenvalues {
            if v.norm() <= ZERO_TOL {
                zero_multiplicity += 1;
            } else if !skipped_e && v.im == 0.0 && v.re == mov.e {
                skipped_e = true;
            } else {
                max_re = max_re.max(v.re);
            }
        }
    }
    let highest = modes
        .last()
        .map(|m| m.eigenvalues.iter().map(|v| v.re).fold(f64::NEG_INFINITY, f64::max))
        .unwrap_or(f64::NEG_INFINITY);
    Ok(StationaryReport {
        r: state.r,
        e_operator: mov.e,
        e_ambiguous: mov.ambiguous,
        e_rayleigh: movability_E_rayleigh(state, params, n_radial)?,
        modes,
        max_re_nonzero: max_re,
        zero_multiplicity,
        highest_mode_max_re: highest,
    })
}

/// Stationary reports over a list of radii, in input order.
pub fn sweep_stationary(
    params: &ModelParams,
    radii: &[f64],
    n_radial: usize,
    n_modes: usize,
) -> Result<Vec<StationaryReport>> {
    radii
        .par_iter()
        .map(|&r| {
            let state = crate::model::radial_state(params, r)?;
            stationary_report(&state, params, n_radial, n_modes)
        })
        .collect()
}

pub fn write_sweep_csv<W: Write>(reports: &[StationaryReport], out: W) -> std::io::Result<W> {
    let mut w = CsvWriter::new(out, &["R", "E_operator", "E_rayleigh", "max_re_nonzero", "zero_multiplicity"])?;
    for r in reports {
        w.row(&[r.r, r.e_operator, r.e_rayleigh, r.max_re_nonzero, r.zero_multiplicity as f64])?;
    }
    w.finish()
}
