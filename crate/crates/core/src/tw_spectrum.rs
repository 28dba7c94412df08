//! Linearization around a traveling wave, its near-zero spectrum and the
//! small eigenvalue `λ(V)`.
//!
//! Perturbation vectors use the node layout of the disk grid: entry `t < Nθ`
//! is `ρ` at boundary angle `θ_t`, entry `p >= Nθ` is `m` at interior node
//! `p`. The boundary values of `m` are eliminated through the linearized
//! no-flux condition and `φ` through a dense Dirichlet solve. The operator is
//! then expressed in ring-wise Fourier coefficients without the Nyquist mode.

use crate::bifurcation::BifurcationReport;
use crate::error::{Error, Result};
use crate::export::{ser_complex, ser_complex_vec, CsvWriter};
use crate::model::ModelParams;
use crate::numerics::{dense_eig, EigenDecomposition};
use crate::traveling_wave::{Branch, DiskGrid, MappedGrid, MassDerivatives, RingBasis, TravelingWave, TwSolver};
use faer::linalg::solvers::Solve;
use faer::{c64, Mat};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;
use std::io::Write;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Subspace {
    /// Fields even in `y`.
    Even,
    /// Fields odd in `y`.
    Odd,
    Full,
}

#[derive(Clone, Debug)]
pub struct LinearizedOperator {
    pub v: f64,
    pub subspace: Subspace,
    /// Matrix acting on ring coefficients.
    pub matrix: Mat<f64>,
    /// Gram matrix of the coefficient pairing.
    pub gram: Mat<f64>,
    synthesis: Mat<f64>,
    analysis: Mat<f64>,
}

impl LinearizedOperator {
    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    /// Coefficients of a node-layout vector.
    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        matvec(&self.analysis, full)
    }

    /// Node-layout values of a coefficient vector.
    pub fn extend(&self, coeffs: &[f64]) -> Vec<f64> {
        matvec(&self.synthesis, coeffs)
    }

    pub fn pairing(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(matvec(&self.gram, b)).map(|(x, y)| x * y).sum()
    }

    pub fn norm(&self, a: &[f64]) -> f64 {
        self.pairing(a, a).max(0.0).sqrt()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        matvec(&self.matrix, x)
    }

    /// `A* = G⁻¹ Aᵀ G` with `G` the Gram matrix.
    pub fn adjoint(&self) -> Mat<f64> {
        let rhs = self.matrix.transpose() * &self.gram;
        self.gram.partial_piv_lu().solve(&rhs)
    }
}

fn matvec(m: &Mat<f64>, v: &[f64]) -> Vec<f64> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)] * v[j]).sum()).collect()
}

/// Full-space matrix on all ring modes, with the pairing Gram matrix.
fn assemble_full(tw: &TravelingWave, params: &ModelParams) -> Result<FullOperator> {
    let g = DiskGrid::new(tw.n_radial, tw.n_theta);
    let shape = tw.shape();
    let mg = MappedGrid::new(&g, &shape);
    let np = g.len();
    let nt = g.nt;
    let v = tw.v;
    let zeta = params.zeta;
    let (dx, dy) = mg.diff_matrices(&g);
    let lap = &dx * &dx + &dy * &dy;
    let phi = &tw.phi;
    let (px, py) = mg.gradient(&g, phi);
    let (pxx, pyx) = mg.gradient(&g, &px);
    let (pxy, pyy) = mg.gradient(&g, &py);
    let c: Vec<f64> = (0..np).map(|p| tw.lambda * (phi[p] - v * mg.x[p]).exp()).collect();
    let cx: Vec<f64> = (0..np).map(|p| c[p] * (px[p] - v)).collect();
    let cy: Vec<f64> = (0..np).map(|p| c[p] * py[p]).collect();

    // boundary data
    let h = 2.0 * PI / nt as f64;
    let mut phi_nn = vec![0.0; nt];
    let mut drift = vec![0.0; nt];
    for t in 0..nt {
        let [nx, ny] = mg.nu[t];
        let hxy = 0.5 * (pxy[t] + pyx[t]);
        phi_nn[t] = nx * nx * pxx[t] + 2.0 * nx * ny * hxy + ny * ny * pyy[t];
        let phi_tau = -ny * px[t] + nx * py[t];
        drift[t] = phi_tau + v * ny;
    }
    // arc-length derivative on the boundary ring
    let d_tau = Mat::from_fn(nt, nt, |a, b| g.fourier_d[(a, b)] / mg.arc_speed[a]);
    let d_tau2 = &d_tau * &d_tau;
    // ρ ↦ Φ-kinematics: Φ_νν ρ − (Φ_τ + Vν_y) ρ′
    let kin = Mat::from_fn(nt, nt, |a, b| {
        let diag = if a == b { phi_nn[a] } else { 0.0 };
        diag - drift[a] * d_tau[(a, b)]
    });
    // Dirichlet data for φ
    let pp = params.p_star_prime();
    let gbc = Mat::from_fn(nt, nt, |a, b| {
        let mut val = pp * h * mg.arc_speed[b] + params.gamma * d_tau2[(a, b)];
        if a == b {
            val += params.gamma * mg.kappa[a] * mg.kappa[a];
        }
        val / zeta - if a == b { v * mg.nu[a][0] } else { 0.0 }
    });

    // Everything below acts on ring coefficients without the Nyquist mode;
    // in node layout the elimination of φ is nearly singular.
    let (sy, an) = g.ring_basis(RingBasis::Both, nt / 2 - 1);
    let per = nt - 1;
    let nc = sy.ncols();
    let sy0 = Mat::from_fn(nt, per, |t, j| sy[(t, j)]);
    let an0 = Mat::from_fn(per, nt, |j, t| an[(j, t)]);

    // φ = S U
    let hmat = Mat::from_fn(np, np, |p, q| {
        if p < nt {
            if p == q { 1.0 } else { 0.0 }
        } else {
            lap[(p, q)] - if p == q { zeta } else { 0.0 }
        }
    });
    let bmat = Mat::from_fn(np, np, |p, q| {
        if p < nt {
            if q < nt { gbc[(p, q)] } else { 0.0 }
        } else if p == q {
            -1.0
        } else {
            0.0
        }
    });
    let hc = &an * (&hmat * &sy);
    let bc = &an * (&bmat * &sy);
    let s = hc.partial_piv_lu().solve(&bc);
    if !s.norm_max().is_finite() {
        return Err(Error::Degenerate("singular elimination of φ".into()));
    }

    // boundary-ring myosin coefficients from the linearized no-flux condition
    let nmat = Mat::from_fn(nt, np, |t, q| mg.nu[t][0] * dx[(t, q)] + mg.nu[t][1] * dy[(t, q)]);
    let nc_mat = &an0 * (&nmat * &sy);
    let nbb = Mat::from_fn(per, per, |a, b| nc_mat[(a, b)]);
    let ckin = Mat::from_fn(nt, nt, |a, b| c[a] * kin[(a, b)]);
    let ckin_c = &an0 * (&ckin * &sy0);
    let rhs = Mat::from_fn(per, nc, |a, q| if q < per { ckin_c[(a, q)] } else { nc_mat[(a, q)] });
    let mb = nbb.partial_piv_lu().solve(&rhs);
    if !mb.norm_max().is_finite() {
        return Err(Error::Degenerate("singular elimination of boundary myosin".into()));
    }
    let tmat = Mat::from_fn(nc, nc, |p, q| {
        if p < per {
            -mb[(p, q)]
        } else if p == q {
            1.0
        } else {
            0.0
        }
    });

    let diag_m: Vec<f64> = (0..np).map(|p| 2.0 * c[p] - zeta * phi[p]).collect();
    let lm = Mat::from_fn(np, np, |p, q| {
        let mut a = lap[(p, q)] + (v - px[p]) * dx[(p, q)] - py[p] * dy[(p, q)];
        if p == q {
            a += diag_m[p];
        }
        a
    });
    let lphi = Mat::from_fn(np, np, |p, q| {
        let mut a = -cx[p] * dx[(p, q)] - cy[p] * dy[(p, q)];
        if p == q {
            a -= zeta * c[p];
        }
        a
    });
    let interior = &an * (&lm * (&sy * &tmat) + &lphi * (&sy * &s));
    let boundary = &an0 * (&nmat * (&sy * &s));
    let kin_c = &an0 * (&kin * &sy0);
    let a = Mat::from_fn(nc, nc, |p, q| {
        if p < per {
            boundary[(p, q)] + if q < per { kin_c[(p, q)] } else { 0.0 }
        } else {
            interior[(p, q)]
        }
    });
    let weights: Vec<f64> = (0..np).map(|p| if p < nt { h * mg.arc_speed[p] } else { mg.weights_interior[p] }).collect();
    let weighted = Mat::from_fn(np, nc, |p, j| weights[p] * sy[(p, j)]);
    let gram = sy.transpose() * &weighted;
    Ok(FullOperator { matrix: a, gram, synthesis: sy, analysis: an })
}

struct FullOperator {
    matrix: Mat<f64>,
    gram: Mat<f64>,
    synthesis: Mat<f64>,
    analysis: Mat<f64>,
}

#[allow(non_snake_case)]
pub fn assemble_A(tw: &TravelingWave, params: &ModelParams, subspace: Subspace) -> Result<LinearizedOperator> {
    assemble_A_truncated(tw, params, subspace, tw.n_theta / 2 - 1)
}

/// `A` on ring modes `n ≤ n_max`.
#[allow(non_snake_case)]
pub fn assemble_A_truncated(
    tw: &TravelingWave,
    params: &ModelParams,
    subspace: Subspace,
    n_max: usize,
) -> Result<LinearizedOperator> {
    let nt = tw.n_theta;
    let full = assemble_full(tw, params)?;
    let (top, per) = (nt / 2, nt - 1);
    let n_max = n_max.min(top - 1);
    let mut idx = Vec::new();
    for ring in 0..tw.n_radial {
        if subspace != Subspace::Odd {
            idx.extend((0..=n_max).map(|n| ring * per + n));
        }
        if subspace != Subspace::Even {
            idx.extend((1..=n_max).map(|n| ring * per + top + n - 1));
        }
    }
    let pick = |m: &Mat<f64>| Mat::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])]);
    let synthesis = Mat::from_fn(full.synthesis.nrows(), idx.len(), |p, j| full.synthesis[(p, idx[j])]);
    let analysis = Mat::from_fn(idx.len(), full.analysis.ncols(), |i, p| full.analysis[(idx[i], p)]);
    Ok(LinearizedOperator {
        v: tw.v,
        subspace,
        matrix: pick(&full.matrix),
        gram: pick(&full.gram),
        synthesis,
        analysis,
    })
}

/// Kernel and generalized kernel vectors in full node layout.
#[derive(Clone, Debug)]
pub struct KernelVectors {
    pub w1: Vec<f64>,
    pub w2: Option<Vec<f64>>,
    pub w3: Vec<f64>,
    pub w4: Option<Vec<f64>>,
    /// Adjoint kernel `(1, Λe^{Φ−Vx})`.
    pub w1_star: Vec<f64>,
}

/// `W2` needs the neighbouring waves at `V ± h`.
pub fn kernel_vectors(tw: &TravelingWave, neighbours: Option<(&TravelingWave, &TravelingWave)>) -> KernelVectors {
    let g = DiskGrid::new(tw.n_radial, tw.n_theta);
    let mg = MappedGrid::new(&g, &tw.shape());
    let np = g.len();
    let nt = g.nt;
    let v = tw.v;
    let (px, py) = mg.gradient(&g, &tw.phi);
    let c: Vec<f64> = (0..np).map(|p| tw.lambda * (tw.phi[p] - v * mg.x[p]).exp()).collect();
    let cx: Vec<f64> = (0..np).map(|p| c[p] * (px[p] - v)).collect();
    let cy: Vec<f64> = (0..np).map(|p| c[p] * py[p]).collect();
    let mut w1 = vec![0.0; np];
    let mut w3 = vec![0.0; np];
    let mut w1s = vec![0.0; np];
    for p in 0..np {
        if p < nt {
            w1[p] = mg.nu[p][0];
            w3[p] = mg.nu[p][1];
            w1s[p] = c[p];
        } else {
            w1[p] = -cx[p];
            w3[p] = -cy[p];
            w1s[p] = 1.0;
        }
    }
    let w4 = (v != 0.0).then(|| {
        (0..np)
            .map(|p| {
                let (x, y) = (mg.x[p], mg.y[p]);
                if p < nt {
                    (-y * mg.nu[p][0] + x * mg.nu[p][1]) / v
                } else {
                    (y * cx[p] - x * cy[p]) / v
                }
            })
            .collect()
    });
    let w2 = neighbours.map(|(lo, hi)| {
        let dv = hi.v - lo.v;
        let mlo = MappedGrid::new(&g, &lo.shape());
        let mhi = MappedGrid::new(&g, &hi.shape());
        let cl = |w: &TravelingWave, m: &MappedGrid, p: usize| w.lambda * (w.phi[p] - w.v * m.x[p]).exp();
        (0..np)
            .map(|p| {
                let fx = (mhi.x[p] - mlo.x[p]) / dv;
                let fy = (mhi.y[p] - mlo.y[p]) / dv;
                if p < nt {
                    mg.nu[p][0] * fx + mg.nu[p][1] * fy
                } else {
                    (cl(hi, &mhi, p) - cl(lo, &mlo, p)) / dv - cx[p] * fx - cy[p] * fy
                }
            })
            .collect()
    });
    KernelVectors { w1, w2, w3, w4, w1_star: w1s }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct KernelResiduals {
    /// `‖A W1‖/‖W1‖`.
    pub w1: f64,
    /// `‖A W2 − W1‖/‖W2‖`.
    pub w2: Option<f64>,
    pub w3: Option<f64>,
    pub w4: Option<f64>,
    /// Backward error of `W1*` as a left null vector of `A`.
    pub w1_star: f64,
}

fn relative(op: &LinearizedOperator, x: &[f64], target: Option<&[f64]>) -> f64 {
    let ax = op.apply(x);
    let r: Vec<f64> = match target {
        Some(t) => ax.iter().zip(t).map(|(a, b)| a - b).collect(),
        None => ax,
    };
    op.norm(&r) / op.norm(x)
}

pub fn kernel_residuals(op: &LinearizedOperator, kv: &KernelVectors) -> KernelResiduals {
    let r = |f: &Vec<f64>| op.restrict(f);
    let odd_ok = op.subspace != Subspace::Even;
    let even_ok = op.subspace != Subspace::Odd;
    let mut out = KernelResiduals::default();
    if even_ok {
        out.w1 = relative(op, &r(&kv.w1), None);
        out.w2 = kv.w2.as_ref().map(|w2| relative(op, &r(w2), Some(&r(&kv.w1))));
        // left-null-vector backward error ‖(G W1*)ᵀ A‖ / (‖A‖_F ‖G W1*‖)
        let left = matvec(&op.gram, &r(&kv.w1_star));
        let n = op.size();
        let res: Vec<f64> = (0..n).map(|j| (0..n).map(|i| left[i] * op.matrix[(i, j)]).sum()).collect();
        let l2 = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        out.w1_star = l2(&res) / (op.matrix.norm_l2() * l2(&left));
    }
    if odd_ok {
        out.w3 = Some(relative(op, &r(&kv.w3), None));
        out.w4 = kv.w4.as_ref().map(|w4| relative(op, &r(w4), Some(&r(&kv.w3))));
    }
    out
}

/// Weighted distance of a complex vector from the span of real vectors.
fn distance_from_span(op: &LinearizedOperator, x: &[c64], span: &[Vec<f64>]) -> f64 {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for s in span {
        let mut q = s.clone();
        for b in &basis {
            let d = op.pairing(&q, b);
            for (qi, bi) in q.iter_mut().zip(b) {
                *qi -= d * bi;
            }
        }
        let n = op.norm(&q);
        if n > 0.0 {
            basis.push(q.iter().map(|v| v / n).collect());
        }
    }
    let mut re: Vec<f64> = x.iter().map(|z| z.re).collect();
    let mut im: Vec<f64> = x.iter().map(|z| z.im).collect();
    let nrm = |a: &[f64], b: &[f64]| (op.pairing(a, a) + op.pairing(b, b)).max(0.0).sqrt();
    let total = nrm(&re, &im);
    for b in &basis {
        let (dr, di) = (op.pairing(&re, b), op.pairing(&im, b));
        for ((r, i), bi) in re.iter_mut().zip(im.iter_mut()).zip(b) {
            *r -= dr * bi;
            *i -= di * bi;
        }
    }
    nrm(&re, &im) / total
}

#[derive(Clone, Debug, Serialize)]
pub struct NearZero {
    #[serde(serialize_with = "ser_complex_vec")]
    pub eigenvalues: Vec<c64>,
    /// Distance of each eigenvector from the structural span.
    pub distances: Vec<f64>,
    #[serde(serialize_with = "ser_complex")]
    pub lambda: c64,
    /// Sum of the delta-disk eigenvalues; equals `λ(V)` when the structural
    /// zeros are exact.
    pub lambda_trace: f64,
    pub count: usize,
}

pub fn near_zero(op: &LinearizedOperator, eig: &EigenDecomposition, delta: f64, span: &[Vec<f64>]) -> NearZero {
    let mut idx: Vec<usize> = (0..eig.len()).filter(|&j| eig.values[j].norm() < delta).collect();
    idx.sort_by(|&a, &b| eig.values[a].norm().total_cmp(&eig.values[b].norm()));
    let eigenvalues: Vec<c64> = idx.iter().map(|&j| eig.values[j]).collect();
    let distances: Vec<f64> = idx.iter().map(|&j| distance_from_span(op, &eig.vector(j), span)).collect();
    let best = (0..idx.len()).max_by(|&a, &b| distances[a].total_cmp(&distances[b]));
    let lambda = best.map(|j| eigenvalues[j]).unwrap_or(c64::new(f64::NAN, f64::NAN));
    let lambda_trace = eigenvalues.iter().map(|z| z.re).sum();
    NearZero { count: eigenvalues.len(), eigenvalues, distances, lambda, lambda_trace }
}

/// Half the smallest modulus among eigenvalues above `floor`.
pub fn delta_from_spectrum(values: &[c64], floor: f64) -> f64 {
    0.5 * values.iter().map(|z| z.norm()).filter(|&r| r > floor).fold(f64::INFINITY, f64::min)
}

pub fn asymptotic_lambda(v: f64, de_dm: f64, m_prime_v: f64) -> f64 {
    -de_dm * v * m_prime_v
}

#[derive(Clone, Debug, Serialize)]
pub struct AdjointConstants {
    pub k0: f64,
    /// `k` from the solvability condition of the order-`V` adjoint problem.
    pub k_solvability: f64,
    pub a_const: f64,
    pub b_const: f64,
    pub bracket1: f64,
    pub bracket2: f64,
}

pub fn adjoint_constants(rep: &BifurcationReport, params: &ModelParams) -> AdjointConstants {
    let (r, m0, zeta, gamma) = (rep.r0, rep.m0, params.zeta, params.gamma);
    let pp = params.p_star_prime();
    let k0 = m0 * rep.de_dm * rep.mass_integral;
    let a = r * r * zeta / (6.0 * gamma) * (zeta - m0 - m0 * m0 * r * r);
    let den = -gamma / (r * r) - 2.0 * PI * r * pp;
    let b = 0.5 * zeta * (2.0 * k0 * m0 + m0 - m0 * m0 * r * r + zeta) / den;
    let bracket1 = (m0 * m0 * r * r - m0) + 2.0 * m0 - zeta + 6.0 * gamma * a / (zeta * r * r);
    let bracket2 = m0 + 3.0 * gamma * a / (zeta * r * r) + gamma * b / (zeta * r * r)
        - 2.0 * PI * r * pp * b / zeta
        - m0 * k0;
    let dp = -den;
    let k_solvability = (dp * rep.gradient_integral - PI * r * (m0 - m0 * m0 * r * r + zeta))
        / (PI * r * r * dp + 2.0 * PI * r * m0);
    AdjointConstants { k0, k_solvability, a_const: a, b_const: b, bracket1, bracket2 }
}

/// `α` from `α{(−γ/R² − 2πRp★′) G − πR((m0R)² − m0 − ζ)} = −λ̂² m0 I`.
pub fn alpha_of_lambda_hat(lambda_hat: f64, rep: &BifurcationReport, params: &ModelParams) -> Result<f64> {
    let (r, m0) = (rep.r0, rep.m0);
    let coef = (-params.gamma / (r * r) - 2.0 * PI * r * params.p_star_prime()) * rep.gradient_integral
        - PI * r * ((m0 * r).powi(2) - m0 - params.zeta);
    if coef.abs() < 1e-14 * (1.0 + rep.gradient_integral.abs()) {
        return Err(Error::Degenerate("α relation has a vanishing coefficient".into()));
    }
    Ok(-lambda_hat * lambda_hat * m0 * rep.mass_integral / coef)
}

/// Solve `A* W = W1*` with `⟨W1*, W⟩ = 0`; returns the pairing norm of `W`.
pub fn adjoint_generalized_norm(op: &LinearizedOperator, kv: &KernelVectors) -> Result<f64> {
    let n = op.size();
    let adj = op.adjoint();
    let w1 = op.restrict(&kv.w1);
    let star = op.restrict(&kv.w1_star);
    let gstar = matvec(&op.gram, &star);
    let bordered = Mat::from_fn(n + 1, n + 1, |i, j| match (i < n, j < n) {
        (true, true) => adj[(i, j)],
        (true, false) => w1[i],
        (false, true) => gstar[j],
        (false, false) => 0.0,
    });
    let rhs = Mat::from_fn(n + 1, 1, |i, _| if i < n { star[i] } else { 0.0 });
    let sol = bordered.partial_piv_lu().solve(&rhs);
    let w: Vec<f64> = (0..n).map(|i| sol[(i, 0)]).collect();
    let nrm = op.norm(&w);
    if !nrm.is_finite() {
        return Err(Error::Degenerate("bordered adjoint system is singular".into()));
    }
    Ok(nrm)
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumReport {
    pub v: f64,
    pub subspace: Subspace,
    pub delta: f64,
    #[serde(serialize_with = "ser_complex_vec")]
    pub eigenvalues_near_zero: Vec<c64>,
    pub structural_distances: Vec<f64>,
    pub delta_count: usize,
    pub expected_count: usize,
    #[serde(serialize_with = "ser_complex")]
    pub lambda_v: c64,
    pub lambda_trace: f64,
    /// `−(dE/dM) V M′(V)`.
    pub lambda_asymptotic: f64,
    /// `−V² (dE/dM) M″(0)`.
    pub lambda_hat_formula: f64,
    pub ratio: f64,
    pub kernel_residuals: KernelResiduals,
    pub max_re_outside: f64,
    pub adjoint_norm: Option<f64>,
    pub k0: f64,
    pub a_const: f64,
    pub b_const: f64,
    pub alpha: f64,
    pub adjoint_norm_scaling: Option<f64>,
}

/// Everything `lambda_of_V` needs besides the branch.
#[derive(Clone, Debug)]
pub struct SpectrumContext<'a> {
    pub params: ModelParams,
    pub bifurcation: &'a BifurcationReport,
    pub mass: &'a MassDerivatives,
    pub delta: f64,
    pub subspace: Subspace,
    /// Velocity step of the centered difference defining `W2`.
    pub w2_step: f64,
}

pub fn expected_count(subspace: Subspace) -> usize {
    match subspace {
        Subspace::Even => 3,
        Subspace::Odd => 2,
        Subspace::Full => 5,
    }
}

/// Waves at `V ± h` for the centered difference in `W2`.
fn velocity_neighbours(branch: &Branch, tw: &TravelingWave, h: f64) -> Result<Option<(TravelingWave, TravelingWave)>> {
    if tw.v <= h {
        return Ok(None);
    }
    let solver = TwSolver::new(&branch.params, branch.r0, branch.controls)?;
    Ok(Some((solver.solve(tw.v - h, tw)?, solver.solve(tw.v + h, tw)?)))
}

/// Spectrum at branch point `k`.
pub fn spectrum_at(branch: &Branch, k: usize, ctx: &SpectrumContext) -> Result<SpectrumReport> {
    let tw = &branch.points[k];
    let nb = velocity_neighbours(branch, tw, ctx.w2_step)?;
    let op = assemble_A(tw, &ctx.params, ctx.subspace)?;
    let kv = kernel_vectors(tw, nb.as_ref().map(|(lo, hi)| (lo, hi)));
    let res = kernel_residuals(&op, &kv);
    let eig = dense_eig(&op.matrix)?;
    let mut span = Vec::new();
    if ctx.subspace != Subspace::Odd {
        span.push(op.restrict(&kv.w1));
        if let Some(w2) = &kv.w2 {
            span.push(op.restrict(w2));
        }
    }
    if ctx.subspace != Subspace::Even {
        span.push(op.restrict(&kv.w3));
        if let Some(w4) = &kv.w4 {
            span.push(op.restrict(w4));
        }
    }
    let nz = near_zero(&op, &eig, ctx.delta, &span);
    let max_re_outside =
        eig.values.iter().filter(|z| z.norm() >= ctx.delta).map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    let de_dm = ctx.bifurcation.de_dm;
    let mp = ctx.mass.at(tw.v).unwrap_or(f64::NAN);
    let lambda_asymptotic = asymptotic_lambda(tw.v, de_dm, mp);
    let lambda_hat_formula = -tw.v * tw.v * de_dm * ctx.mass.m_dd0;
    let consts = adjoint_constants(ctx.bifurcation, &ctx.params);
    // the bordered system only removes the even adjoint kernel, so it is
    // always solved on the even subspace
    let adjoint_norm = match ctx.subspace {
        _ if tw.v == 0.0 => None,
        Subspace::Even => Some(adjoint_generalized_norm(&op, &kv)?),
        Subspace::Full => Some(adjoint_generalized_norm(&assemble_A(tw, &ctx.params, Subspace::Even)?, &kv)?),
        Subspace::Odd => None,
    };
    // α is defined through λ̂ = λ/V
    let alpha = if tw.v != 0.0 {
        alpha_of_lambda_hat(nz.lambda.re / tw.v, ctx.bifurcation, &ctx.params).unwrap_or(f64::NAN)
    } else {
        0.0
    };
    Ok(SpectrumReport {
        v: tw.v,
        subspace: ctx.subspace,
        delta: ctx.delta,
        ratio: nz.lambda.re / lambda_asymptotic,
        eigenvalues_near_zero: nz.eigenvalues,
        structural_distances: nz.distances,
        delta_count: nz.count,
        expected_count: expected_count(ctx.subspace),
        lambda_v: nz.lambda,
        lambda_trace: nz.lambda_trace,
        lambda_asymptotic,
        lambda_hat_formula,
        kernel_residuals: res,
        max_re_outside,
        adjoint_norm,
        k0: consts.k0,
        a_const: consts.a_const,
        b_const: consts.b_const,
        alpha,
        adjoint_norm_scaling: None,
    })
}

/// `delta` measured on the radial state at `V = 0`.
pub fn delta_at_rest(solver: &TwSolver, subspace: Subspace, floor: f64) -> Result<f64> {
    let op = assemble_A(&solver.radial(), &solver.params, subspace)?;
    let eig = dense_eig(&op.matrix)?;
    Ok(delta_from_spectrum(&eig.values, floor))
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Reports at the moving branch points `1..len`, in order of `V`.
#[allow(non_snake_case)]
pub fn lambda_of_V(branch: &Branch, ctx: &SpectrumContext) -> Result<Vec<SpectrumReport>> {
    let n = branch.points.len();
    if n < 2 {
        return Err(Error::InvalidParams("lambda_of_V needs a moving branch point".into()));
    }
    let mut reports: Vec<SpectrumReport> =
        (1..n).into_par_iter().map(|k| spectrum_at(branch, k, ctx)).collect::<Result<_>>()?;
    let pts: Vec<(f64, f64)> = reports.iter().filter_map(|r| r.adjoint_norm.map(|a| (r.v, a))).collect();
    if pts.len() >= 4 {
        let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
        let slope = loglog_slope(&x, &y);
        for r in &mut reports {
            r.adjoint_norm_scaling = Some(slope);
        }
    }
    Ok(reports)
}

pub fn adjoint_scaling_check(reports: &[SpectrumReport]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = reports.iter().filter_map(|r| r.adjoint_norm.map(|a| (r.v, a))).collect();
    (pts.len() >= 4).then(|| {
        let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
        loglog_slope(&x, &y)
    })
}

pub fn write_spectrum_csv<W: Write>(reports: &[SpectrumReport], out: W) -> std::io::Result<W> {
    let mut w = CsvWriter::new(
        out,
        &[
            "V",
            "re_lambda",
            "im_lambda",
            "lambda_asymptotic",
            "ratio",
            "res_w1",
            "res_w2",
            "res_w3",
            "res_w4",
            "delta_count",
        ],
    )?;
    let o = |x: Option<f64>| x.unwrap_or(f64::NAN);
    for r in reports {
        let k = &r.kernel_residuals;
        w.row(&[
            r.v,
            r.lambda_v.re,
            r.lambda_v.im,
            r.lambda_asymptotic,
            r.ratio,
            k.w1,
            o(k.w2),
            o(k.w3),
            o(k.w4),
            r.delta_count as f64,
        ])?;
    }
    w.finish()
}
