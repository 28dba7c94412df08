//! Closed-form radial profiles, the bifurcation function `F(R)`, the critical
//! radius and the derivative chain `F′ → E′ → dE/dM`.

use crate::error::{Error, Result};
use crate::export::CsvWriter;
use crate::model::{check_hypotheses, dM_dR, radial_state, HypothesisReport, ModelParams, M_of_R};
use crate::stationary_spectrum::movability_E_operator;
use rayon::prelude::*;
use std::io::Write;
use crate::numerics::bessel::{i1, i1_prime};
use crate::numerics::gauss_legendre;
use serde::Serialize;
use std::f64::consts::PI;

/// Dirichlet profile: solves `(rΦ′)′/r − Φ/r² + (m0 − ζ)Φ = m0 r` on `(0, R)`
/// with `Φ(0) = Φ(R) = 0`.
#[derive(Clone, Copy, Debug)]
pub struct PhiD {
    pub r: f64,
    pub m0: f64,
    pub zeta: f64,
    k: f64,
    c: f64,
}

impl PhiD {
    pub fn new(r: f64, m0: f64, zeta: f64) -> Result<Self> {
        if !(zeta > m0) {
            return Err(Error::Domain(format!("phi_d: need zeta > m0 (zeta = {zeta}, m0 = {m0})")));
        }
        if !(r > 0.0) {
            return Err(Error::Domain(format!("phi_d: R = {r} must be positive")));
        }
        let k = (zeta - m0).sqrt();
        let c = m0 * r / (k * k * i1(k * r));
        Ok(PhiD { r, m0, zeta, k, c })
    }

    pub fn value(&self, r: f64) -> f64 {
        -self.m0 * r / (self.k * self.k) + self.c * i1(self.k * r)
    }

    pub fn derivative(&self, r: f64) -> f64 {
        -self.m0 / (self.k * self.k) + self.c * self.k * i1_prime(self.k * r)
    }
}

pub fn phi_d(r: f64, big_r: f64, m0: f64, zeta: f64) -> Result<f64> {
    if !(0.0..=big_r).contains(&r) {
        return Err(Error::Domain(format!("phi_d: r = {r} outside [0, {big_r}]")));
    }
    Ok(PhiD::new(big_r, m0, zeta)?.value(r))
}

/// Neumann-normalized profile: same equation with density `Λ̃`, `Φ(0) = 0`
/// and `Φ′(R) = 1`. Its boundary value is `F(R)`.
pub fn phi_tilde(r: f64, big_r: f64, lambda: f64, zeta: f64) -> Result<f64> {
    if !(zeta > lambda) {
        return Err(Error::Domain("phi_tilde: need zeta > Λ̃".into()));
    }
    let k = (zeta - lambda).sqrt();
    let d = zeta / (k.powi(3) * i1_prime(k * big_r));
    Ok(-lambda * r / (k * k) + d * i1(k * r))
}

/// Bifurcation function `F(R)`.
#[allow(non_snake_case)]
pub fn F_of_R(r: f64, params: &ModelParams) -> Result<f64> {
    let lam = params.density(r);
    let zeta = params.zeta;
    if !(lam > 0.0 && lam < zeta) {
        return Err(Error::Domain(format!("F_of_R: need 0 < Λ̃ < ζ, got Λ̃ = {lam} at R = {r}")));
    }
    let k2 = zeta - lam;
    let z = r * k2.sqrt();
    Ok(zeta * i1(z) / (k2.powf(1.5) * i1_prime(z)) - r * lam / k2)
}

fn secant_bisect<F: Fn(f64) -> Result<f64>>(f: F, mut a: f64, mut b: f64, tol: f64) -> Result<f64> {
    let mut fa = f(a)?;
    let mut fb = f(b)?;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if (fa < 0.0) == (fb < 0.0) {
        return Err(Error::NoBifurcation { lo: a, hi: b });
    }
    let mut best = if fa.abs() < fb.abs() { (a, fa) } else { (b, fb) };
    for it in 0..200 {
        let width = b - a;
        let mut x = b - fb * (b - a) / (fb - fa);
        // Alternate with bisection so the bracket always shrinks.
        if it % 3 == 2 || !(x > a && x < b) {
            x = 0.5 * (a + b);
        }
        let fx = f(x)?;
        if fx.abs() < best.1.abs() {
            best = (x, fx);
        }
        if fx.abs() <= tol || width <= 4.0 * f64::EPSILON * b.abs() {
            break;
        }
        if (fx < 0.0) == (fa < 0.0) {
            a = x;
            fa = fx;
        } else {
            b = x;
            fb = fx;
        }
    }
    Ok(best.0)
}

/// Sign changes of `F` over a logarithmic scan in `[lo, hi]`.
pub fn scan_brackets(params: &ModelParams, lo: f64, hi: f64, points: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for i in 0..=points {
        let r = lo * (hi / lo).powf(i as f64 / points as f64);
        match F_of_R(r, params) {
            Ok(f) => {
                if let Some((rp, fp)) = prev {
                    if (fp < 0.0) != (f < 0.0) {
                        out.push((rp, r));
                    }
                }
                prev = Some((r, f));
            }
            Err(_) => prev = None,
        }
    }
    out
}

/// Critical radius: root of `F` in `bracket`, or, if absent, the root closest
/// to the reference radius `sqrt(area_ref/π)` found by scanning.
#[allow(non_snake_case)]
pub fn find_R0(params: &ModelParams, bracket: Option<(f64, f64)>) -> Result<f64> {
    let (a, b) = match bracket {
        Some(ab) => ab,
        None => {
            let rref = (params.area_ref / PI).sqrt();
            let (lo, hi) = (1e-2 * rref, 1e2 * rref);
            let brackets = scan_brackets(params, lo, hi, 4000);
            *brackets
                .iter()
                .min_by(|x, y| {
                    (x.0.ln() - rref.ln()).abs().total_cmp(&(y.0.ln() - rref.ln()).abs())
                })
                .ok_or(Error::NoBifurcation { lo, hi })?
        }
    };
    secant_bisect(|r| F_of_R(r, params), a, b, 1e-12)
}

/// Drag `ζ > m0` for which a radial state of density `m0` and radius `r` sits
/// exactly at the bifurcation point, i.e. `ζ I₁(z)/(z I₁′(z)) = m0` with
/// `z = r√(ζ − m0)`.
pub fn zeta_for_critical_radius(m0: f64, r: f64) -> Result<f64> {
    let h = |zeta: f64| -> Result<f64> {
        let z = r * (zeta - m0).sqrt();
        Ok(zeta * i1(z) / (z * i1_prime(z)) - m0)
    };
    let mut prev = m0 * (1.0 + 1e-3);
    let mut hp = h(prev)?;
    for i in 1..=4000 {
        let zeta = m0 * (1.0 + 1e-3) * 1e4f64.powf(i as f64 / 4000.0);
        let hz = h(zeta)?;
        if hp < 0.0 && hz >= 0.0 {
            return secant_bisect(h, prev, zeta, 1e-14);
        }
        prev = zeta;
        hp = hz;
    }
    Err(Error::Degenerate(format!("no critical zeta for m0 = {m0}, R = {r}")))
}

/// Radial integrals of `Φ_D` on `[0, R]` by Gauss–Legendre with `n` points.
/// Returns `(π∫((Φ′−1)² + (Φ−r)²/r²) r dr, π∫(Φ−r)² r dr)`.
pub fn profile_integrals(phi: &PhiD, n: usize) -> (f64, f64) {
    let q = gauss_legendre(n, 0.0, phi.r);
    let grad = q.integrate(|r| {
        let d = phi.derivative(r) - 1.0;
        let v = phi.value(r) - r;
        (d * d + v * v / (r * r)) * r
    });
    let mass = q.integrate(|r| {
        let v = phi.value(r) - r;
        v * v * r
    });
    (PI * grad, PI * mass)
}

pub const INTEGRAL_POINTS: usize = 64;

/// Closed-form `F′` at a root of `F`.
#[allow(non_snake_case)]
pub fn F_prime_closed(r: f64, params: &ModelParams) -> Result<f64> {
    let lam = params.density(r);
    let zeta = params.zeta;
    let phi = PhiD::new(r, lam, zeta)?;
    let (grad, _) = profile_integrals(&phi, INTEGRAL_POINTS);
    let rhs = PI * r * (zeta + lam - (lam * r) * (lam * r)) - params.density_prime(r) * grad;
    Ok(rhs / (PI * zeta * r))
}

/// Centered difference of `F` with one Richardson step.
#[allow(non_snake_case)]
pub fn F_prime_numeric(r: f64, params: &ModelParams, rel_step: f64) -> Result<f64> {
    let d = |h: f64| -> Result<f64> { Ok((F_of_R(r + h, params)? - F_of_R(r - h, params)?) / (2.0 * h)) };
    let h = rel_step * r;
    let (d1, d2) = (d(h)?, d(0.5 * h)?);
    Ok((4.0 * d2 - d1) / 3.0)
}

pub fn transversality(r0: f64, params: &ModelParams, rel_step: f64) -> Result<(f64, f64)> {
    Ok((F_prime_closed(r0, params)?, F_prime_numeric(r0, params, rel_step)?))
}

#[derive(Clone, Debug, Serialize)]
pub struct BifurcationReport {
    pub r0: f64,
    pub f_at_r0: f64,
    pub f_prime: f64,
    pub f_prime_numeric: f64,
    pub e_prime: f64,
    pub de_dm: f64,
    pub dm_dr: f64,
    pub m0: f64,
    pub mass_m: f64,
    pub gradient_integral: f64,
    pub mass_integral: f64,
    pub degenerate: bool,
    pub hypothesis_flags: HypothesisReport,
}

/// `E′(R0)` from the mass-integral formula and `dE/dM = E′/M′(R0)`.
#[allow(non_snake_case)]
pub fn dE_dM_at_R0(r0: f64, params: &ModelParams, rel_step: f64) -> Result<BifurcationReport> {
    let lam = params.density(r0);
    let phi = PhiD::new(r0, lam, params.zeta)?;
    let (grad, mass) = profile_integrals(&phi, INTEGRAL_POINTS);
    let (fp, fpn) = transversality(r0, params, rel_step)?;
    let rel = (fp - fpn).abs() / fp.abs().max(1e-300);
    if rel > 1e-3 {
        return Err(Error::Degenerate(format!(
            "F′ closed form {fp:e} and finite difference {fpn:e} disagree"
        )));
    }
    let e_prime = -PI * params.zeta * r0 * fp / (lam * mass);
    let dm = dM_dR(params, r0);
    if dm == 0.0 {
        return Err(Error::Degenerate("M′(R0) = 0".into()));
    }
    Ok(BifurcationReport {
        r0,
        f_at_r0: F_of_R(r0, params)?,
        f_prime: fp,
        f_prime_numeric: fpn,
        e_prime,
        de_dm: e_prime / dm,
        dm_dr: dm,
        m0: lam,
        mass_m: PI * r0 * r0 * lam,
        gradient_integral: grad,
        mass_integral: mass,
        degenerate: fp == 0.0,
        hypothesis_flags: check_hypotheses(params, r0)?,
    })
}

/// One row of the `R, F, E, M, dM_dR` sweep (the `E` column is filled in by
/// the stationary spectrum).
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SweepRow {
    pub r: f64,
    pub f: f64,
    pub e: f64,
    pub m: f64,
    pub dm_dr: f64,
}

/// `R, F, E, M, dM_dR` over a list of radii, with `E` from the mode-1 operator.
pub fn sweep(params: &ModelParams, radii: &[f64], n_radial: usize) -> Result<Vec<SweepRow>> {
    radii
        .par_iter()
        .map(|&r| {
            let state = radial_state(params, r)?;
            Ok(SweepRow {
                r,
                f: F_of_R(r, params)?,
                e: movability_E_operator(&state, params, n_radial)?.e,
                m: M_of_R(params, r),
                dm_dr: dM_dR(params, r),
            })
        })
        .collect()
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> std::io::Result<W> {
    let mut w = CsvWriter::new(out, &["R", "F", "E", "M", "dM_dR"])?;
    for r in rows {
        w.row(&[r.r, r.f, r.e, r.m, r.dm_dr])?;
    }
    w.finish()
}
