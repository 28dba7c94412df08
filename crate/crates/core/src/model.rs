//! Physical parameters, the pressure law and the radial stationary family.

use crate::error::{Error, Result};
use crate::numerics::neumann_laplacian_eigs;
use serde::Serialize;
use std::f64::consts::PI;

/// Reference calibration: density, radius, surface tension and stiffness.
pub const FIG1_M0: f64 = 0.62;
pub const FIG1_R: f64 = 3.6;
pub const FIG1_GAMMA: f64 = 3.5;
pub const FIG1_K_E: f64 = 5.0;
/// Drag coefficient of the reference set, chosen as the root of `F(3.6) = 0`
/// so that the critical radius equals `FIG1_R`.
pub const FIG1_ZETA: f64 = 3.5677286848507967;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ModelParams {
    pub zeta: f64,
    pub gamma: f64,
    pub k_e: f64,
    pub p_h: f64,
    pub area_ref: f64,
}

impl ModelParams {
    pub fn new(zeta: f64, gamma: f64, k_e: f64, p_h: f64, area_ref: f64) -> Result<Self> {
        let all = [zeta, gamma, k_e, p_h, area_ref];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("parameters must be finite".into()));
        }
        if !(zeta > 0.0) {
            return Err(Error::InvalidParams(format!("zeta = {zeta} must be positive")));
        }
        if !(gamma > 0.0) {
            return Err(Error::InvalidParams(format!("gamma = {gamma} must be positive")));
        }
        if k_e < 0.0 {
            return Err(Error::InvalidParams(format!("k_e = {k_e} must be nonnegative")));
        }
        if !(area_ref > 0.0) {
            return Err(Error::InvalidParams(format!("area_ref = {area_ref} must be positive")));
        }
        Ok(ModelParams { zeta, gamma, k_e, p_h, area_ref })
    }

    /// Parameters for which the radial state of radius `r` has density
    /// `target_m0`, with `area_ref = πr²`.
    pub fn calibrated(zeta: f64, gamma: f64, k_e: f64, target_m0: f64, r: f64) -> Result<Self> {
        if !(r > 0.0) {
            return Err(Error::InvalidParams(format!("R = {r} must be positive")));
        }
        Self::new(zeta, gamma, k_e, target_m0 + gamma / r, PI * r * r)
    }

    pub fn fig1() -> Self {
        Self::calibrated(FIG1_ZETA, FIG1_GAMMA, FIG1_K_E, FIG1_M0, FIG1_R)
            .expect("reference parameters are valid")
    }

    pub fn p_star(&self, area: f64) -> f64 {
        self.p_h - self.k_e * (area - self.area_ref) / self.area_ref
    }

    /// Derivative of `p★` with respect to area (constant for the linear law).
    pub fn p_star_prime(&self) -> f64 {
        -self.k_e / self.area_ref
    }

    /// `Λ̃(R) = p★(πR²) − γ/R`, the density of the radial state.
    pub fn density(&self, r: f64) -> f64 {
        self.p_star(PI * r * r) - self.gamma / r
    }

    /// `dΛ̃/dR = γ/R² + 2πR p★′`.
    pub fn density_prime(&self, r: f64) -> f64 {
        self.gamma / (r * r) + 2.0 * PI * r * self.p_star_prime()
    }
}

pub fn p_star(params: &ModelParams, area: f64) -> f64 {
    params.p_star(area)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RadialState {
    pub r: f64,
    pub m0: f64,
    pub phi0: f64,
    pub mass: f64,
    pub p_star_val: f64,
}

pub fn radial_state(params: &ModelParams, r: f64) -> Result<RadialState> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Domain(format!("radial_state: R = {r} must be positive")));
    }
    let p = params.p_star(PI * r * r);
    let m0 = p - params.gamma / r;
    if !(m0 > 0.0) {
        return Err(Error::Domain(format!(
            "radial_state: density m0 = p★ − γ/R = {m0:e} is not positive at R = {r}"
        )));
    }
    Ok(RadialState { r, m0, phi0: m0 / params.zeta, mass: PI * r * r * m0, p_star_val: p })
}

/// Total myosin of the radial state, `πR²p★(πR²) − πγR`.
#[allow(non_snake_case)]
pub fn M_of_R(params: &ModelParams, r: f64) -> f64 {
    PI * r * r * params.p_star(PI * r * r) - PI * params.gamma * r
}

#[allow(non_snake_case)]
pub fn dM_dR(params: &ModelParams, r: f64) -> f64 {
    2.0 * PI * r * params.p_star(PI * r * r) + 2.0 * PI * PI * r.powi(3) * params.p_star_prime()
        - PI * params.gamma
}

#[derive(Clone, Debug, Serialize)]
pub struct HypothesisReport {
    pub r: f64,
    pub m0: f64,
    /// (a) `m0 <= ζ`; margin `ζ − m0`.
    pub a_holds: bool,
    pub a_margin: f64,
    /// Leading Neumann eigenvalues of `-Δ` on the disk, with multiplicity.
    pub neumann_eigs: Vec<f64>,
    /// (b) with the fourth eigenvalue counted with multiplicity.
    pub fourth_eig_multiplicity: f64,
    pub b_holds_multiplicity: bool,
    /// (b) with the fourth distinct eigenvalue.
    pub fourth_eig_distinct: f64,
    pub b_holds_distinct: bool,
    /// (c) `p★′ < −(γ/R + 2m0)/(2πR²)`; margin is bound minus `p★′`.
    pub p_star_prime: f64,
    pub c_bound: f64,
    pub c_holds: bool,
    pub c_margin: f64,
    pub dm_dr: f64,
    /// `p★′ + (2m0 − γ/R)/(2πR²)`; must be nonzero for a transversal
    /// bifurcation. No threshold is applied.
    pub nondegeneracy_margin: f64,
}

impl HypothesisReport {
    /// (a), (b) with multiplicity, and (c).
    pub fn all_hold(&self) -> bool {
        self.a_holds && self.b_holds_multiplicity && self.c_holds
    }
}

pub fn check_hypotheses(params: &ModelParams, r: f64) -> Result<HypothesisReport> {
    let st = radial_state(params, r)?;
    let m0 = st.m0;
    let eigs = neumann_laplacian_eigs(r, 12)?;
    let mut distinct: Vec<f64> = Vec::new();
    for &e in &eigs {
        if distinct.last().is_none_or(|&d| (e - d).abs() > 1e-10 * (1.0 + e)) {
            distinct.push(e);
        }
    }
    let pp = params.p_star_prime();
    let c_bound = -(params.gamma / r + 2.0 * m0) / (2.0 * PI * r * r);
    let nondeg = pp + (2.0 * m0 - params.gamma / r) / (2.0 * PI * r * r);
    Ok(HypothesisReport {
        r,
        m0,
        a_holds: m0 <= params.zeta,
        a_margin: params.zeta - m0,
        fourth_eig_multiplicity: eigs[3],
        b_holds_multiplicity: m0 < eigs[3],
        fourth_eig_distinct: distinct[3],
        b_holds_distinct: m0 < distinct[3],
        neumann_eigs: eigs[..6].to_vec(),
        p_star_prime: pp,
        c_bound,
        c_holds: pp < c_bound,
        c_margin: c_bound - pp,
        dm_dr: dM_dR(params, r),
        nondegeneracy_margin: nondeg,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pressure_law() {
        let p = ModelParams::new(1.0, 1.0, 5.0, 2.0, 10.0).unwrap();
        assert_eq!(p.p_star(10.0), 2.0);
        assert!((p.p_star(11.0) - 1.5).abs() < 1e-15);
        let p0 = ModelParams::new(1.0, 1.0, 0.0, 2.0, 10.0).unwrap();
        assert_eq!(p0.p_star(123.0), 2.0);
    }

    #[test]
    fn fig1_state() {
        let p = ModelParams::fig1();
        let st = radial_state(&p, FIG1_R).unwrap();
        assert!((st.m0 - 0.62).abs() < 1e-15);
        assert!((st.mass - 25.24).abs() < 5e-3);
        let h = check_hypotheses(&p, FIG1_R).unwrap();
        assert!(h.a_holds && h.c_holds && h.b_holds_multiplicity);
        assert!(h.dm_dr < 0.0);
        let d = 1e-5;
        let fd = (M_of_R(&p, FIG1_R + d) - M_of_R(&p, FIG1_R - d)) / (2.0 * d);
        assert!(fd < 0.0);
    }

    #[test]
    fn failing_hypotheses() {
        let p = ModelParams::calibrated(3.0, 1.0, 0.0, 0.5, 2.0).unwrap();
        assert!(!check_hypotheses(&p, 2.0).unwrap().c_holds);
        let p = ModelParams::calibrated(0.4, 1.0, 5.0, 0.5, 2.0).unwrap();
        assert!(!check_hypotheses(&p, 2.0).unwrap().a_holds);
        let p = ModelParams::new(1.0, 1.0, 0.0, 0.1, 1.0).unwrap();
        assert!(radial_state(&p, 1.0).is_err());
        assert!(ModelParams::new(-1.0, 1.0, 0.0, 0.1, 1.0).is_err());
    }

    #[test]
    fn limits() {
        let p = ModelParams::new(1.0, 1e-300, 0.0, 2.0, 10.0).unwrap();
        let st = radial_state(&p, 1.3).unwrap();
        assert!((st.m0 - p.p_star(PI * 1.69)).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn state_invariants(zeta in 0.5f64..5.0, gamma in 0.1f64..4.0, k_e in 0.0f64..8.0,
                            m0 in 0.05f64..2.0, r in 1.0f64..6.0, dr in -0.2f64..0.2) {
            let p = ModelParams::calibrated(zeta, gamma, k_e, m0, r).unwrap();
            let rr = r * (1.0 + dr);
            if let Ok(st) = radial_state(&p, rr) {
                prop_assert!((st.m0 + gamma / rr - st.p_star_val).abs() <= 1e-14 * st.p_star_val.abs().max(1.0));
                prop_assert_eq!(st.mass, PI * rr * rr * st.m0);
                prop_assert_eq!(st.phi0, st.m0 / zeta);
                prop_assert_eq!(radial_state(&p, rr).unwrap(), st);
                let h = check_hypotheses(&p, rr).unwrap();
                prop_assert_eq!(h.c_holds, dM_dR(&p, rr) < 0.0);
            }
            let d = 1e-5;
            let fd = (M_of_R(&p, rr + d) - M_of_R(&p, rr - d)) / (2.0 * d);
            let an = dM_dR(&p, rr);
            prop_assert!((fd - an).abs() <= 1e-6 * an.abs().max(1.0));
        }
    }
}
