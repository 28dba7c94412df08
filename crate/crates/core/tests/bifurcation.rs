use motility_core::bifurcation::{find_R0, phi_d, zeta_for_critical_radius, F_of_R};
use motility_core::model::{radial_state, ModelParams};
use motility_core::stationary_spectrum::{movability_E_operator, movability_E_rayleigh, DEFAULT_N_RADIAL};
use proptest::prelude::*;

#[test]
fn fig1_critical_radius() {
    let p = ModelParams::fig1();
    let r0 = find_R0(&p, Some((3.3, 3.8))).unwrap();
    assert!((r0 - 3.6).abs() < 1e-10, "{r0}");
    assert!(find_R0(&p, Some((3.0, 3.4))).is_err());
}

// a critical zeta exists only for m0 R² > 4, so m0 R² is sampled directly
proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn dirichlet_profile_boundary_values(r in 0.5f64..6.0, m0 in 0.05f64..2.0, dz in 0.05f64..5.0) {
        let zeta = m0 + dz;
        prop_assert_eq!(phi_d(0.0, r, m0, zeta).unwrap(), 0.0);
        prop_assert!(phi_d(r, r, m0, zeta).unwrap().abs() <= 1e-12 * (1.0 + m0 * r));
        prop_assert!(phi_d(1.01 * r, r, m0, zeta).is_err());
    }

    #[test]
    fn prescribed_critical_radius_is_recovered(m0r2 in 5.0f64..10.0, r in 2.0f64..5.0) {
        let m0 = m0r2 / (r * r);
        let zeta = zeta_for_critical_radius(m0, r).unwrap();
        let p = ModelParams::calibrated(zeta, 3.5, 5.0, m0, r).unwrap();
        prop_assert!(F_of_R(r, &p).unwrap().abs() <= 1e-9);
        let r0 = find_R0(&p, Some((0.99 * r, 1.01 * r))).unwrap();
        prop_assert!((r0 - r).abs() <= 1e-9 * r);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn movability_routes_agree(m0r2 in 4.5f64..10.0, r in 2.5f64..4.5, dr in -0.1f64..0.05) {
        let m0 = m0r2 / (r * r);
        let zeta = zeta_for_critical_radius(m0, r).unwrap();
        let p = ModelParams::calibrated(zeta, 3.5, 5.0, m0, r).unwrap();
        let rr = r * (1.0 + dr);
        let state = radial_state(&p, rr).unwrap();
        let e_op = movability_E_operator(&state, &p, DEFAULT_N_RADIAL).unwrap().e;
        let e_ray = movability_E_rayleigh(&state, &p, DEFAULT_N_RADIAL).unwrap();
        prop_assert!((e_op - e_ray).abs() <= 1e-6, "{} vs {}", e_op, e_ray);
    }
}
