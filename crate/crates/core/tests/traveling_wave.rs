use motility_core::bifurcation::find_R0;
use motility_core::model::{radial_state, ModelParams};
use motility_core::traveling_wave::{
    continue_branch, mass_derivatives, myosin_mass, solve_tw, Branch, TwControls, TwSolver,
};
use std::sync::OnceLock;

const V_MAX: f64 = 0.3;

fn fig1_branch() -> &'static (TwSolver, Branch) {
    static CELL: OnceLock<(TwSolver, Branch)> = OnceLock::new();
    CELL.get_or_init(|| {
        let p = ModelParams::fig1();
        let r0 = find_R0(&p, Some((3.3, 3.8))).unwrap();
        let solver = TwSolver::new(&p, r0, TwControls::default()).unwrap();
        let branch = continue_branch(&solver, V_MAX, 16).unwrap();
        (solver, branch)
    })
}

#[test]
fn rest_state_is_the_radial_solution() {
    let (solver, branch) = fig1_branch();
    let rest = &branch.points[0];
    let st = radial_state(&solver.params, solver.r0).unwrap();
    assert!((rest.mass - st.mass).abs() < 1e-10 * st.mass);
    assert!(rest.rho_modes.iter().all(|&c| c == 0.0));
    assert!(rest.phi.iter().all(|&f| (f - st.phi0).abs() < 1e-12));
}

#[test]
fn residual_on_finer_grid() {
    let (solver, branch) = fig1_branch();
    let c = solver.controls;
    let fine = TwControls { n_radial: 3 * c.n_radial / 2, n_theta: 3 * c.n_theta / 2, n_shape: 3 * c.n_theta / 4 - 1, ..c };
    for tw in branch.points.iter().filter(|w| w.v <= V_MAX / 2.0 + 1e-12) {
        let r = solver.residual_on_grid(tw, &fine).unwrap();
        assert!(r <= 1e-8, "V = {}: {r:e}", tw.v);
    }
}

#[test]
fn mirror_symmetry() {
    let (solver, branch) = fig1_branch();
    let plus = &branch.points[1];
    let minus = branch.mirror.as_ref().unwrap();
    assert!((plus.mass - minus.mass).abs() < 1e-11 * plus.mass);
    for (n, (a, b)) in plus.rho_modes.iter().zip(&minus.rho_modes).enumerate() {
        let s = if n % 2 == 1 { -1.0 } else { 1.0 };
        assert!((a - s * b).abs() < 1e-10, "mode {n}: {a} vs {b}");
    }
    // an independent cold solve lands on the same wave
    let cold = solve_tw(solver, plus.v, None).unwrap();
    assert!((cold.mass - plus.mass).abs() < 1e-11 * plus.mass);
}

#[test]
fn mass_is_even_in_velocity() {
    let (_, branch) = fig1_branch();
    let md = mass_derivatives(branch).unwrap();
    assert!(md.m_prime[0].abs() < 1e-6 * md.mass[0]);
    assert!(md.m_dd0 > 0.0);
    for tw in &branch.points {
        assert!((myosin_mass(tw) - tw.mass).abs() < 1e-9 * tw.mass, "V = {}", tw.v);
    }
    // M′(V) ≈ M″(0) V at small V
    let k = 2;
    let rel = (md.m_prime[k] - md.m_dd0 * md.v[k]).abs() / (md.m_dd0 * md.v[k]);
    assert!(rel < 0.05, "{rel}");
}

#[test]
fn continuation_failure_is_reported() {
    let (solver, _) = fig1_branch();
    let err = continue_branch(solver, 1e9, 4).unwrap_err();
    assert!(err.to_string().contains("branch continuation failed"), "{err}");
}
