//! Shared fixtures for the benchmarks.

use motility_core::bifurcation::find_R0;
use motility_core::model::ModelParams;
use motility_core::traveling_wave::{TwControls, TwSolver};

pub fn fig1_solver(controls: TwControls) -> TwSolver {
    let p = ModelParams::fig1();
    let r0 = find_R0(&p, Some((3.3, 3.8))).expect("fig1 has a critical radius");
    TwSolver::new(&p, r0, controls).expect("valid controls")
}
