//! Acceptance suite: one PASS/FAIL line per criterion. Exits nonzero if any
//! criterion fails.

use motility_core::bifurcation::{
    dE_dM_at_R0, find_R0, phi_d, transversality, zeta_for_critical_radius, BifurcationReport,
};
use motility_core::model::{check_hypotheses, radial_state, ModelParams};
use motility_core::stationary_spectrum::{
    movability_E_operator, movability_E_rayleigh, stationary_report, sweep_stationary, DEFAULT_N_MODES,
    DEFAULT_N_RADIAL, ZERO_TOL,
};
use motility_core::traveling_wave::{continue_branch, mass_derivatives, Branch, TwControls, TwSolver};
use motility_core::tw_spectrum::{
    adjoint_constants, adjoint_scaling_check, delta_at_rest, lambda_of_V, loglog_slope, SpectrumContext,
    SpectrumReport, Subspace,
};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

const V_MAX: f64 = 0.3;
const V_STEPS: usize = 16;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Shooting solve of `(rΦ′)′/r − Φ/r² + (m0 − ζ)Φ = m0 r`, `Φ(0) = Φ(R) = 0`,
/// through `Φ = r u`: `u″ + 3u′/r + (m0 − ζ)u = m0` with `u′(0) = 0`. A power
/// series starts the integration away from `r = 0`; RK4 takes it to `R`.
fn phi_oracle(big_r: f64, m0: f64, zeta: f64, at: &[f64]) -> Vec<f64> {
    let q = m0 - zeta;
    let shoot = |u0: f64| -> Vec<f64> {
        let eps = 0.25 * at[0].min(0.1);
        let mut c = vec![u0];
        for k in 0..30 {
            let src = if k == 0 { m0 } else { 0.0 };
            let kk = k as f64;
            c.push((src - q * c[k]) / ((2.0 * kk + 2.0) * (2.0 * kk + 4.0)));
        }
        let mut u: f64 = c.iter().enumerate().map(|(k, ck)| ck * eps.powi(2 * k as i32)).sum();
        let mut du: f64 = c.iter().enumerate().skip(1).map(|(k, ck)| 2.0 * k as f64 * ck * eps.powi(2 * k as i32 - 1)).sum();
        let f = |r: f64, u: f64, du: f64| (du, m0 - q * u - 3.0 * du / r);
        let mut r = eps;
        let mut out = Vec::new();
        for &target in at.iter().chain(std::iter::once(&big_r)) {
            let n = ((target - r) / 2e-4).ceil().max(1.0) as usize;
            let h = (target - r) / n as f64;
            for _ in 0..n {
                let (a1, b1) = f(r, u, du);
                let (a2, b2) = f(r + 0.5 * h, u + 0.5 * h * a1, du + 0.5 * h * b1);
                let (a3, b3) = f(r + 0.5 * h, u + 0.5 * h * a2, du + 0.5 * h * b2);
                let (a4, b4) = f(r + h, u + h * a3, du + h * b3);
                u += h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
                du += h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
                r += h;
            }
            r = target;
            out.push(u);
        }
        out
    };
    let a = shoot(0.0);
    let b = shoot(1.0);
    let n = at.len();
    let u0 = -a[n] / (b[n] - a[n]);
    (0..n).map(|j| at[j] * (a[j] + u0 * (b[j] - a[j]))).collect()
}

fn criterion_1() -> Outcome {
    let samples = [
        (1.0, 0.1, 0.5),
        (2.0, 0.3, 1.0),
        (2.5, 0.62, 3.0),
        (3.0, 0.5, 2.0),
        (3.6, 0.62, 3.5677286848507967),
        (4.0, 1.0, 1.5),
        (4.5, 0.2, 4.0),
        (5.0, 0.8, 0.9),
        (6.0, 1.5, 3.0),
        (1.5, 2.0, 6.0),
    ];
    let mut worst: f64 = 0.0;
    for &(big_r, m0, zeta) in &samples {
        let at: Vec<f64> = (1..=200).map(|j| big_r * j as f64 / 201.0).collect();
        let oracle = phi_oracle(big_r, m0, zeta, &at);
        let scale = oracle.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        for (r, o) in at.iter().zip(&oracle) {
            let closed = match phi_d(*r, big_r, m0, zeta) {
                Ok(v) => v,
                Err(e) => return outcome(false, format!("phi_d failed: {e}")),
            };
            worst = worst.max((closed - o).abs() / scale);
        }
    }
    outcome(worst <= 1e-8, format!("max relative error {worst:.2e} over 10 samples x 200 points (tol 1e-8)"))
}

fn criterion_2(p: &ModelParams, r0: f64) -> Outcome {
    let state = radial_state(p, r0).expect("radial state at R0");
    let e_op = movability_E_operator(&state, p, DEFAULT_N_RADIAL).expect("operator E").e;
    let e_ray = movability_E_rayleigh(&state, p, DEFAULT_N_RADIAL).expect("rayleigh E");
    let radii: Vec<f64> = (0..20).map(|k| 3.0 + 0.8 * k as f64 / 19.0).collect();
    let sweep = sweep_stationary(p, &radii, DEFAULT_N_RADIAL, 1).expect("sweep");
    let gap = sweep.iter().map(|s| (s.e_operator - s.e_rayleigh).abs()).fold(0.0, f64::max);
    let pass = e_op.abs() <= 1e-5 && e_ray.abs() <= 1e-5 && gap <= 1e-6;
    outcome(
        pass,
        format!("|E(R0)| = {:.1e} (operator), {:.1e} (Rayleigh); max route gap over 20 radii {gap:.1e}", e_op.abs(), e_ray.abs()),
    )
}

fn criterion_3(p: &ModelParams, rep: &BifurcationReport) -> Outcome {
    let r0 = rep.r0;
    let (fp, fpn) = transversality(r0, p, 1e-4).expect("transversality");
    let f_rel = (fp - fpn).abs() / fp.abs();
    let e_at = |r: f64| movability_E_rayleigh(&radial_state(p, r).expect("state"), p, DEFAULT_N_RADIAL).expect("E");
    let fd = |h: f64| (e_at(r0 + h) - e_at(r0 - h)) / (2.0 * h);
    let err = |h: f64| (fd(h) - rep.e_prime).abs() / rep.e_prime.abs();
    let (e1, e2, e3) = (err(0.04), err(0.02), err(0.005));
    let ratio = e1 / e2;
    let pass = f_rel <= 1e-5 && e3 <= 1e-4 && (ratio - 4.0).abs() <= 0.4;
    outcome(
        pass,
        format!("F' rel {f_rel:.1e}; E' rel err {e3:.1e} at h = 0.005; Richardson ratio {ratio:.3} (h = 0.04 -> 0.02)"),
    )
}

fn criterion_4() -> Outcome {
    let fig1 = ModelParams::fig1();
    let z2 = zeta_for_critical_radius(0.5, 3.0).expect("zeta for R0 = 3");
    let sets = [
        (fig1, 3.6),
        (ModelParams::calibrated(fig1.zeta, fig1.gamma, fig1.k_e, 0.62, 3.4).expect("params"), 3.4),
        (ModelParams::calibrated(fig1.zeta, fig1.gamma, fig1.k_e, 0.62, 3.8).expect("params"), 3.8),
        (ModelParams::calibrated(z2, 3.0, 5.0, 0.5, 3.0).expect("params"), 3.0),
        (ModelParams::calibrated(4.5, 4.0, 3.0, 0.4, 3.2).expect("params"), 3.2),
    ];
    let mut lines = Vec::new();
    let mut pass = true;
    for (p, r) in &sets {
        let hyp = check_hypotheses(p, *r).expect("hypotheses");
        let state = radial_state(p, *r).expect("state");
        let rep = stationary_report(&state, p, DEFAULT_N_RADIAL, DEFAULT_N_MODES).expect("report");
        let expected = if rep.e_operator.abs() <= ZERO_TOL { 3 } else { 2 };
        let ok = hyp.all_hold() && rep.max_re_nonzero < 0.0 && rep.zero_multiplicity == expected;
        pass &= ok;
        lines.push(format!(
            "R={r} E={:.2e} max Re={:.3} zeros={}{}",
            rep.e_operator,
            rep.max_re_nonzero,
            rep.zero_multiplicity,
            if hyp.all_hold() { "" } else { " (hypotheses fail)" }
        ));
    }
    outcome(pass, lines.join("; "))
}

fn criterion_5(branch: &Branch) -> Outcome {
    let base = &branch.points[0];
    let sel: Vec<_> =
        branch.points.iter().filter(|w| w.v >= V_MAX / 16.0 - 1e-12 && w.v <= V_MAX / 2.0 + 1e-12).collect();
    let v: Vec<f64> = sel.iter().map(|w| w.v).collect();
    let slope = |f: &dyn Fn(&motility_core::traveling_wave::TravelingWave) -> f64| {
        loglog_slope(&v, &sel.iter().map(|w| f(w)).collect::<Vec<_>>())
    };
    let s_rho = slope(&|w| w.rho_sup());
    let s_lam = slope(&|w| (w.lambda - base.lambda).abs());
    let s_area = slope(&|w| (w.area - base.area).abs());
    let md = mass_derivatives(branch).expect("mass derivatives");
    let mp0 = md.m_prime[0].abs() / base.mass;
    let ok = |s: f64| (s - 2.0).abs() <= 0.1;
    let pass = ok(s_rho) && ok(s_lam) && ok(s_area) && mp0 <= 1e-6;
    outcome(
        pass,
        format!("slopes rho {s_rho:.4}, Lambda {s_lam:.4}, area {s_area:.4} over {} points; |M'(0)|/M0 = {mp0:.1e}", v.len()),
    )
}

fn criterion_6(even: &[SpectrumReport], full: &[SpectrumReport]) -> Outcome {
    let mut worst = [0.0_f64; 4];
    let mut counts_ok = true;
    let mut single_ok = true;
    for r in even.iter().chain(full) {
        let k = &r.kernel_residuals;
        let vals = [Some(k.w1), k.w2, k.w3, k.w4];
        for (w, v) in worst.iter_mut().zip(vals) {
            if let Some(v) = v {
                *w = w.max(v);
            }
        }
        counts_ok &= r.delta_count == r.expected_count;
        // eigenvectors inside the structural span belong to the zero eigenvalue
        single_ok &= r.structural_distances.iter().filter(|&&d| d > 1e-6).count() == 1;
    }
    let pass = worst[0] <= 1e-6 && worst[2] <= 1e-6 && worst[1] <= 1e-4 && worst[3] <= 1e-4 && counts_ok && single_ok;
    outcome(
        pass,
        format!(
            "max residuals W1 {:.1e}, W3 {:.1e}, W2 {:.1e}, W4 {:.1e}; counts 3/5 {}; one nonzero member {} ({} points)",
            worst[0],
            worst[2],
            worst[1],
            worst[3],
            if counts_ok { "ok" } else { "wrong" },
            if single_ok { "ok" } else { "violated" },
            even.len()
        ),
    )
}

fn criterion_7(even: &[SpectrumReport]) -> Outcome {
    let dev: Vec<f64> = even.iter().map(|r| (r.ratio - 1.0).abs()).collect();
    let first = even[0].ratio;
    let monotone = dev.windows(2).all(|w| w[0] <= w[1] + 1e-3);
    let im = even.iter().map(|r| r.lambda_v.im.abs()).fold(0.0, f64::max);
    let pass = (first - 1.0).abs() <= 0.2 && monotone && even.len() >= 4 && im <= 1e-6;
    outcome(
        pass,
        format!(
            "ratio {first:.4} at V = {:.4}, {:.4} at V = {:.2}; |ratio - 1| monotone in V: {monotone}; max |Im lambda| {im:.1e}",
            even[0].v,
            even.last().map(|r| r.ratio).unwrap_or(f64::NAN),
            even.last().map(|r| r.v).unwrap_or(f64::NAN)
        ),
    )
}

fn criterion_8(p: &ModelParams, rep: &BifurcationReport, even: &[SpectrumReport]) -> Outcome {
    let c = adjoint_constants(rep, p);
    let slope = adjoint_scaling_check(even).unwrap_or(f64::NAN);
    let pass = c.bracket1.abs() <= 1e-10 && c.bracket2.abs() <= 1e-10 && (slope + 1.0).abs() <= 0.15;
    outcome(pass, format!("bracket1 {:.1e}, bracket2 {:.4e}; adjoint norm slope {slope:.4}", c.bracket1, c.bracket2))
}

fn criterion_9(even: &[SpectrumReport], full: &[SpectrumReport]) -> Outcome {
    let worst = even.iter().chain(full).map(|r| r.lambda_v.re).fold(f64::NEG_INFINITY, f64::max);
    outcome(worst < 0.0, format!("max Re lambda(V) over {} branch points {worst:.3e}", even.len()))
}

fn run_cli(dir: &Path, tag: &str, threads: Option<&str>) -> Vec<(String, Vec<u8>)> {
    let exe = env!("CARGO_BIN_EXE_motility");
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fig1.toml");
    let out = |name: &str| dir.join(format!("{tag}_{name}")).to_string_lossy().into_owned();
    let cfg = config.to_string_lossy().into_owned();
    let runs: Vec<Vec<String>> = vec![
        vec!["stationary".into(), "--config".into(), cfg.clone()],
        vec!["bifurcate".into(), "--config".into(), cfg.clone(), "--r-min".into(), "3".into(), "--r-max".into(), "3.8".into(), "--out-csv".into(), out("bif.csv")],
        vec!["sweep-e".into(), "--config".into(), cfg.clone(), "--r-min".into(), "3".into(), "--r-max".into(), "3.8".into(), "--r-points".into(), "8".into()],
        vec!["tw".into(), "--config".into(), cfg.clone(), "--v".into(), "0.2".into(), "--out-shape".into(), out("shape.csv"), "--out-myosin".into(), out("myo.csv")],
        vec!["branch".into(), "--config".into(), cfg.clone(), "--out-csv".into(), out("branch.csv")],
        vec!["spectrum".into(), "--config".into(), cfg, "--v".into(), "0.1".into(), "--v-steps".into(), "8".into(), "--out-csv".into(), out("spec.csv")],
    ];
    let mut artifacts = Vec::new();
    for (i, args) in runs.iter().enumerate() {
        let mut cmd = Command::new(exe);
        cmd.args(args);
        match threads {
            Some(t) => cmd.env("MOTILITY_THREADS", t),
            None => cmd.env_remove("MOTILITY_THREADS"),
        };
        let o = cmd.output().expect("run motility");
        artifacts.push((format!("{} stdout", args[0]), o.stdout));
        artifacts.push((format!("{} status", args[0]), vec![o.status.code().unwrap_or(-1) as u8, i as u8]));
    }
    for name in ["bif.csv", "shape.csv", "myo.csv", "branch.csv", "spec.csv"] {
        artifacts.push((name.to_string(), std::fs::read(out(name)).unwrap_or_default()));
    }
    artifacts
}

fn criterion_10() -> Outcome {
    let dir = tempfile::tempdir().expect("tempdir");
    let a = run_cli(dir.path(), "a", None);
    let b = run_cli(dir.path(), "b", Some("1"));
    let failed: Vec<&str> = a.iter().filter(|(n, _)| n.ends_with("status")).filter(|(_, s)| s[0] != 0).map(|(n, _)| n.as_str()).collect();
    if !failed.is_empty() {
        return outcome(false, format!("nonzero exit: {failed:?}"));
    }
    let differ: Vec<&str> = a.iter().zip(&b).filter(|(x, y)| x.1 != y.1).map(|(x, _)| x.0.as_str()).collect();
    let empty = a.iter().any(|(_, bytes)| bytes.is_empty());
    outcome(
        differ.is_empty() && !empty,
        format!("{} artifacts from 6 subcommands compared across two runs (default threads, MOTILITY_THREADS=1); differing: {differ:?}", a.len()),
    )
}

fn main() {
    let start = Instant::now();
    let p = ModelParams::fig1();
    let r0 = find_R0(&p, Some((3.3, 3.8))).expect("critical radius");
    let rep = dE_dM_at_R0(r0, &p, 1e-4).expect("bifurcation report");

    let solver = TwSolver::new(&p, r0, TwControls::default()).expect("solver");
    let branch = continue_branch(&solver, V_MAX, V_STEPS).expect("branch");
    let md = mass_derivatives(&branch).expect("mass derivatives");
    let spectra = |subspace: Subspace| {
        let delta = delta_at_rest(&solver, subspace, 1e-3).expect("delta");
        let ctx = SpectrumContext { params: p, bifurcation: &rep, mass: &md, delta, subspace, w2_step: 1e-4 };
        lambda_of_V(&branch, &ctx).expect("spectra")
    };
    let even = spectra(Subspace::Even);
    let full = spectra(Subspace::Full);

    let results = [
        ("closed-form Phi_D vs ODE oracle", criterion_1()),
        ("bifurcation consistency of E", criterion_2(&p, r0)),
        ("F' and E' derivative chain", criterion_3(&p, &rep)),
        ("stationary stability", criterion_4()),
        ("traveling-wave orders", criterion_5(&branch)),
        ("kernel structure", criterion_6(&even, &full)),
        ("lambda(V) asymptotic formula", criterion_7(&even)),
        ("adjoint identities", criterion_8(&p, &rep, &even)),
        ("supercritical sign", criterion_9(&even, &full)),
        ("CLI determinism", criterion_10()),
    ];
    let mut failures = 0;
    for (i, (name, o)) in results.iter().enumerate() {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        failures += usize::from(!o.pass);
        println!("[{tag}] {:>2}. {name}: {}", i + 1, o.detail);
    }
    println!("{} of {} criteria pass ({:.1} s)", results.len() - failures, results.len(), start.elapsed().as_secs_f64());
    if failures > 0 {
        std::process::exit(1);
    }
}
