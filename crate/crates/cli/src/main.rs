mod config;

use clap::{Parser, Subcommand};
use config::{DeltaPolicy, RunConfig, Settings};
use motility_core::bifurcation::{self, dE_dM_at_R0, find_R0};
use motility_core::export::to_json;
use motility_core::model::{check_hypotheses, radial_state};
use motility_core::stationary_spectrum::{self, stationary_report, sweep_stationary};
use motility_core::traveling_wave::{
    continue_branch, continue_through, mass_derivatives, write_branch_csv, write_myosin_csv, write_shape_csv,
    Branch, TwSolver,
};
use motility_core::tw_spectrum::{delta_at_rest, lambda_of_V, spectrum_at, write_spectrum_csv, SpectrumContext};
use motility_core::Error;
use serde::Serialize;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "motility", version, about = "Free-boundary cell motility: stationary states, bifurcation, traveling waves")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug)]
struct Opts {
    /// TOML file with any of the flag keys; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    settings: Settings,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Radial state at `R` and the hypothesis checks, as JSON.
    Stationary(Opts),
    /// Stationary spectrum over `r_min..r_max`, as CSV.
    SweepE(Opts),
    /// Critical radius and `dE/dM`, as JSON; optional `R`-sweep CSV.
    Bifurcate(Opts),
    /// Traveling wave at `--v`, continued from rest.
    Tw(Opts),
    /// Branch up to `--v-max`: CSV of the points and JSON of `M′`.
    Branch(Opts),
    /// Spectrum of the linearization at `--v`, or along the branch to `--v-max`.
    Spectrum(Opts),
}

enum Failure {
    Usage(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParams(_) | Error::Config(_) | Error::Domain(_) | Error::Io(_) => Failure::Usage(e.to_string()),
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn init_threads() -> Outcome {
    let Ok(raw) = std::env::var("MOTILITY_THREADS") else { return Ok(()) };
    let n: usize = raw
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Usage(format!("MOTILITY_THREADS must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Failure::Usage(e.to_string()))
}

fn load(opts: &Opts) -> Result<RunConfig, Failure> {
    let file = match &opts.config {
        Some(p) => Settings::from_file(p).map_err(Failure::Usage)?,
        None => Settings::default(),
    };
    let cfg = RunConfig::resolve(&opts.settings.over(&file)).map_err(Failure::Usage)?;
    if let Some(input) = &opts.config {
        for out in [&cfg.out, &cfg.out_csv, &cfg.out_shape, &cfg.out_myosin].into_iter().flatten() {
            if same_file(input, out) {
                return Err(Failure::Usage(format!("output {} would overwrite the config file", out.display())));
            }
        }
    }
    Ok(cfg)
}

fn same_file(a: &Path, b: &Path) -> bool {
    match (a.canonicalize(), b.canonicalize()) {
        (Ok(x), Ok(y)) => x == y,
        _ => false,
    }
}

fn run(cli: Cli) -> Outcome {
    init_threads()?;
    match cli.command {
        Command::Stationary(o) => stationary(&load(&o)?),
        Command::SweepE(o) => sweep_e(&load(&o)?),
        Command::Bifurcate(o) => bifurcate(&load(&o)?),
        Command::Tw(o) => tw(&load(&o)?),
        Command::Branch(o) => branch(&load(&o)?),
        Command::Spectrum(o) => spectrum(&load(&o)?),
    }
}

/// JSON goes to `--out` when given, otherwise to standard output.
fn emit_json<T: Serialize>(value: &T, out: Option<&PathBuf>) -> Outcome {
    let mut text = to_json(value);
    text.push('\n');
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::Usage(format!("cannot create {}: {e}", path.display())))
}

fn require<T: Copy>(v: Option<T>, key: &str) -> Result<T, Failure> {
    v.ok_or_else(|| Failure::Usage(format!("missing `{key}`")))
}

fn radii(cfg: &RunConfig) -> Result<Vec<f64>, Failure> {
    let (a, b, n) = require(cfg.r_range, "r_min/r_max")?;
    Ok((0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect())
}

#[derive(Serialize)]
struct StationaryOutput {
    radial_state: motility_core::model::RadialState,
    hypotheses: motility_core::model::HypothesisReport,
    spectrum: stationary_spectrum::StationaryReport,
}

fn stationary(cfg: &RunConfig) -> Outcome {
    let r = require(cfg.radius, "R")?;
    let state = radial_state(&cfg.params, r)?;
    let out = StationaryOutput {
        radial_state: state,
        hypotheses: check_hypotheses(&cfg.params, r)?,
        spectrum: stationary_report(&state, &cfg.params, cfg.n_radial, cfg.n_modes)?,
    };
    emit_json(&out, cfg.out.as_ref())
}

fn sweep_e(cfg: &RunConfig) -> Outcome {
    let reports = sweep_stationary(&cfg.params, &radii(cfg)?, cfg.n_radial, cfg.n_modes)?;
    match &cfg.out_csv {
        Some(p) => stationary_spectrum::write_sweep_csv(&reports, create(p)?).map(drop)?,
        None => stationary_spectrum::write_sweep_csv(&reports, std::io::stdout().lock()).map(drop)?,
    }
    Ok(())
}

fn critical_radius(cfg: &RunConfig) -> Result<f64, Failure> {
    Ok(find_R0(&cfg.params, cfg.r0_bracket)?)
}

fn bifurcate(cfg: &RunConfig) -> Outcome {
    let r0 = critical_radius(cfg)?;
    let report = dE_dM_at_R0(r0, &cfg.params, cfg.fd_step)?;
    if let Some(p) = &cfg.out_csv {
        let rows = bifurcation::sweep(&cfg.params, &radii(cfg)?, cfg.n_radial)?;
        bifurcation::write_sweep_csv(&rows, create(p)?)?;
    }
    emit_json(&report, cfg.out.as_ref())
}

fn solver(cfg: &RunConfig) -> Result<TwSolver, Failure> {
    Ok(TwSolver::new(&cfg.params, critical_radius(cfg)?, cfg.tw)?)
}

#[derive(Serialize)]
struct WaveSummary {
    v: f64,
    lambda: f64,
    mass: f64,
    area: f64,
    r0: f64,
    rho_sup: f64,
    rho_modes: Vec<f64>,
    residual_norm: f64,
    newton_iters: usize,
    continuation_steps: usize,
}

fn tw(cfg: &RunConfig) -> Outcome {
    let v = require(cfg.v, "v")?;
    if !(v >= 0.0) || !v.is_finite() {
        return Err(Failure::Usage(format!("need a finite v >= 0, got {v}")));
    }
    let s = solver(cfg)?;
    let branch = if v == 0.0 {
        Branch { params: s.params, r0: s.r0, controls: s.controls, points: vec![s.radial()], mirror: None }
    } else {
        let vs: Vec<f64> = (1..=cfg.v_steps).map(|k| v * k as f64 / cfg.v_steps as f64).collect();
        continue_through(&s, &vs, false)?
    };
    let wave = branch.points.last().expect("branch starts at rest");
    if let Some(p) = &cfg.out_shape {
        write_shape_csv(wave, create(p)?)?;
    }
    if let Some(p) = &cfg.out_myosin {
        write_myosin_csv(wave, create(p)?)?;
    }
    let summary = WaveSummary {
        v: wave.v,
        lambda: wave.lambda,
        mass: wave.mass,
        area: wave.area,
        r0: wave.r0,
        rho_sup: wave.rho_sup(),
        rho_modes: wave.rho_modes.clone(),
        residual_norm: wave.residual_norm,
        newton_iters: wave.newton_iters,
        continuation_steps: branch.points.len() - 1,
    };
    emit_json(&summary, cfg.out.as_ref())
}

fn solve_branch(cfg: &RunConfig, v_max: f64) -> Result<(TwSolver, Branch), Failure> {
    if !(v_max > 0.0) || !v_max.is_finite() {
        return Err(Failure::Usage(format!("need a finite positive velocity, got {v_max}")));
    }
    let s = solver(cfg)?;
    let b = continue_branch(&s, v_max, cfg.v_steps)?;
    Ok((s, b))
}

fn branch(cfg: &RunConfig) -> Outcome {
    let (_, b) = solve_branch(cfg, require(cfg.v_max, "v_max")?)?;
    let md = mass_derivatives(&b)?;
    if let Some(p) = &cfg.out_csv {
        write_branch_csv(&b, create(p)?)?;
    }
    emit_json(&md, cfg.out.as_ref())
}

fn spectrum(cfg: &RunConfig) -> Outcome {
    let target = match (cfg.v, cfg.v_max) {
        (Some(v), _) => v,
        (None, Some(v)) => v,
        (None, None) => return Err(Failure::Usage("give `v` or `v_max`".into())),
    };
    let (s, b) = solve_branch(cfg, target)?;
    let bif = dE_dM_at_R0(s.r0, &cfg.params, cfg.fd_step)?;
    let md = mass_derivatives(&b)?;
    let delta = match cfg.delta {
        DeltaPolicy::AtRest { floor } => delta_at_rest(&s, cfg.subspace, floor)?,
        DeltaPolicy::Fixed(d) => d,
    };
    let ctx = SpectrumContext {
        params: cfg.params,
        bifurcation: &bif,
        mass: &md,
        delta,
        subspace: cfg.subspace,
        w2_step: cfg.w2_step,
    };
    if cfg.v.is_some() {
        let report = spectrum_at(&b, b.points.len() - 1, &ctx)?;
        if let Some(p) = &cfg.out_csv {
            write_spectrum_csv(std::slice::from_ref(&report), create(p)?)?;
        }
        emit_json(&report, cfg.out.as_ref())
    } else {
        let reports = lambda_of_V(&b, &ctx)?;
        if let Some(p) = &cfg.out_csv {
            write_spectrum_csv(&reports, create(p)?)?;
        }
        emit_json(&reports, cfg.out.as_ref())
    }
}
