//! Run configuration: a flat TOML file whose keys can all be overridden by
//! command-line flags of the same name.

use clap::Args;
use motility_core::model::ModelParams;
use motility_core::stationary_spectrum::{DEFAULT_N_MODES, DEFAULT_N_RADIAL};
use motility_core::traveling_wave::TwControls;
use motility_core::tw_spectrum::Subspace;
use serde::Deserialize;
use std::path::{Path, PathBuf};

/// Every key accepted in a config file. Unknown keys are rejected.
#[derive(Args, Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    #[arg(long)]
    pub zeta: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub k_e: Option<f64>,
    #[arg(long)]
    pub p_h: Option<f64>,
    #[arg(long)]
    pub area_ref: Option<f64>,
    /// Density of the radial state at radius `R` (calibrated style).
    #[arg(long)]
    pub target_m0: Option<f64>,
    /// Calibration radius, and the evaluation radius of `stationary`.
    #[arg(long = "R")]
    #[serde(rename = "R")]
    pub r: Option<f64>,

    /// Radial collocation nodes of the stationary mode operators.
    #[arg(long)]
    pub n_radial: Option<usize>,
    /// Highest Fourier mode of the stationary spectrum.
    #[arg(long)]
    pub n_modes: Option<usize>,
    /// Radial rings of the traveling-wave disk grid.
    #[arg(long)]
    pub tw_radial: Option<usize>,
    /// Angular nodes of the traveling-wave disk grid (even).
    #[arg(long)]
    pub tw_theta: Option<usize>,
    /// Shape cosine modes of the traveling wave.
    #[arg(long)]
    pub tw_shape: Option<usize>,
    #[arg(long)]
    pub newton_tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Relative step of the finite differences in `R`.
    #[arg(long)]
    pub fd_step: Option<f64>,
    /// Step of the Jacobian columns for the shape modes.
    #[arg(long)]
    pub tw_fd_step: Option<f64>,
    /// Velocity step of the centered difference defining `W2`.
    #[arg(long)]
    pub w2_step: Option<f64>,
    /// `at_rest` or `fixed`.
    #[arg(long)]
    pub delta_policy: Option<String>,
    /// Delta-disk radius when `delta_policy = "fixed"`.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Eigenvalues below this modulus are ignored when measuring delta at rest.
    #[arg(long)]
    pub delta_floor: Option<f64>,
    /// `even`, `odd` or `full`.
    #[arg(long)]
    pub subspace: Option<String>,

    #[arg(long)]
    pub r_min: Option<f64>,
    #[arg(long)]
    pub r_max: Option<f64>,
    #[arg(long)]
    pub r_points: Option<usize>,
    /// Bracket for the critical radius.
    #[arg(long)]
    pub r0_lo: Option<f64>,
    #[arg(long)]
    pub r0_hi: Option<f64>,
    #[arg(long)]
    pub v: Option<f64>,
    #[arg(long)]
    pub v_max: Option<f64>,
    #[arg(long)]
    pub v_steps: Option<usize>,

    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub out_csv: Option<PathBuf>,
    #[arg(long)]
    pub out_shape: Option<PathBuf>,
    #[arg(long)]
    pub out_myosin: Option<PathBuf>,
}

macro_rules! overlay {
    ($hi:expr, $lo:expr, $($f:ident),*) => {
        Settings { $($f: $hi.$f.clone().or_else(|| $lo.$f.clone())),* }
    };
}

impl Settings {
    pub fn from_file(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    /// Keys set in `self` win over those in `base`.
    pub fn over(&self, base: &Settings) -> Settings {
        overlay!(
            self, base, zeta, gamma, k_e, p_h, area_ref, target_m0, r, n_radial, n_modes, tw_radial, tw_theta,
            tw_shape, newton_tol, max_iter, fd_step, tw_fd_step, w2_step, delta_policy, delta, delta_floor,
            subspace, r_min, r_max, r_points, r0_lo, r0_hi, v, v_max, v_steps, out, out_csv, out_shape, out_myosin
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DeltaPolicy {
    /// Half the smallest modulus above `floor` in the `V = 0` spectrum.
    AtRest { floor: f64 },
    Fixed(f64),
}

/// Fully resolved configuration.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub params: ModelParams,
    pub radius: Option<f64>,
    pub n_radial: usize,
    pub n_modes: usize,
    pub tw: TwControls,
    pub fd_step: f64,
    pub w2_step: f64,
    pub delta: DeltaPolicy,
    pub subspace: Subspace,
    pub r_range: Option<(f64, f64, usize)>,
    pub r0_bracket: Option<(f64, f64)>,
    pub v: Option<f64>,
    pub v_max: Option<f64>,
    pub v_steps: usize,
    pub out: Option<PathBuf>,
    pub out_csv: Option<PathBuf>,
    pub out_shape: Option<PathBuf>,
    pub out_myosin: Option<PathBuf>,
}

fn need(v: Option<f64>, key: &str) -> Result<f64, String> {
    v.ok_or_else(|| format!("missing parameter `{key}`"))
}

fn params(s: &Settings) -> Result<ModelParams, String> {
    let zeta = need(s.zeta, "zeta")?;
    let gamma = need(s.gamma, "gamma")?;
    let k_e = need(s.k_e, "k_e")?;
    let p = match s.target_m0 {
        Some(m0) => {
            if s.p_h.is_some() || s.area_ref.is_some() {
                return Err("give either target_m0 and R, or p_h and area_ref, not both".into());
            }
            ModelParams::calibrated(zeta, gamma, k_e, m0, need(s.r, "R")?)
        }
        None => ModelParams::new(zeta, gamma, k_e, need(s.p_h, "p_h")?, need(s.area_ref, "area_ref")?),
    };
    p.map_err(|e| e.to_string())
}

impl RunConfig {
    pub fn resolve(s: &Settings) -> Result<Self, String> {
        let params = params(s)?;
        let defaults = TwControls::default();
        let tw_theta = s.tw_theta.unwrap_or(defaults.n_theta);
        let tw = TwControls {
            n_radial: s.tw_radial.unwrap_or(defaults.n_radial),
            n_theta: tw_theta,
            n_shape: s.tw_shape.unwrap_or((tw_theta / 2).saturating_sub(1)),
            newton_tol: s.newton_tol.unwrap_or(defaults.newton_tol),
            max_iter: s.max_iter.unwrap_or(defaults.max_iter),
            fd_step: s.tw_fd_step.unwrap_or(defaults.fd_step),
        };
        tw.validate().map_err(|e| e.to_string())?;
        let delta = match s.delta_policy.as_deref().unwrap_or("at_rest") {
            "at_rest" => DeltaPolicy::AtRest { floor: s.delta_floor.unwrap_or(1e-3) },
            "fixed" => DeltaPolicy::Fixed(need(s.delta, "delta")?),
            other => return Err(format!("delta_policy must be `at_rest` or `fixed`, got `{other}`")),
        };
        let subspace = match s.subspace.as_deref().unwrap_or("even") {
            "even" => Subspace::Even,
            "odd" => Subspace::Odd,
            "full" => Subspace::Full,
            other => return Err(format!("subspace must be even, odd or full, got `{other}`")),
        };
        let r_range = match (s.r_min, s.r_max) {
            (Some(a), Some(b)) if a > 0.0 && b > a => Some((a, b, s.r_points.unwrap_or(20))),
            (None, None) => None,
            _ => return Err("need 0 < r_min < r_max".into()),
        };
        let r0_bracket = match (s.r0_lo, s.r0_hi) {
            (Some(a), Some(b)) if b > a => Some((a, b)),
            (None, None) => None,
            _ => return Err("need r0_lo < r0_hi".into()),
        };
        let fd_step = s.fd_step.unwrap_or(1e-4);
        let w2_step = s.w2_step.unwrap_or(1e-4);
        let v_steps = s.v_steps.unwrap_or(16);
        if !(fd_step > 0.0 && w2_step > 0.0) || v_steps == 0 {
            return Err("fd_step, w2_step and v_steps must be positive".into());
        }
        if r_range.is_some_and(|(_, _, n)| n < 2) {
            return Err("r_points must be at least 2".into());
        }
        Ok(RunConfig {
            params,
            radius: s.r,
            n_radial: s.n_radial.unwrap_or(DEFAULT_N_RADIAL),
            n_modes: s.n_modes.unwrap_or(DEFAULT_N_MODES),
            tw,
            fd_step,
            w2_step,
            delta,
            subspace,
            r_range,
            r0_bracket,
            v: s.v,
            v_max: s.v_max,
            v_steps,
            out: s.out.clone(),
            out_csv: s.out_csv.clone(),
            out_shape: s.out_shape.clone(),
            out_myosin: s.out_myosin.clone(),
        })
    }
}
