use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("eigensolver failed on {n}x{n} matrix (max |a_ij| = {max_abs:e}, finite = {finite})")]
    EigFailed { n: usize, max_abs: f64, finite: bool },
    #[error("no bifurcation in range [{lo}, {hi}]: F does not change sign")]
    NoBifurcation { lo: f64, hi: f64 },
    #[error("degenerate: {0}")]
    Degenerate(String),
    #[error("newton failed at V = {v}: residual {residual:e} after {iters} iterations")]
    NewtonFailed { v: f64, residual: f64, iters: usize },
    #[error("branch continuation failed at V = {v} (reached V = {reached})")]
    BranchFailed { v: f64, reached: f64 },
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
