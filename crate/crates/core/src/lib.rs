//! Solver library for the free-boundary Hele-Shaw/Keller-Segel motility model:
//! radial stationary states and their spectra, the bifurcation to traveling
//! waves, the traveling-wave branch and the stability eigenvalue along it.

pub mod bifurcation;
pub mod error;
pub mod export;
pub mod model;
pub mod numerics;
pub mod stationary_spectrum;
pub mod traveling_wave;
pub mod tw_spectrum;

pub use error::{Error, Result};
pub use faer::{c64, Mat};
