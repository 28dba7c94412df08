//! Special functions, quadrature, collocation and the dense eigensolver.

pub mod bessel;
pub mod collocation;
pub mod eig;
pub mod quadrature;

pub use bessel::{bessel_i, bessel_j, bessel_j_prime, neumann_laplacian_eigs};
pub use collocation::{cheb, even_radial_weights, CollocationGrid};
pub use eig::{dense_eig, dense_eigenvalues, eig_residual, EigenDecomposition};
pub use quadrature::{gauss_legendre, interpolatory_weights, QuadratureRule};
