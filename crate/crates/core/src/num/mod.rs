//! Precision-generic numerical substrate: scalar arithmetic contracts,
//! double-double extended precision, complex numbers, ODE integrators,
//! Gaussian quadrature rules, dense linear algebra and an unsymmetric
//! eigensolver, power series and Padé approximants.

pub mod cplx;
pub mod dd;
pub mod eig;
pub mod gauss;
pub mod linalg;
pub mod ode;
pub mod real;
pub mod series;

pub use cplx::Cplx;
pub use dd::Dd;
pub use real::Real;
