//! Small dense symmetric-matrix utilities, a Jacobi eigensolver and a
//! fixed-step RK4 integrator.

mod eigen;
mod matrix;
mod ode;

pub use eigen::{sym_eig, sym_eig_min, SymEigen};
pub use matrix::{projected_pseudoinverse, SymMatrix};
pub use ode::{integrate_scalar_ode, SampledCurve};
