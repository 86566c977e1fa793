//! Landau-de Gennes Q-tensor model on 3D grids in the unit-norm regime.
//!
//! The crate minimizes two discrete energy functionals for tensor fields
//! `Q: Omega -> S0` (traceless symmetric 3x3 matrices) under Dirichlet
//! boundary conditions:
//!
//! * the sphere-constrained energy `E_lambda(Q) = int 1/2 |grad Q|^2 + lambda W(Q)`
//!   over unit-norm fields, and
//! * the penalized energy `F_{lambda,mu} = E_lambda + mu/4 int (1 - |Q|^2)^2`
//!   over unconstrained fields,
//!
//! and analyzes the minimizers: pointwise signed biaxiality, isosurface
//! extraction with per-component genus, eigenvector liftings and boundary
//! degree, interior energy monotonicity diagnostics, and the explicit
//! second-variation instability tests for the radial hedgehog.
//!
//! Modules follow the pipeline: [`qtensor`] (pointwise algebra),
//! [`domain`] (grids and boundary data), [`energy`] (functionals and
//! residuals), [`minimize`] (descent drivers), [`hedgehog`] (radial
//! profiles and stability), [`topology`] (level sets, genus, degree),
//! [`io`] (field, mesh, CSV and JSON formats).

pub mod domain;
pub mod energy;
pub mod hedgehog;
pub mod io;
pub mod minimize;
pub mod qtensor;
pub mod topology;
pub mod util;
