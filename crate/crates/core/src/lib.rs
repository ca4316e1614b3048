//! Numerical laboratory for mean-field fermion dynamics.
//!
//! One-particle density matrices on a periodic lattice are evolved under the
//! Hartree-Fock and Hartree equations in the coupled mean-field/semiclassical
//! scaling. An exact second-quantized solver on tiny lattices serves as the
//! ground truth against which the mean-field approximation is measured.
//!
//! Discretization convention: operators are plain matrices on `C^(d^ds)` with
//! the counting inner product. A continuum kernel `A(x;y)` corresponds to the
//! matrix entry `A_xy = a^ds A(x_j;y_j)` where `a` is the lattice spacing, so
//! that matrix products discretize operator composition.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod fock;
pub mod initial_data;
pub mod linalg;
pub mod meanfield;
pub mod model;
pub mod semiclassics;
pub mod snapshot;

pub use error::{Error, Result};
pub use initial_data::DensityMatrix;
pub use linalg::{CMatrix, CVector};
pub use model::{Lattice, ModelParams, Potential, PotentialSpec};
