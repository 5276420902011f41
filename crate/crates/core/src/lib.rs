//! Mixed finite element solver for 2D linear elastodynamics in
//! velocity–stress form with weakly imposed stress symmetry.
//!
//! The stress is approximated row-wise in BDM_k, velocity and rotation by
//! discontinuous P_{k-1} fields. The semidiscrete system is advanced with
//! Crank–Nicolson or the 2-stage RadauIIA method.

pub mod assembly;
pub mod dynamics;
pub mod error;
pub mod exec;
pub mod mesh;
pub mod quadrature;
pub mod sparse;
pub mod spaces;
pub mod statics;
pub mod verification;

pub use error::{Error, Result};
