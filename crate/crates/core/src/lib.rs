//! Finite-dimensional workbench for CAR algebras, quasi-free states and their
//! purifications, Bogoliubov automorphisms and perturbations of the shift
//! semigroup on `L^2(0, ∞)`.

pub mod bogoliubov;
pub mod error;
pub mod fock;
pub mod hardyshift;
pub mod modular;
pub mod opalg;
pub mod pipeline;
pub mod quasifree;
pub mod random;

pub use error::{Error, Result};
pub use fock::{build_space, FockSpace};
pub use opalg::{hs_norm, operator_norm, AntilinearOperator, Operator, Vector, C64};
