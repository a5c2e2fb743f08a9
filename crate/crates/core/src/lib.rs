//! Exact computations for twisted affine Lie algebras attached to cyclic
//! covers of curves: loop algebras and their integrable modules, Sugawara
//! operators, covering data, conformal-block ranks and finite bundle models.

pub mod blocks;
pub mod cli;
pub mod config;
pub mod cover;
pub mod cyclo;
pub mod liealg;
pub mod linalg;
pub mod looprep;
pub mod sugawara;
pub mod torsorlab;

pub use cyclo::{CycNumber, Q};
pub use liealg::{build_simple, CartanType, GammaAction, Irrep, LieAlgebra, Weight};
