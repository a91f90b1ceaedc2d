//! Exact computations with toric adelic divisors.
//!
//! The crate works in the cocharacter space `N_R = Q^n` of a split torus and
//! its dual `M_R`. Fans and cones are exact rational objects, boundary
//! divisors are encoded by their supporting functions, and limits of model
//! divisors are Cauchy sequences of piecewise-linear conical functions under
//! a boundary norm.
//!
//! Heavy loops run through [`exec::Exec`], which uses rayon when the default
//! `parallel` feature is enabled and a plain iterator otherwise.

pub mod adelic;
pub mod berkovich;
pub mod conical;
pub mod divisor;
pub mod error;
pub mod intersect;
pub mod exec;
pub mod height;
pub mod lattice;
pub mod linalg;
pub mod rational;

pub use error::{Error, Result};
pub use exec::Exec;
pub use lattice::{LatticeVector, RationalCone, Fan};
pub use rational::Rat;
