//! Exterior calculus for G2 and split-G2 structures on flat 7-dimensional domains, and numerical
//! checks of the second variation of the Hitchin volume functionals.

pub mod error;
pub mod coflow;
pub mod exterior;
pub mod functionals;
pub mod g2structure;
pub mod linalg;
pub mod perturbations;
pub mod quadrature;
pub mod scalar;
pub mod typedecomp;

pub use error::{Error, Result};
