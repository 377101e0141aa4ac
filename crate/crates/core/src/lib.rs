//! Exact tools for the classical, quantum and variable Lovász Local Lemma.
//!
//! The crate evaluates multivariate independence polynomials, decides membership
//! in Shearer's bound, solves tree recursions for the boundary, builds explicit
//! frustration-free Hamiltonian instances that attain the bound, computes the
//! probability-transfer lower bounds on the variable-LLL gap, and checks
//! properties of discrete event systems.

pub mod error;
pub mod events;
pub mod gap;
pub mod graph;
pub mod linalg;
pub mod qlll;
pub mod rational;
pub mod shearer;
pub mod tree;

pub use error::{LllError, Result};
pub use graph::{DependencyGraph, InteractionGraph};
pub use rational::Rational;
pub use shearer::ShearerVerdict;
