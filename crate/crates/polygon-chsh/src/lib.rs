//! CHSH optima for regular polygon theories.
//!
//! The crate builds the regular `n`-gon state spaces, represents bipartite
//! states of the maximal tensor product as 3x3 maps, computes CHSH values,
//! optimizes them exactly with a dense simplex solver, evaluates the closed
//! forms for the optimal values, and checks LP optimality certificates for
//! maximally entangled states.

pub mod analytic;
pub mod bipartite;
pub mod chsh;
pub mod cli;
pub mod lp;
pub mod search;
pub mod theory;

pub use bipartite::BipartiteState;
pub use theory::{build_theory, Theory, Vec3};
