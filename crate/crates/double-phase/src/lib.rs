//! Discrete solver and verification suite for the double-phase Dirichlet
//! eigenvalue problem
//!
//! ```text
//! -alpha Lap_p(u) - beta Lap_q(u) = lambda |u|^(q-2) u,   u = 0 on the boundary,
//! ```
//!
//! on an interval or rectangle. The crate provides the finite-difference
//! energies and nonlinear operators ([`energy`]), Rayleigh-quotient
//! computation of the principal r-Laplacian eigenpair ([`eigen`]),
//! Nehari-manifold and coercive minimization of the energy functional
//! ([`nehari`]), spectrum scans over `lambda` and the `beta -> 1`
//! discontinuity exhibit ([`spectrum`]), and a CLI front end ([`cli`]).

pub mod cli;
pub mod eigen;
pub mod energy;
pub mod error;
pub mod mesh;
pub mod nehari;
pub mod selftest;
pub mod spectrum;

pub use error::{Error, Result};
