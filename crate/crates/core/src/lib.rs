//! Gap statistics of Kronecker sequences through homogeneous dynamics.
//!
//! The central objects are point sets `{ m . alpha mod 1 : m in Z^d ∩ D }`
//! and their gap lengths, the Slater return times of the same rotations, and
//! the unimodular lattices that encode both.

pub mod circleset;
pub mod diophantine;
pub mod error;
pub mod geometry;
pub mod latticecore;
mod lll;
pub mod ratsum;
pub mod reals;
pub mod slater;
pub mod steinhaus;

pub use error::{Budget, Error, Result};
pub use reals::{ExactReal, Q};
