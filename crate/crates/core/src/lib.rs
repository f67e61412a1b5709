//! Ground and lifted decentralized POMDPs.
//!
//! The crate covers the exact model representations ([`model`]), counting
//! variables over indistinguishable agents ([`counting`]), the lifted/ground
//! compilers ([`lifting`]), exhaustive desk-scale solvers ([`solvers`]),
//! worst-case size analysis ([`size`]) and a generated nanoscale medical
//! scenario ([`nano`]). [`format`] reads and writes the model interchange
//! documents.

pub mod counting;
mod equivalence;
mod error;
pub mod format;
pub mod lifting;
pub mod model;
pub mod nano;
pub mod random;
pub mod size;
pub mod solvers;

pub use equivalence::{
    lift_symmetric, verify_equivalence, verify_equivalence_with, EquivalenceReport,
    EQUIVALENCE_TOLERANCE,
};
pub use error::{Error, Result};
