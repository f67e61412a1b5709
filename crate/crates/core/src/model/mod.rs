//! Exact MDP, POMDP and ground DecPOMDP representations.

mod decpomdp;
mod joint;
mod mdp;
mod pomdp;
mod space;
mod validate;

pub use decpomdp::{GroundDecPomdp, JointKey, JointKind};
pub use joint::{JointIter, JointSpace, DEFAULT_ENUMERATION_CAP};
pub use mdp::Mdp;
pub use pomdp::{belief_update, Pomdp};
pub use space::{Belief, Distribution, Range, StateSpace, PROB_TOLERANCE};
pub use validate::{validate_model, Validate, ValidationReport, Violation};

#[cfg(test)]
pub(crate) use decpomdp::tests::symmetric_pair;
