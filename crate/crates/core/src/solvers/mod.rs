//! Exhaustive desk-scale solvers.
//!
//! Plan values follow `U_p(s) = R(s) + γ Σ_s' P(s'|s,a) Σ_o P(o|s') U_{p.o}(s')`
//! with depth-0 plans worth 0, so a horizon-`h` value sums the rewards of the
//! first `h` states.

mod decpomdp;
mod lifted;
mod mdp;
mod plan;
mod pomdp;
mod prune;

pub use decpomdp::{decpomdp_exhaustive, decpomdp_exhaustive_with, DecSolution};
pub use lifted::{lifted_exhaustive, lifted_exhaustive_with};
pub use mdp::{
    backup, greedy_policy, mdp_value_iteration, mdp_value_iteration_capped, Policy, UtilityTable,
};
pub use plan::{
    ConditionalPlan, DepthStats, JointPolicy, PlanAssignment, PlanValueVector, SolveStats,
    SolverCaps, DEFAULT_JOINT_CAP, DEFAULT_PLAN_CAP,
};
pub use pomdp::{pomdp_plan_iteration, pomdp_plan_iteration_with, PomdpSolution};
pub use prune::{dominance_prune, dominance_prune_indices, DOMINANCE_TOLERANCE};
