/// A depth-`d` policy tree: an action now, then one depth-`d-1` subplan per
/// observation. Depth-1 plans have no subplans.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ConditionalPlan {
    pub action: usize,
    /// Indexed by observation; empty at depth 1.
    pub subplans: Vec<ConditionalPlan>,
}

impl ConditionalPlan {
    pub fn leaf(action: usize) -> Self {
        ConditionalPlan {
            action,
            subplans: Vec::new(),
        }
    }

    pub fn depth(&self) -> usize {
        1 + self.subplans.first().map_or(0, ConditionalPlan::depth)
    }

    /// Subplan after observing `obs`.
    pub fn after(&self, obs: usize) -> &ConditionalPlan {
        &self.subplans[obs]
    }

    /// Action taken after the observation sequence `history`.
    pub fn action_after(&self, history: &[usize]) -> usize {
        history.iter().fold(self, |p, &o| p.after(o)).action
    }

    /// Every subplan has depth `d - 1` and there is one per observation.
    pub fn is_well_formed(&self, observations: usize) -> bool {
        fn check(p: &ConditionalPlan, d: usize, o: usize) -> bool {
            if d == 1 {
                p.subplans.is_empty()
            } else {
                p.subplans.len() == o && p.subplans.iter().all(|c| check(c, d - 1, o))
            }
        }
        check(self, self.depth(), observations)
    }
}

/// A plan with its value `U_p(s)` at every state.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanValueVector {
    pub plan: ConditionalPlan,
    pub alpha: Vec<f64>,
}

impl PlanValueVector {
    pub fn value_at(&self, belief: &[f64]) -> f64 {
        belief.iter().zip(&self.alpha).map(|(b, a)| b * a).sum()
    }
}

/// A plan run by `count` agents of one group.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanAssignment {
    pub plan: ConditionalPlan,
    pub count: u64,
}

/// One plan list per agent (ground) or per partition (lifted). A ground
/// component holds exactly one plan with count 1; a lifted component is the
/// histogram of plans run by the partition's members.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPolicy {
    pub horizon: usize,
    pub components: Vec<Vec<PlanAssignment>>,
}

impl JointPolicy {
    /// The plan of each agent, for ground policies.
    pub fn agent_plans(&self) -> Vec<&ConditionalPlan> {
        self.components
            .iter()
            .flat_map(|c| {
                c.iter()
                    .flat_map(|a| std::iter::repeat_n(&a.plan, a.count as usize))
            })
            .collect()
    }
}

/// Plans of one agent or partition at one depth, stored by reference to the
/// surviving plans one depth down.
#[derive(Debug, Clone)]
pub(crate) struct PlanNode {
    pub action: usize,
    pub children: Vec<usize>,
}

/// Surviving plans per depth: `levels[d - 1]` holds the depth-`d` plans.
#[derive(Debug, Clone, Default)]
pub(crate) struct PlanForest {
    pub levels: Vec<Vec<PlanNode>>,
}

impl PlanForest {
    pub fn materialize(&self, depth: usize, index: usize) -> ConditionalPlan {
        let node = &self.levels[depth - 1][index];
        ConditionalPlan {
            action: node.action,
            subplans: node
                .children
                .iter()
                .map(|&c| self.materialize(depth - 1, c))
                .collect(),
        }
    }
}

/// Enumeration caps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolverCaps {
    /// Candidate plans generated per agent or partition at one depth.
    pub plans: u64,
    /// Joint policy (or histogram) values computed at one depth, counted per state.
    pub joint: u64,
}

pub const DEFAULT_PLAN_CAP: u64 = 1_000_000;
pub const DEFAULT_JOINT_CAP: u64 = 10_000_000;

impl Default for SolverCaps {
    fn default() -> Self {
        SolverCaps {
            plans: DEFAULT_PLAN_CAP,
            joint: DEFAULT_JOINT_CAP,
        }
    }
}

/// Plans generated and kept at one depth, per agent or partition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepthStats {
    pub depth: usize,
    pub generated: Vec<u64>,
    pub surviving: Vec<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SolveStats {
    pub depths: Vec<DepthStats>,
    /// Joint policies (ground) or histogram tuples (lifted) valued at the
    /// final depth.
    pub joint_policies_evaluated: u64,
}
