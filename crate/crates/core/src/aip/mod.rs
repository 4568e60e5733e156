//! Active-inference style symbolic planner: factored beliefs, observers and
//! backward-chaining plan generation.

pub mod belief;
pub mod domain;
pub mod observers;
pub mod planner;

pub use belief::{BeliefState, Observation, StateFactor};
pub use domain::{ActionTemplate, Condition, Domain, FactorDef};
pub use observers::{observe_gripper, observe_planar, Thresholds};
pub use planner::{
    act_sel, parallel_act_sel, plan_reaches, plan_score, simulate, ActSelection, PlanEntry, PlanList, ScoredPlan,
    SelectStatus, DEPTH_CAP,
};

use crate::cost::{compose_reach, CostSpec, CostWeights};

/// Expands a reach spec into one spec per grasp tilt in `psis`; other specs
/// pass through unchanged.
pub fn multi_modal_reach_expansion(spec: CostSpec, weights: &CostWeights, psis: &[f64]) -> Vec<CostSpec> {
    if spec.action != "reach" {
        return vec![spec];
    }
    psis.iter().map(|&psi| compose_reach(weights, psi)).collect()
}
