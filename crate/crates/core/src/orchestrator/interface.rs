//! Translates symbolic plan lists into cost specs for the controller.

use crate::aip::{multi_modal_reach_expansion, PlanList};
use crate::cost::{
    compose_pick, compose_place, compose_preplace, compose_pull, compose_push, compose_reach, CostContext, CostSpec,
    CostWeights,
};
use crate::error::{Error, Result};

use super::config::Scenario;

pub const COST_KEYS: [&str; 6] = ["push", "pull", "reach", "pick", "preplace", "place"];

/// Cost spec for one action, bound to the entities of `ctx`.
pub fn spec_for(action: &str, cost_key: &str, weights: &CostWeights, ctx: &dyn CostContext) -> Result<CostSpec> {
    let spec = match cost_key {
        "push" => compose_push(weights, ctx)?,
        "pull" => compose_pull(weights, ctx)?,
        "reach" => compose_reach(weights, 1.0),
        "pick" => compose_pick(weights),
        "preplace" => compose_preplace(weights),
        "place" => compose_place(weights),
        _ => {
            return Err(Error::UnknownCostKey {
                action: action.to_string(),
                key: cost_key.to_string(),
            })
        }
    };
    spec.validate(ctx)?;
    Ok(spec)
}

/// One spec per plan-list entry, with reach expanded over `psis`.
pub fn plan_interface(plans: &PlanList, weights: &CostWeights, psis: &[f64], ctx: &dyn CostContext) -> Result<Vec<CostSpec>> {
    if plans.is_empty() {
        return Err(Error::NoExecutablePlan);
    }
    let mut specs = Vec::new();
    for entry in &plans.entries {
        let spec = spec_for(&entry.action, &entry.cost_key, weights, ctx)?;
        specs.extend(multi_modal_reach_expansion(spec, weights, psis));
    }
    Ok(specs)
}

/// Every action of the scenario's domain resolves to a spec on its world.
pub fn check_cost_keys(scenario: &Scenario) -> Result<()> {
    let world = scenario.config.build_world();
    for a in &scenario.domain.actions {
        spec_for(&a.name, &a.cost_key, &scenario.config.weights, &world)?;
    }
    Ok(())
}
