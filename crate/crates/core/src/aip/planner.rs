//! Backward-chaining action selection and alternative-plan generation.

use serde::{Deserialize, Serialize};

use super::belief::BeliefState;
use super::domain::{ActionTemplate, Condition};

/// Longest plan (and deepest subgoal recursion) the search explores.
pub const DEPTH_CAP: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectStatus {
    Selected,
    /// The desired state already holds.
    Satisfied,
    NoPlan,
    /// No plan found and the search was cut at [`DEPTH_CAP`].
    DepthCap,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoredPlan {
    /// Indices into the action slice given to [`act_sel`].
    pub actions: Vec<usize>,
    pub score: f64,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActSelection {
    pub status: SelectStatus,
    /// Every valid plan found, in discovery order, with posterior weights.
    pub plans: Vec<ScoredPlan>,
    /// Index of the most likely plan.
    pub selected: Option<usize>,
}

impl ActSelection {
    pub fn first_action(&self) -> Option<usize> {
        self.selected.and_then(|z| self.plans[z].actions.first().copied())
    }

    pub fn selected_plan(&self) -> Option<&ScoredPlan> {
        self.selected.map(|z| &self.plans[z])
    }
}

fn holds(state: &[usize], c: &Condition) -> bool {
    state.get(c.factor) == Some(&c.value)
}

fn apply(action: &ActionTemplate, state: &mut [usize]) {
    for c in &action.postconditions {
        state[c.factor] = c.value;
    }
}

/// Runs `plan` symbolically from `state`, returning the final state if every
/// precondition holds when its action executes.
pub fn simulate(plan: &[&ActionTemplate], state: &[usize]) -> Option<Vec<usize>> {
    let mut s = state.to_vec();
    for a in plan {
        if !a.preconditions.iter().all(|c| holds(&s, c)) {
            return None;
        }
        apply(a, &mut s);
    }
    Some(s)
}

/// Log-weight of a plan: minus its length, minus one per precondition whose
/// required value is currently believed false with probability above 0.5.
pub fn plan_score(plan: &[&ActionTemplate], beliefs: &BeliefState) -> f64 {
    let mut penalty = 0usize;
    for a in plan {
        for c in &a.preconditions {
            let p_true = beliefs.factors.get(c.factor).map(|f| f.probability(c.value)).unwrap_or(0.0);
            if 1.0 - p_true > 0.5 {
                penalty += 1;
            }
        }
    }
    -(plan.len() as f64) - penalty as f64
}

struct Search<'a> {
    actions: &'a [ActionTemplate],
    capped: bool,
}

impl Search<'_> {
    /// All action sequences of length <= `budget` reaching every `goal` from
    /// `state`, paired with the state they end in.
    fn achieve(&mut self, goals: &[Condition], state: &[usize], budget: usize, stack: &mut Vec<usize>) -> Vec<(Vec<usize>, Vec<usize>)> {
        let Some(goal) = goals.iter().find(|g| !holds(state, g)) else {
            return vec![(Vec::new(), state.to_vec())];
        };
        let mut out = Vec::new();
        for (ai, action) in self.actions.iter().enumerate() {
            if !action.postconditions.contains(goal) || stack.contains(&ai) {
                continue;
            }
            if budget == 0 {
                self.capped = true;
                continue;
            }
            stack.push(ai);
            let before = self.achieve(&action.preconditions, state, budget - 1, stack);
            stack.pop();
            for (prefix, mid) in before {
                let mut after = mid;
                apply(action, &mut after);
                let used = prefix.len() + 1;
                if used > budget {
                    continue;
                }
                for (suffix, end) in self.achieve(goals, &after, budget - used, stack) {
                    let mut plan = prefix.clone();
                    plan.push(ai);
                    plan.extend(suffix);
                    out.push((plan, end));
                }
            }
        }
        out
    }
}

/// Builds plans backward from `desired` and returns the first action of the
/// most likely one. Ties go to the plan found first, which follows the
/// declaration order of `actions`.
pub fn act_sel(beliefs: &BeliefState, desired: &[Condition], actions: &[ActionTemplate]) -> ActSelection {
    let state = beliefs.logical_state();
    if desired.iter().all(|c| holds(&state, c)) {
        return ActSelection {
            status: SelectStatus::Satisfied,
            plans: Vec::new(),
            selected: None,
        };
    }
    let mut search = Search { actions, capped: false };
    let found = search.achieve(desired, &state, DEPTH_CAP, &mut Vec::new());

    let mut plans: Vec<ScoredPlan> = Vec::new();
    for (plan, _) in found {
        if plans.iter().any(|p| p.actions == plan) {
            continue;
        }
        let templates: Vec<&ActionTemplate> = plan.iter().map(|&i| &actions[i]).collect();
        let valid = simulate(&templates, &state)
            .map(|end| desired.iter().all(|c| holds(&end, c)))
            .unwrap_or(false);
        if valid {
            let score = plan_score(&templates, beliefs);
            plans.push(ScoredPlan {
                actions: plan,
                score,
                weight: 0.0,
            });
        }
    }
    if plans.is_empty() {
        return ActSelection {
            status: if search.capped { SelectStatus::DepthCap } else { SelectStatus::NoPlan },
            plans,
            selected: None,
        };
    }
    let top = plans.iter().map(|p| p.score).fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = plans.iter().map(|p| (p.score - top).exp()).sum();
    for p in plans.iter_mut() {
        p.weight = (p.score - top).exp() / total;
    }
    let mut selected = 0;
    for (i, p) in plans.iter().enumerate() {
        if p.weight > plans[selected].weight {
            selected = i;
        }
    }
    ActSelection {
        status: SelectStatus::Selected,
        plans,
        selected: Some(selected),
    }
}

/// One alternative found by [`parallel_act_sel`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanEntry {
    /// First action of the plan.
    pub action: String,
    pub cost_key: String,
    /// Names of every action in the plan.
    pub plan: Vec<String>,
    /// Posterior weight of the plan within its selection round.
    pub weight: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PlanList {
    pub entries: Vec<PlanEntry>,
}

impl PlanList {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn actions(&self) -> Vec<String> {
        self.entries.iter().map(|e| e.action.clone()).collect()
    }
}

/// Repeats [`act_sel`], removing each returned first action from the available
/// set, until no action is returned.
pub fn parallel_act_sel(beliefs: &BeliefState, desired: &[Condition], actions: &[ActionTemplate]) -> PlanList {
    let mut available: Vec<ActionTemplate> = actions.to_vec();
    let mut list = PlanList::default();
    loop {
        let sel = act_sel(beliefs, desired, &available);
        let (Some(first), Some(plan)) = (sel.first_action(), sel.selected_plan()) else {
            break;
        };
        list.entries.push(PlanEntry {
            action: available[first].name.clone(),
            cost_key: available[first].cost_key.clone(),
            plan: plan.actions.iter().map(|&i| available[i].name.clone()).collect(),
            weight: plan.weight,
        });
        available.remove(first);
    }
    list
}

/// Whether the named plan, run from the current logical state, reaches `desired`.
pub fn plan_reaches(plan: &[String], actions: &[ActionTemplate], beliefs: &BeliefState, desired: &[Condition]) -> bool {
    let templates: Option<Vec<&ActionTemplate>> = plan.iter().map(|n| actions.iter().find(|a| &a.name == n)).collect();
    let Some(templates) = templates else {
        return false;
    };
    simulate(&templates, &beliefs.logical_state())
        .map(|end| desired.iter().all(|c| holds(&end, c)))
        .unwrap_or(false)
}
