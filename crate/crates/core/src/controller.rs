//! Multi-modal MPPI: per-plan importance sampling with temperature tuning,
//! blended into one global control sequence.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost::{ContactMode, CostContext, CostSpec, Entity};
use crate::error::{Error, Result};
use crate::halton::{sample_noise, SplineNoiseConfig};
use crate::model::{
    discounted_cost, noise_stream_id, seeded_rng, ControlSequence, ControllerConfig, EtaBounds, PlanModeSlot,
    RolloutBatch,
};
use crate::world::WorldState;

/// Forward model the controller rolls out.
pub trait RolloutModel: CostContext + Clone + Send + Sync {
    fn step(&mut self, control: &[f64], dt: f64) -> Result<()>;
    fn saturate_control(&self, _control: &mut [f64]) {}
    fn begin_rollout(&mut self, _contact: ContactMode) {}
    fn rollout_contact(&mut self, _contact: ContactMode) {}
    fn model_is_finite(&self) -> bool;
    /// Point recorded in rollout trajectories.
    fn keypoint(&self) -> [f64; 3] {
        let p = self
            .position(Entity::Robot)
            .or_else(|| self.position(Entity::EndEffector))
            .unwrap_or_default();
        [p.x, p.y, p.z]
    }
}

impl RolloutModel for WorldState {
    fn step(&mut self, control: &[f64], dt: f64) -> Result<()> {
        WorldState::step(self, control, dt)
    }

    fn saturate_control(&self, control: &mut [f64]) {
        WorldState::saturate_control(self, control)
    }

    fn begin_rollout(&mut self, contact: ContactMode) {
        WorldState::begin_rollout(self, contact)
    }

    fn rollout_contact(&mut self, contact: ContactMode) {
        WorldState::rollout_contact(self, contact)
    }

    fn model_is_finite(&self) -> bool {
        self.is_finite()
    }
}

/// Normalized importance weights with their normalizer and baseline.
#[derive(Clone, Debug, PartialEq)]
pub struct Weights {
    pub weights: Vec<f64>,
    pub eta: f64,
    pub rho: f64,
}

/// `w_k = exp(-(S_k - rho) / beta) / eta`, `rho = min S`.
pub fn importance_weights(costs: &[f64], beta: f64) -> Result<Weights> {
    if costs.is_empty() {
        return Err(Error::Empty("cost list"));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::config(format!("inverse temperature {beta} must be positive")));
    }
    if costs.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFinite("sample cost"));
    }
    let rho = costs.iter().copied().fold(f64::INFINITY, f64::min);
    let unnormalized: Vec<f64> = costs.iter().map(|s| (-(s - rho) / beta).exp()).collect();
    let eta: f64 = unnormalized.iter().sum();
    let weights = unnormalized.iter().map(|e| e / eta).collect();
    Ok(Weights { weights, eta, rho })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemperatureStatus {
    Converged,
    /// Pass limit reached; the returned values are from the last pass.
    IterationCap,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Temperature {
    pub beta: f64,
    pub weights: Weights,
    pub passes: usize,
    pub status: TemperatureStatus,
}

/// Adjusts `beta` until the normalizer lies in `bounds`: `eta` above the band
/// scales `beta` by 0.9, below it by 1.2.
pub fn tune_temperature(beta: f64, costs: &[f64], bounds: EtaBounds, max_passes: usize) -> Result<Temperature> {
    let mut beta = beta;
    let max_passes = max_passes.max(1);
    for pass in 1..=max_passes {
        let weights = importance_weights(costs, beta)?;
        if bounds.contains(weights.eta) || pass == max_passes {
            let status = if bounds.contains(weights.eta) {
                TemperatureStatus::Converged
            } else {
                TemperatureStatus::IterationCap
            };
            return Ok(Temperature {
                beta,
                weights,
                passes: pass,
                status,
            });
        }
        if weights.eta > bounds.upper {
            beta *= 0.9;
        } else {
            beta *= 1.2;
        }
    }
    unreachable!("loop returns on its last pass")
}

/// Runs the temperature loop for one slot and stores `(beta, eta, rho)`.
pub fn update_inverse_temperature(
    slot: &mut PlanModeSlot,
    costs: &[f64],
    cfg: &ControllerConfig,
) -> Result<(Temperature, TemperatureStatus)> {
    let t = tune_temperature(slot.beta, costs, cfg.eta_bounds(), cfg.max_temp_iters)?;
    slot.beta = t.beta;
    slot.eta = t.weights.eta;
    slot.rho = t.weights.rho;
    let status = t.status;
    Ok((t, status))
}

/// `sum_k w_k V_k`.
pub fn weighted_mean(weights: &[f64], sequences: &[ControlSequence]) -> Result<ControlSequence> {
    let first = sequences.first().ok_or(Error::Empty("sequence list"))?;
    if weights.len() != sequences.len() {
        return Err(Error::Shape(format!(
            "{} weights for {} sequences",
            weights.len(),
            sequences.len()
        )));
    }
    if sequences.iter().any(|s| !s.same_shape(first)) {
        return Err(Error::Shape("sequences differ in shape".into()));
    }
    let mut out = ControlSequence::zeros(first.horizon(), first.dim());
    for (w, seq) in weights.iter().zip(sequences) {
        for (o, v) in out.as_mut_slice().iter_mut().zip(seq.as_slice()) {
            *o += w * v;
        }
    }
    Ok(out)
}

/// New plan mean from its normalized sample weights.
pub fn per_plan_mean(slot: &mut PlanModeSlot, weights: &[f64], sequences: &[ControlSequence]) -> Result<ControlSequence> {
    let mean = weighted_mean(weights, sequences)?;
    if !mean.same_shape(&slot.mean) {
        return Err(Error::Shape("plan mean shape changed".into()));
    }
    slot.mean = mean.clone();
    Ok(mean)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GlobalBlend {
    pub control: ControlSequence,
    pub temperature: Temperature,
}

/// `u_t = (1 - alpha) prev_u_t + alpha sum_k w~_k v_{t,k}` with the global
/// weights tuned over all `N*K` samples.
pub fn blend_global(
    prev_u: &ControlSequence,
    sequences: &[ControlSequence],
    costs: &[f64],
    global_beta: f64,
    alpha_u: f64,
    bounds: EtaBounds,
    max_passes: usize,
) -> Result<GlobalBlend> {
    if costs.len() != sequences.len() {
        return Err(Error::Shape(format!("{} costs for {} sequences", costs.len(), sequences.len())));
    }
    let temperature = tune_temperature(global_beta, costs, bounds, max_passes)?;
    let mean = weighted_mean(&temperature.weights.weights, sequences)?;
    if !mean.same_shape(prev_u) {
        return Err(Error::Shape("global sequence shape mismatch".into()));
    }
    let mut control = prev_u.clone();
    for (u, m) in control.as_mut_slice().iter_mut().zip(mean.as_slice()) {
        *u = (1.0 - alpha_u) * *u + alpha_u * m;
    }
    Ok(GlobalBlend { control, temperature })
}

/// Drops the first row and repeats the last one.
pub fn shift_warm_start(u: &ControlSequence) -> Result<ControlSequence> {
    let t = u.horizon();
    if t < 2 {
        return Err(Error::Shape("warm start needs a horizon of at least 2".into()));
    }
    let d = u.dim();
    let mut out = u.clone();
    let data = out.as_mut_slice();
    data.copy_within(d.., 0);
    let last = u.row(t - 1).to_vec();
    out.row_mut(t - 1).copy_from_slice(&last);
    Ok(out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ControllerState {
    pub slots: Vec<PlanModeSlot>,
    pub global_mean: ControlSequence,
    pub global_beta: f64,
    pub iteration: u64,
}

impl ControllerState {
    pub fn new(cfg: &ControllerConfig) -> Self {
        ControllerState {
            slots: Vec::new(),
            global_mean: ControlSequence::zeros(cfg.horizon, cfg.control_dim()),
            global_beta: cfg.beta_init,
            iteration: 0,
        }
    }

    /// Matches slots to `specs` by label. Unmatched specs start from the
    /// global sequence; slots without a spec are dropped.
    pub fn sync_slots(&mut self, specs: &[CostSpec], cfg: &ControllerConfig) {
        let mut old = std::mem::take(&mut self.slots);
        for (i, spec) in specs.iter().enumerate() {
            let slot = match old.iter().position(|s| s.cost_spec.label == spec.label) {
                Some(j) => {
                    let mut s = old.remove(j);
                    s.cost_spec = spec.clone();
                    s.plan_index = i;
                    s
                }
                None => PlanModeSlot {
                    plan_index: i,
                    mean: self.global_mean.clone(),
                    beta: cfg.beta_init,
                    eta: 0.0,
                    rho: 0.0,
                    cost_spec: spec.clone(),
                },
            };
            self.slots.push(slot);
        }
    }

    /// Shifts the global sequence and forgets the plan slots.
    pub fn idle(&mut self) -> Result<()> {
        self.slots.clear();
        self.global_mean = shift_warm_start(&self.global_mean)?;
        self.iteration += 1;
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PlanDiagnostics {
    pub label: String,
    pub rho: f64,
    pub eta: f64,
    pub beta: f64,
    pub best_cost: f64,
    /// Share of the global weights on this plan's samples.
    pub weight_mass: f64,
    pub temperature: TemperatureStatus,
    pub penalized: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Diagnostics {
    pub iteration: u64,
    pub plans: Vec<PlanDiagnostics>,
    pub global_beta: f64,
    pub global_eta: f64,
    pub global_rho: f64,
    pub global_temperature: TemperatureStatus,
}

#[derive(Clone, Debug)]
pub struct IterationOutput {
    pub command: Vec<f64>,
    pub diagnostics: Diagnostics,
    pub batch: RolloutBatch,
    /// Global weights of every sample.
    pub global_weights: Vec<f64>,
}

pub fn noise_config(cfg: &ControllerConfig) -> Result<SplineNoiseConfig> {
    SplineNoiseConfig::new(cfg.num_knots, cfg.spline_degree, cfg.noise_scale.clone(), cfg.horizon)
}

struct Rollout {
    step_costs: Vec<f64>,
    total: f64,
    trajectory: Vec<[f64; 3]>,
    penalized: bool,
}

fn rollout<M: RolloutModel>(world: &M, seq: &ControlSequence, spec: &CostSpec, cfg: &ControllerConfig) -> Rollout {
    let mut w = world.clone();
    w.begin_rollout(spec.contact);
    let t_len = seq.horizon();
    let mut step_costs = Vec::with_capacity(t_len);
    let mut trajectory = Vec::with_capacity(t_len);
    let mut failed = false;
    for t in 0..t_len {
        let v = seq.row(t);
        if w.step(v, cfg.dt).is_err() || !w.model_is_finite() {
            failed = true;
            break;
        }
        w.rollout_contact(spec.contact);
        let c = spec.evaluate(&w, v);
        if !c.is_finite() {
            failed = true;
            break;
        }
        step_costs.push(c);
        trajectory.push(w.keypoint());
    }
    if failed {
        let mut row = vec![0.0; t_len];
        row[0] = cfg.rollout_penalty;
        trajectory.resize(t_len, world.keypoint());
        return Rollout {
            step_costs: row,
            total: cfg.rollout_penalty,
            trajectory,
            penalized: true,
        };
    }
    let total = discounted_cost(&step_costs, cfg.gamma).unwrap_or(cfg.rollout_penalty);
    Rollout {
        step_costs,
        total,
        trajectory,
        penalized: false,
    }
}

/// Shifts each plan mean, samples and rolls out `K` sequences per plan, updates
/// every plan mean and the blended global sequence, and returns its first row.
pub fn m3p2i_iteration<M: RolloutModel>(
    state: &mut ControllerState,
    world: &M,
    specs: &[CostSpec],
    cfg: &ControllerConfig,
) -> Result<IterationOutput> {
    if specs.is_empty() {
        return Err(Error::NoExecutablePlan);
    }
    let noise = noise_config(cfg)?;
    if state.global_mean.dim() != noise.dim() || state.global_mean.horizon() != cfg.horizon {
        return Err(Error::Shape("controller state does not match the configuration".into()));
    }
    state.sync_slots(specs, cfg);
    let n = state.slots.len();
    let k = cfg.samples_per_plan;

    let mut sequences = Vec::with_capacity(n * k);
    for (i, slot) in state.slots.iter_mut().enumerate() {
        slot.mean = shift_warm_start(&slot.mean)?;
        let mut rng = seeded_rng(cfg.seed, noise_stream_id(state.iteration, i));
        for eps in sample_noise(&noise, &mut rng, k) {
            let mut v = slot.mean.clone();
            let dim = v.dim();
            for (x, e) in v.as_mut_slice().iter_mut().zip(eps.as_slice()) {
                *x += e;
            }
            for row in v.as_mut_slice().chunks_mut(dim) {
                world.saturate_control(row);
            }
            sequences.push(v);
        }
    }

    let rollouts: Vec<Rollout> = (0..n * k)
        .into_par_iter()
        .map(|s| rollout(world, &sequences[s], &state.slots[s / k].cost_spec, cfg))
        .collect();
    let total_costs: Vec<f64> = rollouts.iter().map(|r| r.total).collect();

    let mut plans = Vec::with_capacity(n);
    for i in 0..n {
        let range = i * k..(i + 1) * k;
        let slot = &mut state.slots[i];
        let (t, status) = update_inverse_temperature(slot, &total_costs[range.clone()], cfg)?;
        per_plan_mean(slot, &t.weights.weights, &sequences[range.clone()])?;
        plans.push(PlanDiagnostics {
            label: slot.cost_spec.label.clone(),
            rho: slot.rho,
            eta: slot.eta,
            beta: slot.beta,
            best_cost: t.weights.rho,
            weight_mass: 0.0,
            temperature: status,
            penalized: rollouts[range].iter().filter(|r| r.penalized).count(),
        });
    }

    let bounds = cfg.eta_bounds().scaled(n as f64);
    let blend = blend_global(
        &state.global_mean,
        &sequences,
        &total_costs,
        state.global_beta,
        cfg.alpha_u,
        bounds,
        cfg.max_temp_iters,
    )?;
    let global_weights = blend.temperature.weights.weights.clone();
    for (i, p) in plans.iter_mut().enumerate() {
        p.weight_mass = global_weights[i * k..(i + 1) * k].iter().sum();
    }
    state.global_beta = blend.temperature.beta;
    let command = blend.control.row(0).to_vec();
    state.global_mean = shift_warm_start(&blend.control)?;

    let diagnostics = Diagnostics {
        iteration: state.iteration,
        plans,
        global_beta: blend.temperature.beta,
        global_eta: blend.temperature.weights.eta,
        global_rho: blend.temperature.weights.rho,
        global_temperature: blend.temperature.status,
    };
    state.iteration += 1;

    let mut step_costs = Vec::with_capacity(n * k * cfg.horizon);
    let mut trajectories = Vec::with_capacity(n * k);
    let mut penalized = Vec::new();
    for (s, r) in rollouts.into_iter().enumerate() {
        step_costs.extend_from_slice(&r.step_costs);
        trajectories.push(r.trajectory);
        if r.penalized {
            penalized.push(s);
        }
    }
    Ok(IterationOutput {
        command,
        diagnostics,
        batch: RolloutBatch {
            samples_per_plan: k,
            sequences,
            trajectories,
            step_costs,
            total_costs,
            penalized,
        },
        global_weights,
    })
}
