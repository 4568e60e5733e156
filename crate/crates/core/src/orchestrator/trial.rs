//! The closed loop: observe, plan, optimize, execute.

use std::io::Write;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::statistics::Statistics;

use crate::aip::{observe_gripper, observe_planar, parallel_act_sel, Observation, PlanList, Thresholds};
use crate::controller::{m3p2i_iteration, ControllerState, Diagnostics};
use crate::cost::{ori_metric, ContactMode, CostContext, CostSpec, Entity};
use crate::error::{Error, Result};
use crate::model::seeded_rng;
use crate::world::{Disturbance, WorldState};

use super::config::{Mode, Scenario};
use super::interface::plan_interface;

/// RNG stream for the start jitter; noise streams never reach it.
const JITTER_STREAM: u64 = u64::MAX;

pub fn observe(world: &WorldState, thresholds: &Thresholds) -> Vec<Observation> {
    match world {
        WorldState::Planar(w) => observe_planar(w, thresholds),
        WorldState::Gripper(w) => observe_gripper(w, thresholds),
    }
}

fn keep(mode: Mode, cost_key: &str) -> bool {
    match mode {
        Mode::Multimodal => true,
        Mode::Push => cost_key != "pull",
        Mode::Pull => cost_key != "push",
    }
}

pub fn filter_plans(plans: PlanList, mode: Mode) -> PlanList {
    PlanList {
        entries: plans.entries.into_iter().filter(|e| keep(mode, &e.cost_key)).collect(),
    }
}

/// One line of the NDJSON trace.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TraceRecord {
    pub tick: u64,
    pub time: f64,
    pub planner_tick: bool,
    pub robot: [f64; 3],
    pub object: [f64; 3],
    pub goal: [f64; 3],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub object_yaw: Option<f64>,
    pub attached: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gripper_opening: Option<f64>,
    /// Observed after the step.
    pub observations: Vec<Observation>,
    pub plan_list: Vec<String>,
    /// Full action sequence behind each plan-list entry.
    pub plans: Vec<Vec<String>>,
    pub specs: Vec<String>,
    pub command: Vec<f64>,
    /// Stage cost of each active spec after the step.
    pub costs: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<Diagnostics>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub disturbances: Vec<Disturbance>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrialSummary {
    pub seed: u64,
    pub success: bool,
    pub timed_out: bool,
    pub final_position_error: f64,
    pub final_orientation_error: f64,
    /// Time the final success streak began.
    pub completion_time: Option<f64>,
    pub ticks: u64,
}

#[derive(Clone, Debug, Default)]
pub struct TrialOptions {
    pub trace: bool,
    /// Pace ticks to wall-clock time.
    pub realtime: bool,
}

#[derive(Clone, Debug)]
pub struct TrialOutcome {
    pub summary: TrialSummary,
    pub trace: Vec<TraceRecord>,
}

fn arr(v: nalgebra::Vector3<f64>) -> [f64; 3] {
    [v.x, v.y, v.z]
}

fn jitter_start(world: &mut WorldState, seed: u64, half_width: f64) {
    if half_width <= 0.0 {
        return;
    }
    let mut rng = seeded_rng(seed, JITTER_STREAM);
    match world {
        WorldState::Planar(w) => {
            w.robot.position.x += rng.random_range(-half_width..=half_width);
            w.robot.position.y += rng.random_range(-half_width..=half_width);
        }
        WorldState::Gripper(w) => {
            for i in 0..3 {
                w.ee_position[i] += rng.random_range(-half_width..=half_width);
            }
        }
    }
}

/// Whether the desired state holds in `observations`, and for the gripper
/// that the fingers have let go.
fn success_now(scenario: &Scenario, world: &WorldState, observations: &[Observation]) -> bool {
    let desired_hold = scenario.desired.iter().all(|c| {
        let name = &scenario.domain.factors[c.factor].name;
        observations.iter().any(|o| &o.factor == name && o.value == c.value)
    });
    let released = match world {
        WorldState::Gripper(w) => w.gripper_open(),
        WorldState::Planar(_) => true,
    };
    desired_hold && released
}

fn final_errors(world: &WorldState) -> (f64, f64) {
    let p = (world.position(Entity::Goal).unwrap() - world.position(Entity::Object).unwrap()).norm();
    let o = ori_metric(&world.basis(Entity::Object).unwrap(), &world.basis(Entity::Goal).unwrap());
    (p, o)
}

/// Real suction engages when suction plans hold most of the global weight.
fn apply_suction(world: &mut WorldState, specs: &[CostSpec], diagnostics: Option<&Diagnostics>) {
    let WorldState::Planar(w) = world else {
        return;
    };
    let mass: f64 = match diagnostics {
        Some(d) => specs
            .iter()
            .zip(&d.plans)
            .filter(|(s, _)| s.contact == ContactMode::Suction)
            .map(|(_, p)| p.weight_mass)
            .sum(),
        None => 0.0,
    };
    w.set_suction(mass > 0.5);
}

/// Runs one trial of `scenario` with the given seed and plan filter.
pub fn run_trial(scenario: &Scenario, seed: u64, mode: Mode, options: &TrialOptions) -> Result<TrialOutcome> {
    let cfg_s = &scenario.config;
    let mut cfg = cfg_s.controller.clone();
    cfg.seed = seed;
    let mut world = cfg_s.build_world();
    jitter_start(&mut world, seed, cfg_s.start_jitter);

    let mut beliefs = scenario.domain.initial_beliefs();
    let mut ctrl = ControllerState::new(&cfg);
    let ratio = cfg_s.tick_ratio();
    let max_ticks = cfg_s.max_ticks();
    let dt = 1.0 / cfg_s.controller_rate;
    let last_disturbance = cfg_s.disturbances.last().map(|d| d.time).unwrap_or(f64::NEG_INFINITY);

    let mut next_disturbance = 0;
    let mut plans = PlanList::default();
    let mut specs: Vec<CostSpec> = Vec::new();
    let mut streak = 0usize;
    let mut streak_start = 0.0;
    let mut trace = Vec::new();
    let wall_start = Instant::now();
    let mut success = false;
    let mut ticks = 0;

    for tick in 0..max_ticks {
        let time = tick as f64 * dt;
        let mut fired = Vec::new();
        while next_disturbance < cfg_s.disturbances.len() && cfg_s.disturbances[next_disturbance].time <= time + 1e-9 {
            let event = &cfg_s.disturbances[next_disturbance].event;
            world.apply_disturbance(event)?;
            fired.push(event.clone());
            next_disturbance += 1;
        }

        let planner_tick = tick % ratio == 0;
        if planner_tick {
            let obs = observe(&world, &cfg_s.thresholds);
            beliefs.update_all(&obs, cfg_s.lambda)?;
            plans = filter_plans(parallel_act_sel(&beliefs, &scenario.desired, &scenario.domain.actions), mode);
            specs = if plans.is_empty() {
                Vec::new()
            } else {
                plan_interface(&plans, &cfg_s.weights, &cfg_s.grasp_psi, &world)?
            };
        }

        let (command, diagnostics) = if specs.is_empty() {
            ctrl.idle()?;
            (vec![0.0; world.control_dim()], None)
        } else {
            let out = m3p2i_iteration(&mut ctrl, &world, &specs, &cfg)?;
            (out.command, Some(out.diagnostics))
        };
        apply_suction(&mut world, &specs, diagnostics.as_ref());
        world.step(&command, dt)?;
        if !world.is_finite() {
            return Err(Error::NonFinite("executed world state"));
        }
        ticks = tick + 1;

        let obs = observe(&world, &cfg_s.thresholds);
        let done_scripting = time + 1e-9 >= last_disturbance;
        if success_now(scenario, &world, &obs) && done_scripting {
            if streak == 0 {
                streak_start = time + dt;
            }
            streak += 1;
        } else {
            streak = 0;
        }

        if options.trace {
            let (object_yaw, attached, gripper_opening) = match &world {
                WorldState::Planar(w) => (Some(w.object.yaw), w.suction_attached(), None),
                WorldState::Gripper(w) => (None, w.attached().is_some(), Some(w.opening)),
            };
            trace.push(TraceRecord {
                tick,
                time: time + dt,
                planner_tick,
                robot: arr(world.robot_position()),
                object: arr(world.object_position()),
                goal: arr(world.position(Entity::Goal).unwrap()),
                object_yaw,
                attached,
                gripper_opening,
                observations: obs,
                plan_list: plans.actions(),
                plans: plans.entries.iter().map(|e| e.plan.clone()).collect(),
                specs: specs.iter().map(|s| s.label.clone()).collect(),
                costs: specs.iter().map(|s| s.evaluate(&world, &command)).collect(),
                command,
                diagnostics,
                disturbances: fired,
            });
        }

        if options.realtime {
            let due = wall_start + Duration::from_secs_f64((tick + 1) as f64 * dt);
            if let Some(wait) = due.checked_duration_since(Instant::now()) {
                std::thread::sleep(wait);
            }
        }

        if streak >= cfg_s.success_hold_ticks {
            success = true;
            break;
        }
    }

    let (final_position_error, final_orientation_error) = final_errors(&world);
    Ok(TrialOutcome {
        summary: TrialSummary {
            seed,
            success,
            timed_out: !success,
            final_position_error,
            final_orientation_error,
            completion_time: success.then_some(streak_start),
            ticks,
        },
        trace,
    })
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct Stat {
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub count: usize,
}

impl Stat {
    /// Mean and sample standard deviation, absent when `values` is empty.
    pub fn of(values: &[f64]) -> Stat {
        if values.is_empty() {
            return Stat::default();
        }
        let std = if values.len() > 1 { values.std_dev() } else { 0.0 };
        Stat {
            mean: Some(values.mean()),
            std: Some(std),
            count: values.len(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BatchSummary {
    pub scenario: String,
    pub mode: Mode,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    /// The predicate a trial must satisfy to count as a success.
    pub success_predicate: String,
    /// Over successful trials only; time-outs carry no completion time.
    pub completion_time: Stat,
    pub final_position_error: Stat,
    pub final_orientation_error: Stat,
    pub runs: Vec<TrialSummary>,
}

/// Trials with seeds `base_seed + i`, run in parallel, reported in seed order.
pub fn run_batch(scenario: &Scenario, trials: usize, base_seed: u64, mode: Mode) -> Result<BatchSummary> {
    let runs: Vec<TrialSummary> = (0..trials as u64)
        .into_par_iter()
        .map(|i| run_trial(scenario, base_seed + i, mode, &TrialOptions::default()).map(|o| o.summary))
        .collect::<Result<_>>()?;
    Ok(summarize(scenario, mode, runs))
}

pub fn success_predicate(scenario: &Scenario) -> String {
    let conds: Vec<String> = scenario
        .config
        .desired
        .iter()
        .map(|d| format!("{}={}", d.factor, d.value))
        .collect();
    let open = match scenario.config.world {
        super::config::WorldConfig::Gripper { .. } => " with the gripper open",
        super::config::WorldConfig::Planar { .. } => "",
    };
    format!(
        "observed {} for {} consecutive ticks{open}, after the last scheduled disturbance",
        conds.join(" and "),
        scenario.config.success_hold_ticks
    )
}

pub fn summarize(scenario: &Scenario, mode: Mode, runs: Vec<TrialSummary>) -> BatchSummary {
    let times: Vec<f64> = runs.iter().filter_map(|r| r.completion_time).collect();
    let pos: Vec<f64> = runs.iter().map(|r| r.final_position_error).collect();
    let ori: Vec<f64> = runs.iter().map(|r| r.final_orientation_error).collect();
    let successes = runs.iter().filter(|r| r.success).count();
    BatchSummary {
        scenario: scenario.config.name.clone(),
        mode,
        trials: runs.len(),
        successes,
        success_rate: successes as f64 / runs.len().max(1) as f64,
        success_predicate: success_predicate(scenario),
        completion_time: Stat::of(&times),
        final_position_error: Stat::of(&pos),
        final_orientation_error: Stat::of(&ori),
        runs,
    }
}

pub fn write_trace(path: &Path, records: &[TraceRecord]) -> Result<()> {
    let io = |source| Error::Io {
        path: path.display().to_string(),
        source,
    };
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
    for r in records {
        serde_json::to_writer(&mut f, r).map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e.into(),
        })?;
        f.write_all(b"\n").map_err(io)?;
    }
    f.flush().map_err(io)
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRecord>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse {
                path: path.display().to_string(),
                message: format!("line {}: {e}", i + 1),
            })
        })
        .collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub scenario: String,
    pub plans: usize,
    pub samples_per_plan: usize,
    pub horizon: usize,
    pub iterations: usize,
    pub iterations_per_second: f64,
    pub rollout_steps_per_second: f64,
}

/// Times controller iterations on the initial world with every first action
/// of the plan list active.
pub fn benchmark(scenario: &Scenario, iterations: usize) -> Result<BenchmarkReport> {
    let cfg_s = &scenario.config;
    let cfg = cfg_s.controller.clone();
    let world = cfg_s.build_world();
    let mut beliefs = scenario.domain.initial_beliefs();
    beliefs.update_all(&observe(&world, &cfg_s.thresholds), cfg_s.lambda)?;
    let plans = parallel_act_sel(&beliefs, &scenario.desired, &scenario.domain.actions);
    let specs = plan_interface(&plans, &cfg_s.weights, &cfg_s.grasp_psi, &world)?;
    let mut ctrl = ControllerState::new(&cfg);
    m3p2i_iteration(&mut ctrl, &world, &specs, &cfg)?;
    let start = Instant::now();
    for _ in 0..iterations {
        m3p2i_iteration(&mut ctrl, &world, &specs, &cfg)?;
    }
    let secs = start.elapsed().as_secs_f64().max(1e-12);
    let rate = iterations as f64 / secs;
    Ok(BenchmarkReport {
        scenario: cfg_s.name.clone(),
        plans: specs.len(),
        samples_per_plan: cfg.samples_per_plan,
        horizon: cfg.horizon,
        iterations,
        iterations_per_second: rate,
        rollout_steps_per_second: rate * (specs.len() * cfg.samples_per_plan * cfg.horizon) as f64,
    })
}
