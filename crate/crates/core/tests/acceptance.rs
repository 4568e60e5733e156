//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails. Positional arguments select criteria by number.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use m3p2i::aip::{parallel_act_sel, plan_reaches, Observation};
use m3p2i::controller::{
    importance_weights, m3p2i_iteration, noise_config, shift_warm_start, update_inverse_temperature, ControllerState,
    RolloutModel, TemperatureStatus,
};
use m3p2i::cost::{ori_metric, ContactMode, CostContext, CostSpec, Entity, OrientationBasis, TermKind};
use m3p2i::halton::sample_noise;
use m3p2i::model::{noise_stream_id, seeded_rng, ControlSequence, ControllerConfig, PlanModeSlot};
use m3p2i::orchestrator::{benchmark, run_batch, run_trial, BatchSummary, Mode, Scenario, TraceRecord, TrialOptions};
use m3p2i::world::WorldState;
use nalgebra::{Matrix3, Rotation3, Vector3};
use rand::Rng;
use rayon::prelude::*;

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn traced() -> TrialOptions {
    TrialOptions {
        trace: true,
        realtime: false,
    }
}

fn mean_time(b: &BatchSummary) -> f64 {
    b.completion_time.mean.unwrap_or(f64::INFINITY)
}

fn multimodal_superiority() -> Check {
    let corner = common::scenario("corner_corner");
    let middle = common::scenario("middle_corner");
    let batch = |s: &Scenario, mode| run_batch(s, 20, s.config.seed, mode).map_err(|e| e.to_string());
    let push = batch(&corner, Mode::Push)?;
    let corner_mm = batch(&corner, Mode::Multimodal)?;
    let corner_pull = batch(&corner, Mode::Pull)?;
    let middle_mm = batch(&middle, Mode::Multimodal)?;
    let middle_pull = batch(&middle, Mode::Pull)?;
    let timeouts = push.trials - push.successes;
    let detail = format!(
        "corner push time-outs {timeouts}/20, corner multimodal {}/20 in {:.2} s vs pull {:.2} s, middle multimodal {:.2} s vs pull {:.2} s",
        corner_mm.successes,
        mean_time(&corner_mm),
        mean_time(&corner_pull),
        mean_time(&middle_mm),
        mean_time(&middle_pull)
    );
    ensure(timeouts >= 18, || detail.clone())?;
    ensure(corner_mm.successes >= 18, || detail.clone())?;
    ensure(mean_time(&corner_mm) < mean_time(&corner_pull), || detail.clone())?;
    ensure(mean_time(&middle_mm) < mean_time(&middle_pull), || detail.clone())?;
    Ok(detail)
}

fn temperature_band() -> Check {
    let cfg = ControllerConfig::default();
    let mut rng = seeded_rng(2024, 0);
    let mut capped = 0;
    for case in 0..1000 {
        let scale = 10f64.powf(rng.random_range(-2.0..4.0));
        let costs: Vec<f64> = match case % 3 {
            0 => (0..100).map(|_| rng.random_range(0.0..scale)).collect(),
            1 => (0..100).map(|_| scale * (-rng.random_range(1e-9f64..1.0).ln())).collect(),
            _ => (0..100)
                .map(|_| if rng.random_bool(0.2) { scale * 10.0 } else { 0.0 } + rng.random_range(0.0..scale))
                .collect(),
        };
        let mut slot = PlanModeSlot {
            plan_index: 0,
            mean: ControlSequence::zeros(cfg.horizon, 2),
            beta: cfg.beta_init,
            eta: 0.0,
            rho: 0.0,
            cost_spec: CostSpec::new("c", "c"),
        };
        let (_, status) = update_inverse_temperature(&mut slot, &costs, &cfg).map_err(|e| e.to_string())?;
        match status {
            TemperatureStatus::Converged => {
                ensure((5.0..=10.0).contains(&slot.eta), || format!("case {case}: eta {}", slot.eta))?
            }
            TemperatureStatus::IterationCap => capped += 1,
        }
    }
    ensure(capped == 0, || format!("{capped} non-degenerate vectors hit the pass cap"))?;

    let mut slot = PlanModeSlot {
        plan_index: 0,
        mean: ControlSequence::zeros(cfg.horizon, 2),
        beta: cfg.beta_init,
        eta: 0.0,
        rho: 0.0,
        cost_spec: CostSpec::new("c", "c"),
    };
    let (_, status) = update_inverse_temperature(&mut slot, &[3.0; 100], &cfg).map_err(|e| e.to_string())?;
    ensure(status == TemperatureStatus::IterationCap, || "equal costs converged".into())?;
    Ok("1000/1000 vectors settle with eta in [5, 10]; equal costs hit the cap".into())
}

#[derive(Clone)]
struct PointMass {
    p: [f64; 2],
    goal: [f64; 2],
}

impl CostContext for PointMass {
    fn position(&self, entity: Entity) -> Option<Vector3<f64>> {
        match entity {
            Entity::Robot => Some(Vector3::new(self.p[0], self.p[1], 0.0)),
            Entity::Goal => Some(Vector3::new(self.goal[0], self.goal[1], 0.0)),
            _ => None,
        }
    }
    fn basis(&self, _: Entity) -> Option<OrientationBasis> {
        None
    }
    fn dynamic_obstacle(&self, _: usize) -> Option<(Vector3<f64>, Vector3<f64>)> {
        None
    }
    fn dynamic_obstacle_count(&self) -> usize {
        0
    }
    fn gripper_opening(&self) -> Option<f64> {
        None
    }
    fn approach_axis(&self) -> Option<Vector3<f64>> {
        None
    }
}

impl RolloutModel for PointMass {
    fn step(&mut self, control: &[f64], dt: f64) -> m3p2i::Result<()> {
        self.p[0] += control[0] * dt;
        self.p[1] += control[1] * dt;
        Ok(())
    }
    fn model_is_finite(&self) -> bool {
        self.p.iter().all(|v| v.is_finite())
    }
}

/// Textbook single-distribution MPPI on the point mass, written out directly.
struct ClassicMppi {
    u: Vec<[f64; 2]>,
    beta: f64,
}

impl ClassicMppi {
    fn command(&mut self, cfg: &ControllerConfig, iteration: u64, p: [f64; 2], goal: [f64; 2]) -> [f64; 2] {
        let t_len = self.u.len();
        let last = self.u[t_len - 1];
        self.u.remove(0);
        self.u.push(last);

        let noise = noise_config(cfg).unwrap();
        let mut rng = seeded_rng(cfg.seed, noise_stream_id(iteration, 0));
        let samples: Vec<Vec<[f64; 2]>> = sample_noise(&noise, &mut rng, cfg.samples_per_plan)
            .iter()
            .map(|eps| (0..t_len).map(|t| [self.u[t][0] + eps.get(t, 0), self.u[t][1] + eps.get(t, 1)]).collect())
            .collect();
        let costs: Vec<f64> = samples
            .iter()
            .map(|v| {
                let mut q = p;
                let mut total = 0.0;
                let mut discount = 1.0;
                for step in v {
                    q[0] += step[0] * cfg.dt;
                    q[1] += step[1] * cfg.dt;
                    let (dx, dy) = (goal[0] - q[0], goal[1] - q[1]);
                    total += discount * (dx * dx + dy * dy).sqrt();
                    discount *= cfg.gamma;
                }
                total
            })
            .collect();

        let k = costs.len() as f64;
        let (lo, hi) = (0.05 * k, 0.10 * k);
        let rho = costs.iter().copied().fold(f64::INFINITY, f64::min);
        let mut expo = Vec::new();
        let mut eta = 0.0;
        for pass in 1..=cfg.max_temp_iters {
            expo = costs.iter().map(|s| (-(s - rho) / self.beta).exp()).collect();
            eta = expo.iter().fold(0.0, |a, b| a + b);
            if (eta >= lo && eta <= hi) || pass == cfg.max_temp_iters {
                break;
            }
            self.beta *= if eta > hi { 0.9 } else { 1.2 };
        }
        let mut mean = vec![[0.0; 2]; t_len];
        for (e, v) in expo.iter().zip(&samples) {
            let w = e / eta;
            for (m, x) in mean.iter_mut().zip(v) {
                m[0] += w * x[0];
                m[1] += w * x[1];
            }
        }
        self.u = mean;
        self.u[0]
    }
}

fn mppi_reduction() -> Check {
    let cfg = ControllerConfig {
        num_plans: 1,
        samples_per_plan: 100,
        horizon: 20,
        dt: 0.1,
        alpha_u: 1.0,
        noise_scale: vec![0.5, 0.5],
        seed: 0,
        ..ControllerConfig::default()
    };
    let goal = [0.6, 0.4];
    let spec = CostSpec::new("goto", "goto").with_term(
        TermKind::Dist {
            from: Entity::Robot,
            to: Entity::Goal,
        },
        1.0,
    );
    let mut world = PointMass { p: [0.0, 0.0], goal };
    let mut state = ControllerState::new(&cfg);
    let mut oracle = ClassicMppi {
        u: vec![[0.0; 2]; cfg.horizon],
        beta: cfg.beta_init,
    };
    let mut oracle_p = world.p;
    for it in 0..50 {
        let out = m3p2i_iteration(&mut state, &world, std::slice::from_ref(&spec), &cfg).map_err(|e| e.to_string())?;
        let expected = oracle.command(&cfg, it, oracle_p, goal);
        ensure(out.command[0].to_bits() == expected[0].to_bits() && out.command[1].to_bits() == expected[1].to_bits(), || {
            format!("iteration {it}: {:?} vs oracle {:?}", out.command, expected)
        })?;
        world.step(&out.command, cfg.dt).unwrap();
        oracle_p[0] += expected[0] * cfg.dt;
        oracle_p[1] += expected[1] * cfg.dt;
    }
    let dist = ((goal[0] - world.p[0]).powi(2) + (goal[1] - world.p[1]).powi(2)).sqrt();
    ensure(dist < 0.05, || format!("final goal distance {dist:.4}"))?;
    Ok(format!("50 iterations bit-identical to the oracle, final distance {dist:.4} m"))
}

fn random_rotation(rng: &mut impl Rng) -> Rotation3<f64> {
    loop {
        let q: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let n2: f64 = q.iter().map(|v| v * v).sum();
        if n2 > 1e-6 && n2 <= 1.0 {
            let q = nalgebra::Quaternion::new(q[0], q[1], q[2], q[3]);
            return nalgebra::UnitQuaternion::from_quaternion(q).to_rotation_matrix();
        }
    }
}

/// Signed permutation matrices with determinant one.
fn brute_force_group() -> Vec<Rotation3<f64>> {
    let mut out = Vec::new();
    for code in 0..(27 * 8) {
        let cols = [code % 3, (code / 3) % 3, (code / 9) % 3];
        if cols[0] == cols[1] || cols[1] == cols[2] || cols[0] == cols[2] {
            continue;
        }
        let signs = code / 27;
        let mut m = Matrix3::zeros();
        for row in 0..3 {
            m[(row, cols[row])] = if signs & (1 << row) != 0 { -1.0 } else { 1.0 };
        }
        if m.determinant() > 0.0 {
            out.push(Rotation3::from_matrix_unchecked(m));
        }
    }
    out
}

fn orientation_metric() -> Check {
    let group = brute_force_group();
    ensure(group.len() == 24, || format!("{} group elements", group.len()))?;
    let mut rng = seeded_rng(4, 0);
    let mut worst_zero: f64 = 0.0;
    for _ in 0..100 {
        let a = random_rotation(&mut rng);
        let base = OrientationBasis::from_rotation(&a);
        for g in &group {
            worst_zero = worst_zero.max(ori_metric(&base, &OrientationBasis::from_rotation(&(a * g))));
        }
    }
    ensure(worst_zero < 1e-9, || format!("symmetry rotation gave phi {worst_zero:e}"))?;

    let id = OrientationBasis::identity();
    let min_sep = 5f64.to_radians();
    let separation = |r: &Rotation3<f64>| group.iter().map(|g| (g.inverse() * r).angle()).fold(f64::INFINITY, f64::min);
    // A turn of exactly 5 degrees about an in-plane axis is the closest admissible pose.
    let mut rotations = vec![Rotation3::from_axis_angle(&Vector3::x_axis(), min_sep)];
    while rotations.len() < 1000 {
        let r = random_rotation(&mut rng);
        if separation(&r) >= min_sep {
            rotations.push(r);
        }
    }
    let mut least = f64::INFINITY;
    let mut least_sep = 0.0;
    let mut bound_gap = f64::INFINITY;
    for r in &rotations {
        let phi = ori_metric(&id, &OrientationBasis::from_rotation(r));
        let sep = separation(r);
        bound_gap = bound_gap.min(phi - (1.0 - sep.cos()));
        if phi < least {
            least = phi;
            least_sep = sep;
        }
    }
    ensure(bound_gap > -1e-9, || format!("phi fell below 1 - cos(separation) by {:e}", -bound_gap))?;
    ensure(least > 0.01, || {
        format!(
            "phi {least:.5} at {:.2} degrees off the group; phi >= 1 - cos(separation) is tight, so 5 degrees only guarantees {:.5}",
            least_sep.to_degrees(),
            1.0 - min_sep.cos()
        )
    })?;

    let quarter = Rotation3::from_axis_angle(&Vector3::z_axis(), std::f64::consts::FRAC_PI_4);
    let phi = ori_metric(&id, &OrientationBasis::from_rotation(&quarter));
    let err = (phi - (2.0 - 2f64.sqrt())).abs();
    ensure(err < 1e-12, || format!("45 degree case off by {err:e}"))?;
    Ok(format!("group max phi {worst_zero:.1e}, min phi off-group {least:.4}, 45 degree error {err:.1e}"))
}

fn plan_generation() -> Check {
    let d = common::domain("push_pull");
    let goal = vec![d.condition("goal", "at_goal").unwrap()];
    let b = common::observed(&d, &[("goal", 1)]);
    let list = parallel_act_sel(&b, &goal, &d.actions);
    ensure(list.actions() == ["push", "pull"], || format!("push-pull gave {:?}", list.actions()))?;
    for e in &list.entries {
        ensure(plan_reaches(&e.plan, &d.actions, &b, &goal), || format!("{:?} misses the goal", e.plan))?;
    }

    let d = common::domain("pick_place");
    let goal = vec![d.condition("placed", "placed").unwrap()];
    let b = common::observed(&d, &[("reach", 1), ("hold", 1), ("preplace", 1), ("placed", 1)]);
    let list = parallel_act_sel(&b, &goal, &d.actions);
    ensure(list.actions().first().map(String::as_str) == Some("reach"), || {
        format!("pick-place gave {:?}", list.actions())
    })?;
    for e in &list.entries {
        ensure(plan_reaches(&e.plan, &d.actions, &b, &goal), || format!("{:?} misses the goal", e.plan))?;
    }
    Ok(format!("push-pull [push, pull]; pick-place {:?}", list.entries[0].plan))
}

fn observation(r: &TraceRecord, factor: &str) -> Option<usize> {
    r.observations.iter().find(|o| o.factor == factor).map(|o| o.value)
}

fn reactive_recovery() -> Check {
    let s = common::scenario("teleport");
    let out = run_trial(&s, s.config.seed, Mode::Multimodal, &traced()).map_err(|e| e.to_string())?;
    ensure(out.summary.success, || "teleport trial timed out".into())?;
    let mut flips = Vec::new();
    for v in out.trace.iter().filter_map(|r| observation(r, "goal")) {
        if flips.last() != Some(&v) {
            flips.push(v);
        }
    }
    let pattern = flips.windows(3).any(|w| w == [0, 1, 0]);
    ensure(pattern, || format!("goal observation sequence {flips:?}"))?;
    let teleport_time = out.summary.completion_time.unwrap();

    let s = common::scenario("gripper_theft");
    let out = run_trial(&s, s.config.seed, Mode::Multimodal, &traced()).map_err(|e| e.to_string())?;
    let theft = out
        .trace
        .iter()
        .position(|r| !r.disturbances.is_empty())
        .ok_or("theft never fired")?;
    ensure(out.trace[theft - 1].attached, || "cube was not held when stolen".into())?;
    let next = out.trace[theft..]
        .iter()
        .find(|r| r.planner_tick)
        .ok_or("no planner tick after the theft")?;
    ensure(next.plans.iter().any(|p| p.iter().any(|a| a == "pick")), || {
        format!("planner tick after the theft emitted {:?}", next.plans)
    })?;
    ensure(next.tick - out.trace[theft].tick <= s.config.tick_ratio(), || "replanning took more than one planner period".into())?;
    ensure(out.summary.success, || "theft trial timed out".into())?;
    Ok(format!(
        "teleport solved at {teleport_time:.2} s (goal {flips:?}); theft replanned {:?} at {:.2} s, solved at {:.2} s",
        next.plans[0],
        next.time,
        out.summary.completion_time.unwrap()
    ))
}

/// Share of the reach weight mass on `psi` over final-approach ticks: the
/// reach phase with the hand within 0.1 m of the cube.
fn approach_share(s: &Scenario, seeds: std::ops::Range<u64>, psi: &str) -> Result<(f64, usize), String> {
    let label = format!("reach(psi={psi})");
    let mut on = 0.0;
    let mut total = 0.0;
    let mut ticks = 0;
    for seed in seeds {
        let out = run_trial(s, seed, Mode::Multimodal, &traced()).map_err(|e| e.to_string())?;
        for r in &out.trace {
            if r.plan_list != ["reach"] {
                continue;
            }
            let gap = (Vector3::from(r.robot) - Vector3::from(r.object)).norm();
            let Some(d) = (gap < 0.1).then_some(r.diagnostics.as_ref()).flatten() else {
                continue;
            };
            ticks += 1;
            for p in d.plans.iter().filter(|p| p.label.starts_with("reach(")) {
                total += p.weight_mass;
                if p.label == label {
                    on += p.weight_mass;
                }
            }
        }
    }
    ensure(ticks > 0, || "no final-approach ticks".into())?;
    Ok((on / total, ticks))
}

fn grasp_selection() -> Check {
    let table = common::scenario("gripper_table");
    let shelf = common::scenario("gripper_shelf");
    let (top, n_top) = approach_share(&table, 0..5, "1")?;
    let (side, n_side) = approach_share(&shelf, 0..5, "0")?;
    let detail = format!("table top-grasp share {top:.3} over {n_top} ticks, shelf side-grasp share {side:.3} over {n_side} ticks");
    ensure(top > 0.8 && side > 0.8, || detail.clone())?;
    Ok(detail)
}

fn performance() -> Check {
    let s = common::scenario("benchmark_planar");
    let report = benchmark(&s, 200).map_err(|e| e.to_string())?;
    let detail = format!(
        "{:.1} iterations/s with N = {}, K = {}, T = {} on {} threads",
        report.iterations_per_second,
        report.plans,
        report.samples_per_plan,
        report.horizon,
        rayon::current_num_threads()
    );
    ensure(report.plans == 2 && report.samples_per_plan == 100 && report.horizon == 20, || detail.clone())?;
    ensure(report.iterations_per_second >= 25.0, || detail.clone())?;
    Ok(detail)
}

fn trace_text(s: &Scenario, threads: usize) -> String {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    let out = pool.install(|| run_trial(s, 5, Mode::Multimodal, &traced()).unwrap());
    out.trace.iter().map(|r| serde_json::to_string(r).unwrap()).collect::<Vec<_>>().join("\n")
}

fn property_suites() -> Check {
    let mut rng = seeded_rng(9, 0);
    for _ in 0..1000 {
        let k = rng.random_range(1..200);
        let costs: Vec<f64> = (0..k).map(|_| rng.random_range(-100.0..100.0)).collect();
        let beta = rng.random_range(0.01..50.0);
        let w = importance_weights(&costs, beta).unwrap();
        let sum: f64 = w.weights.iter().sum();
        ensure((sum - 1.0).abs() < 1e-9 && w.weights.iter().all(|x| *x >= 0.0), || format!("weights sum to {sum}"))?;
        let shift = rng.random_range(-50.0..50.0);
        let moved: Vec<f64> = costs.iter().map(|c| c + shift).collect();
        let w2 = importance_weights(&moved, beta).unwrap();
        let gap = w.weights.iter().zip(&w2.weights).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        ensure(gap < 1e-9, || format!("cost offset moved a weight by {gap:e}"))?;
    }

    for _ in 0..200 {
        let t = rng.random_range(2..30);
        let rows: Vec<Vec<f64>> = (0..t).map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();
        let shifted = shift_warm_start(&ControlSequence::from_rows(&rows).unwrap()).unwrap();
        for i in 0..t {
            let src = &rows[(i + 1).min(t - 1)];
            ensure(shifted.row(i) == src.as_slice(), || "warm start is not [b, c, c]".into())?;
        }
    }

    let d = common::domain("pick_place");
    for _ in 0..200 {
        let mut b = d.initial_beliefs();
        for _ in 0..20 {
            let f = &d.factors[rng.random_range(0..d.factors.len())];
            let v = rng.random_range(0..f.values.len());
            b.update(&Observation::new(f.name.clone(), v), rng.random_range(0.51..=1.0)).unwrap();
        }
        for f in &b.factors {
            let sum: f64 = f.belief.iter().sum();
            ensure((sum - 1.0).abs() < 1e-9, || format!("belief over {} sums to {sum}", f.name))?;
        }
    }

    let world = common::scenario("corner_corner").config.build_world();
    let before = world.snapshot();
    let seqs: Vec<Vec<f64>> = (0..64).map(|_| (0..40).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let roll = |seq: &Vec<f64>| {
        let mut w: WorldState = before.restore().unwrap();
        w.begin_rollout(ContactMode::Suction);
        for u in seq.chunks(2) {
            w.step(u, 0.04).unwrap();
            w.rollout_contact(ContactMode::Suction);
        }
        w.snapshot().as_bytes().to_vec()
    };
    let parallel: Vec<Vec<u8>> = seqs.par_iter().map(roll).collect();
    let serial: Vec<Vec<u8>> = seqs.iter().map(roll).collect();
    ensure(parallel == serial, || "parallel rollouts differ from serial ones".into())?;
    ensure(world.snapshot().as_bytes() == before.as_bytes(), || "rollouts mutated the source".into())?;

    for name in ["middle_corner", "gripper_table"] {
        let mut s = common::scenario(name);
        s.config.timeout = 3.0;
        let one = trace_text(&s, 1);
        ensure(one == trace_text(&s, 4), || format!("{name}: trace depends on thread count"))?;
        ensure(one == trace_text(&s, 1), || format!("{name}: rerun differs"))?;
    }
    Ok("weights, offsets, warm start, beliefs, snapshots and thread-count determinism hold".into())
}

fn main() {
    let criteria: [(u32, &str, fn() -> Check); 9] = [
        (1, "multi-modal superiority", multimodal_superiority),
        (2, "temperature band", temperature_band),
        (3, "MPPI reduction oracle", mppi_reduction),
        (4, "orientation metric", orientation_metric),
        (5, "alternative plans", plan_generation),
        (6, "reactive recovery", reactive_recovery),
        (7, "grasp selection", grasp_selection),
        (8, "performance budget", performance),
        (9, "property suites", property_suites),
    ];
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (n, name, check) in criteria {
        if !selected.is_empty() && !selected.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {n} ({name}): PASS [{secs:.1} s] {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n} ({name}): FAIL [{secs:.1} s] {detail}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
