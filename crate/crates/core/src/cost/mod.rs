//! Cost terms for pushing, pulling and pick/place, composed into weighted specs.

mod orientation;

pub use orientation::{cube_rotation_group, ori_metric, OrientationBasis};

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A term value plus whether its geometry was degenerate or its input clamped.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TermValue {
    pub value: f64,
    pub flagged: bool,
}

impl TermValue {
    fn ok(value: f64) -> Self {
        TermValue {
            value,
            flagged: false,
        }
    }

    fn flagged(value: f64) -> Self {
        TermValue {
            value,
            flagged: true,
        }
    }
}

/// `max(x, 0)`.
pub fn hinge(x: f64) -> f64 {
    x.max(0.0)
}

pub fn dist_cost(a: &Vector3<f64>, b: &Vector3<f64>, weight: f64) -> f64 {
    weight * (b - a).norm()
}

/// Cosine of the angle at `object` between the robot and goal directions.
fn cos_at(robot: &Vector3<f64>, object: &Vector3<f64>, goal: &Vector3<f64>) -> Option<f64> {
    let a = robot - object;
    let b = goal - object;
    let denom = a.norm() * b.norm();
    if denom <= f64::EPSILON {
        None
    } else {
        Some((a.dot(&b) / denom).clamp(-1.0, 1.0))
    }
}

/// Zero when the object lies between robot and goal.
pub fn align_push_cost(robot: &Vector3<f64>, object: &Vector3<f64>, goal: &Vector3<f64>, weight: f64) -> TermValue {
    match cos_at(robot, object, goal) {
        Some(c) => TermValue::ok(weight * hinge(c)),
        None => TermValue::flagged(0.0),
    }
}

/// Zero when the robot lies between object and goal.
pub fn align_pull_cost(robot: &Vector3<f64>, object: &Vector3<f64>, goal: &Vector3<f64>, weight: f64) -> TermValue {
    match cos_at(robot, object, goal) {
        Some(c) => TermValue::ok(weight * hinge(-c)),
        None => TermValue::flagged(0.0),
    }
}

/// Penalizes a candidate robot velocity that points toward the object.
pub fn act_pull_cost(robot: &Vector3<f64>, object: &Vector3<f64>, velocity: &Vector3<f64>, weight: f64) -> TermValue {
    let to_object = object - robot;
    let d = to_object.norm();
    if d <= f64::EPSILON {
        return TermValue::flagged(0.0);
    }
    let speed = velocity.norm();
    if speed <= f64::EPSILON {
        return TermValue::ok(0.0);
    }
    TermValue::ok(weight * hinge(to_object.dot(velocity) / (d * speed)))
}

/// `weight * exp(-|p_R - p_pred|)` with `p_pred = p_D + v_D * steps * dt`.
pub fn dyn_obs_cost(
    robot: &Vector3<f64>,
    obstacle: &Vector3<f64>,
    obstacle_velocity: &Vector3<f64>,
    steps_ahead: usize,
    dt: f64,
    weight: f64,
) -> f64 {
    let predicted = obstacle + obstacle_velocity * (steps_ahead as f64 * dt);
    weight * (-(robot - predicted).norm()).exp()
}

/// `| |z_ee . z_O| / (|z_ee| |z_O|) - psi |`, the grasp tilt residual.
pub fn tilt_residual(z_ee: &Vector3<f64>, z_object: &Vector3<f64>, psi: f64) -> f64 {
    let denom = z_ee.norm() * z_object.norm();
    if denom <= f64::EPSILON {
        return psi.abs();
    }
    ((z_ee.dot(z_object).abs() / denom) - psi).abs()
}

pub fn reach_cost(
    p_ee: &Vector3<f64>,
    z_ee: &Vector3<f64>,
    p_object: &Vector3<f64>,
    z_object: &Vector3<f64>,
    psi: f64,
    w_reach: f64,
    w_tilt: f64,
) -> f64 {
    w_reach * (p_ee - p_object).norm() + w_tilt * tilt_residual(z_ee, z_object, psi)
}

fn clamp_opening(l: f64) -> TermValue {
    if (0.0..=1.0).contains(&l) {
        TermValue::ok(l)
    } else {
        TermValue::flagged(l.clamp(0.0, 1.0))
    }
}

/// Minimized by closing the gripper.
pub fn pick_cost(l_gripper: f64, weight: f64) -> TermValue {
    let l = clamp_opening(l_gripper);
    TermValue {
        value: weight * l.value,
        flagged: l.flagged,
    }
}

/// Minimized by opening the gripper.
pub fn place_cost(l_gripper: f64, weight: f64) -> TermValue {
    let l = clamp_opening(l_gripper);
    TermValue {
        value: weight * (1.0 - l.value),
        flagged: l.flagged,
    }
}

/// Distance plus symmetric orientation residual between two poses.
pub fn preplace_cost(
    p_object: &Vector3<f64>,
    basis_object: &OrientationBasis,
    p_target: &Vector3<f64>,
    basis_target: &OrientationBasis,
    w_dist: f64,
    w_ori: f64,
) -> f64 {
    dist_cost(p_object, p_target, w_dist) + w_ori * ori_metric(basis_object, basis_target)
}

/// Named things a cost term can bind to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Entity {
    Robot,
    Object,
    Goal,
    DynamicObstacle(usize),
    EndEffector,
    Cube(usize),
    /// Pre-place frame above the place target.
    PrePlace,
    /// Place frame directly on top of the target cube.
    Place,
}

/// Read access to the quantities cost terms depend on.
pub trait CostContext {
    fn position(&self, entity: Entity) -> Option<Vector3<f64>>;
    fn basis(&self, entity: Entity) -> Option<OrientationBasis>;
    /// Position and velocity of a dynamic obstacle.
    fn dynamic_obstacle(&self, id: usize) -> Option<(Vector3<f64>, Vector3<f64>)>;
    fn dynamic_obstacle_count(&self) -> usize;
    /// Normalized commanded finger separation, 0 = closed.
    fn gripper_opening(&self) -> Option<f64>;
    /// Approach axis of the end effector.
    fn approach_axis(&self) -> Option<Vector3<f64>>;
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TermKind {
    Dist { from: Entity, to: Entity },
    Ori { from: Entity, to: Entity },
    AlignPush { robot: Entity, object: Entity, goal: Entity },
    AlignPull { robot: Entity, object: Entity, goal: Entity },
    /// Uses the planar velocity command of the evaluated step.
    ActPull { robot: Entity, object: Entity },
    DynObs { robot: Entity, obstacle: usize },
    Tilt { object: Entity, psi: f64 },
    Pick,
    Place,
    /// Keeps the fingers open, `weight * (1 - l)`.
    Open,
}

impl TermKind {
    pub fn label(&self) -> &'static str {
        match self {
            TermKind::Dist { .. } => "dist",
            TermKind::Ori { .. } => "ori",
            TermKind::AlignPush { .. } => "align_push",
            TermKind::AlignPull { .. } => "align_pull",
            TermKind::ActPull { .. } => "act_pull",
            TermKind::DynObs { .. } => "dyn_obs",
            TermKind::Tilt { .. } => "tilt",
            TermKind::Pick => "pick",
            TermKind::Place => "place",
            TermKind::Open => "open",
        }
    }

    fn entities(&self) -> Vec<Entity> {
        match *self {
            TermKind::Dist { from, to } | TermKind::Ori { from, to } => vec![from, to],
            TermKind::AlignPush { robot, object, goal } | TermKind::AlignPull { robot, object, goal } => {
                vec![robot, object, goal]
            }
            TermKind::ActPull { robot, object } => vec![robot, object],
            TermKind::DynObs { robot, obstacle } => vec![robot, Entity::DynamicObstacle(obstacle)],
            TermKind::Tilt { object, .. } => vec![Entity::EndEffector, object],
            TermKind::Pick | TermKind::Place | TermKind::Open => vec![Entity::EndEffector],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostTerm {
    pub kind: TermKind,
    pub weight: f64,
}

/// How a rollout treats the suction attachment of the planar world.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContactMode {
    /// Suction released during the rollout.
    #[default]
    Free,
    /// Suction engages whenever the robot comes within range.
    Suction,
}

/// A weighted sum of cost terms bound to world entities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostSpec {
    /// Display name, e.g. `push` or `reach(psi=1)`.
    pub label: String,
    /// Symbolic action this spec came from.
    pub action: String,
    pub terms: Vec<CostTerm>,
    #[serde(default)]
    pub contact: ContactMode,
}

fn missing(e: Entity) -> Error {
    Error::UnknownTarget(format!("{e:?}"))
}

impl CostSpec {
    pub fn new(label: impl Into<String>, action: impl Into<String>) -> Self {
        CostSpec {
            label: label.into(),
            action: action.into(),
            terms: Vec::new(),
            contact: ContactMode::Free,
        }
    }

    pub fn with_term(mut self, kind: TermKind, weight: f64) -> Self {
        self.terms.push(CostTerm { kind, weight });
        self
    }

    /// Checks every bound entity exists in `ctx`.
    pub fn validate(&self, ctx: &dyn CostContext) -> Result<()> {
        for term in &self.terms {
            if !(term.weight >= 0.0 && term.weight.is_finite()) {
                return Err(Error::config(format!("term {} has invalid weight", term.kind.label())));
            }
            for e in term.kind.entities() {
                let present = match e {
                    Entity::DynamicObstacle(id) => ctx.dynamic_obstacle(id).is_some(),
                    Entity::EndEffector => ctx.position(e).is_some() && ctx.approach_axis().is_some(),
                    _ => ctx.position(e).is_some(),
                };
                if !present {
                    return Err(missing(e));
                }
            }
        }
        Ok(())
    }

    /// Total cost of the state in `ctx` under the applied `control`.
    pub fn evaluate(&self, ctx: &dyn CostContext, control: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| evaluate_term(t, ctx, control).value)
            .sum()
    }

    /// Per-term values, in declaration order.
    pub fn breakdown(&self, ctx: &dyn CostContext, control: &[f64]) -> Vec<(String, f64)> {
        self.terms
            .iter()
            .map(|t| (t.kind.label().to_string(), evaluate_term(t, ctx, control).value))
            .collect()
    }

    pub fn term_value(&self, label: &str, ctx: &dyn CostContext, control: &[f64]) -> Option<f64> {
        self.terms
            .iter()
            .find(|t| t.kind.label() == label)
            .map(|t| evaluate_term(t, ctx, control).value)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for t in &mut out.terms {
            t.weight *= factor;
        }
        out
    }
}

/// Unresolvable entities contribute zero; [`CostSpec::validate`] catches them up front.
pub fn evaluate_term(term: &CostTerm, ctx: &dyn CostContext, control: &[f64]) -> TermValue {
    let w = term.weight;
    let pos = |e: Entity| ctx.position(e);
    let value = match term.kind {
        TermKind::Dist { from, to } => match (pos(from), pos(to)) {
            (Some(a), Some(b)) => TermValue::ok(dist_cost(&a, &b, w)),
            _ => TermValue::flagged(0.0),
        },
        TermKind::Ori { from, to } => match (ctx.basis(from), ctx.basis(to)) {
            (Some(a), Some(b)) => TermValue::ok(w * ori_metric(&a, &b)),
            _ => TermValue::flagged(0.0),
        },
        TermKind::AlignPush { robot, object, goal } => match (pos(robot), pos(object), pos(goal)) {
            (Some(r), Some(o), Some(g)) => align_push_cost(&r, &o, &g, w),
            _ => TermValue::flagged(0.0),
        },
        TermKind::AlignPull { robot, object, goal } => match (pos(robot), pos(object), pos(goal)) {
            (Some(r), Some(o), Some(g)) => align_pull_cost(&r, &o, &g, w),
            _ => TermValue::flagged(0.0),
        },
        TermKind::ActPull { robot, object } => match (pos(robot), pos(object)) {
            (Some(r), Some(o)) => {
                let v = Vector2::new(
                    control.first().copied().unwrap_or(0.0),
                    control.get(1).copied().unwrap_or(0.0),
                );
                act_pull_cost(&r, &o, &Vector3::new(v.x, v.y, 0.0), w)
            }
            _ => TermValue::flagged(0.0),
        },
        TermKind::DynObs { robot, obstacle } => match (pos(robot), ctx.dynamic_obstacle(obstacle)) {
            // The rollout world already advances obstacles at constant velocity,
            // so the prediction horizon relative to the evaluated state is zero.
            (Some(r), Some((p, v))) => TermValue::ok(dyn_obs_cost(&r, &p, &v, 0, 0.0, w)),
            _ => TermValue::flagged(0.0),
        },
        TermKind::Tilt { object, psi } => match (ctx.approach_axis(), ctx.basis(object)) {
            (Some(z_ee), Some(b)) => TermValue::ok(w * tilt_residual(&z_ee, b.axis(2), psi)),
            _ => TermValue::flagged(0.0),
        },
        TermKind::Pick => match ctx.gripper_opening() {
            Some(l) => pick_cost(l, w),
            None => TermValue::flagged(0.0),
        },
        TermKind::Place | TermKind::Open => match ctx.gripper_opening() {
            Some(l) => place_cost(l, w),
            None => TermValue::flagged(0.0),
        },
    };
    value
}

fn default_dist() -> f64 {
    1.0
}
fn default_ori() -> f64 {
    0.5
}
fn default_align() -> f64 {
    0.6
}
fn default_dyn_obs() -> f64 {
    2.0
}
fn default_reach() -> f64 {
    1.0
}
fn default_tilt() -> f64 {
    0.5
}
fn default_gripper() -> f64 {
    1.0
}

/// Term weights, all overridable from the scenario file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostWeights {
    #[serde(default = "default_dist")]
    pub dist: f64,
    #[serde(default = "default_ori")]
    pub ori: f64,
    #[serde(default = "default_align")]
    pub align_push: f64,
    #[serde(default = "default_align")]
    pub align_pull: f64,
    #[serde(default = "default_align")]
    pub act_pull: f64,
    #[serde(default = "default_dyn_obs")]
    pub dyn_obs: f64,
    #[serde(default = "default_reach")]
    pub reach: f64,
    #[serde(default = "default_tilt")]
    pub tilt: f64,
    #[serde(default = "default_gripper")]
    pub gripper: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        CostWeights {
            dist: default_dist(),
            ori: default_ori(),
            align_push: default_align(),
            align_pull: default_align(),
            act_pull: default_align(),
            dyn_obs: default_dyn_obs(),
            reach: default_reach(),
            tilt: default_tilt(),
            gripper: default_gripper(),
        }
    }
}

fn with_dynamic_obstacles(mut spec: CostSpec, weights: &CostWeights, ctx: &dyn CostContext) -> CostSpec {
    for id in 0..ctx.dynamic_obstacle_count() {
        spec = spec.with_term(
            TermKind::DynObs {
                robot: Entity::Robot,
                obstacle: id,
            },
            weights.dyn_obs,
        );
    }
    spec
}

/// `dist(R,O) + dist(O,G) + ori(O,G) + align_push`, plus one dyn-obs term per
/// dynamic obstacle.
pub fn compose_push(weights: &CostWeights, ctx: &dyn CostContext) -> Result<CostSpec> {
    let spec = CostSpec::new("push", "push")
        .with_term(TermKind::Dist { from: Entity::Robot, to: Entity::Object }, weights.dist)
        .with_term(TermKind::Dist { from: Entity::Object, to: Entity::Goal }, weights.dist)
        .with_term(TermKind::Ori { from: Entity::Object, to: Entity::Goal }, weights.ori)
        .with_term(
            TermKind::AlignPush {
                robot: Entity::Robot,
                object: Entity::Object,
                goal: Entity::Goal,
            },
            weights.align_push,
        );
    let spec = with_dynamic_obstacles(spec, weights, ctx);
    spec.validate(ctx)?;
    Ok(spec)
}

/// `dist(R,O) + dist(O,G) + ori(O,G) + align_pull + act_pull`, plus dyn-obs
/// terms. Rollouts engage suction.
pub fn compose_pull(weights: &CostWeights, ctx: &dyn CostContext) -> Result<CostSpec> {
    let mut spec = CostSpec::new("pull", "pull")
        .with_term(TermKind::Dist { from: Entity::Robot, to: Entity::Object }, weights.dist)
        .with_term(TermKind::Dist { from: Entity::Object, to: Entity::Goal }, weights.dist)
        .with_term(TermKind::Ori { from: Entity::Object, to: Entity::Goal }, weights.ori)
        .with_term(
            TermKind::AlignPull {
                robot: Entity::Robot,
                object: Entity::Object,
                goal: Entity::Goal,
            },
            weights.align_pull,
        )
        .with_term(
            TermKind::ActPull {
                robot: Entity::Robot,
                object: Entity::Object,
            },
            weights.act_pull,
        );
    spec.contact = ContactMode::Suction;
    let spec = with_dynamic_obstacles(spec, weights, ctx);
    spec.validate(ctx)?;
    Ok(spec)
}

/// Reach the task object with grasp tilt `psi` (1 = top, 0 = side), fingers open.
pub fn compose_reach(weights: &CostWeights, psi: f64) -> CostSpec {
    CostSpec::new(format!("reach(psi={psi})"), "reach")
        .with_term(TermKind::Dist { from: Entity::EndEffector, to: Entity::Object }, weights.reach)
        .with_term(TermKind::Tilt { object: Entity::Object, psi }, weights.tilt)
        .with_term(TermKind::Open, weights.gripper)
}

/// Close the gripper while keeping the grip point on the object.
pub fn compose_pick(weights: &CostWeights) -> CostSpec {
    CostSpec::new("pick", "pick")
        .with_term(TermKind::Pick, weights.gripper)
        .with_term(TermKind::Dist { from: Entity::EndEffector, to: Entity::Object }, weights.reach)
}

/// Carry the held cube to the pre-place pose with the fingers kept shut.
pub fn compose_preplace(weights: &CostWeights) -> CostSpec {
    CostSpec::new("prePlace", "prePlace")
        .with_term(TermKind::Dist { from: Entity::Object, to: Entity::PrePlace }, weights.dist)
        .with_term(TermKind::Ori { from: Entity::Object, to: Entity::PrePlace }, weights.ori)
        .with_term(TermKind::Pick, weights.gripper)
}

/// Lower the cube onto the place frame and let go.
pub fn compose_place(weights: &CostWeights) -> CostSpec {
    CostSpec::new("place", "place")
        .with_term(TermKind::Place, weights.gripper)
        .with_term(TermKind::Dist { from: Entity::Object, to: Entity::Place }, weights.dist)
        .with_term(TermKind::Ori { from: Entity::Object, to: Entity::Place }, weights.ori)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    fn v(x: f64, y: f64) -> Vector3<f64> {
        Vector3::new(x, y, 0.0)
    }

    #[test]
    fn dist_examples() {
        assert_eq!(dist_cost(&v(1.0, 2.0), &v(1.0, 2.0), 1.0), 0.0);
        assert_eq!(dist_cost(&v(0.0, 0.0), &v(3.0, 4.0), 1.0), 5.0);
        assert_eq!(dist_cost(&v(0.0, 0.0), &v(3.0, 4.0), 2.0), 10.0);
    }

    #[test]
    fn align_push_examples() {
        let o = v(0.0, 0.0);
        let g = v(1.0, 0.0);
        assert_eq!(align_push_cost(&v(-1.0, 0.0), &o, &g, 0.6).value, 0.0);
        assert!((align_push_cost(&v(0.5, 0.0), &o, &g, 0.6).value - 0.6).abs() < 1e-15);
        assert!(align_push_cost(&v(0.0, 1.0), &o, &g, 0.6).value.abs() < 1e-15);
        let degenerate = align_push_cost(&o, &o, &g, 0.6);
        assert_eq!(degenerate.value, 0.0);
        assert!(degenerate.flagged);
    }

    #[test]
    fn align_pull_examples() {
        let o = v(0.0, 0.0);
        let g = v(1.0, 0.0);
        assert_eq!(align_pull_cost(&v(0.5, 0.0), &o, &g, 0.6).value, 0.0);
        assert!((align_pull_cost(&v(-1.0, 0.0), &o, &g, 0.6).value - 0.6).abs() < 1e-15);
        assert!(align_pull_cost(&v(0.0, 1.0), &o, &g, 0.6).value.abs() < 1e-15);
        assert!(align_pull_cost(&v(0.5, 0.0), &o, &o, 0.6).flagged);
    }

    #[test]
    fn act_pull_examples() {
        let r = v(0.0, 0.0);
        let o = v(1.0, 0.0);
        assert_eq!(act_pull_cost(&r, &o, &v(-1.0, 0.0), 0.6).value, 0.0);
        assert!((act_pull_cost(&r, &o, &v(2.0, 0.0), 0.6).value - 0.6).abs() < 1e-15);
        assert!(act_pull_cost(&r, &o, &v(0.0, 1.0), 0.6).value.abs() < 1e-15);
        assert_eq!(act_pull_cost(&r, &o, &v(0.0, 0.0), 0.6).value, 0.0);
        assert!(act_pull_cost(&r, &r, &v(1.0, 0.0), 0.6).flagged);
    }

    #[test]
    fn dyn_obs_examples() {
        let r = v(1.0, 1.0);
        let vel = v(0.5, 0.0);
        assert!((dyn_obs_cost(&r, &v(0.0, 1.0), &vel, 50, 0.04, 2.0) - 2.0).abs() < 1e-12);
        assert!(dyn_obs_cost(&r, &v(1e3, 1.0), &v(0.0, 0.0), 0, 0.04, 2.0) < 1e-100);
        let still = v(0.0, 0.0);
        assert_eq!(
            dyn_obs_cost(&r, &v(0.3, 0.2), &still, 17, 0.04, 2.0),
            dyn_obs_cost(&r, &v(0.3, 0.2), &still, 0, 0.04, 2.0)
        );
    }

    #[test]
    fn reach_examples() {
        let p = Vector3::new(0.1, 0.2, 0.3);
        let z = Vector3::z();
        assert_eq!(reach_cost(&p, &z, &p, &z, 1.0, 1.0, 0.5), 0.0);
        assert_eq!(reach_cost(&p, &(-z), &p, &z, 1.0, 1.0, 0.5), 0.0);
        assert_eq!(reach_cost(&p, &Vector3::x(), &p, &z, 0.0, 1.0, 0.5), 0.0);
        assert_eq!(reach_cost(&p, &z, &p, &z, 0.0, 1.0, 0.5), 0.5);
    }

    #[test]
    fn gripper_examples() {
        assert_eq!(pick_cost(0.0, 1.0).value, 0.0);
        assert_eq!(place_cost(0.0, 1.0).value, 1.0);
        assert_eq!(pick_cost(1.0, 1.0).value, 1.0);
        assert_eq!(place_cost(1.0, 1.0).value, 0.0);
        assert_eq!(pick_cost(0.5, 1.0).value, 0.5);
        assert_eq!(place_cost(0.5, 1.0).value, 0.5);
        let clamped = pick_cost(1.5, 1.0);
        assert!(clamped.flagged);
        assert_eq!(clamped.value, 1.0);
    }

    #[test]
    fn preplace_examples() {
        let p = Vector3::new(0.3, -0.2, 0.14);
        let b = OrientationBasis::identity();
        assert_eq!(preplace_cost(&p, &b, &p, &b, 1.0, 0.5), 0.0);
        let off = p + Vector3::new(0.1, 0.0, 0.0);
        assert!((preplace_cost(&off, &b, &p, &b, 1.0, 0.5) - 0.1).abs() < 1e-12);
        let rotated = OrientationBasis::from_yaw(FRAC_PI_4);
        assert!((preplace_cost(&p, &rotated, &p, &b, 1.0, 0.5) - 0.5 * (2.0 - 2f64.sqrt())).abs() < 1e-12);
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        fn vec2() -> impl Strategy<Value = Vector3<f64>> {
            (-5.0f64..5.0, -5.0f64..5.0).prop_map(|(x, y)| Vector3::new(x, y, 0.0))
        }

        proptest! {
            #[test]
            fn hinge_terms_stay_in_range(r in vec2(), o in vec2(), g in vec2(), u in vec2(), w in 0.0f64..5.0) {
                for t in [
                    align_push_cost(&r, &o, &g, w),
                    align_pull_cost(&r, &o, &g, w),
                    act_pull_cost(&r, &o, &u, w),
                ] {
                    prop_assert!(t.value >= 0.0 && t.value <= w + 1e-12);
                }
            }
        }
    }
}
