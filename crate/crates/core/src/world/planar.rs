//! Planar push/pull world: an omnidirectional disc robot, one rectangular
//! object, a goal pose, static obstacles and constant-velocity discs.

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use super::geometry::{cross, Rect};
use crate::cost::{CostContext, Entity, OrientationBasis};
use crate::error::{Error, Result};

fn default_arena_min() -> [f64; 2] {
    [-2.0, -2.0]
}
fn default_arena_max() -> [f64; 2] {
    [2.0, 2.0]
}
fn default_robot_radius() -> f64 {
    0.15
}
fn default_object_half() -> [f64; 2] {
    [0.15, 0.15]
}
fn default_v_max() -> f64 {
    1.0
}
fn default_friction() -> f64 {
    0.5
}
fn default_suction_range() -> f64 {
    0.15
}
fn default_tow_speed() -> f64 {
    0.35
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanarParams {
    #[serde(default = "default_arena_min")]
    pub arena_min: [f64; 2],
    #[serde(default = "default_arena_max")]
    pub arena_max: [f64; 2],
    #[serde(default = "default_robot_radius")]
    pub robot_radius: f64,
    #[serde(default = "default_object_half")]
    pub object_half: [f64; 2],
    #[serde(default = "default_v_max")]
    pub v_max: f64,
    /// Gain from contact lever arm to object rotation.
    #[serde(default = "default_friction")]
    pub friction: f64,
    /// Largest robot/object surface gap at which suction can engage.
    #[serde(default = "default_suction_range")]
    pub suction_range: f64,
    /// Speed limit while towing under suction.
    #[serde(default = "default_tow_speed")]
    pub tow_speed: f64,
}

impl Default for PlanarParams {
    fn default() -> Self {
        PlanarParams {
            arena_min: default_arena_min(),
            arena_max: default_arena_max(),
            robot_radius: default_robot_radius(),
            object_half: default_object_half(),
            v_max: default_v_max(),
            friction: default_friction(),
            suction_range: default_suction_range(),
            tow_speed: default_tow_speed(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanarRobot {
    pub position: Vector2<f64>,
    /// Unit direction of the last non-zero motion command.
    pub heading: Vector2<f64>,
    pub velocity: Vector2<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanarObject {
    pub position: Vector2<f64>,
    pub yaw: f64,
    pub velocity: Vector2<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanarGoal {
    pub position: Vector2<f64>,
    pub yaw: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum StaticObstacle {
    Disc { center: [f64; 2], radius: f64 },
    Rect { center: [f64; 2], half: [f64; 2] },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DynamicObstacle {
    pub position: Vector2<f64>,
    pub velocity: Vector2<f64>,
    pub radius: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanarWorld {
    pub params: PlanarParams,
    pub robot: PlanarRobot,
    pub object: PlanarObject,
    pub goal: PlanarGoal,
    /// Object position relative to the robot while suction is attached.
    pub suction: Option<Vector2<f64>>,
    pub static_obstacles: Vec<StaticObstacle>,
    pub dynamic_obstacles: Vec<DynamicObstacle>,
}

/// Outcome of a suction request.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SuctionStatus {
    Attached,
    Released,
    OutOfRange,
}

impl PlanarWorld {
    pub fn new(params: PlanarParams, robot: [f64; 2], object: [f64; 2], object_yaw: f64, goal: [f64; 2], goal_yaw: f64) -> Self {
        PlanarWorld {
            params,
            robot: PlanarRobot {
                position: Vector2::from(robot),
                heading: Vector2::x(),
                velocity: Vector2::zeros(),
            },
            object: PlanarObject {
                position: Vector2::from(object),
                yaw: object_yaw,
                velocity: Vector2::zeros(),
            },
            goal: PlanarGoal {
                position: Vector2::from(goal),
                yaw: goal_yaw,
            },
            suction: None,
            static_obstacles: Vec::new(),
            dynamic_obstacles: Vec::new(),
        }
    }

    pub fn suction_attached(&self) -> bool {
        self.suction.is_some()
    }

    pub fn object_rect(&self) -> Rect {
        Rect {
            center: self.object.position,
            half: Vector2::from(self.params.object_half),
            yaw: self.object.yaw,
        }
    }

    /// Surface gap between robot and object.
    pub fn robot_object_gap(&self) -> f64 {
        self.object_rect()
            .disc_contact(&self.robot.position, self.params.robot_radius)
            .gap
    }

    pub fn set_suction(&mut self, engaged: bool) -> SuctionStatus {
        if !engaged {
            self.suction = None;
            return SuctionStatus::Released;
        }
        if self.suction.is_some() {
            return SuctionStatus::Attached;
        }
        if self.robot_object_gap() <= self.params.suction_range {
            self.suction = Some(self.object.position - self.robot.position);
            SuctionStatus::Attached
        } else {
            SuctionStatus::OutOfRange
        }
    }

    /// Scales `control` into the disc of radius `v_max`.
    pub fn saturate(&self, control: &mut [f64]) {
        let n = (control[0] * control[0] + control[1] * control[1]).sqrt();
        if n > self.params.v_max {
            let s = self.params.v_max / n;
            control[0] *= s;
            control[1] *= s;
        }
    }

    pub fn step(&mut self, control: &[f64], dt: f64) -> Result<()> {
        if control.len() != 2 {
            return Err(Error::Shape(format!("planar control has {} entries, expected 2", control.len())));
        }
        if !control.iter().all(|c| c.is_finite()) || !dt.is_finite() {
            return Err(Error::NonFinite("planar control"));
        }
        let mut v = Vector2::new(control[0], control[1]);
        let speed = v.norm();
        let limit = if self.suction.is_some() {
            self.params.tow_speed.min(self.params.v_max)
        } else {
            self.params.v_max
        };
        if speed > limit {
            v *= limit / speed;
        }

        let arena_min = Vector2::from(self.params.arena_min);
        let arena_max = Vector2::from(self.params.arena_max);
        for d in &mut self.dynamic_obstacles {
            d.position += d.velocity * dt;
            let r = Vector2::repeat(d.radius);
            d.position = clamp_vec(&d.position, &(arena_min + r), &(arena_max - r));
        }

        let robot_prev = self.robot.position;
        let object_prev = self.object.position;
        self.robot.position += v * dt;

        match self.suction {
            Some(offset) => {
                self.object.position = self.robot.position + offset;
                let correction = self.resolve_object();
                self.robot.position += correction;
            }
            None => {
                let contact = self
                    .object_rect()
                    .disc_contact(&self.robot.position, self.params.robot_radius);
                if contact.depth > 0.0 {
                    let push = -contact.normal;
                    if v.dot(&push) > 0.0 {
                        let displacement = push * contact.depth;
                        let lever = contact.point - self.object.position;
                        let h = Vector2::from(self.params.object_half);
                        let gyration_sq = (h.x * h.x + h.y * h.y) / 3.0;
                        self.object.position += displacement;
                        self.resolve_object();
                        let yaw = self.object.yaw;
                        self.object.yaw += self.params.friction * cross(&lever, &displacement) / gyration_sq;
                        // Walls and obstacles stop the turn rather than eject the object.
                        if self.rect_blocked(&self.object_rect()) {
                            self.object.yaw = yaw;
                        }
                        self.resolve_object();
                    }
                    self.separate_robot_from_object();
                }
            }
        }

        self.resolve_robot_obstacles();
        let before = self.robot.position;
        self.clamp_robot();
        if let Some(offset) = self.suction {
            // Keep the towed pair rigid when the robot hits a wall.
            if self.robot.position != before {
                self.object.position = self.robot.position + offset;
                self.resolve_object();
            }
        } else if self.robot.position != before {
            self.separate_robot_from_object();
            self.clamp_robot();
        }

        if dt > 0.0 {
            self.robot.velocity = (self.robot.position - robot_prev) / dt;
            self.object.velocity = (self.object.position - object_prev) / dt;
        }
        if v.norm() > 1e-9 {
            self.robot.heading = v.normalize();
        }
        Ok(())
    }

    /// Moves the object out of walls and static obstacles, returning the
    /// applied translation.
    fn resolve_object(&mut self) -> Vector2<f64> {
        let start = self.object.position;
        for _ in 0..3 {
            for obs in &self.static_obstacles {
                let rect = self.object_rect();
                match obs {
                    StaticObstacle::Disc { center, radius } => {
                        let c = rect.disc_contact(&Vector2::from(*center), *radius);
                        if c.depth > 0.0 {
                            self.object.position -= c.normal * c.depth;
                        }
                    }
                    StaticObstacle::Rect { center, half } => {
                        if let Some(mtv) = rect.separation_from_aabb(&Vector2::from(*center), &Vector2::from(*half)) {
                            self.object.position += mtv;
                        }
                    }
                }
            }
            let ext = self.object_rect().aabb_half();
            let lo = Vector2::from(self.params.arena_min) + ext;
            let hi = Vector2::from(self.params.arena_max) - ext;
            self.object.position = clamp_vec(&self.object.position, &lo, &hi);
        }
        self.object.position - start
    }

    fn rect_blocked(&self, rect: &Rect) -> bool {
        let ext = rect.aabb_half();
        let lo = Vector2::from(self.params.arena_min) + ext;
        let hi = Vector2::from(self.params.arena_max) - ext;
        let c = rect.center;
        if c.x < lo.x || c.y < lo.y || c.x > hi.x || c.y > hi.y {
            return true;
        }
        self.static_obstacles.iter().any(|obs| match obs {
            StaticObstacle::Disc { center, radius } => rect.disc_contact(&Vector2::from(*center), *radius).depth > 0.0,
            StaticObstacle::Rect { center, half } => rect
                .separation_from_aabb(&Vector2::from(*center), &Vector2::from(*half))
                .is_some(),
        })
    }

    fn separate_robot_from_object(&mut self) {
        for _ in 0..2 {
            let c = self
                .object_rect()
                .disc_contact(&self.robot.position, self.params.robot_radius);
            if c.depth <= 0.0 {
                break;
            }
            self.robot.position += c.normal * c.depth;
        }
    }

    fn resolve_robot_obstacles(&mut self) {
        let r = self.params.robot_radius;
        for obs in &self.static_obstacles {
            match obs {
                StaticObstacle::Disc { center, radius } => {
                    push_disc_out(&mut self.robot.position, r, &Vector2::from(*center), *radius);
                }
                StaticObstacle::Rect { center, half } => {
                    let rect = Rect {
                        center: Vector2::from(*center),
                        half: Vector2::from(*half),
                        yaw: 0.0,
                    };
                    let c = rect.disc_contact(&self.robot.position, r);
                    if c.depth > 0.0 {
                        self.robot.position += c.normal * c.depth;
                    }
                }
            }
        }
        for d in &self.dynamic_obstacles {
            push_disc_out(&mut self.robot.position, r, &d.position, d.radius);
        }
    }

    fn clamp_robot(&mut self) {
        let r = Vector2::repeat(self.params.robot_radius);
        let lo = Vector2::from(self.params.arena_min) + r;
        let hi = Vector2::from(self.params.arena_max) - r;
        self.robot.position = clamp_vec(&self.robot.position, &lo, &hi);
    }

    pub fn is_finite(&self) -> bool {
        self.robot.position.iter().all(|v| v.is_finite())
            && self.object.position.iter().all(|v| v.is_finite())
            && self.object.yaw.is_finite()
    }

    pub fn within_bounds(&self, tol: f64) -> bool {
        let lo = Vector2::from(self.params.arena_min);
        let hi = Vector2::from(self.params.arena_max);
        let inside = |p: &Vector2<f64>| p.x >= lo.x - tol && p.y >= lo.y - tol && p.x <= hi.x + tol && p.y <= hi.y + tol;
        inside(&self.robot.position)
            && inside(&self.object.position)
            && self.dynamic_obstacles.iter().all(|d| inside(&d.position))
    }
}

fn clamp_vec(p: &Vector2<f64>, lo: &Vector2<f64>, hi: &Vector2<f64>) -> Vector2<f64> {
    Vector2::new(p.x.clamp(lo.x, hi.x.max(lo.x)), p.y.clamp(lo.y, hi.y.max(lo.y)))
}

fn push_disc_out(p: &mut Vector2<f64>, r: f64, center: &Vector2<f64>, radius: f64) {
    let d = *p - center;
    let dist = d.norm();
    let min = r + radius;
    if dist < min {
        let n = if dist > 1e-12 { d / dist } else { Vector2::x() };
        *p = center + n * min;
    }
}

fn lift(v: &Vector2<f64>) -> Vector3<f64> {
    Vector3::new(v.x, v.y, 0.0)
}

impl CostContext for PlanarWorld {
    fn position(&self, entity: Entity) -> Option<Vector3<f64>> {
        match entity {
            Entity::Robot => Some(lift(&self.robot.position)),
            Entity::Object => Some(lift(&self.object.position)),
            Entity::Goal => Some(lift(&self.goal.position)),
            Entity::DynamicObstacle(i) => self.dynamic_obstacles.get(i).map(|d| lift(&d.position)),
            _ => None,
        }
    }

    fn basis(&self, entity: Entity) -> Option<OrientationBasis> {
        match entity {
            Entity::Object => Some(OrientationBasis::from_yaw(self.object.yaw)),
            Entity::Goal => Some(OrientationBasis::from_yaw(self.goal.yaw)),
            Entity::Robot => Some(OrientationBasis::identity()),
            _ => None,
        }
    }

    fn dynamic_obstacle(&self, id: usize) -> Option<(Vector3<f64>, Vector3<f64>)> {
        self.dynamic_obstacles
            .get(id)
            .map(|d| (lift(&d.position), lift(&d.velocity)))
    }

    fn dynamic_obstacle_count(&self) -> usize {
        self.dynamic_obstacles.len()
    }

    fn gripper_opening(&self) -> Option<f64> {
        None
    }

    fn approach_axis(&self) -> Option<Vector3<f64>> {
        None
    }
}
