//! Kinematic free-flying gripper over a table with cubes and shelf boxes.
//!
//! Control is `[vx, vy, vz, wx, wy, wz, l_rate]`: world-frame linear and
//! angular velocity plus the rate of the normalized finger command.

use nalgebra::{Rotation3, Unit, Vector3};
use serde::{Deserialize, Serialize};

use super::geometry::Aabb3;
use crate::cost::{CostContext, Entity, OrientationBasis};
use crate::error::{Error, Result};

pub const CUBE_EDGE: f64 = 0.06;
pub const MAX_SEPARATION: f64 = 0.08;

fn default_linear_limit() -> f64 {
    0.5
}
fn default_angular_limit() -> f64 {
    2.0
}
fn default_finger_rate_limit() -> f64 {
    2.0
}
fn default_hold_band() -> f64 {
    0.01
}
fn default_capture_radius() -> f64 {
    0.02
}
fn default_hand_length() -> f64 {
    0.10
}
fn default_workspace_min() -> [f64; 3] {
    [-0.6, -0.6, 0.0]
}
fn default_workspace_max() -> [f64; 3] {
    [0.8, 0.6, 0.6]
}
fn default_place_height() -> f64 {
    CUBE_EDGE
}
fn default_preplace_height() -> f64 {
    CUBE_EDGE + 0.05
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GripperParams {
    #[serde(default = "default_linear_limit")]
    pub linear_limit: f64,
    #[serde(default = "default_angular_limit")]
    pub angular_limit: f64,
    #[serde(default = "default_finger_rate_limit")]
    pub finger_rate_limit: f64,
    /// Half width of the holding band around the cube edge length.
    #[serde(default = "default_hold_band")]
    pub hold_band: f64,
    #[serde(default = "default_capture_radius")]
    pub capture_radius: f64,
    /// Length of the hand body behind the grip point, along `-z_ee`.
    #[serde(default = "default_hand_length")]
    pub hand_length: f64,
    #[serde(default = "default_workspace_min")]
    pub workspace_min: [f64; 3],
    #[serde(default = "default_workspace_max")]
    pub workspace_max: [f64; 3],
    /// Height of the place frame above the target cube center.
    #[serde(default = "default_place_height")]
    pub place_height: f64,
    #[serde(default = "default_preplace_height")]
    pub preplace_height: f64,
}

impl Default for GripperParams {
    fn default() -> Self {
        GripperParams {
            linear_limit: default_linear_limit(),
            angular_limit: default_angular_limit(),
            finger_rate_limit: default_finger_rate_limit(),
            hold_band: default_hold_band(),
            capture_radius: default_capture_radius(),
            hand_length: default_hand_length(),
            workspace_min: default_workspace_min(),
            workspace_max: default_workspace_max(),
            place_height: default_place_height(),
            preplace_height: default_preplace_height(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cube {
    pub position: Vector3<f64>,
    pub rotation: Rotation3<f64>,
}

impl Cube {
    pub fn at(position: [f64; 3]) -> Self {
        Cube {
            position: Vector3::from(position),
            rotation: Rotation3::identity(),
        }
    }

    fn footprint_contains(&self, p: &Vector3<f64>) -> bool {
        let h = CUBE_EDGE / 2.0;
        (p.x - self.position.x).abs() < h && (p.y - self.position.y).abs() < h
    }
}

/// Cube pose expressed in the end-effector frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Attachment {
    pub cube: usize,
    pub offset: Vector3<f64>,
    pub rotation: Rotation3<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GripperWorld {
    pub params: GripperParams,
    /// Grip point between the fingertips.
    pub ee_position: Vector3<f64>,
    /// Columns are the end-effector axes; the third is the approach axis.
    pub ee_rotation: Rotation3<f64>,
    /// Normalized finger command, 0 = closed.
    pub opening: f64,
    /// Actual finger separation in meters.
    pub separation: f64,
    /// Cube 0 is the task object, cube 1 the place target.
    pub cubes: Vec<Cube>,
    pub boxes: Vec<Aabb3>,
    pub attachment: Option<Attachment>,
}

impl GripperWorld {
    /// Hand at `ee`, pointing straight down with the fingers fully open.
    pub fn new(params: GripperParams, ee: [f64; 3], object: [f64; 3], target: [f64; 3]) -> Self {
        GripperWorld {
            params,
            ee_position: Vector3::from(ee),
            ee_rotation: Rotation3::from_axis_angle(&Vector3::x_axis(), std::f64::consts::PI),
            opening: 1.0,
            separation: MAX_SEPARATION,
            cubes: vec![Cube::at(object), Cube::at(target)],
            boxes: Vec::new(),
            attachment: None,
        }
    }

    pub fn approach_axis(&self) -> Vector3<f64> {
        self.ee_rotation * Vector3::z()
    }

    pub fn attached(&self) -> Option<usize> {
        self.attachment.as_ref().map(|a| a.cube)
    }

    fn band(&self) -> (f64, f64) {
        (CUBE_EDGE - self.params.hold_band, CUBE_EDGE + self.params.hold_band)
    }

    pub fn preplace_position(&self) -> Vector3<f64> {
        self.cubes[1].position + Vector3::new(0.0, 0.0, self.params.preplace_height)
    }

    pub fn place_position(&self) -> Vector3<f64> {
        self.cubes[1].position + Vector3::new(0.0, 0.0, self.params.place_height)
    }

    /// Released and open beyond the holding band.
    pub fn gripper_open(&self) -> bool {
        self.attachment.is_none() && self.separation >= self.band().1
    }

    pub fn saturate(&self, control: &mut [f64]) {
        for (range, limit) in [(0..3, self.params.linear_limit), (3..6, self.params.angular_limit)] {
            let n = control[range.clone()].iter().map(|c| c * c).sum::<f64>().sqrt();
            if n > limit {
                for c in &mut control[range] {
                    *c *= limit / n;
                }
            }
        }
        let r = self.params.finger_rate_limit;
        control[6] = control[6].clamp(-r, r);
    }

    fn hand_blocked(&self, grip: &Vector3<f64>, axis: &Vector3<f64>) -> bool {
        let back = grip - axis * self.params.hand_length;
        if grip.z < self.params.workspace_min[2] || back.z < self.params.workspace_min[2] {
            return true;
        }
        self.boxes.iter().any(|b| b.intersects_segment(grip, &back, 0.0))
    }

    fn pose_free(&self, p: &Vector3<f64>, r: &Rotation3<f64>) -> bool {
        if self.hand_blocked(p, &(r * Vector3::z())) {
            return false;
        }
        let Some(att) = &self.attachment else {
            return true;
        };
        let c = p + r * att.offset;
        let hits_cube = self
            .cubes
            .iter()
            .enumerate()
            .any(|(j, other)| j != att.cube && (other.position - c).iter().all(|d| d.abs() < CUBE_EDGE - 1e-9));
        c.z >= self.params.workspace_min[2] + CUBE_EDGE / 2.0 - 1e-3
            && !self.boxes.iter().any(|b| b.contains(&c, CUBE_EDGE / 2.0))
            && !hits_cube
    }

    pub fn step(&mut self, control: &[f64], dt: f64) -> Result<()> {
        if control.len() != 7 {
            return Err(Error::Shape(format!("gripper control has {} entries, expected 7", control.len())));
        }
        if !control.iter().all(|c| c.is_finite()) || !dt.is_finite() {
            return Err(Error::NonFinite("gripper control"));
        }
        let mut u = [0.0; 7];
        u.copy_from_slice(control);
        self.saturate(&mut u);

        let v = Vector3::new(u[0], u[1], u[2]);
        let w = Vector3::new(u[3], u[4], u[5]);
        let mut lo = Vector3::from(self.params.workspace_min);
        // Fingertips reach half a cube below the grip point.
        lo.z += CUBE_EDGE / 2.0;
        let hi = Vector3::from(self.params.workspace_max);
        let mut p = self.ee_position + v * dt;
        for i in 0..3 {
            p[i] = p[i].clamp(lo[i], hi[i]);
        }
        let r = Rotation3::new(w * dt) * self.ee_rotation;
        // Blocked motion slides: drop translation axes, then the turn, until free.
        const MASKS: [[bool; 3]; 8] = [
            [false, false, false],
            [false, false, true],
            [true, false, false],
            [false, true, false],
            [true, true, false],
            [true, false, true],
            [false, true, true],
            [true, true, true],
        ];
        let old = (self.ee_position, self.ee_rotation);
        'search: for rot in [r, old.1] {
            for mask in MASKS {
                let mut q = p;
                for i in 0..3 {
                    if mask[i] {
                        q[i] = old.0[i];
                    }
                }
                if self.pose_free(&q, &rot) {
                    self.ee_position = q;
                    self.ee_rotation = rot;
                    break 'search;
                }
            }
        }

        let prev = self.separation;
        self.opening = (self.opening + u[6] * dt).clamp(0.0, 1.0);
        let commanded = MAX_SEPARATION * self.opening;
        let (_, band_hi) = self.band();
        if self.attachment.is_some() {
            if commanded > band_hi {
                self.separation = commanded;
                self.release();
            } else {
                self.separation = commanded.max(CUBE_EDGE);
            }
        } else {
            self.separation = commanded;
            if prev >= band_hi && commanded < band_hi {
                if let Some(id) = self.capturable_cube() {
                    self.capture(id);
                    self.separation = commanded.max(CUBE_EDGE);
                }
            }
        }

        if let Some(att) = &self.attachment {
            let cube = &mut self.cubes[att.cube];
            cube.position = self.ee_position + self.ee_rotation * att.offset;
            cube.rotation = self.ee_rotation * att.rotation;
        }
        Ok(())
    }

    fn capturable_cube(&self) -> Option<usize> {
        let axis = self.approach_axis();
        let mut best: Option<(usize, f64)> = None;
        for (i, c) in self.cubes.iter().enumerate() {
            let d = (c.position - self.ee_position).norm();
            if d > self.params.capture_radius {
                continue;
            }
            // The hand must reach the cube along the approach axis.
            if self.hand_blocked(&c.position, &axis) {
                continue;
            }
            if best.map(|(_, bd)| d < bd).unwrap_or(true) {
                best = Some((i, d));
            }
        }
        best.map(|(i, _)| i)
    }

    fn capture(&mut self, id: usize) {
        let inv = self.ee_rotation.inverse();
        let cube = &self.cubes[id];
        self.attachment = Some(Attachment {
            cube: id,
            offset: inv * (cube.position - self.ee_position),
            rotation: inv * cube.rotation,
        });
    }

    fn release(&mut self) {
        if let Some(att) = self.attachment.take() {
            self.drop_cube(att.cube);
        }
    }

    /// Levels the cube and lowers it onto the highest support beneath it.
    fn drop_cube(&mut self, id: usize) {
        let cube = &self.cubes[id];
        let m = cube.rotation.matrix();
        let (mut best, mut best_z) = (0, 0.0);
        for i in 0..3 {
            let z = m[(2, i)].abs();
            if z > best_z {
                best = i;
                best_z = z;
            }
        }
        let mut up: Vector3<f64> = m.column(best).into_owned();
        if up.z < 0.0 {
            up = -up;
        }
        let level = Rotation3::rotation_between(&up, &Vector3::z()).unwrap_or_else(Rotation3::identity);
        let rotation = level * cube.rotation;

        let p = cube.position;
        let half = CUBE_EDGE / 2.0;
        let mut support = self.params.workspace_min[2];
        for (j, other) in self.cubes.iter().enumerate() {
            let top = other.position.z + half;
            if j != id && other.footprint_contains(&p) && top <= p.z - half + 1e-9 {
                support = support.max(top);
            }
        }
        for b in &self.boxes {
            let inside = (p.x - b.center.x).abs() < b.half.x && (p.y - b.center.y).abs() < b.half.y;
            if inside && b.top() <= p.z - half + 1e-9 {
                support = support.max(b.top());
            }
        }
        let cube = &mut self.cubes[id];
        cube.rotation = rotation;
        cube.position.z = support + half;
    }

    pub fn teleport_cube(&mut self, id: usize, position: Vector3<f64>) -> Result<()> {
        if id >= self.cubes.len() {
            return Err(Error::UnknownTarget(format!("cube {id}")));
        }
        if self.attached() == Some(id) {
            self.attachment = None;
            self.separation = MAX_SEPARATION * self.opening;
        }
        self.cubes[id].position = position;
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.ee_position.iter().all(|v| v.is_finite())
            && self.cubes.iter().all(|c| c.position.iter().all(|v| v.is_finite()))
    }

    pub fn within_bounds(&self, tol: f64) -> bool {
        let lo = Vector3::from(self.params.workspace_min);
        let hi = Vector3::from(self.params.workspace_max);
        (0..3).all(|i| self.ee_position[i] >= lo[i] - tol && self.ee_position[i] <= hi[i] + tol)
    }
}

pub fn yaw_rotation(yaw: f64) -> Rotation3<f64> {
    Rotation3::from_axis_angle(&Unit::new_normalize(Vector3::z()), yaw)
}

impl CostContext for GripperWorld {
    fn position(&self, entity: Entity) -> Option<Vector3<f64>> {
        match entity {
            Entity::EndEffector | Entity::Robot => Some(self.ee_position),
            Entity::Object => Some(self.cubes[0].position),
            Entity::Goal | Entity::Place => Some(self.place_position()),
            Entity::PrePlace => Some(self.preplace_position()),
            Entity::Cube(i) => self.cubes.get(i).map(|c| c.position),
            Entity::DynamicObstacle(_) => None,
        }
    }

    fn basis(&self, entity: Entity) -> Option<OrientationBasis> {
        match entity {
            Entity::EndEffector | Entity::Robot => Some(OrientationBasis::from_rotation(&self.ee_rotation)),
            Entity::Object => Some(OrientationBasis::from_rotation(&self.cubes[0].rotation)),
            Entity::Goal | Entity::Place | Entity::PrePlace => {
                Some(OrientationBasis::from_rotation(&self.cubes[1].rotation))
            }
            Entity::Cube(i) => self.cubes.get(i).map(|c| OrientationBasis::from_rotation(&c.rotation)),
            Entity::DynamicObstacle(_) => None,
        }
    }

    fn dynamic_obstacle(&self, _id: usize) -> Option<(Vector3<f64>, Vector3<f64>)> {
        None
    }

    fn dynamic_obstacle_count(&self) -> usize {
        0
    }

    fn gripper_opening(&self) -> Option<f64> {
        Some(self.opening)
    }

    fn approach_axis(&self) -> Option<Vector3<f64>> {
        Some(GripperWorld::approach_axis(self))
    }
}
