//! Forward models used both as the executed world and for rollouts.

pub mod geometry;
pub mod gripper;
pub mod planar;

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::cost::{ContactMode, CostContext, Entity, OrientationBasis};
use crate::error::{Error, Result};

pub use gripper::{GripperParams, GripperWorld};
pub use planar::{DynamicObstacle, PlanarParams, PlanarWorld, StaticObstacle, SuctionStatus};

/// Position tolerance for the arena/workspace bounds.
pub const BOUNDS_TOLERANCE: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "world", rename_all = "snake_case")]
pub enum WorldState {
    Planar(PlanarWorld),
    Gripper(GripperWorld),
}

/// Serialized copy of a [`WorldState`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WorldSnapshot {
    bytes: Vec<u8>,
}

impl WorldSnapshot {
    pub fn from_bytes(bytes: Vec<u8>) -> Self {
        WorldSnapshot { bytes }
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn restore(&self) -> Result<WorldState> {
        let state: WorldState =
            serde_json::from_slice(&self.bytes).map_err(|e| Error::Snapshot(e.to_string()))?;
        if !state.is_finite() {
            return Err(Error::Snapshot("snapshot holds non-finite state".into()));
        }
        Ok(state)
    }
}

/// Scripted change to the world.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Disturbance {
    TeleportObject {
        position: [f64; 2],
        #[serde(default)]
        yaw: Option<f64>,
    },
    TeleportCube {
        cube: usize,
        position: [f64; 3],
    },
    MoveGoal {
        position: [f64; 2],
        #[serde(default)]
        yaw: Option<f64>,
    },
    SpawnObstacle {
        position: [f64; 2],
        velocity: [f64; 2],
        radius: f64,
    },
    RetargetObstacle {
        id: usize,
        velocity: [f64; 2],
    },
}

impl WorldState {
    pub fn control_dim(&self) -> usize {
        match self {
            WorldState::Planar(_) => 2,
            WorldState::Gripper(_) => 7,
        }
    }

    pub fn step(&mut self, control: &[f64], dt: f64) -> Result<()> {
        match self {
            WorldState::Planar(w) => w.step(control, dt),
            WorldState::Gripper(w) => w.step(control, dt),
        }
    }

    /// Projects a control vector onto the admissible set.
    pub fn saturate_control(&self, control: &mut [f64]) {
        match self {
            WorldState::Planar(w) => w.saturate(control),
            WorldState::Gripper(w) => w.saturate(control),
        }
    }

    /// Sets attachments for a rollout under `contact`.
    pub fn begin_rollout(&mut self, contact: ContactMode) {
        if let (WorldState::Planar(w), ContactMode::Free) = (self, contact) {
            w.set_suction(false);
        }
    }

    /// Per-step contact handling inside a rollout.
    pub fn rollout_contact(&mut self, contact: ContactMode) {
        if let (WorldState::Planar(w), ContactMode::Suction) = (self, contact) {
            w.set_suction(true);
        }
    }

    pub fn snapshot(&self) -> WorldSnapshot {
        WorldSnapshot {
            bytes: serde_json::to_vec(self).expect("world state serializes"),
        }
    }

    pub fn apply_disturbance(&mut self, event: &Disturbance) -> Result<()> {
        let unknown = |what: &str| Err(Error::UnknownTarget(what.to_string()));
        match (self, event) {
            (WorldState::Planar(w), Disturbance::TeleportObject { position, yaw }) => {
                w.suction = None;
                w.object.position = Vector2::from(*position);
                if let Some(yaw) = yaw {
                    w.object.yaw = *yaw;
                }
                w.object.velocity = Vector2::zeros();
                Ok(())
            }
            (WorldState::Planar(w), Disturbance::MoveGoal { position, yaw }) => {
                w.goal.position = Vector2::from(*position);
                if let Some(yaw) = yaw {
                    w.goal.yaw = *yaw;
                }
                Ok(())
            }
            (WorldState::Planar(w), Disturbance::SpawnObstacle { position, velocity, radius }) => {
                if !(*radius > 0.0) {
                    return Err(Error::config("obstacle radius must be positive"));
                }
                w.dynamic_obstacles.push(DynamicObstacle {
                    position: Vector2::from(*position),
                    velocity: Vector2::from(*velocity),
                    radius: *radius,
                });
                Ok(())
            }
            (WorldState::Planar(w), Disturbance::RetargetObstacle { id, velocity }) => match w.dynamic_obstacles.get_mut(*id) {
                Some(d) => {
                    d.velocity = Vector2::from(*velocity);
                    Ok(())
                }
                None => unknown(&format!("dynamic obstacle {id}")),
            },
            (WorldState::Gripper(w), Disturbance::TeleportCube { cube, position }) => {
                w.teleport_cube(*cube, Vector3::from(*position))
            }
            (WorldState::Planar(_), Disturbance::TeleportCube { cube, .. }) => unknown(&format!("cube {cube}")),
            (WorldState::Gripper(_), _) => unknown("planar entity in gripper world"),
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            WorldState::Planar(w) => w.is_finite(),
            WorldState::Gripper(w) => w.is_finite(),
        }
    }

    pub fn within_bounds(&self) -> bool {
        match self {
            WorldState::Planar(w) => w.within_bounds(BOUNDS_TOLERANCE),
            WorldState::Gripper(w) => w.within_bounds(BOUNDS_TOLERANCE),
        }
    }

    /// Position used to draw the robot trajectory.
    pub fn robot_position(&self) -> Vector3<f64> {
        self.position(Entity::Robot).unwrap_or_else(Vector3::zeros)
    }

    pub fn object_position(&self) -> Vector3<f64> {
        self.position(Entity::Object).unwrap_or_else(Vector3::zeros)
    }

    pub fn as_planar(&self) -> Option<&PlanarWorld> {
        match self {
            WorldState::Planar(w) => Some(w),
            _ => None,
        }
    }

    pub fn as_planar_mut(&mut self) -> Option<&mut PlanarWorld> {
        match self {
            WorldState::Planar(w) => Some(w),
            _ => None,
        }
    }

    pub fn as_gripper(&self) -> Option<&GripperWorld> {
        match self {
            WorldState::Gripper(w) => Some(w),
            _ => None,
        }
    }
}

impl CostContext for WorldState {
    fn position(&self, entity: Entity) -> Option<Vector3<f64>> {
        match self {
            WorldState::Planar(w) => w.position(entity),
            WorldState::Gripper(w) => w.position(entity),
        }
    }

    fn basis(&self, entity: Entity) -> Option<OrientationBasis> {
        match self {
            WorldState::Planar(w) => w.basis(entity),
            WorldState::Gripper(w) => w.basis(entity),
        }
    }

    fn dynamic_obstacle(&self, id: usize) -> Option<(Vector3<f64>, Vector3<f64>)> {
        match self {
            WorldState::Planar(w) => w.dynamic_obstacle(id),
            WorldState::Gripper(w) => w.dynamic_obstacle(id),
        }
    }

    fn dynamic_obstacle_count(&self) -> usize {
        match self {
            WorldState::Planar(w) => w.dynamic_obstacle_count(),
            WorldState::Gripper(w) => w.dynamic_obstacle_count(),
        }
    }

    fn gripper_opening(&self) -> Option<f64> {
        match self {
            WorldState::Planar(w) => w.gripper_opening(),
            WorldState::Gripper(w) => w.gripper_opening(),
        }
    }

    fn approach_axis(&self) -> Option<Vector3<f64>> {
        match self {
            WorldState::Planar(w) => CostContext::approach_axis(w),
            WorldState::Gripper(w) => CostContext::approach_axis(w),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn planar() -> WorldState {
        let mut w = PlanarWorld::new(PlanarParams::default(), [-0.32, 0.02], [0.0, 0.0], 0.3, [1.5, 1.5], 0.0);
        w.dynamic_obstacles.push(DynamicObstacle {
            position: Vector2::new(1.0, -1.0),
            velocity: Vector2::new(0.0, 0.2),
            radius: 0.1,
        });
        WorldState::Planar(w)
    }

    #[test]
    fn snapshot_round_trip() {
        let w = planar();
        let back = w.snapshot().restore().unwrap();
        assert_eq!(w, back);
        let g = WorldState::Gripper(GripperWorld::new(GripperParams::default(), [0.0, 0.0, 0.3], [0.3, 0.1, 0.03], [0.3, -0.2, 0.03]));
        assert_eq!(g.snapshot().restore().unwrap(), g);
    }

    #[test]
    fn corrupt_snapshot_errors() {
        let mut bytes = planar().snapshot().as_bytes().to_vec();
        bytes.truncate(bytes.len() / 2);
        assert!(WorldSnapshot::from_bytes(bytes).restore().is_err());
    }

    #[test]
    fn mid_contact_snapshot_resumes_identically() {
        let mut w = planar();
        for _ in 0..3 {
            w.step(&[0.6, 0.0], 0.04).unwrap();
        }
        let snap = w.snapshot();
        let mut a = w.clone();
        let mut b = snap.restore().unwrap();
        for _ in 0..10 {
            a.step(&[0.6, 0.1], 0.04).unwrap();
            b.step(&[0.6, 0.1], 0.04).unwrap();
        }
        assert_eq!(a, b);
    }

    #[test]
    fn disturbances() {
        let mut w = planar();
        w.apply_disturbance(&Disturbance::TeleportObject { position: [1.8, 1.8], yaw: None }).unwrap();
        let p = w.as_planar().unwrap();
        assert_eq!(p.object.position, Vector2::new(1.8, 1.8));
        assert_eq!(p.object.velocity, Vector2::zeros());
        w.apply_disturbance(&Disturbance::MoveGoal { position: [-1.0, 1.0], yaw: None }).unwrap();
        assert_eq!(w.position(Entity::Goal).unwrap(), Vector3::new(-1.0, 1.0, 0.0));
        assert!(w
            .apply_disturbance(&Disturbance::RetargetObstacle { id: 4, velocity: [0.0, 0.0] })
            .is_err());
        assert!(w
            .apply_disturbance(&Disturbance::TeleportCube { cube: 0, position: [0.0; 3] })
            .is_err());
    }

    #[test]
    fn teleport_breaks_suction() {
        let mut w = planar();
        let p = w.as_planar_mut().unwrap();
        p.robot.position = Vector2::new(-0.35, 0.0);
        assert_eq!(p.set_suction(true), SuctionStatus::Attached);
        w.apply_disturbance(&Disturbance::TeleportObject { position: [1.0, 1.0], yaw: None }).unwrap();
        assert!(!w.as_planar().unwrap().suction_attached());
    }
}
