//! Symbolic observers: continuous world state to discrete observations.
//!
//! Observation value 0 means the predicate holds.

use serde::{Deserialize, Serialize};

use super::belief::Observation;
use crate::cost::{ori_metric, CostContext, Entity};
use crate::world::gripper::CUBE_EDGE;
use crate::world::{GripperWorld, PlanarWorld};

fn default_goal() -> f64 {
    0.1
}
fn default_reach() -> f64 {
    0.02
}
fn default_hold() -> f64 {
    0.01
}
fn default_place() -> f64 {
    0.02
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    /// Object-to-goal distance for the planar goal predicate.
    #[serde(default = "default_goal")]
    pub goal: f64,
    #[serde(default = "default_reach")]
    pub reach: f64,
    /// Half width of the finger-separation band around the cube size.
    #[serde(default = "default_hold")]
    pub hold: f64,
    /// Applies to both distance and orientation at the pre-place and place frames.
    #[serde(default = "default_place")]
    pub place: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            goal: default_goal(),
            reach: default_reach(),
            hold: default_hold(),
            place: default_place(),
        }
    }
}

fn flag(holds: bool) -> usize {
    if holds {
        0
    } else {
        1
    }
}

pub fn observe_planar(world: &PlanarWorld, thresholds: &Thresholds) -> Vec<Observation> {
    let d = (world.goal.position - world.object.position).norm();
    vec![Observation::new("goal", flag(d <= thresholds.goal))]
}

fn pose_reached(world: &GripperWorld, frame: Entity, threshold: f64) -> bool {
    let (Some(p), Some(q), Some(a), Some(b)) = (
        world.position(Entity::Object),
        world.position(frame),
        world.basis(Entity::Object),
        world.basis(frame),
    ) else {
        return false;
    };
    (q - p).norm() < threshold && ori_metric(&a, &b) < threshold
}

pub fn observe_gripper(world: &GripperWorld, thresholds: &Thresholds) -> Vec<Observation> {
    let reach = (world.ee_position - world.cubes[0].position).norm() <= thresholds.reach;
    let d_f = world.separation;
    let hold = d_f >= CUBE_EDGE - thresholds.hold && d_f < CUBE_EDGE + thresholds.hold;
    vec![
        Observation::new("reach", flag(reach)),
        Observation::new("hold", flag(hold)),
        Observation::new("preplace", flag(pose_reached(world, Entity::PrePlace, thresholds.place))),
        Observation::new(
            "placed",
            flag(world.attached().is_none() && pose_reached(world, Entity::Place, thresholds.place)),
        ),
    ]
}
