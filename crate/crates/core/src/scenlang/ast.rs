use crate::vocab::ParticipantType;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LanePosition {
    pub lane_id: String,
    /// Meters along the lane from its start.
    pub offset: f64,
}

impl LanePosition {
    pub fn new(lane_id: impl Into<String>, offset: f64) -> Self {
        LanePosition {
            lane_id: lane_id.into(),
            offset,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Position {
    Lane(LanePosition),
    /// World coordinates, used for pedestrians off the lane graph.
    Free {
        x: f64,
        y: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub position: Position,
    /// Meters to the left of the lane centerline.
    pub lateral_offset: Option<f64>,
    /// Speed when passing this waypoint (m/s).
    pub speed: f64,
    /// Scheduled arrival time (s); when set, the segment leading here is
    /// travelled at constant speed.
    pub time: Option<f64>,
}

impl Waypoint {
    pub fn lane(lane_id: &str, offset: f64, speed: f64) -> Self {
        Waypoint {
            position: Position::Lane(LanePosition::new(lane_id, offset)),
            lateral_offset: None,
            speed,
            time: None,
        }
    }

    pub fn free(x: f64, y: f64, speed: f64) -> Self {
        Waypoint {
            position: Position::Free { x, y },
            lateral_offset: None,
            speed,
            time: None,
        }
    }

    pub fn at(mut self, t: f64) -> Self {
        self.time = Some(t);
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EgoTask {
    pub vehicle_type: ParticipantType,
    pub start: LanePosition,
    pub destination: LanePosition,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryDef {
    pub name: String,
    pub participant_type: ParticipantType,
    pub waypoints: Vec<Waypoint>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Assertion {
    NeverCollision,
    AlwaysClearance { min: f64 },
    EventuallyAtDestination { within: f64, radius: f64 },
}

pub fn default_assertions() -> Vec<Assertion> {
    vec![
        Assertion::NeverCollision,
        Assertion::AlwaysClearance { min: 2.0 },
        Assertion::EventuallyAtDestination {
            within: 60.0,
            radius: 3.0,
        },
    ]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcreteScenario {
    pub map_id: String,
    pub ego: EgoTask,
    pub npcs: Vec<TrajectoryDef>,
    pub pedestrians: Vec<TrajectoryDef>,
    pub assertions: Vec<Assertion>,
}

impl ConcreteScenario {
    pub fn participants(&self) -> impl Iterator<Item = &TrajectoryDef> {
        self.npcs.iter().chain(&self.pedestrians)
    }

    pub fn participants_mut(&mut self) -> impl Iterator<Item = &mut TrajectoryDef> {
        self.npcs.iter_mut().chain(self.pedestrians.iter_mut())
    }

    pub fn participant(&self, name: &str) -> Option<&TrajectoryDef> {
        self.participants().find(|t| t.name == name)
    }

    /// Copy without the named participant.
    pub fn without(&self, name: &str) -> ConcreteScenario {
        let mut s = self.clone();
        s.npcs.retain(|t| t.name != name);
        s.pedestrians.retain(|t| t.name != name);
        s
    }

    pub fn min_clearance(&self) -> Option<f64> {
        self.assertions.iter().find_map(|a| match a {
            Assertion::AlwaysClearance { min } => Some(*min),
            _ => None,
        })
    }

    pub fn destination_goal(&self) -> Option<(f64, f64)> {
        self.assertions.iter().find_map(|a| match a {
            Assertion::EventuallyAtDestination { within, radius } => Some((*within, *radius)),
            _ => None,
        })
    }

    pub fn checks_collisions(&self) -> bool {
        self.assertions.contains(&Assertion::NeverCollision)
    }
}
