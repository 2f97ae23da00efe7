//! Scenario feasibility checks and action recognition from trajectories.

mod classify;
mod feasibility;
mod segment;

pub use classify::{canonical_sequence, classify_action, extract_action_sequence};
pub use feasibility::{check_feasibility, Constraint, FeasibilityDiagnostic, FeasibilityReport};
pub use segment::{segment_motions, MotionSegment};

use crate::abstraction::AbstractScenario;
use crate::geom::Vec2;
use crate::map::RoadMap;
use crate::scenlang::ConcreteScenario;
use crate::script::{Script, ScriptError};
use crate::vocab::{Action, ParticipantType, Role};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum InspectError {
    #[error("trajectory is empty")]
    EmptyTrajectory,
    #[error("trajectory timestamps must be finite and strictly increasing (index {0})")]
    BadTimestamps(usize),
    #[error("segment {index} matches no action specification: {detail}")]
    Unclassified { index: usize, detail: String },
    #[error("scenario has {found} {role} participants, abstract has {expected}")]
    CountMismatch {
        role: Role,
        expected: usize,
        found: usize,
    },
    #[error(transparent)]
    Script(#[from] ScriptError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajPoint {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
}

impl TrajPoint {
    pub fn pos(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn vel(&self) -> Vec2 {
        Vec2::new(self.vx, self.vy)
    }

    pub fn speed(&self) -> f64 {
        self.vel().norm()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub points: Vec<TrajPoint>,
}

/// One line of a trajectory log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajRecord {
    pub participant: String,
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lane_id: Option<String>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn validate(&self) -> Result<(), InspectError> {
        if self.points.is_empty() {
            return Err(InspectError::EmptyTrajectory);
        }
        for (i, p) in self.points.iter().enumerate() {
            let finite = [p.t, p.x, p.y, p.vx, p.vy].iter().all(|v| v.is_finite());
            if !finite || (i > 0 && p.t <= self.points[i - 1].t) {
                return Err(InspectError::BadTimestamps(i));
            }
        }
        Ok(())
    }

    /// Samples a scripted participant from its first to its last waypoint.
    pub fn from_script(script: &Script, dt: f64) -> Trajectory {
        let (t0, t1) = (script.start_time(), script.end_time());
        let n = ((t1 - t0) / dt).floor() as usize;
        let mut times: Vec<f64> = (0..=n).map(|k| t0 + k as f64 * dt).collect();
        if t1 - times[n] > dt * 1e-6 {
            times.push(t1);
        }
        let points = times
            .into_iter()
            .map(|t| {
                let m = script.sample_at(t);
                TrajPoint {
                    t,
                    x: m.x,
                    y: m.y,
                    vx: m.speed * m.heading.cos(),
                    vy: m.speed * m.heading.sin(),
                }
            })
            .collect();
        Trajectory { points }
    }

    pub fn to_records(&self, participant: &str, map: Option<&RoadMap>) -> Vec<TrajRecord> {
        self.points
            .iter()
            .map(|p| TrajRecord {
                participant: participant.to_string(),
                t: p.t,
                x: p.x,
                y: p.y,
                vx: p.vx,
                vy: p.vy,
                lane_id: map.and_then(|m| {
                    m.locate(p.pos())
                        .map(|(i, _)| m.lane_at(i).id().to_string())
                }),
            })
            .collect()
    }
}

/// Thresholds for segmentation and the action specifications.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InspectParams {
    /// Combined position (m) plus velocity (m/s) deviation that opens a new segment.
    pub tau: f64,
    pub velocity_weight: f64,
    /// Speed-change rate separating steady driving from speed actions (m/s^2).
    pub threshold_c: f64,
    pub brake_decel: f64,
    pub brake_end_speed: f64,
    pub stationary_speed: f64,
    pub stationary_duration: f64,
    pub min_segment_duration: f64,
    pub min_segment_samples: usize,
    /// Slack on the lane-change bearing intervals, in degrees.
    pub bearing_tolerance: f64,
    /// Slack on the bounding-box position check, in meters.
    pub position_tolerance: f64,
    pub speed_tolerance: f64,
    /// Half-width of the parallel/perpendicular cones for pedestrians, in degrees.
    pub walk_cone: f64,
    pub sample_dt: f64,
}

impl Default for InspectParams {
    fn default() -> Self {
        InspectParams {
            tau: 0.5,
            velocity_weight: 1.0,
            threshold_c: 0.5,
            brake_decel: 3.0,
            brake_end_speed: 0.5,
            stationary_speed: 0.1,
            stationary_duration: 1.0,
            min_segment_duration: 0.5,
            min_segment_samples: 4,
            bearing_tolerance: 5.0,
            position_tolerance: 0.3,
            speed_tolerance: 0.5,
            walk_cone: 30.0,
            sample_dt: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParticipantDiff {
    pub name: String,
    pub expected: Vec<Action>,
    pub found: Vec<Action>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub equivalent: bool,
    pub diffs: Vec<ParticipantDiff>,
    pub feasibility: FeasibilityReport,
}

/// Action sequence of every scripted participant, keyed by name, in
/// declaration order.
pub fn scripted_sequences(
    scenario: &ConcreteScenario,
    map: &RoadMap,
    params: &InspectParams,
) -> Vec<(String, Result<Vec<Action>, InspectError>)> {
    scenario
        .participants()
        .map(|def| {
            let seq = Script::build(map, def)
                .map_err(InspectError::from)
                .and_then(|s| {
                    extract_action_sequence(
                        &Trajectory::from_script(&s, params.sample_dt),
                        def.participant_type,
                        map,
                        params,
                    )
                });
            (def.name.clone(), seq)
        })
        .collect()
}

/// Compares each scripted participant against the abstract participant of
/// the same role and position in declaration order.
pub fn check_semantic_equivalence(
    scenario: &ConcreteScenario,
    map: &RoadMap,
    abstract_scenario: &AbstractScenario,
    params: &InspectParams,
) -> Result<EquivalenceReport, InspectError> {
    let expected_npcs: Vec<_> = abstract_scenario
        .participants
        .iter()
        .filter(|p| p.role == Role::Npc)
        .collect();
    let expected_peds: Vec<_> = abstract_scenario
        .participants
        .iter()
        .filter(|p| p.role == Role::Pedestrian)
        .collect();
    if expected_npcs.len() != scenario.npcs.len() {
        return Err(InspectError::CountMismatch {
            role: Role::Npc,
            expected: expected_npcs.len(),
            found: scenario.npcs.len(),
        });
    }
    if expected_peds.len() != scenario.pedestrians.len() {
        return Err(InspectError::CountMismatch {
            role: Role::Pedestrian,
            expected: expected_peds.len(),
            found: scenario.pedestrians.len(),
        });
    }
    let feasibility = check_feasibility(scenario, map);
    let expected = expected_npcs.iter().chain(&expected_peds);
    let mut diffs = Vec::new();
    for ((name, found), spec) in scripted_sequences(scenario, map, params)
        .into_iter()
        .zip(expected)
    {
        let want = canonical_sequence(&spec.behaviors);
        match found {
            Ok(seq) if seq == want => {}
            Ok(seq) => diffs.push(ParticipantDiff {
                name,
                expected: want,
                found: seq,
                error: None,
            }),
            Err(e) => diffs.push(ParticipantDiff {
                name,
                expected: want,
                found: vec![],
                error: Some(e.to_string()),
            }),
        }
    }
    Ok(EquivalenceReport {
        equivalent: diffs.is_empty() && feasibility.is_feasible(),
        diffs,
        feasibility,
    })
}

pub(crate) fn is_pedestrian(kind: ParticipantType) -> bool {
    kind == ParticipantType::Pedestrian
}
