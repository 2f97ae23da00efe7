//! Kinematic micro-simulator: scripted participants, a policy-driven ego
//! vehicle, traces and assertion monitoring.

mod monitor;
mod policy;

pub use monitor::{
    longest_standstill, min_clearance_series, monitor_assertions, Outcome, Verdict,
};
pub use policy::{
    builtin_policies, create_policy, LaneKeeper, LaneKeeperParams, ScriptedPolicy, POLICY_NAMES,
};

use crate::geom::{Obb, Vec2};
use crate::inspect::{TrajPoint, Trajectory};
use crate::map::{RoadMap, Route};
use crate::scenlang::ConcreteScenario;
use crate::script::{MotionSample, Script, ScriptError};
use crate::vocab::ParticipantType;
use serde::{Deserialize, Serialize};

pub const EGO_ID: &str = "ego";

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("time step {0} is outside (0, 0.5]")]
    BadStep(f64),
    #[error(transparent)]
    Script(#[from] ScriptError),
    #[error("ego lane `{0}` is not on the map")]
    UnknownLane(String),
    #[error("no route from the ego start to its destination")]
    NoRoute,
    #[error("unknown policy `{0}`")]
    UnknownPolicy(String),
    #[error("policy `{0}` needs a reference trajectory")]
    NeedsTrajectory(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub dt: f64,
    pub horizon: f64,
    pub sensing_radius: f64,
    /// Penetration below this depth (m) is not a collision.
    pub collision_tolerance: f64,
    pub max_accel: f64,
    pub max_curvature: f64,
    pub initial_speed: f64,
    /// Time constant of the ego speed controller (s).
    pub speed_response: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt: 0.1,
            horizon: 60.0,
            sensing_radius: 60.0,
            collision_tolerance: 0.01,
            max_accel: 4.0,
            max_curvature: 0.2,
            initial_speed: 0.0,
            speed_response: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntityState {
    pub id: String,
    pub kind: ParticipantType,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub speed: f64,
    pub half_length: f64,
    pub half_width: f64,
}

impl EntityState {
    pub fn pos(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn vel(&self) -> Vec2 {
        Vec2::from_angle(self.heading) * self.speed
    }

    pub fn obb(&self) -> Obb {
        Obb {
            center: self.pos(),
            heading: self.heading,
            half_length: self.half_length,
            half_width: self.half_width,
        }
    }

    fn new(id: &str, kind: ParticipantType, m: &MotionSample) -> Self {
        let (l, w) = kind.footprint();
        EntityState {
            id: id.to_string(),
            kind,
            x: m.x,
            y: m.y,
            heading: m.heading,
            speed: m.speed,
            half_length: l / 2.0,
            half_width: w / 2.0,
        }
    }
}

/// All entities at one step; the ego is always first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub step: usize,
    pub time: f64,
    pub entities: Vec<EntityState>,
}

impl WorldState {
    pub fn ego(&self) -> &EntityState {
        &self.entities[0]
    }

    pub fn others(&self) -> &[EntityState] {
        &self.entities[1..]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Horizon,
    AllAssertionsResolved,
    Collision,
    PolicyFault,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExecutionTrace {
    pub dt: f64,
    /// Ego destination point.
    pub destination: Vec2,
    pub collision_tolerance: f64,
    pub states: Vec<WorldState>,
    pub termination: Termination,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fault: Option<String>,
}

impl ExecutionTrace {
    pub fn entity_ids(&self) -> Vec<String> {
        self.states
            .first()
            .map(|s| s.entities.iter().map(|e| e.id.clone()).collect())
            .unwrap_or_default()
    }

    /// Realised trajectory of one entity in the inspector's format.
    pub fn trajectory(&self, id: &str) -> Trajectory {
        let points = self
            .states
            .iter()
            .filter_map(|s| {
                s.entities.iter().find(|e| e.id == id).map(|e| {
                    let v = e.vel();
                    TrajPoint {
                        t: s.time,
                        x: e.x,
                        y: e.y,
                        vx: v.x,
                        vy: v.y,
                    }
                })
            })
            .collect();
        Trajectory { points }
    }

    /// Positions of every non-ego entity, in entity order.
    pub fn participant_paths(&self) -> Vec<Vec<(f64, f64)>> {
        let n = self.states.first().map_or(0, |s| s.entities.len());
        (1..n)
            .map(|i| self.states.iter().map(|s| (s.entities[i].x, s.entities[i].y)).collect())
            .collect()
    }

    /// One JSON object per step.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for s in &self.states {
            out += &serde_json::to_string(s).expect("world state serializes");
            out.push('\n');
        }
        out
    }
}

/// Lateral control request.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Steer {
    /// Track a lane centreline (map lane index), shifted left by `offset` m.
    Lane { lane: usize, offset: f64 },
    Curvature(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Command {
    Drive { target_speed: f64, steer: Steer },
    /// Place the ego exactly (replay of a recorded motion).
    Pose(MotionSample),
}

pub struct Observation<'a> {
    pub time: f64,
    pub dt: f64,
    pub ego: &'a EntityState,
    /// Entities within the sensing radius.
    pub visible: Vec<&'a EntityState>,
    pub map: &'a RoadMap,
    pub route: &'a Route,
    pub destination: Vec2,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("policy fault: {0}")]
pub struct PolicyFault(pub String);

pub trait EgoPolicy {
    fn name(&self) -> &str;
    fn step(&mut self, obs: &Observation<'_>) -> Result<Command, PolicyFault>;
}

/// Colliding entity index pairs, by oriented-box overlap.
pub fn detect_collision(state: &WorldState, tolerance: f64) -> Vec<(usize, usize)> {
    let boxes: Vec<Obb> = state.entities.iter().map(|e| e.obb()).collect();
    let mut out = Vec::new();
    for i in 0..boxes.len() {
        for j in i + 1..boxes.len() {
            if boxes[i].collides(&boxes[j], tolerance) {
                out.push((i, j));
            }
        }
    }
    out
}

/// Point on a lane, continued past its end through the route or the
/// first successor.
pub fn path_point(map: &RoadMap, route: &Route, mut lane: usize, mut s: f64) -> (Vec2, f64) {
    for _ in 0..8 {
        let len = map.lane_at(lane).length();
        if s <= len {
            break;
        }
        match next_lane(map, route, lane) {
            Some(n) => {
                s -= len;
                lane = n;
            }
            None => break,
        }
    }
    map.lane_at(lane).point_at(s)
}

/// The lane driven after `lane` ends.
pub fn next_lane(map: &RoadMap, route: &Route, lane: usize) -> Option<usize> {
    if let Some(j) = route.lanes.iter().position(|&l| l == lane) {
        if j + 1 < route.lanes.len() && map.successors(lane).any(|s| s == route.lanes[j + 1]) {
            return Some(route.lanes[j + 1]);
        }
    }
    let mut succ = map.successors(lane);
    let first = succ.next()?;
    Some(
        std::iter::once(first)
            .chain(succ)
            .find(|&s| !map.lane_at(s).def.junction)
            .unwrap_or(first),
    )
}

fn pure_pursuit(
    map: &RoadMap,
    route: &Route,
    ego: &EntityState,
    lane: usize,
    offset: f64,
) -> f64 {
    let pr = map.lane_at(lane).project(ego.pos());
    let lookahead = (3.0 + 0.8 * ego.speed).clamp(5.0, 15.0);
    let (p, h) = path_point(map, route, lane, pr.offset.max(0.0) + lookahead);
    let target = p + Vec2::from_angle(h).perp() * offset;
    let d = target - ego.pos();
    let dist = d.norm().max(1e-6);
    let alpha = crate::geom::wrap_angle(d.angle() - ego.heading);
    2.0 * alpha.sin() / dist
}

struct Participant {
    id: String,
    kind: ParticipantType,
    script: Script,
}

/// Runs a scenario with `policy` driving the ego vehicle.
pub fn run_scenario(
    scenario: &ConcreteScenario,
    map: &RoadMap,
    policy: &mut dyn EgoPolicy,
    config: &SimConfig,
) -> Result<ExecutionTrace, SimError> {
    let dt = config.dt;
    if !(dt > 0.0 && dt <= 0.5) {
        return Err(SimError::BadStep(dt));
    }
    let participants: Vec<Participant> = scenario
        .participants()
        .map(|def| {
            Ok(Participant {
                id: def.name.clone(),
                kind: def.participant_type,
                script: Script::build(map, def)?,
            })
        })
        .collect::<Result<_, ScriptError>>()?;
    let lane_of = |id: &str| map.lane_index(id).ok_or_else(|| SimError::UnknownLane(id.to_string()));
    let start_lane = lane_of(&scenario.ego.start.lane_id)?;
    let dest_lane = lane_of(&scenario.ego.destination.lane_id)?;
    let route = map
        .plan_route(
            (start_lane, scenario.ego.start.offset),
            (dest_lane, scenario.ego.destination.offset),
        )
        .ok_or(SimError::NoRoute)?;
    let destination = map.lane_at(dest_lane).point_at(scenario.ego.destination.offset).0;
    let goal = scenario.destination_goal();
    let (p0, h0) = map.lane_at(start_lane).point_at(scenario.ego.start.offset);
    let mut ego = EntityState::new(
        EGO_ID,
        scenario.ego.vehicle_type,
        &MotionSample {
            t: 0.0,
            x: p0.x,
            y: p0.y,
            heading: h0,
            speed: config.initial_speed,
        },
    );
    let steps = (config.horizon / dt + 1e-9).floor() as usize;
    let mut states = Vec::with_capacity(steps + 1);
    let mut termination = Termination::Horizon;
    let mut fault = None;
    for k in 0..=steps {
        let t = k as f64 * dt;
        let mut entities = Vec::with_capacity(participants.len() + 1);
        entities.push(ego.clone());
        for p in &participants {
            entities.push(EntityState::new(&p.id, p.kind, &p.script.sample_at(t)));
        }
        states.push(WorldState {
            step: k,
            time: t,
            entities,
        });
        let state = states.last().expect("just pushed");
        if detect_collision(state, config.collision_tolerance)
            .iter()
            .any(|&(i, _)| i == 0)
        {
            termination = Termination::Collision;
            break;
        }
        if let Some((within, radius)) = goal {
            if ego.pos().dist(destination) <= radius || t >= within - 1e-9 {
                termination = Termination::AllAssertionsResolved;
                break;
            }
        }
        if k == steps {
            break;
        }
        let visible: Vec<&EntityState> = state
            .others()
            .iter()
            .filter(|e| e.pos().dist(ego.pos()) <= config.sensing_radius)
            .collect();
        let obs = Observation {
            time: t,
            dt,
            ego: state.ego(),
            visible,
            map,
            route: &route,
            destination,
        };
        match policy.step(&obs) {
            Ok(Command::Pose(m)) => {
                ego.x = m.x;
                ego.y = m.y;
                ego.heading = m.heading;
                ego.speed = m.speed;
            }
            Ok(Command::Drive {
                target_speed,
                steer,
            }) => {
                let kappa = match steer {
                    Steer::Lane { lane, offset } => pure_pursuit(map, &route, &ego, lane, offset),
                    Steer::Curvature(c) => c,
                }
                .clamp(-config.max_curvature, config.max_curvature);
                let accel = ((target_speed.max(0.0) - ego.speed) / config.speed_response)
                    .clamp(-config.max_accel, config.max_accel);
                let v0 = ego.speed;
                let v1 = (v0 + accel * dt).max(0.0);
                let v = 0.5 * (v0 + v1);
                let h_mid = ego.heading + 0.5 * v * kappa * dt;
                ego.x += v * h_mid.cos() * dt;
                ego.y += v * h_mid.sin() * dt;
                ego.heading = crate::geom::wrap_angle(ego.heading + v * kappa * dt);
                ego.speed = v1;
            }
            Err(e) => {
                termination = Termination::PolicyFault;
                fault = Some(e.0);
                break;
            }
        }
    }
    Ok(ExecutionTrace {
        dt,
        destination,
        collision_tolerance: config.collision_tolerance,
        states,
        termination,
        fault,
    })
}

#[cfg(test)]
mod tests;
