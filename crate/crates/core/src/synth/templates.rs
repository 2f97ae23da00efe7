use super::{RoadDivision, SynthError, SynthParams};
use crate::geom::Vec2;
use crate::map::{Maneuver, RoadMap};
use crate::scenlang::{TrajectoryDef, Waypoint};
use crate::vocab::{Action, ParticipantType, RelativePosition};

/// Where a participant starts inside its division.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Placement {
    /// Index into the division's lanes.
    pub lane: usize,
    /// Offset along that lane (m).
    pub offset: f64,
}

struct VehicleState {
    lane: usize,
    offset: f64,
    speed: f64,
    t: f64,
    waypoints: Vec<Waypoint>,
}

impl VehicleState {
    fn push(&mut self, map: &RoadMap, lane: usize, offset: f64, speed: f64) {
        self.lane = lane;
        self.offset = offset;
        self.speed = speed;
        self.waypoints
            .push(Waypoint::lane(map.lane_at(lane).id(), offset, speed));
    }

    fn ramp(&mut self, map: &RoadMap, to_speed: f64, rate: f64) -> Result<(), SynthError> {
        let d = (self.speed * self.speed - to_speed * to_speed).abs() / (2.0 * rate);
        let target = self.offset + d;
        if target > map.lane_at(self.lane).length() {
            return Err(no_room(map, self.lane));
        }
        if d > 0.0 {
            self.t += 2.0 * d / (self.speed + to_speed);
        }
        self.push(map, self.lane, target, to_speed);
        Ok(())
    }

    fn advance(&mut self, map: &RoadMap, d: f64) -> Result<(), SynthError> {
        let target = self.offset + d;
        if target > map.lane_at(self.lane).length() + 1e-9 {
            return Err(no_room(map, self.lane));
        }
        if self.speed <= 0.0 {
            return Err(SynthError::Template(
                "cannot move on from a standstill without accelerating".into(),
            ));
        }
        self.t += d / self.speed;
        self.push(map, self.lane, target, self.speed);
        Ok(())
    }

    fn dwell(&mut self, map: &RoadMap, secs: f64) {
        self.t += secs;
        let id = map.lane_at(self.lane).id();
        self.waypoints
            .push(Waypoint::lane(id, self.offset, 0.0).at(self.t));
    }
}

fn no_room(map: &RoadMap, lane: usize) -> SynthError {
    SynthError::Template(format!("not enough room on {}", map.lane_at(lane).id()))
}

fn maneuver_for(a: Action) -> Option<Maneuver> {
    match a {
        Action::TurnLeft => Some(Maneuver::TurnLeft),
        Action::TurnRight => Some(Maneuver::TurnRight),
        Action::Cross => Some(Maneuver::Straight),
        _ => None,
    }
}

/// Waypoints that realise `behaviors` in order, starting at `placement`.
pub fn gen_participant_trajectory(
    map: &RoadMap,
    name: &str,
    division: &RoadDivision,
    placement: Placement,
    behaviors: &[Action],
    participant_type: ParticipantType,
    base_speed: f64,
    params: &SynthParams,
) -> Result<TrajectoryDef, SynthError> {
    if behaviors.is_empty() {
        return Err(SynthError::Template("no behaviors".into()));
    }
    let lane_id = division
        .lanes
        .get(placement.lane)
        .ok_or_else(|| SynthError::Template(format!("division {} has no lane {}", division.division_id, placement.lane)))?;
    let lane = map
        .lane_index(lane_id)
        .ok_or_else(|| SynthError::Template(format!("unknown lane {lane_id}")))?;
    let waypoints = if participant_type == ParticipantType::Pedestrian {
        pedestrian(map, division, lane, placement.offset, behaviors, params)?
    } else {
        vehicle(map, lane, placement.offset, behaviors, base_speed, params)?
    };
    Ok(TrajectoryDef {
        name: name.to_string(),
        participant_type,
        waypoints,
    })
}

fn vehicle(
    map: &RoadMap,
    lane: usize,
    offset: f64,
    behaviors: &[Action],
    base_speed: f64,
    params: &SynthParams,
) -> Result<Vec<Waypoint>, SynthError> {
    let mut st = VehicleState {
        lane,
        offset,
        speed: base_speed,
        t: 0.0,
        waypoints: Vec::new(),
    };
    let start_speed = if behaviors[0] == Action::Stop {
        0.0
    } else {
        base_speed
    };
    st.push(map, lane, offset, start_speed);
    for (i, &b) in behaviors.iter().enumerate() {
        let mut limit = map.lane_at(st.lane).def.speed_limit;
        // stay slow enough for a junction still ahead
        if let Some(m) = behaviors[i + 1..].iter().find_map(|&a| maneuver_for(a)) {
            for c in map.successors(st.lane) {
                if map.lane_at(c).def.junction && map.connector_maneuver(c) == m {
                    limit = limit.min(map.lane_at(c).def.speed_limit);
                }
            }
        }
        match b {
            Action::FollowLane => st.advance(map, params.follow_distance)?,
            Action::Accelerate => {
                let to = (st.speed + params.speed_step).min(limit);
                if to - st.speed < 1.0 {
                    return Err(SynthError::Template("already at the speed limit".into()));
                }
                st.ramp(map, to, params.comfort_accel)?;
            }
            Action::Decelerate => {
                let to = (st.speed * params.decel_floor_ratio).max(params.decel_floor);
                if st.speed - to < 1.0 {
                    return Err(SynthError::Template("too slow to decelerate".into()));
                }
                st.ramp(map, to, params.comfort_accel)?;
            }
            Action::Brake => {
                if st.speed <= 0.0 {
                    return Err(SynthError::Template("cannot brake from a standstill".into()));
                }
                st.ramp(map, 0.0, params.brake_decel)?;
            }
            Action::Stop => {
                if st.speed > 0.0 {
                    st.ramp(map, 0.0, params.comfort_accel)?;
                }
                st.dwell(map, params.stop_dwell);
            }
            Action::ChangeLeft | Action::ChangeRight => {
                let target = if b == Action::ChangeLeft {
                    map.left_of(st.lane)
                } else {
                    map.right_of(st.lane)
                }
                .ok_or_else(|| SynthError::Template(format!("no lane to {b} into from {}", map.lane_at(st.lane).id())))?;
                if st.speed <= 0.0 {
                    return Err(SynthError::Template("cannot change lanes from a standstill".into()));
                }
                let d = (params.change_time * st.speed).max(params.min_change_distance);
                let to = st.offset + d;
                if to > map.lane_at(target).length() - 1.0 {
                    return Err(no_room(map, target));
                }
                st.t += d / st.speed;
                st.push(map, target, to, st.speed);
            }
            Action::TurnLeft | Action::TurnRight | Action::Cross => {
                let want = maneuver_for(b).expect("junction action");
                let conn = map
                    .successors(st.lane)
                    .find(|&s| map.lane_at(s).def.junction && map.connector_maneuver(s) == want)
                    .ok_or_else(|| SynthError::Template(format!("no {b} connector from {}", map.lane_at(st.lane).id())))?;
                if st.speed <= 0.0 {
                    return Err(SynthError::Template("cannot enter a junction from a standstill".into()));
                }
                let end = map.lane_at(st.lane).length();
                if end > st.offset + 1e-9 {
                    let d = end - st.offset;
                    st.advance(map, d)?;
                }
                let clen = map.lane_at(conn).length();
                st.t += clen / st.speed;
                st.push(map, conn, 0.0, st.speed);
                st.push(map, conn, clen, st.speed);
                let exit = map
                    .successors(conn)
                    .next()
                    .ok_or_else(|| SynthError::Template("connector has no exit".into()))?;
                st.t += params.exit_distance / st.speed;
                st.push(map, exit, params.exit_distance, st.speed);
            }
            Action::DriveThrough => {
                let next = map
                    .successors(st.lane)
                    .find(|&s| !map.lane_at(s).def.junction)
                    .ok_or_else(|| SynthError::Template(format!("{} has no successor to drive through to", map.lane_at(st.lane).id())))?;
                if st.speed <= 0.0 {
                    return Err(SynthError::Template("cannot drive through from a standstill".into()));
                }
                let end = map.lane_at(st.lane).length();
                st.t += (end - st.offset + params.exit_distance) / st.speed;
                st.push(map, next, params.exit_distance, st.speed);
            }
            Action::WalkAlong | Action::WalkAcross | Action::Stand => {
                return Err(SynthError::Template(format!("`{b}` is a pedestrian behavior")))
            }
        }
    }
    Ok(st.waypoints)
}

/// Curb points on both sides of the road through `p`, right side first.
fn curbs(map: &RoadMap, p: Vec2, heading: f64, margin: f64) -> (Vec2, Vec2) {
    let left = Vec2::from_angle(heading).perp();
    let edge = |dir: f64| {
        let mut s = 0.0;
        while s < 60.0 && map.on_road(p + left * (dir * (s + 0.25))) {
            s += 0.25;
        }
        p + left * (dir * (s + margin))
    };
    (edge(-1.0), edge(1.0))
}

fn pedestrian(
    map: &RoadMap,
    division: &RoadDivision,
    lane: usize,
    offset: f64,
    behaviors: &[Action],
    params: &SynthParams,
) -> Result<Vec<Waypoint>, SynthError> {
    let (p, h) = map.lane_at(lane).point_at(offset);
    let (right, left) = curbs(map, p, h, params.curb_margin);
    let start_left = matches!(
        division.division_id,
        RelativePosition::LeftFront | RelativePosition::LeftBehind
    );
    let (mut at, mut far) = if start_left { (left, right) } else { (right, left) };
    let mut t = 0.0;
    let v = params.walk_speed;
    let mut wps = vec![Waypoint::free(at.x, at.y, 0.0)];
    let along = Vec2::from_angle(h);
    for &b in behaviors {
        let moving_next = |wps: &mut Vec<Waypoint>, at: Vec2| {
            if wps.last().is_some_and(|w| w.speed == 0.0) {
                wps.push(Waypoint::free(at.x, at.y, v));
            }
        };
        match b {
            Action::Stand => {
                t += params.stand_dwell;
                wps.push(Waypoint::free(at.x, at.y, 0.0).at(t));
            }
            Action::Cross => {
                if map.on_road(at) {
                    return Err(SynthError::Template("pedestrian is not at a curb".into()));
                }
                moving_next(&mut wps, at);
                t += at.dist(far) / v;
                std::mem::swap(&mut at, &mut far);
                wps.push(Waypoint::free(at.x, at.y, v));
            }
            Action::WalkAcross => {
                moving_next(&mut wps, at);
                let mid = at.lerp(p, 0.999);
                t += at.dist(mid) / v;
                at = mid;
                wps.push(Waypoint::free(at.x, at.y, v));
            }
            Action::WalkAlong => {
                moving_next(&mut wps, at);
                let to = at + along * params.walk_distance;
                t += params.walk_distance / v;
                far = far + along * params.walk_distance;
                at = to;
                wps.push(Waypoint::free(at.x, at.y, v));
            }
            other => {
                return Err(SynthError::Template(format!(
                    "no pedestrian template for `{other}`"
                )))
            }
        }
    }
    if wps.len() < 2 {
        return Err(SynthError::Template("trajectory too short".into()));
    }
    Ok(wps)
}
