//! Built-in ego policies: a route-following lane keeper, two flawed
//! variants of it, and a replay policy.

use super::{next_lane, Command, EgoPolicy, EntityState, Observation, PolicyFault, SimError, Steer};
use crate::geom::{wrap_angle, Vec2};
use crate::inspect::Trajectory;
use crate::map::{Maneuver, RoadMap, Route};
use crate::script::MotionSample;
use crate::vocab::ParticipantType;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub const POLICY_NAMES: [&str; 4] = [
    "lanekeeper",
    "lanekeeper-staticbug",
    "lanekeeper-blindrear",
    "scripted",
];

pub fn builtin_policies() -> &'static [&'static str] {
    &POLICY_NAMES
}

/// Instantiates a policy by name. `scripted` needs a trajectory and is
/// built with [`ScriptedPolicy::new`].
pub fn create_policy(
    name: &str,
    params: &LaneKeeperParams,
) -> Result<Box<dyn EgoPolicy + Send>, SimError> {
    match name {
        "lanekeeper" => Ok(Box::new(LaneKeeper::new(params.clone()))),
        "lanekeeper-staticbug" => Ok(Box::new(LaneKeeper::with_static_bug(params.clone()))),
        "lanekeeper-blindrear" => Ok(Box::new(LaneKeeper::with_blind_rear(params.clone()))),
        "scripted" => Err(SimError::NeedsTrajectory(name.into())),
        other => Err(SimError::UnknownPolicy(other.into())),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LaneKeeperParams {
    /// Boundary distance the policy tries to keep from everything (m).
    pub clearance: f64,
    pub standstill_gap: f64,
    pub time_headway: f64,
    pub comfort_decel: f64,
    pub corridor_margin: f64,
    pub nudge_margin: f64,
    pub max_nudge: f64,
    /// Leads slower than this are overtaken when possible (m/s).
    pub overtake_below: f64,
    /// Standstill gap behind vehicles, leaving room to pull out around them.
    pub pass_gap: f64,
    /// Speed cap while pulling out to pass (m/s).
    pub pull_out_speed: f64,
    pub overtake_within: f64,
    /// Gap ahead of the passed vehicle before moving back (m), plus
    /// `return_time` seconds of its travel.
    pub return_gap: f64,
    pub return_time: f64,
    /// No overtaking this close to a junction (m).
    pub junction_clearance: f64,
    pub change_front_gap: f64,
    pub change_rear_gap: f64,
    /// Seconds of closing speed added to the lane-change gaps.
    pub change_time: f64,
    pub predict_horizon: f64,
    pub lateral_accel: f64,
    pub path_length: f64,
    /// Below this speed the static-bug variant takes an entity for a
    /// static obstacle (m/s).
    pub static_speed: f64,
    /// Drift from the stored snapshot that triggers a re-plan (m).
    pub static_tolerance: f64,
    /// Seconds a static obstacle must hold still before it is passed.
    pub static_confirm: f64,
    /// Standstill gap used while re-planning around a static obstacle.
    pub static_gap: f64,
}

impl Default for LaneKeeperParams {
    fn default() -> Self {
        LaneKeeperParams {
            clearance: 2.0,
            standstill_gap: 3.0,
            time_headway: 1.5,
            comfort_decel: 2.5,
            corridor_margin: 0.3,
            nudge_margin: 0.4,
            max_nudge: 0.9,
            overtake_below: 0.7,
            pass_gap: 12.0,
            pull_out_speed: 3.0,
            overtake_within: 30.0,
            return_gap: 3.0,
            return_time: 3.0,
            junction_clearance: 50.0,
            change_front_gap: 8.0,
            change_rear_gap: 10.0,
            change_time: 3.0,
            predict_horizon: 3.0,
            lateral_accel: 2.5,
            path_length: 60.0,
            static_speed: 0.7,
            static_tolerance: 0.5,
            static_confirm: 2.0,
            static_gap: 0.5,
        }
    }
}

#[derive(Clone, Debug)]
struct Snapshot {
    state: EntityState,
    since: f64,
    replanned: bool,
}

#[derive(Clone, Debug)]
struct Pass {
    left: bool,
    lead: String,
}

#[derive(Clone, Copy, Debug)]
struct PathSample {
    s: f64,
    p: Vec2,
    h: f64,
    lane: usize,
}

#[derive(Clone, Copy, Debug)]
struct Obstacle<'a> {
    gap: f64,
    along_speed: f64,
    entity: &'a EntityState,
}

/// Follows the planned route, keeps headway, passes slow vehicles on a
/// free neighbouring lane and shifts inside its lane away from vehicles
/// alongside.
pub struct LaneKeeper {
    name: &'static str,
    params: LaneKeeperParams,
    static_bug: bool,
    blind_rear: bool,
    home: Option<usize>,
    route_index: usize,
    pass: Option<Pass>,
    statics: BTreeMap<String, Snapshot>,
}

impl LaneKeeper {
    pub fn new(params: LaneKeeperParams) -> Self {
        LaneKeeper {
            name: "lanekeeper",
            params,
            static_bug: false,
            blind_rear: false,
            home: None,
            route_index: 0,
            pass: None,
            statics: BTreeMap::new(),
        }
    }

    /// Takes entities slower than `static_speed` for static obstacles and
    /// keeps their first observed pose.
    pub fn with_static_bug(params: LaneKeeperParams) -> Self {
        LaneKeeper {
            name: "lanekeeper-staticbug",
            static_bug: true,
            ..LaneKeeper::new(params)
        }
    }

    /// Does not look behind on the neighbouring lane before changing.
    pub fn with_blind_rear(params: LaneKeeperParams) -> Self {
        LaneKeeper {
            name: "lanekeeper-blindrear",
            blind_rear: true,
            ..LaneKeeper::new(params)
        }
    }

    fn perceive(&mut self, obs: &Observation<'_>) -> Vec<EntityState> {
        if !self.static_bug {
            return obs.visible.iter().map(|e| (*e).clone()).collect();
        }
        let mut out = Vec::with_capacity(obs.visible.len());
        for e in &obs.visible {
            if e.speed < self.params.static_speed {
                let snap = self.statics.entry(e.id.clone()).or_insert_with(|| Snapshot {
                    state: still(e),
                    since: obs.time,
                    replanned: false,
                });
                if snap.state.pos().dist(e.pos()) > self.params.static_tolerance {
                    snap.state = still(e);
                    snap.since = obs.time;
                    snap.replanned = true;
                }
                out.push(snap.state.clone());
            } else {
                self.statics.remove(&e.id);
                out.push((*e).clone());
            }
        }
        out
    }

    fn confirmed_static(&self, id: &str, now: f64) -> Option<bool> {
        self.statics
            .get(id)
            .map(|s| now - s.since >= self.params.static_confirm)
    }

    fn advance_home(&mut self, map: &RoadMap, route: &Route, ego: Vec2) {
        let mut home = self.home.unwrap_or(route.lanes[0]);
        for _ in 0..8 {
            let lane = map.lane_at(home);
            if lane.project(ego).offset <= lane.length() {
                break;
            }
            match next_lane(map, route, home) {
                Some(n) => {
                    if route.lanes.get(self.route_index + 1) == Some(&n)
                        && route.lanes[self.route_index] == home
                    {
                        self.route_index += 1;
                    }
                    home = n;
                }
                None => break,
            }
        }
        self.home = Some(home);
    }

    fn wanted_change(&self, route: &Route) -> Option<usize> {
        let i = self.route_index;
        if route.lanes.get(i) != self.home.as_ref() || i + 1 >= route.lanes.len() {
            return None;
        }
        matches!(
            route.maneuvers[i],
            Maneuver::ChangeLeft | Maneuver::ChangeRight
        )
        .then(|| route.lanes[i + 1])
    }

    /// True when moving into `lane` keeps the lane-change gaps to every
    /// entity on it, except `ignore`.
    fn lane_is_free(
        &self,
        map: &RoadMap,
        lane: usize,
        ego: &EntityState,
        seen: &[EntityState],
        ignore: Option<&str>,
    ) -> bool {
        let l = map.lane_at(lane);
        let pe = l.project(ego.pos());
        let p = &self.params;
        seen.iter().all(|e| {
            if Some(e.id.as_str()) == ignore {
                return true;
            }
            let pr = l.project(e.pos());
            if pr.lateral.abs() > l.def.width / 2.0 + e.half_width {
                return true;
            }
            let lon = pr.offset - pe.offset;
            let along = e.speed * (e.heading - pr.heading).cos();
            if lon >= 0.0 {
                let gap = lon - ego.half_length - e.half_length;
                gap > p.change_front_gap + (ego.speed - along).max(0.0) * p.change_time
            } else if self.blind_rear {
                // only entities overlapping the ego are noticed
                -lon > ego.half_length + e.half_length
            } else {
                let gap = -lon - ego.half_length - e.half_length;
                gap > p.change_rear_gap + (along - ego.speed).max(0.0) * p.change_time
            }
        })
    }

    fn sample_path(&self, obs: &Observation<'_>, lane: usize) -> Vec<PathSample> {
        let map = obs.map;
        let start = map.lane_at(lane).project(obs.ego.pos()).offset.max(0.0);
        let mut out = Vec::new();
        let (mut cur, mut base) = (lane, 0.0);
        let mut k = 0.0;
        while k <= self.params.path_length {
            let mut s = start + k - base;
            while s > map.lane_at(cur).length() {
                match next_lane(map, obs.route, cur) {
                    Some(n) => {
                        base += map.lane_at(cur).length();
                        s -= map.lane_at(cur).length();
                        cur = n;
                    }
                    None => break,
                }
            }
            let (p, h) = map.lane_at(cur).point_at(s);
            out.push(PathSample {
                s: k,
                p,
                h,
                lane: cur,
            });
            k += 1.0;
        }
        out
    }

    /// Nearest entity in the swept corridor of `path`, now or within the
    /// prediction horizon.
    fn nearest_obstacle<'a>(
        &self,
        path: &[PathSample],
        ego: &EntityState,
        lateral0: f64,
        seen: &'a [EntityState],
    ) -> Option<Obstacle<'a>> {
        let p = &self.params;
        let blend = (1.5 * (3.0 + 0.8 * ego.speed)).max(10.0);
        let mut best: Option<Obstacle<'a>> = None;
        for e in seen {
            let mut steps = vec![0.0];
            if e.speed > 0.05 {
                let n = (p.predict_horizon / 0.5).round() as usize;
                steps.extend((1..=n).map(|k| k as f64 * 0.5));
            }
            for (i, &tau) in steps.iter().enumerate() {
                let c = e.pos() + e.vel() * tau;
                let Some(hit) = corridor_hit(path, c, e, ego, lateral0, blend, p.corridor_margin)
                else {
                    continue;
                };
                if hit.0 <= 0.0 {
                    break;
                }
                let along = if i == 0 {
                    (e.speed * (e.heading - hit.1).cos()).max(0.0)
                } else {
                    0.0
                };
                let gap = hit.0 - ego.half_length - hit.2;
                if best.as_ref().map_or(true, |b| gap < b.gap) {
                    best = Some(Obstacle {
                        gap,
                        along_speed: along,
                        entity: e,
                    });
                }
                break;
            }
        }
        best
    }

    /// Lateral shift inside `lane` away from entities alongside.
    fn nudge(&self, path: &[PathSample], ego: &EntityState, seen: &[EntityState]) -> f64 {
        let p = &self.params;
        let Some(here) = path.first() else {
            return 0.0;
        };
        let t = Vec2::from_angle(here.h);
        let n = t.perp();
        let window = ego.speed * 1.5 + 3.0;
        let mut shift: f64 = 0.0;
        for e in seen {
            let d = e.pos() - here.p;
            let (lon, lat) = (d.dot(t), d.dot(n));
            let dh = e.heading - here.h;
            let ext_lon = e.half_length * dh.cos().abs() + e.half_width * dh.sin().abs();
            let ext_lat = e.half_length * dh.sin().abs() + e.half_width * dh.cos().abs();
            if lon.abs() > ego.half_length + ext_lon + window {
                continue;
            }
            let sep = lat.abs() - ego.half_width - ext_lat;
            if sep < p.corridor_margin {
                continue;
            }
            let push = p.clearance + p.nudge_margin - sep;
            if push > 0.0 {
                shift -= push * lat.signum();
            }
        }
        shift.clamp(-p.max_nudge, p.max_nudge)
    }

    fn cruise_speed(&self, path: &[PathSample], map: &RoadMap) -> f64 {
        let b = self.params.comfort_decel;
        path.iter()
            .map(|ps| {
                let lane = map.lane_at(ps.lane);
                let mut limit = lane.def.speed_limit;
                if lane.def.junction && lane.length() > 0.0 {
                    let k = wrap_angle(lane.end_heading() - lane.start_heading()).abs()
                        / lane.length();
                    if k > 1e-6 {
                        limit = limit.min((self.params.lateral_accel / k).sqrt());
                    }
                }
                (limit * limit + 2.0 * b * ps.s).sqrt()
            })
            .fold(f64::INFINITY, f64::min)
    }

    fn distance_to_junction(&self, path: &[PathSample], map: &RoadMap) -> f64 {
        path.iter()
            .find(|ps| map.lane_at(ps.lane).def.junction)
            .map_or(f64::INFINITY, |ps| ps.s)
    }

    fn follow_speed(&self, ob: &Obstacle<'_>, ego_speed: f64, standstill: f64) -> f64 {
        let p = &self.params;
        let room = ob.gap - standstill - p.time_headway * ego_speed;
        (ob.along_speed * ob.along_speed + 2.0 * p.comfort_decel * room)
            .max(0.0)
            .sqrt()
    }
}

fn still(e: &EntityState) -> EntityState {
    EntityState {
        speed: 0.0,
        ..e.clone()
    }
}

/// Distance along `path` where entity `e` centred at `c` enters the
/// corridor, the path heading there and the entity's extent along it.
fn corridor_hit(
    path: &[PathSample],
    c: Vec2,
    e: &EntityState,
    ego: &EntityState,
    lateral0: f64,
    blend: f64,
    margin: f64,
) -> Option<(f64, f64, f64)> {
    let (k, _) = path
        .iter()
        .enumerate()
        .map(|(k, ps)| (k, ps.p.dist(c)))
        .min_by(|a, b| a.1.total_cmp(&b.1))?;
    let ps = path[k];
    let t = Vec2::from_angle(ps.h);
    let shift = lateral0 * (1.0 - ps.s / blend).max(0.0);
    let d = c - (ps.p + t.perp() * shift);
    let (lon, lat) = (d.dot(t), d.dot(t.perp()));
    if lon.abs() > 1.0 {
        return None;
    }
    let dh = e.heading - ps.h;
    let ext_lon = e.half_length * dh.cos().abs() + e.half_width * dh.sin().abs();
    let ext_lat = e.half_length * dh.sin().abs() + e.half_width * dh.cos().abs();
    (lat.abs() < ego.half_width + ext_lat + margin).then_some((ps.s + lon, ps.h, ext_lon))
}

impl EgoPolicy for LaneKeeper {
    fn name(&self) -> &str {
        self.name
    }

    fn step(&mut self, obs: &Observation<'_>) -> Result<Command, PolicyFault> {
        let map = obs.map;
        let route = obs.route;
        if route.lanes.is_empty() {
            return Err(PolicyFault("empty route".into()));
        }
        let ego = obs.ego;
        let seen = self.perceive(obs);
        self.advance_home(map, route, ego.pos());
        let home = self.home.expect("set by advance_home");

        // a pass onto the lane the route changes to anyway becomes the change
        if let (Some(pass), Some(w)) = (&self.pass, self.wanted_change(route)) {
            let side = if pass.left { map.left_of(home) } else { map.right_of(home) };
            if side == Some(w) {
                self.pass = None;
            }
        }
        let want = self.wanted_change(route);
        if let Some(w) = want {
            if map.lane_at(w).project(ego.pos()).lateral.abs() < 1.0 {
                self.home = Some(w);
                self.route_index += 1;
                self.pass = None;
            }
        }
        let home = self.home.expect("home lane");
        let want = self.wanted_change(route);
        let home_path = self.sample_path(obs, home);
        let to_junction = self.distance_to_junction(&home_path, map);
        let lat_home = map.lane_at(home).project(ego.pos()).lateral;

        // passing: give up when the side lane ends or a junction nears
        if let Some(pass) = self.pass.clone() {
            let side = if pass.left { map.left_of(home) } else { map.right_of(home) };
            let lead = seen.iter().find(|e| e.id == pass.lead);
            let mut done = side.is_none();
            if let (Some(lead), false) = (lead, done) {
                if self.static_bug
                    && self.statics.get(&lead.id).is_some_and(|s| s.replanned)
                    && lat_home.abs() < 1.0
                {
                    // the obstacle moved: the pass plan is dropped
                    done = true;
                } else {
                    let l = map.lane_at(home);
                    let ahead = l.project(ego.pos()).offset - l.project(lead.pos()).offset
                        - ego.half_length
                        - lead.half_length;
                    let need = self.params.return_gap + self.params.return_time * lead.speed;
                    if (ahead >= need || to_junction < 30.0)
                        && self.lane_is_free(map, home, ego, &seen, Some(&lead.id))
                    {
                        done = true;
                    }
                }
            } else {
                done = done || lead.is_none();
                if lead.is_none() && !self.lane_is_free(map, home, ego, &seen, None) {
                    done = false;
                }
            }
            if done {
                self.pass = None;
            }
        }

        let mut target = home;
        if let Some(pass) = &self.pass {
            let side = if pass.left { map.left_of(home) } else { map.right_of(home) };
            target = side.unwrap_or(home);
        } else if let Some(w) = want {
            if !map.lane_at(home).def.junction && self.lane_is_free(map, w, ego, &seen, None) {
                target = w;
            }
        }

        // overtaking a slow lead on the home lane
        if self.pass.is_none() && target == home && want.is_none() {
            let lateral0 = 0.0;
            if let Some(ob) = self.nearest_obstacle(&home_path, ego, lateral0, &seen) {
                let lead = ob.entity;
                let slow = ob.along_speed < self.params.overtake_below
                    && lead.kind != ParticipantType::Pedestrian
                    && ob.gap < self.params.overtake_within
                    && (lead.heading - home_path[0].h).cos() > 0.5;
                let confirmed = !self.static_bug
                    || self.confirmed_static(&lead.id, obs.time).unwrap_or(true);
                let far_from_junction = to_junction > self.params.junction_clearance
                    && !map.lane_at(home).def.junction;
                if slow && confirmed && far_from_junction {
                    for left in [true, false] {
                        let side = if left { map.left_of(home) } else { map.right_of(home) };
                        if let Some(s) = side {
                            if self.lane_is_free(map, s, ego, &seen, Some(&lead.id)) {
                                self.pass = Some(Pass {
                                    left,
                                    lead: lead.id.clone(),
                                });
                                target = s;
                                break;
                            }
                        }
                    }
                }
            }
        }

        let path = if target == home {
            home_path
        } else {
            self.sample_path(obs, target)
        };
        let lateral0 = map.lane_at(target).project(ego.pos()).lateral;
        let mut speed = self.cruise_speed(&path, map);
        if let Some(ob) = self.nearest_obstacle(&path, ego, lateral0, &seen) {
            let standstill = if self.static_bug
                && self.statics.get(&ob.entity.id).is_some_and(|s| s.replanned)
            {
                self.params.static_gap
            } else if ob.entity.kind != ParticipantType::Pedestrian && self.pass.is_none() {
                self.params.pass_gap
            } else {
                self.params.standstill_gap
            };
            speed = speed.min(self.follow_speed(&ob, ego.speed, standstill));
        }
        // wait for a gap before the end of the lane when a change is due
        if want.is_some() && target == home {
            let l = map.lane_at(home);
            let left = l.length() - l.project(ego.pos()).offset - 5.0;
            speed = speed.min((2.0 * self.params.comfort_decel * left.max(0.0)).sqrt());
        }
        if self.pass.is_some() && target != home && lateral0.abs() > 0.5 {
            speed = speed.min(self.params.pull_out_speed);
        }
        // no shift while changing lanes for the route
        let offset = if (target == home) == self.pass.is_none() {
            self.nudge(&path, ego, &seen)
        } else {
            0.0
        };
        Ok(Command::Drive {
            target_speed: speed,
            steer: Steer::Lane {
                lane: target,
                offset,
            },
        })
    }
}

/// Replays a recorded ego trajectory.
pub struct ScriptedPolicy {
    trajectory: Trajectory,
}

impl ScriptedPolicy {
    pub fn new(trajectory: Trajectory) -> Self {
        ScriptedPolicy { trajectory }
    }

    fn sample(&self, t: f64) -> Option<MotionSample> {
        let pts = &self.trajectory.points;
        let first = pts.first()?;
        let at = |p: &crate::inspect::TrajPoint| MotionSample {
            t,
            x: p.x,
            y: p.y,
            heading: p.vy.atan2(p.vx),
            speed: p.speed(),
        };
        if t <= first.t {
            return Some(at(first));
        }
        let i = pts.partition_point(|p| p.t <= t);
        if i >= pts.len() {
            return pts.last().map(at);
        }
        let (a, b) = (&pts[i - 1], &pts[i]);
        let u = (t - a.t) / (b.t - a.t);
        let lerp = |x: f64, y: f64| x + (y - x) * u;
        let (vx, vy) = (lerp(a.vx, b.vx), lerp(a.vy, b.vy));
        Some(MotionSample {
            t,
            x: lerp(a.x, b.x),
            y: lerp(a.y, b.y),
            heading: if vx.hypot(vy) > 1e-9 {
                vy.atan2(vx)
            } else {
                (b.y - a.y).atan2(b.x - a.x)
            },
            speed: vx.hypot(vy),
        })
    }
}

impl EgoPolicy for ScriptedPolicy {
    fn name(&self) -> &str {
        "scripted"
    }

    fn step(&mut self, obs: &Observation<'_>) -> Result<Command, PolicyFault> {
        self.sample(obs.time + obs.dt)
            .map(Command::Pose)
            .ok_or_else(|| PolicyFault("empty reference trajectory".into()))
    }
}
