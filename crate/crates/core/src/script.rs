//! Timed motion of scripted participants along their waypoints.
//!
//! A waypoint speed is the speed when passing that waypoint. Between two
//! untimed waypoints the speed changes at a constant rate; a segment that
//! ends at a timed waypoint is travelled at constant speed, and a repeated
//! position with a later time is a dwell. Participants wait at their first
//! waypoint until its time and stay parked after the last one.

use crate::geom::{Polyline, Vec2};
use crate::map::RoadMap;
use crate::scenlang::{Position, TrajectoryDef, Waypoint};
use crate::vocab::ParticipantType;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScriptError {
    #[error("{who}: unknown lane `{lane}`")]
    UnknownLane { who: String, lane: String },
    #[error("{who}: segment {index} has zero speed at both ends")]
    Stalled { who: String, index: usize },
    #[error("{who}: waypoint {index} is scheduled before it can be reached")]
    TimeOrder { who: String, index: usize },
    #[error("{who}: trajectory has no waypoints")]
    Empty { who: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MotionSample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub speed: f64,
}

impl MotionSample {
    pub fn pos(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }
}

#[derive(Clone, Copy, Debug)]
struct Segment {
    t0: f64,
    t1: f64,
    s0: f64,
    s1: f64,
    v0: f64,
    accel: f64,
}

#[derive(Clone, Debug)]
pub struct Script {
    pub name: String,
    pub kind: ParticipantType,
    path: Polyline,
    segments: Vec<Segment>,
    start: f64,
    /// Arc length of each waypoint along the path.
    pub knots: Vec<f64>,
    /// World position of each waypoint.
    pub points: Vec<Vec2>,
}

/// World position of a waypoint and the lane it references, if any.
pub fn resolve_waypoint(
    map: &RoadMap,
    who: &str,
    w: &Waypoint,
) -> Result<(Vec2, Option<usize>), ScriptError> {
    match &w.position {
        Position::Free { x, y } => Ok((Vec2::new(*x, *y), None)),
        Position::Lane(lp) => {
            let i = map
                .lane_index(&lp.lane_id)
                .ok_or_else(|| ScriptError::UnknownLane {
                    who: who.into(),
                    lane: lp.lane_id.clone(),
                })?;
            let (p, h) = map.lane_at(i).point_at(lp.offset);
            Ok((
                p + Vec2::from_angle(h).perp() * w.lateral_offset.unwrap_or(0.0),
                Some(i),
            ))
        }
    }
}

impl Script {
    pub fn build(map: &RoadMap, def: &TrajectoryDef) -> Result<Script, ScriptError> {
        let who = def.name.as_str();
        if def.waypoints.is_empty() {
            return Err(ScriptError::Empty { who: who.into() });
        }
        let resolved = def
            .waypoints
            .iter()
            .map(|w| resolve_waypoint(map, who, w))
            .collect::<Result<Vec<_>, _>>()?;
        let mut pts = vec![resolved[0].0];
        let mut knots = vec![0.0];
        let mut acc = 0.0;
        for k in 1..resolved.len() {
            let (a, b) = (&def.waypoints[k - 1], &def.waypoints[k]);
            let mut leg = vec![];
            if let (Position::Lane(la), Position::Lane(lb), Some(li)) =
                (&a.position, &b.position, resolved[k].1)
            {
                if la.lane_id == lb.lane_id && lb.offset > la.offset {
                    // follow the lane shape between the two offsets
                    let lane = map.lane_at(li);
                    let (lat_a, lat_b) = (
                        a.lateral_offset.unwrap_or(0.0),
                        b.lateral_offset.unwrap_or(0.0),
                    );
                    let n = ((lb.offset - la.offset) / 2.0).ceil().max(1.0) as usize;
                    for j in 1..n {
                        let f = j as f64 / n as f64;
                        let (p, h) = lane.point_at(la.offset + f * (lb.offset - la.offset));
                        leg.push(p + Vec2::from_angle(h).perp() * (lat_a + f * (lat_b - lat_a)));
                    }
                }
            }
            leg.push(resolved[k].0);
            let mut prev = *pts.last().expect("non-empty");
            for p in leg {
                acc += prev.dist(p);
                pts.push(p);
                prev = p;
            }
            knots.push(acc);
        }
        let path = Polyline::new(&pts);
        // Polyline drops duplicate points, so knot arc lengths are unaffected.
        let start = def.waypoints[0].time.unwrap_or(0.0);
        let mut t = start;
        let mut segments = Vec::with_capacity(knots.len().saturating_sub(1));
        for k in 1..knots.len() {
            let (a, b) = (&def.waypoints[k - 1], &def.waypoints[k]);
            let (s0, s1) = (knots[k - 1], knots[k]);
            let d = s1 - s0;
            let seg = if let Some(tb) = b.time {
                let dt = tb - t;
                if dt < -1e-9 || (dt <= 1e-9 && d > 1e-9) {
                    return Err(ScriptError::TimeOrder {
                        who: who.into(),
                        index: k,
                    });
                }
                let dt = dt.max(0.0);
                let v = if dt > 0.0 { d / dt } else { 0.0 };
                Segment {
                    t0: t,
                    t1: t + dt,
                    s0,
                    s1,
                    v0: v,
                    accel: 0.0,
                }
            } else if d <= 1e-9 {
                Segment {
                    t0: t,
                    t1: t,
                    s0,
                    s1,
                    v0: 0.0,
                    accel: 0.0,
                }
            } else {
                let (v0, v1) = (a.speed, b.speed);
                if v0 + v1 <= 1e-9 {
                    return Err(ScriptError::Stalled {
                        who: who.into(),
                        index: k - 1,
                    });
                }
                let dt = 2.0 * d / (v0 + v1);
                Segment {
                    t0: t,
                    t1: t + dt,
                    s0,
                    s1,
                    v0,
                    accel: (v1 - v0) / dt,
                }
            };
            t = seg.t1;
            segments.push(seg);
        }
        Ok(Script {
            name: def.name.clone(),
            kind: def.participant_type,
            path,
            segments,
            start,
            knots,
            points: resolved.into_iter().map(|r| r.0).collect(),
        })
    }

    pub fn start_time(&self) -> f64 {
        self.start
    }

    pub fn end_time(&self) -> f64 {
        self.segments.last().map_or(self.start, |s| s.t1)
    }

    /// Arrival time at each waypoint.
    pub fn waypoint_times(&self) -> Vec<f64> {
        std::iter::once(self.start)
            .chain(self.segments.iter().map(|s| s.t1))
            .collect()
    }

    pub fn path(&self) -> &Polyline {
        &self.path
    }

    fn arc_and_speed(&self, t: f64) -> (f64, f64) {
        if t < self.start || self.segments.is_empty() {
            return (0.0, 0.0);
        }
        let i = self.segments.partition_point(|s| s.t1 < t);
        let Some(seg) = self.segments.get(i) else {
            return (self.knots.last().copied().unwrap_or(0.0), 0.0);
        };
        let tau = (t - seg.t0).max(0.0);
        let s = (seg.s0 + seg.v0 * tau + 0.5 * seg.accel * tau * tau)
            .clamp(seg.s0.min(seg.s1), seg.s1.max(seg.s0));
        let v = (seg.v0 + seg.accel * tau).max(0.0);
        (s, v)
    }

    pub fn sample_at(&self, t: f64) -> MotionSample {
        let (s, speed) = self.arc_and_speed(t);
        let (p, _) = self.path.sample(s);
        let heading = self.heading_near(s);
        MotionSample {
            t,
            x: p.x,
            y: p.y,
            heading,
            speed,
        }
    }

    fn heading_near(&self, s: f64) -> f64 {
        let len = self.path.length();
        if len <= 0.0 {
            return 0.0;
        }
        // at a vertex or the end, take the direction of arrival
        let probe = if s >= len { len - 1e-6 } else { s };
        self.path.heading_at(probe.max(0.0))
    }

    /// Samples on a fixed grid from 0 to `horizon` inclusive.
    pub fn samples(&self, dt: f64, horizon: f64) -> Vec<MotionSample> {
        let n = (horizon / dt).round() as usize;
        (0..=n).map(|k| self.sample_at(k as f64 * dt)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::standard_map;

    fn def(wps: Vec<Waypoint>) -> TrajectoryDef {
        TrajectoryDef {
            name: "p".into(),
            participant_type: ParticipantType::Car,
            waypoints: wps,
        }
    }

    #[test]
    fn constant_acceleration_between_untimed_waypoints() {
        let map = standard_map();
        let s = Script::build(
            &map,
            &def(vec![
                Waypoint::lane("lane_222", 10.0, 10.0),
                Waypoint::lane("lane_222", 40.0, 5.0),
            ]),
        )
        .unwrap();
        // 30 m at mean 7.5 m/s
        assert!((s.end_time() - 4.0).abs() < 1e-12);
        let m = s.sample_at(2.0);
        assert!((m.speed - 7.5).abs() < 1e-12);
        assert!((m.x - (10.0 + 10.0 * 2.0 - 0.5 * 1.25 * 4.0)).abs() < 1e-9);
        assert!(s.sample_at(100.0).speed == 0.0 && (s.sample_at(100.0).x - 40.0).abs() < 1e-9);
    }

    #[test]
    fn timed_waypoints_dwell_and_cruise() {
        let map = standard_map();
        let s = Script::build(
            &map,
            &def(vec![
                Waypoint::lane("lane_222", 0.0, 5.0),
                Waypoint::lane("lane_222", 20.0, 0.0),
                Waypoint::lane("lane_222", 20.0, 0.0).at(10.0),
                Waypoint::lane("lane_222", 40.0, 4.0).at(15.0),
            ]),
        )
        .unwrap();
        let times = s.waypoint_times();
        assert!((times[1] - 8.0).abs() < 1e-12);
        assert!((s.sample_at(9.0).x - 20.0).abs() < 1e-9);
        let m = s.sample_at(12.5);
        assert!((m.speed - 4.0).abs() < 1e-12 && (m.x - 30.0).abs() < 1e-9);
    }

    #[test]
    fn lateral_offset_and_errors() {
        let map = standard_map();
        let mut w = Waypoint::lane("lane_222", 10.0, 5.0);
        w.lateral_offset = Some(1.0);
        let s = Script::build(&map, &def(vec![w, Waypoint::lane("lane_222", 20.0, 5.0)])).unwrap();
        assert!((s.sample_at(0.0).y - 1.0).abs() < 1e-12);
        let e = Script::build(
            &map,
            &def(vec![
                Waypoint::lane("lane_222", 10.0, 0.0),
                Waypoint::lane("lane_222", 20.0, 0.0),
            ]),
        );
        assert!(matches!(e, Err(ScriptError::Stalled { .. })));
        let e = Script::build(&map, &def(vec![Waypoint::lane("nope", 10.0, 1.0)]));
        assert!(matches!(e, Err(ScriptError::UnknownLane { .. })));
    }
}
