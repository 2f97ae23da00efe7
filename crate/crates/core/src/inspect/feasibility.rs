use crate::geom::{wrap_angle, Obb, Vec2};
use crate::map::RoadMap;
use crate::scenlang::{ConcreteScenario, Position, TrajectoryDef};
use crate::script::resolve_waypoint;
use crate::vocab::ParticipantType;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;
use std::fmt;

/// Minimum distance between initial positions (m).
pub const MIN_INITIAL_GAP: f64 = 5.0;
/// Slack on declared speeds when checking scheduled arrivals.
pub const SPEED_SLACK: f64 = 0.2;
/// Largest acceleration a vehicle script may demand (m/s^2).
pub const MAX_SCRIPT_ACCEL: f64 = 8.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    Heading,
    Spatial,
    Speed,
    Temporal,
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Constraint::Heading => "heading",
            Constraint::Spatial => "spatial",
            Constraint::Speed => "speed",
            Constraint::Temporal => "temporal",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityDiagnostic {
    pub constraint: Constraint,
    pub participant: String,
    pub detail: String,
}

impl fmt::Display for FeasibilityDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {}: {}",
            self.constraint, self.participant, self.detail
        )
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub diagnostics: Vec<FeasibilityDiagnostic>,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.diagnostics.is_empty()
    }

    pub fn of(&self, c: Constraint) -> impl Iterator<Item = &FeasibilityDiagnostic> {
        self.diagnostics.iter().filter(move |d| d.constraint == c)
    }

    fn push(&mut self, constraint: Constraint, participant: &str, detail: String) {
        self.diagnostics.push(FeasibilityDiagnostic {
            constraint,
            participant: participant.to_string(),
            detail,
        });
    }
}

struct Start {
    name: String,
    pos: Vec2,
    heading: f64,
    kind: ParticipantType,
}

fn check_participant(
    t: &TrajectoryDef,
    map: &RoadMap,
    report: &mut FeasibilityReport,
) -> Option<Start> {
    let who = t.name.as_str();
    let mut resolved = Vec::with_capacity(t.waypoints.len());
    for w in &t.waypoints {
        match resolve_waypoint(map, who, w) {
            Ok(r) => resolved.push(r),
            Err(e) => {
                report.push(Constraint::Spatial, who, e.to_string());
                return None;
            }
        }
    }
    let vehicle = t.participant_type.is_vehicle();
    for (k, w) in t.waypoints.iter().enumerate() {
        let limit = match resolved[k].1 {
            Some(l) => map.lane_at(l).def.speed_limit,
            None => map
                .nearest_lane(resolved[k].0)
                .map_or(f64::INFINITY, |(l, _)| map.lane_at(l).def.speed_limit),
        };
        if w.speed > limit + 1e-9 {
            report.push(
                Constraint::Speed,
                who,
                format!("waypoint {k} speed {} exceeds limit {limit}", w.speed),
            );
        }
        if !w.speed.is_finite() || w.speed < 0.0 {
            report.push(
                Constraint::Speed,
                who,
                format!("waypoint {k} speed {} is invalid", w.speed),
            );
        }
        if vehicle {
            match (&w.position, resolved[k].1) {
                (Position::Free { .. }, _) => report.push(
                    Constraint::Spatial,
                    who,
                    format!("waypoint {k} is not on a lane"),
                ),
                (Position::Lane(_), Some(l)) => {
                    let half = map.lane_at(l).def.width / 2.0;
                    if w.lateral_offset.unwrap_or(0.0).abs() > half + 1e-9 {
                        report.push(
                            Constraint::Spatial,
                            who,
                            format!("waypoint {k} lies outside its lane"),
                        );
                    }
                }
                _ => {}
            }
        }
    }
    // driving direction
    if vehicle {
        for k in 1..t.waypoints.len() {
            let (a, b) = (&t.waypoints[k - 1], &t.waypoints[k]);
            if let (Position::Lane(la), Position::Lane(lb)) = (&a.position, &b.position) {
                if la.lane_id == lb.lane_id {
                    if lb.offset < la.offset - 1e-9 {
                        report.push(
                            Constraint::Heading,
                            who,
                            format!("waypoint {k} moves backward along {}", la.lane_id),
                        );
                    }
                    continue;
                }
            }
            let d = resolved[k].0 - resolved[k - 1].0;
            if d.norm() < 1e-6 {
                continue;
            }
            if let Some(l) = resolved[k - 1].1 {
                let lane = map.lane_at(l);
                let h = lane.project(resolved[k - 1].0).heading;
                if wrap_angle(d.angle() - h).abs() >= FRAC_PI_2 {
                    report.push(
                        Constraint::Heading,
                        who,
                        format!("waypoint {k} runs against the direction of {}", lane.id()),
                    );
                }
            }
        }
    }
    // schedule
    let mut t_now = t.waypoints.first().and_then(|w| w.time).unwrap_or(0.0);
    if t_now < 0.0 {
        report.push(
            Constraint::Temporal,
            who,
            "first waypoint is scheduled before the start".into(),
        );
    }
    for k in 1..t.waypoints.len() {
        let (a, b) = (&t.waypoints[k - 1], &t.waypoints[k]);
        let d = resolved[k].0.dist(resolved[k - 1].0);
        let arc = if let (Position::Lane(la), Position::Lane(lb)) = (&a.position, &b.position) {
            if la.lane_id == lb.lane_id && lb.offset > la.offset {
                lb.offset - la.offset
            } else {
                d
            }
        } else {
            d
        };
        match b.time {
            Some(tb) => {
                let dt = tb - t_now;
                if dt < -1e-9 || (dt <= 1e-9 && arc > 1e-6) {
                    report.push(
                        Constraint::Temporal,
                        who,
                        format!("waypoint {k} is scheduled before it can be reached"),
                    );
                } else if arc > 1e-6 {
                    let required = arc / dt;
                    let allowed = a.speed.max(b.speed) * (1.0 + SPEED_SLACK);
                    if required > allowed + 1e-9 {
                        report.push(
                            Constraint::Temporal,
                            who,
                            format!("waypoint {k} needs {required:.2} m/s, declared speeds allow {allowed:.2}"),
                        );
                    }
                }
                t_now = tb.max(t_now);
            }
            None if arc > 1e-6 => {
                let vsum = a.speed + b.speed;
                if vsum <= 1e-9 {
                    report.push(
                        Constraint::Temporal,
                        who,
                        format!("segment to waypoint {k} has zero speed at both ends"),
                    );
                    continue;
                }
                let dt = 2.0 * arc / vsum;
                let accel = (b.speed - a.speed) / dt;
                if vehicle && accel.abs() > MAX_SCRIPT_ACCEL {
                    report.push(
                        Constraint::Temporal,
                        who,
                        format!("segment to waypoint {k} needs {accel:.1} m/s^2"),
                    );
                }
                t_now += dt;
            }
            None => {}
        }
    }
    let first = resolved.first()?;
    let heading = match first.1 {
        Some(l) => map.lane_at(l).project(first.0).heading,
        None => resolved.get(1).map_or(0.0, |r| (r.0 - first.0).angle()),
    };
    Some(Start {
        name: t.name.clone(),
        pos: first.0,
        heading,
        kind: t.participant_type,
    })
}

/// Runs the heading, spatial, speed and temporal checks.
pub fn check_feasibility(s: &ConcreteScenario, map: &RoadMap) -> FeasibilityReport {
    let mut report = FeasibilityReport::default();
    let mut starts = Vec::new();
    match (
        map.lane_index(&s.ego.start.lane_id),
        map.lane_index(&s.ego.destination.lane_id),
    ) {
        (Some(a), Some(b)) => {
            let (p, h) = map.lane_at(a).point_at(s.ego.start.offset);
            starts.push(Start {
                name: "ego".into(),
                pos: p,
                heading: h,
                kind: s.ego.vehicle_type,
            });
            if map
                .plan_route((a, s.ego.start.offset), (b, s.ego.destination.offset))
                .is_none()
            {
                report.push(
                    Constraint::Heading,
                    "ego",
                    "destination cannot be reached along lane directions".into(),
                );
            }
        }
        _ => report.push(
            Constraint::Spatial,
            "ego",
            "start or destination lane is not on the map".into(),
        ),
    }
    for t in s.participants() {
        if let Some(st) = check_participant(t, map, &mut report) {
            starts.push(st);
        }
    }
    for i in 0..starts.len() {
        for j in i + 1..starts.len() {
            let (a, b) = (&starts[i], &starts[j]);
            let gap = a.pos.dist(b.pos);
            let (la, wa) = a.kind.footprint();
            let (lb, wb) = b.kind.footprint();
            let overlap = Obb::new(a.pos, a.heading, la, wa)
                .collides(&Obb::new(b.pos, b.heading, lb, wb), 0.0);
            if gap < MIN_INITIAL_GAP || overlap {
                report.push(
                    Constraint::Spatial,
                    &b.name,
                    format!("starts {gap:.2} m from {}", a.name),
                );
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::standard_map;
    use crate::scenlang::{parse, Waypoint};

    fn base() -> ConcreteScenario {
        parse(
            "map standard; ego car { start (\"lane_222\" -> 10); destination (\"lane_222\" -> 130); }
             npc a car ((\"lane_222\" -> 30, , 8), (\"lane_222\" -> 80, , 8));",
        )
        .unwrap()
    }

    fn only(r: &FeasibilityReport) -> Constraint {
        assert_eq!(r.diagnostics.len(), 1, "{:?}", r.diagnostics);
        r.diagnostics[0].constraint
    }

    #[test]
    fn clean_scenario_passes() {
        assert!(check_feasibility(&base(), &standard_map()).is_feasible());
    }

    #[test]
    fn each_family_is_detected() {
        let map = standard_map();
        let mut s = base();
        s.npcs[0].waypoints[0] = Waypoint::lane("lane_222", 13.0, 8.0);
        assert_eq!(only(&check_feasibility(&s, &map)), Constraint::Spatial);
        let mut s = base();
        s.npcs[0].waypoints[1].speed = 20.0;
        assert_eq!(only(&check_feasibility(&s, &map)), Constraint::Speed);
        let mut s = base();
        s.npcs[0].waypoints[1] = Waypoint::lane("lane_222", 130.0, 5.0).at(1.0);
        s.npcs[0].waypoints[0].speed = 5.0;
        assert_eq!(only(&check_feasibility(&s, &map)), Constraint::Temporal);
        let mut s = base();
        s.npcs[0].waypoints[1] = Waypoint::lane("lane_222", 20.0, 8.0);
        assert_eq!(only(&check_feasibility(&s, &map)), Constraint::Heading);
    }

    #[test]
    fn removing_a_participant_never_adds_diagnostics() {
        let map = standard_map();
        let mut s = base();
        s.npcs[0].waypoints[0] = Waypoint::lane("lane_222", 12.0, 20.0);
        let full = check_feasibility(&s, &map).diagnostics.len();
        let reduced = check_feasibility(&s.without("a"), &map).diagnostics.len();
        assert!(reduced <= full);
        assert_eq!(reduced, 0);
    }
}
