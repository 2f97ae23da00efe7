use super::{SynthError, SynthParams};
use crate::abstraction::ParticipantSpec;
use crate::geom::wrap_angle;
use crate::map::{LaneInfo, Maneuver, RoadMap, Route};
use crate::scenlang::{EgoTask, LanePosition};
use crate::vocab::{Action, ParticipantType, RelativePosition, RoadType, VehicleType};
use serde::Serialize;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

/// A road segment chosen for generation, with the lane summary handed to
/// the generator.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RoadSelection {
    pub segment: String,
    pub road_type: RoadType,
    #[serde(skip)]
    pub lanes: Vec<usize>,
    pub info: Vec<LaneInfo>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RoadDivision {
    pub division_id: RelativePosition,
    pub lanes: Vec<String>,
    /// Meters from the ego start along its lane; for side and opposite
    /// approaches, meters along the approach lane.
    pub longitudinal_range: (f64, f64),
}

pub fn select_road(map: &RoadMap, road_type: RoadType) -> Result<RoadSelection, SynthError> {
    let segment = map
        .segments(road_type)
        .into_iter()
        .next()
        .ok_or(SynthError::NoRoad(road_type))?;
    let lanes = map.segment_lanes(&segment);
    let info = map.lane_infos(&lanes);
    Ok(RoadSelection {
        segment,
        road_type,
        lanes,
        info,
    })
}

/// Behaviours a route encodes, one per lane transition.
pub fn route_actions(map: &RoadMap, route: &Route) -> Vec<Action> {
    route
        .maneuvers
        .iter()
        .enumerate()
        .filter_map(|(i, m)| match m {
            Maneuver::ChangeLeft => Some(Action::ChangeLeft),
            Maneuver::ChangeRight => Some(Action::ChangeRight),
            Maneuver::TurnLeft => Some(Action::TurnLeft),
            Maneuver::TurnRight => Some(Action::TurnRight),
            Maneuver::Straight => Some(Action::Cross),
            Maneuver::Continue if !map.lane_at(route.lanes[i]).def.junction => {
                Some(Action::DriveThrough)
            }
            Maneuver::Continue => None,
        })
        .collect()
}

fn is_route_action(a: Action) -> bool {
    matches!(
        a,
        Action::ChangeLeft
            | Action::ChangeRight
            | Action::TurnLeft
            | Action::TurnRight
            | Action::Cross
            | Action::DriveThrough
    )
}

/// Lanes that lead into a junction, grouped by approach heading.
pub(crate) fn approach_lanes(map: &RoadMap, road: &RoadSelection) -> Vec<usize> {
    road.lanes
        .iter()
        .copied()
        .filter(|&l| {
            !map.lane_at(l).def.junction && map.successors(l).any(|s| map.lane_at(s).def.junction)
        })
        .collect()
}

/// Start lanes in preference order: middle, then right, then left lanes
/// of each carriageway; carriageways in lane order.
fn start_candidates(map: &RoadMap, road: &RoadSelection) -> Vec<usize> {
    let pool: Vec<usize> = if road.road_type == RoadType::Straight {
        road.lanes
            .iter()
            .copied()
            .filter(|&l| map.predecessors(l).is_empty())
            .collect()
    } else {
        approach_lanes(map, road)
    };
    let mut out = Vec::new();
    for &l in &pool {
        let cw = map.carriageway(l);
        if cw[0] != l {
            continue;
        }
        let mid = cw.len() / 2;
        let mut order = vec![];
        if cw.len() >= 3 {
            order.push(cw[mid]);
        }
        order.push(cw[0]);
        for &x in cw.iter().skip(1) {
            if !order.contains(&x) {
                order.push(x);
            }
        }
        out.extend(order);
    }
    out
}

fn ego_type(v: VehicleType) -> ParticipantType {
    match v {
        VehicleType::Truck => ParticipantType::Truck,
        _ => ParticipantType::Car,
    }
}

/// Start and destination whose cheapest route performs exactly the
/// lane-level behaviours of the ego.
pub fn assign_ego_task(
    map: &RoadMap,
    road: &RoadSelection,
    ego: &ParticipantSpec,
    needs_rear_room: bool,
    params: &SynthParams,
) -> Result<EgoTask, SynthError> {
    ego_task_candidates(map, road, ego, needs_rear_room, params)
        .into_iter()
        .next()
        .ok_or_else(|| SynthError::EgoTask {
            road_type: road.road_type,
            behaviors: ego.behaviors.clone(),
        })
}

/// Every suitable ego task, one per start lane, in preference order.
pub(crate) fn ego_task_candidates(
    map: &RoadMap,
    road: &RoadSelection,
    ego: &ParticipantSpec,
    needs_rear_room: bool,
    params: &SynthParams,
) -> Vec<EgoTask> {
    let wanted: Vec<Action> = ego
        .behaviors
        .iter()
        .copied()
        .filter(|a| is_route_action(*a))
        .collect();
    let start_offset = if needs_rear_room {
        params.ego_start_offset_rear
    } else {
        params.ego_start_offset
    };
    let mut out = Vec::new();
    for s in start_candidates(map, road) {
        let slen = map.lane_at(s).length();
        if start_offset >= slen - params.destination_margin {
            continue;
        }
        for d in destination_candidates(map, road, s, start_offset, params) {
            let Some(route) = map.plan_route((s, start_offset), d) else {
                continue;
            };
            if route_actions(map, &route) == wanted {
                out.push(EgoTask {
                    vehicle_type: ego_type(ego.vehicle_type),
                    start: LanePosition::new(map.lane_at(s).id(), start_offset),
                    destination: LanePosition::new(map.lane_at(d.0).id(), d.1),
                });
                break;
            }
        }
    }
    out
}

fn destination_candidates(
    map: &RoadMap,
    road: &RoadSelection,
    start: usize,
    start_offset: f64,
    params: &SynthParams,
) -> Vec<(usize, f64)> {
    let cw = map.carriageway(start);
    let mut out = Vec::new();
    let same_len = map.lane_at(start).length();
    out.push((start, same_len - params.destination_margin));
    for &n in &cw {
        if n != start {
            let len = map.lane_at(n).length();
            out.push((
                n,
                (start_offset + params.change_distance).min(len - params.destination_margin),
            ));
        }
    }
    for &l in &road.lanes {
        let lane = map.lane_at(l);
        if lane.def.junction || cw.contains(&l) {
            continue;
        }
        let after_junction = map
            .predecessors(l)
            .iter()
            .any(|&p| map.lane_at(p).def.junction);
        let off = if after_junction {
            params.exit_offset
        } else {
            params.successor_offset
        };
        out.push((l, off.min(lane.length())));
    }
    out
}

/// Ego-relative divisions of the road around `ego_start`.
pub fn divide_road(
    map: &RoadMap,
    road: &RoadSelection,
    ego_start: &LanePosition,
    params: &SynthParams,
) -> Vec<RoadDivision> {
    let Some(ls) = map.lane_index(&ego_start.lane_id) else {
        return Vec::new();
    };
    let o = ego_start.offset;
    let len = map.lane_at(ls).length();
    let id = |l: usize| map.lane_at(l).id().to_string();
    let front = (params.front_gap, len - o);
    let behind = (-o, -params.behind_gap);
    let mut out = vec![
        RoadDivision {
            division_id: RelativePosition::Ahead,
            lanes: vec![id(ls)],
            longitudinal_range: front,
        },
        RoadDivision {
            division_id: RelativePosition::Behind,
            lanes: vec![id(ls)],
            longitudinal_range: behind,
        },
    ];
    if let Some(l) = map.left_of(ls) {
        out.push(RoadDivision {
            division_id: RelativePosition::LeftFront,
            lanes: vec![id(l)],
            longitudinal_range: front,
        });
        out.push(RoadDivision {
            division_id: RelativePosition::LeftBehind,
            lanes: vec![id(l)],
            longitudinal_range: behind,
        });
    }
    if let Some(r) = map.right_of(ls) {
        out.push(RoadDivision {
            division_id: RelativePosition::RightFront,
            lanes: vec![id(r)],
            longitudinal_range: front,
        });
        out.push(RoadDivision {
            division_id: RelativePosition::RightBehind,
            lanes: vec![id(r)],
            longitudinal_range: behind,
        });
    }
    if road.road_type != RoadType::Straight {
        let h = map.lane_at(ls).end_heading();
        let own = map.carriageway(ls);
        let mut arms: Vec<(RelativePosition, Vec<usize>)> = Vec::new();
        for l in approach_lanes(map, road) {
            if own.contains(&l) {
                continue;
            }
            let cw = map.carriageway(l);
            if cw[0] != l {
                continue;
            }
            let rel = wrap_angle(map.lane_at(l).end_heading() - h);
            let division = if rel.abs() > FRAC_PI_2 + FRAC_PI_4 {
                RelativePosition::Opposite
            } else if (rel + FRAC_PI_2).abs() < FRAC_PI_4 {
                RelativePosition::LeftVertical
            } else if (rel - FRAC_PI_2).abs() < FRAC_PI_4 {
                RelativePosition::RightVertical
            } else {
                continue;
            };
            arms.push((division, cw));
        }
        arms.sort_by_key(|a| a.0);
        for (division, cw) in arms {
            let alen = map.lane_at(cw[0]).length();
            out.push(RoadDivision {
                division_id: division,
                lanes: cw.iter().map(|&l| id(l)).collect(),
                longitudinal_range: (0.0, alen),
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::standard_map;
    use crate::vocab::Role;

    fn ego(b: &[Action]) -> ParticipantSpec {
        ParticipantSpec {
            role: Role::Ego,
            vehicle_type: VehicleType::Car,
            behaviors: b.to_vec(),
            relative_position: None,
        }
    }

    #[test]
    fn road_selection() {
        let map = standard_map();
        assert_eq!(
            select_road(&map, RoadType::Intersection).unwrap().segment,
            "cross_1"
        );
        assert_eq!(
            select_road(&map, RoadType::TJunction).unwrap().segment,
            "tee_1"
        );
    }

    #[test]
    fn ego_tasks() {
        let map = standard_map();
        let p = SynthParams::default();
        let straight = select_road(&map, RoadType::Straight).unwrap();
        let t = assign_ego_task(&map, &straight, &ego(&[Action::FollowLane]), false, &p).unwrap();
        assert_eq!(t.start, LanePosition::new("lane_222", 10.0));
        assert_eq!(t.destination, LanePosition::new("lane_222", 130.0));
        let t = assign_ego_task(&map, &straight, &ego(&[Action::ChangeLeft]), false, &p).unwrap();
        assert_eq!(t.start, LanePosition::new("lane_222", 10.0));
        assert_eq!(t.destination, LanePosition::new("lane_223", 110.0));
        assert!(assign_ego_task(&map, &straight, &ego(&[Action::TurnRight]), false, &p).is_err());
        let x = select_road(&map, RoadType::Intersection).unwrap();
        let t = assign_ego_task(
            &map,
            &x,
            &ego(&[Action::ChangeRight, Action::TurnRight]),
            false,
            &p,
        )
        .unwrap();
        assert_eq!(t.start.lane_id, "x_w_in_1");
        let tee = select_road(&map, RoadType::TJunction).unwrap();
        assert!(assign_ego_task(&map, &tee, &ego(&[Action::TurnLeft]), false, &p).is_ok());
    }

    #[test]
    fn divisions() {
        let map = standard_map();
        let p = SynthParams::default();
        let straight = select_road(&map, RoadType::Straight).unwrap();
        let d = divide_road(&map, &straight, &LanePosition::new("lane_222", 10.0), &p);
        let ids: Vec<_> = d.iter().map(|d| d.division_id).collect();
        use RelativePosition::*;
        assert_eq!(ids, vec![Ahead, Behind, LeftFront, LeftBehind]);
        assert!(d[1].longitudinal_range.0 > d[1].longitudinal_range.1);
        let x = select_road(&map, RoadType::Intersection).unwrap();
        let d = divide_road(&map, &x, &LanePosition::new("x_w_in_1", 10.0), &p);
        assert_eq!(d.len(), 9);
        let rv = d.iter().find(|d| d.division_id == RightVertical).unwrap();
        assert_eq!(rv.lanes[0], "x_s_in_0");
        let tee = select_road(&map, RoadType::TJunction).unwrap();
        let d = divide_road(&map, &tee, &LanePosition::new("t_w_in_0", 10.0), &p);
        assert!(d.iter().all(|d| d.division_id != LeftVertical));
    }
}
