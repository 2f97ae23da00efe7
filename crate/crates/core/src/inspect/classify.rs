use super::segment::breakpoints;
use super::{is_pedestrian, InspectError, InspectParams, MotionSegment, TrajPoint, Trajectory};
use crate::geom::{wrap_angle, Vec2};
use crate::map::RoadMap;
use crate::vocab::{Action, ParticipantType};

#[derive(Clone, Debug, PartialEq)]
enum Kind {
    Change(Action),
    Accel,
    Decel,
    Stationary,
    Cruise,
    Junction,
    Walk(Action),
    Unknown(String),
}

#[derive(Clone, Debug)]
struct Piece {
    kind: Kind,
    a: usize,
    b: usize,
}

fn speed_slope(p: &[TrajPoint]) -> f64 {
    let n = p.len() as f64;
    let mt = p.iter().map(|q| q.t).sum::<f64>() / n;
    let ms = p.iter().map(|q| q.speed()).sum::<f64>() / n;
    let (mut num, mut den) = (0.0, 0.0);
    for q in p {
        num += (q.t - mt) * (q.speed() - ms);
        den += (q.t - mt) * (q.t - mt);
    }
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

fn regular_lane(map: &RoadMap, p: Vec2) -> Option<usize> {
    map.locate_where(p, |i| !map.lane_at(i).def.junction)
        .map(|(i, _)| i)
}

fn in_junction(map: &RoadMap, p: Vec2) -> bool {
    map.locate(p)
        .is_some_and(|(i, _)| map.lane_at(i).def.junction)
}

/// Lane-change specification: distinct lanes of one carriageway, positions
/// within the start/end box and on those two lanes, and every velocity
/// pointing to the changing side. Bearings are taken with the lane
/// direction at 90 degrees, so leftward motion lies in (90, 180).
fn lane_change(p: &[TrajPoint], map: &RoadMap, params: &InspectParams) -> Option<Action> {
    let (first, last) = (p.first()?, p.last()?);
    let ls = regular_lane(map, first.pos())?;
    let lf = regular_lane(map, last.pos())?;
    if ls == lf {
        return None;
    }
    let cw = map.carriageway(ls);
    let (is, jf) = (
        cw.iter().position(|&l| l == ls)?,
        cw.iter().position(|&l| l == lf)?,
    );
    let left = jf > is;
    let tol = params.position_tolerance;
    let (x0, x1) = (first.x.min(last.x) - tol, first.x.max(last.x) + tol);
    let (y0, y1) = (first.y.min(last.y) - tol, first.y.max(last.y) + tol);
    let limit = map
        .lane_at(ls)
        .def
        .speed_limit
        .max(map.lane_at(lf).def.speed_limit)
        + params.speed_tolerance;
    let bt = params.bearing_tolerance;
    for q in &p[1..p.len() - 1] {
        if q.x < x0 || q.x > x1 || q.y < y0 || q.y > y1 {
            return None;
        }
        let lane = regular_lane(map, q.pos())?;
        if lane != ls && lane != lf {
            return None;
        }
        if q.speed() > limit {
            return None;
        }
        if q.speed() <= params.stationary_speed {
            continue;
        }
        let lane_heading = map.lane_at(ls).project(q.pos()).heading;
        let bearing = 90.0 + wrap_angle(q.vel().angle() - lane_heading).to_degrees();
        let ok = if left {
            bearing > 90.0 - bt && bearing < 180.0
        } else {
            bearing > 0.0 && bearing < 90.0 + bt
        };
        if !ok {
            return None;
        }
    }
    Some(if left {
        Action::ChangeLeft
    } else {
        Action::ChangeRight
    })
}

fn vehicle_piece(p: &[TrajPoint], map: &RoadMap, params: &InspectParams) -> Kind {
    if p.iter().all(|q| q.speed() < params.stationary_speed) {
        return Kind::Stationary;
    }
    let rate = speed_slope(p);
    if rate.abs() < params.threshold_c {
        match lane_change(p, map, params) {
            Some(a) => Kind::Change(a),
            None => Kind::Cruise,
        }
    } else if rate > 0.0 {
        Kind::Accel
    } else {
        Kind::Decel
    }
}

fn pedestrian_piece(p: &[TrajPoint], map: &RoadMap, params: &InspectParams) -> Kind {
    if p.iter().all(|q| q.speed() < params.stationary_speed) {
        return Kind::Stationary;
    }
    let (first, last) = (p[0], p[p.len() - 1]);
    let mut dir = last.pos() - first.pos();
    if dir.norm() < 0.2 {
        dir = p.iter().fold(Vec2::ZERO, |acc, q| acc + q.vel());
    }
    let mid = p[p.len() / 2].pos();
    let Some((lane, _)) = map.nearest_lane(mid) else {
        return Kind::Unknown("no lane near pedestrian".into());
    };
    let lane_heading = map.lane_at(lane).project(mid).heading;
    let mut delta = wrap_angle(dir.angle() - lane_heading).abs().to_degrees();
    if delta > 90.0 {
        delta = 180.0 - delta;
    }
    if delta <= params.walk_cone {
        Kind::Walk(Action::WalkAlong)
    } else if delta >= 90.0 - params.walk_cone {
        let curb_to_curb = !map.on_road(first.pos())
            && !map.on_road(last.pos())
            && p.iter().any(|q| map.on_road(q.pos()));
        Kind::Walk(if curb_to_curb {
            Action::Cross
        } else {
            Action::WalkAcross
        })
    } else {
        Kind::Unknown(format!(
            "pedestrian heading {delta:.0} degrees off the lane"
        ))
    }
}

/// Heading of travel near sample `i`, from velocity when moving.
fn travel_heading(
    p: &[TrajPoint],
    map: &RoadMap,
    range: std::ops::RangeInclusive<usize>,
    from_end: bool,
) -> f64 {
    let idx: Vec<usize> = if from_end {
        range.rev().collect()
    } else {
        range.collect()
    };
    for &i in &idx {
        if p[i].speed() > 0.5 {
            return p[i].vel().angle();
        }
    }
    let q = p[idx[0]].pos();
    map.nearest_lane(q)
        .map(|(l, _)| map.lane_at(l).project(q).heading)
        .unwrap_or(0.0)
}

fn junction_action(p: &[TrajPoint], a: usize, b: usize, map: &RoadMap) -> Result<Action, String> {
    let h_in = travel_heading(p, map, a..=b, false);
    let h_out = travel_heading(p, map, a..=b, true);
    let dh = wrap_angle(h_out - h_in).to_degrees();
    if dh.abs() < 45.0 {
        Ok(Action::Cross)
    } else if dh > 45.0 && dh < 135.0 {
        Ok(Action::TurnLeft)
    } else if dh < -45.0 && dh > -135.0 {
        Ok(Action::TurnRight)
    } else {
        Err(format!(
            "heading change of {dh:.0} degrees through a junction"
        ))
    }
}

fn pieces(
    traj: &Trajectory,
    kind: ParticipantType,
    map: &RoadMap,
    params: &InspectParams,
) -> Vec<Piece> {
    let p = &traj.points;
    let last = p.len() - 1;
    // junction and non-junction runs sharing their boundary samples
    let mut runs: Vec<(usize, usize, bool)> = Vec::new();
    if is_pedestrian(kind) {
        runs.push((0, last, false));
    } else {
        let flags: Vec<bool> = p.iter().map(|q| in_junction(map, q.pos())).collect();
        let mut start = 0;
        for i in 1..=last {
            if flags[i] != flags[start] {
                runs.push((start, i, flags[start]));
                start = i;
            }
        }
        if start < last || runs.is_empty() {
            runs.push((start, last, flags[start]));
        }
    }
    let mut out = Vec::new();
    for (a, b, junction) in runs {
        if junction {
            out.push(Piece {
                kind: Kind::Junction,
                a,
                b,
            });
            continue;
        }
        for (a, b, still) in standstills(p, a, b, params) {
            if still {
                out.push(Piece {
                    kind: Kind::Stationary,
                    a,
                    b,
                });
                continue;
            }
            moving_pieces(p, a, b, kind, map, params, &mut out);
        }
    }
    out
}

/// Splits `[a, b]` into moving spans and standstills lasting long enough
/// to count as one.
fn standstills(
    p: &[TrajPoint],
    a: usize,
    b: usize,
    params: &InspectParams,
) -> Vec<(usize, usize, bool)> {
    let mut spans: Vec<(usize, usize, bool)> = Vec::new();
    let mut i = a;
    while i <= b {
        let still = p[i].speed() < params.stationary_speed;
        let mut j = i;
        while j < b && (p[j + 1].speed() < params.stationary_speed) == still {
            j += 1;
        }
        let long = p[j].t - p[i].t >= params.stationary_duration - 1e-9;
        let still = still && long;
        match spans.last_mut() {
            Some(last) if last.2 == still => last.1 = j,
            _ => spans.push((i, j, still)),
        }
        i = j + 1;
    }
    // neighbouring spans share a boundary sample
    for k in 1..spans.len() {
        let prev_end = spans[k - 1].1;
        if spans[k].2 {
            spans[k].0 = prev_end;
        } else {
            spans[k - 1].1 = prev_end;
            spans[k].0 = prev_end;
        }
    }
    spans
}

fn moving_pieces(
    p: &[TrajPoint],
    a: usize,
    b: usize,
    kind: ParticipantType,
    map: &RoadMap,
    params: &InspectParams,
    out: &mut Vec<Piece>,
) {
    if b <= a {
        return;
    }
    let cuts = if b - a < 2 {
        vec![a, b]
    } else {
        breakpoints(p, a, b, params)
    };
    for w in cuts.windows(2) {
        let s = &p[w[0]..=w[1]];
        let k = if is_pedestrian(kind) {
            pedestrian_piece(s, map, params)
        } else {
            vehicle_piece(s, map, params)
        };
        out.push(Piece {
            kind: k,
            a: w[0],
            b: w[1],
        });
    }
}

fn merge_runs(pieces: Vec<Piece>) -> Vec<Piece> {
    let mut out: Vec<Piece> = Vec::new();
    for pc in pieces {
        match out.last_mut() {
            Some(prev) if prev.kind == pc.kind => prev.b = pc.b,
            _ => out.push(pc),
        }
    }
    out
}

fn label_runs(
    traj: &Trajectory,
    kind: ParticipantType,
    map: &RoadMap,
    params: &InspectParams,
    runs: Vec<Piece>,
) -> Result<Vec<Action>, InspectError> {
    let p = &traj.points;
    // stationary spells shorter than the minimum belong to their neighbour
    let mut runs = runs;
    loop {
        let short = runs.iter().position(|r| {
            r.kind == Kind::Stationary && p[r.b].t - p[r.a].t < params.stationary_duration - 1e-9
        });
        match short {
            Some(k) if runs.len() > 1 => {
                let r = runs.remove(k);
                if k > 0 {
                    runs[k - 1].b = r.b;
                } else {
                    runs[0].a = r.a;
                }
                runs = merge_runs(runs);
            }
            _ => break,
        }
    }
    let mut labels: Vec<(Action, bool)> = Vec::new();
    for (index, r) in runs.iter().enumerate() {
        let (qa, qb) = (&p[r.a], &p[r.b]);
        let dur = qb.t - qa.t;
        let ends_low = qb.speed() < params.brake_end_speed;
        let action = match &r.kind {
            Kind::Change(a) | Kind::Walk(a) => *a,
            Kind::Accel => Action::Accelerate,
            Kind::Decel => {
                let decel = if dur > 0.0 {
                    (qa.speed() - qb.speed()) / dur
                } else {
                    0.0
                };
                if decel >= params.brake_decel - 1e-9 && ends_low {
                    Action::Brake
                } else {
                    Action::Decelerate
                }
            }
            Kind::Stationary => {
                if is_pedestrian(kind) {
                    Action::Stand
                } else {
                    Action::Stop
                }
            }
            Kind::Cruise => {
                let la = regular_lane(map, qa.pos());
                let lb = regular_lane(map, qb.pos());
                match (la, lb) {
                    (Some(x), Some(y)) if x != y && successor_chain(map, x, y) => {
                        Action::DriveThrough
                    }
                    _ => Action::FollowLane,
                }
            }
            Kind::Junction => junction_action(p, r.a, r.b, map)
                .map_err(|detail| InspectError::Unclassified { index, detail })?,
            Kind::Unknown(detail) => {
                return Err(InspectError::Unclassified {
                    index,
                    detail: detail.clone(),
                })
            }
        };
        labels.push((action, ends_low));
    }
    // coming to rest: a gentle slowdown into a standstill is a stop, a
    // standstill after braking stays part of the brake
    let mut seq: Vec<Action> = Vec::new();
    let mut prev_low = false;
    for (a, low) in labels {
        match (seq.last().copied(), a) {
            (Some(Action::Decelerate), Action::Stop) if prev_low => {
                seq.pop();
                seq.push(Action::Stop);
            }
            (Some(Action::Brake), Action::Stop) => {}
            _ => seq.push(a),
        }
        prev_low = low;
    }
    Ok(canonical_sequence(&seq))
}

fn successor_chain(map: &RoadMap, from: usize, to: usize) -> bool {
    let mut frontier = vec![from];
    let mut seen = vec![from];
    while let Some(l) = frontier.pop() {
        for s in map.successors(l) {
            if map.lane_at(s).def.junction || seen.contains(&s) {
                continue;
            }
            if s == to {
                return true;
            }
            seen.push(s);
            frontier.push(s);
        }
    }
    false
}

fn is_junction_action(a: Action) -> bool {
    matches!(a, Action::TurnLeft | Action::TurnRight | Action::Cross)
}

/// Merges repeated actions and folds lane following on the approach to and
/// exit from a junction into the junction action.
pub fn canonical_sequence(actions: &[Action]) -> Vec<Action> {
    let mut merged: Vec<Action> = Vec::new();
    for &a in actions {
        if merged.last() != Some(&a) {
            merged.push(a);
        }
    }
    let n = merged.len();
    let kept: Vec<Action> = (0..n)
        .filter(|&i| {
            let a = merged[i];
            !(a == Action::FollowLane
                && ((i > 0 && is_junction_action(merged[i - 1]))
                    || (i + 1 < n && is_junction_action(merged[i + 1]))))
        })
        .map(|i| merged[i])
        .collect();
    let mut out: Vec<Action> = Vec::new();
    for a in kept {
        if out.last() != Some(&a) {
            out.push(a);
        }
    }
    out
}

/// Action sequence of a trajectory, with repeats merged.
pub fn extract_action_sequence(
    traj: &Trajectory,
    kind: ParticipantType,
    map: &RoadMap,
    params: &InspectParams,
) -> Result<Vec<Action>, InspectError> {
    traj.validate()?;
    if traj.points.len() < 2 {
        return Err(InspectError::Unclassified {
            index: 0,
            detail: "a single sample has no motion".into(),
        });
    }
    let runs = merge_runs(pieces(traj, kind, map, params));
    label_runs(traj, kind, map, params, runs)
}

/// Action of one segment taken on its own.
pub fn classify_action(
    traj: &Trajectory,
    segment: &MotionSegment,
    kind: ParticipantType,
    map: &RoadMap,
    params: &InspectParams,
) -> Result<Action, InspectError> {
    let (a, b) = (segment.start_index, segment.end_index);
    if b >= traj.points.len() || a >= b {
        return Err(InspectError::Unclassified {
            index: 0,
            detail: "segment outside the trajectory".into(),
        });
    }
    let p = &traj.points[a..=b];
    let k = if is_pedestrian(kind) {
        pedestrian_piece(p, map, params)
    } else if p.iter().any(|q| in_junction(map, q.pos())) {
        Kind::Junction
    } else {
        vehicle_piece(p, map, params)
    };
    let labels = label_runs(traj, kind, map, params, vec![Piece { kind: k, a, b }])?;
    Ok(labels[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::standard_map;
    use crate::scenlang::{TrajectoryDef, Waypoint};
    use crate::script::Script;

    fn seq(kind: ParticipantType, wps: Vec<Waypoint>) -> Vec<Action> {
        let map = standard_map();
        let def = TrajectoryDef {
            name: "p".into(),
            participant_type: kind,
            waypoints: wps,
        };
        let s = Script::build(&map, &def).unwrap();
        let params = InspectParams::default();
        extract_action_sequence(&Trajectory::from_script(&s, 0.1), kind, &map, &params).unwrap()
    }

    use ParticipantType::{Car, Pedestrian};

    #[test]
    fn follow_and_lane_changes() {
        assert_eq!(
            seq(
                Car,
                vec![
                    Waypoint::lane("lane_222", 10.0, 10.0),
                    Waypoint::lane("lane_222", 60.0, 10.0)
                ]
            ),
            vec![Action::FollowLane]
        );
        assert_eq!(
            seq(
                Car,
                vec![
                    Waypoint::lane("lane_222", 10.0, 10.0),
                    Waypoint::lane("lane_223", 40.0, 10.0)
                ]
            ),
            vec![Action::ChangeLeft]
        );
        assert_eq!(
            seq(
                Car,
                vec![
                    Waypoint::lane("lane_223", 10.0, 10.0),
                    Waypoint::lane("lane_223", 40.0, 10.0),
                    Waypoint::lane("lane_222", 70.0, 10.0),
                    Waypoint::lane("lane_222", 100.0, 10.0),
                ]
            ),
            vec![Action::FollowLane, Action::ChangeRight, Action::FollowLane]
        );
    }

    #[test]
    fn longitudinal_actions() {
        // 2 -> 10 m/s at about 1.2 m/s^2
        let d = (100.0 - 4.0) / (2.0 * 1.2);
        assert_eq!(
            seq(
                Car,
                vec![
                    Waypoint::lane("lane_222", 5.0, 2.0),
                    Waypoint::lane("lane_222", 5.0 + d, 10.0)
                ]
            ),
            vec![Action::Accelerate]
        );
        assert_eq!(
            seq(
                Car,
                vec![
                    Waypoint::lane("lane_222", 5.0, 10.0),
                    Waypoint::lane("lane_222", 5.0 + 12.5, 0.0)
                ]
            ),
            vec![Action::Brake]
        );
        assert_eq!(
            seq(
                Car,
                vec![
                    Waypoint::lane("lane_222", 5.0, 10.0),
                    Waypoint::lane("lane_222", 45.0, 10.0),
                    Waypoint::lane("lane_222", 45.0 + 100.0 / 3.0, 0.0),
                    Waypoint::lane("lane_222", 45.0 + 100.0 / 3.0, 0.0).at(50.0),
                ]
            ),
            vec![Action::FollowLane, Action::Stop]
        );
        assert_eq!(
            seq(
                Car,
                vec![
                    Waypoint::lane("lane_222", 5.0, 0.0),
                    Waypoint::lane("lane_222", 5.0, 0.0).at(3.0)
                ]
            ),
            vec![Action::Stop]
        );
    }

    #[test]
    fn junction_turns() {
        let map = standard_map();
        let conn = map.lane("x_w_0_r").unwrap().length();
        let wps = vec![
            Waypoint::lane("x_w_in_0", 70.0, 8.0),
            Waypoint::lane("x_w_in_0", 100.0, 8.0),
            Waypoint::lane("x_w_0_r", 0.0, 8.0),
            Waypoint::lane("x_w_0_r", conn, 8.0),
            Waypoint::lane("x_s_out_0", 0.0, 8.0),
            Waypoint::lane("x_s_out_0", 20.0, 8.0),
        ];
        assert_eq!(seq(Car, wps), vec![Action::TurnRight]);
        let conn = map.lane("x_w_2_l").unwrap().length();
        let wps = vec![
            Waypoint::lane("x_w_in_2", 80.0, 8.0),
            Waypoint::lane("x_w_2_l", 0.0, 8.0),
            Waypoint::lane("x_w_2_l", conn, 8.0),
            Waypoint::lane("x_n_out_2", 20.0, 8.0),
        ];
        assert_eq!(seq(Car, wps), vec![Action::TurnLeft]);
        let wps = vec![
            Waypoint::lane("x_w_in_1", 80.0, 8.0),
            Waypoint::lane("x_w_1_s", 0.0, 8.0),
            Waypoint::lane("x_w_1_s", 32.0, 8.0),
            Waypoint::lane("x_e_out_1", 20.0, 8.0),
        ];
        assert_eq!(seq(Car, wps), vec![Action::Cross]);
    }

    #[test]
    fn pedestrian_actions() {
        let wps = vec![
            Waypoint::free(50.0, -3.5, 0.0),
            Waypoint::free(50.0, -3.5, 0.0).at(2.0),
            Waypoint::free(50.0, -3.5, 1.4),
            Waypoint::free(50.0, 7.25, 1.4),
        ];
        assert_eq!(seq(Pedestrian, wps), vec![Action::Stand, Action::Cross]);
        assert_eq!(
            seq(
                Pedestrian,
                vec![
                    Waypoint::free(20.0, -3.5, 1.4),
                    Waypoint::free(40.0, -3.5, 1.4)
                ]
            ),
            vec![Action::WalkAlong]
        );
        assert_eq!(
            seq(
                Pedestrian,
                vec![
                    Waypoint::free(20.0, -3.5, 1.4),
                    Waypoint::free(20.0, 1.0, 1.4)
                ]
            ),
            vec![Action::WalkAcross]
        );
    }

    #[test]
    fn drive_through_spans_successors() {
        assert_eq!(
            seq(
                Car,
                vec![
                    Waypoint::lane("lane_222", 120.0, 10.0),
                    Waypoint::lane("lane_224", 30.0, 10.0)
                ]
            ),
            vec![Action::DriveThrough]
        );
    }

    #[test]
    fn canonical_folds_junction_approach() {
        use Action::*;
        assert_eq!(
            canonical_sequence(&[FollowLane, FollowLane, TurnRight, FollowLane]),
            vec![TurnRight]
        );
        assert_eq!(
            canonical_sequence(&[ChangeRight, FollowLane, TurnRight]),
            vec![ChangeRight, TurnRight]
        );
        assert_eq!(
            canonical_sequence(&[Decelerate, FollowLane]),
            vec![Decelerate, FollowLane]
        );
    }
}
