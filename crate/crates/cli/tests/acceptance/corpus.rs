//! Hand-labelled inputs for the acceptance criteria.

use scenforge_core::abstraction::{AbstractScenario, ParticipantSpec};
use scenforge_core::inspect::{Constraint, Trajectory};
use scenforge_core::map::RoadMap;
use scenforge_core::scenlang::{parse, ConcreteScenario, TrajectoryDef, Waypoint};
use scenforge_core::script::Script;
use scenforge_core::vocab::{
    Action, ParticipantType, RelativePosition, RoadType, Role, VehicleType,
};

pub struct Labelled {
    pub name: String,
    pub road: RoadType,
    pub kind: ParticipantType,
    pub trajectory: Trajectory,
    pub expected: Vec<Action>,
}

pub fn sample(map: &RoadMap, kind: ParticipantType, wps: Vec<Waypoint>) -> Trajectory {
    let def = TrajectoryDef {
        name: "p".into(),
        participant_type: kind,
        waypoints: wps,
    };
    let s = Script::build(map, &def).expect("corpus script builds");
    Trajectory::from_script(&s, 0.1)
}

/// Approach lanes per road type: (lane, its left neighbour, start offset).
fn approach(road: RoadType) -> (&'static str, &'static str, f64) {
    match road {
        RoadType::Straight => ("lane_222", "lane_223", 5.0),
        RoadType::Intersection => ("x_w_in_0", "x_w_in_1", 0.0),
        RoadType::TJunction => ("t_w_in_0", "t_w_in_1", 0.0),
    }
}

/// A point beside the carriageway and the crossing distance, per road type.
fn curb(road: RoadType) -> (f64, f64, f64) {
    match road {
        RoadType::Straight => (50.0, -3.5, 10.75),
        RoadType::Intersection => (520.0, -13.5, 27.0),
        RoadType::TJunction => (1120.0, -9.5, 19.0),
    }
}

pub fn labelled_corpus(map: &RoadMap) -> Vec<Labelled> {
    use Action::*;
    use ParticipantType::{Car, Pedestrian};
    let mut out = Vec::new();
    let mut push = |name: &str, road: RoadType, kind: ParticipantType, wps: Vec<Waypoint>, expected: Vec<Action>| {
        out.push(Labelled {
            name: format!("{road}/{name}"),
            road,
            kind,
            trajectory: sample(map, kind, wps),
            expected,
        });
    };
    for road in [RoadType::Straight, RoadType::Intersection, RoadType::TJunction] {
        let (l, left, o) = approach(road);
        let lane = |lane: &str, off: f64, v: f64| Waypoint::lane(lane, o + off, v);
        push("follow", road, Car, vec![lane(l, 0.0, 10.0), lane(l, 60.0, 10.0)], vec![FollowLane]);
        push("change_left", road, Car, vec![lane(l, 5.0, 10.0), lane(left, 35.0, 10.0)], vec![ChangeLeft]);
        push("change_right", road, Car, vec![lane(left, 5.0, 10.0), lane(l, 35.0, 10.0)], vec![ChangeRight]);
        // 2 -> 10 m/s at 1.2 m/s^2
        let d = (100.0 - 4.0) / 2.4;
        push("accelerate", road, Car, vec![lane(l, 0.0, 2.0), lane(l, d, 10.0)], vec![Accelerate]);
        // 10 -> 5 m/s at 1.0 m/s^2
        push("decelerate", road, Car, vec![lane(l, 0.0, 10.0), lane(l, 37.5, 5.0)], vec![Decelerate]);
        // 10 -> 0 m/s at 4 m/s^2
        push("brake", road, Car, vec![lane(l, 10.0, 10.0), lane(l, 22.5, 0.0)], vec![Brake]);
        push("stop", road, Car, vec![lane(l, 30.0, 0.0), lane(l, 30.0, 0.0).at(4.0)], vec![Stop]);
        let (x, y, width) = curb(road);
        push(
            "walk_along",
            road,
            Pedestrian,
            vec![Waypoint::free(x, y, 1.4), Waypoint::free(x + 20.0, y, 1.4)],
            vec![WalkAlong],
        );
        push(
            "walk_across",
            road,
            Pedestrian,
            vec![Waypoint::free(x, y, 1.4), Waypoint::free(x, y + 4.5, 1.4)],
            vec![WalkAcross],
        );
        push(
            "cross",
            road,
            Pedestrian,
            vec![Waypoint::free(x, y, 1.4), Waypoint::free(x, y + width, 1.4)],
            vec![Cross],
        );
        push(
            "stand_then_cross",
            road,
            Pedestrian,
            vec![
                Waypoint::free(x, y, 0.0),
                Waypoint::free(x, y, 0.0).at(2.0),
                Waypoint::free(x, y, 1.4),
                Waypoint::free(x, y + width, 1.4),
            ],
            vec![Stand, Cross],
        );
        push(
            "stand",
            road,
            Pedestrian,
            vec![Waypoint::free(x, y, 0.0), Waypoint::free(x, y, 0.0).at(3.0)],
            vec![Stand],
        );
    }
    push(
        "drive_through",
        RoadType::Straight,
        Car,
        vec![Waypoint::lane("lane_222", 120.0, 10.0), Waypoint::lane("lane_224", 30.0, 10.0)],
        vec![DriveThrough],
    );
    let through = |entry: &str, conn: &str, exit: &str| {
        let len = map.lane(conn).expect("connector").length();
        vec![
            Waypoint::lane(entry, 70.0, 8.0),
            Waypoint::lane(entry, 100.0, 8.0),
            Waypoint::lane(conn, 0.0, 8.0),
            Waypoint::lane(conn, len, 8.0),
            Waypoint::lane(exit, 0.0, 8.0),
            Waypoint::lane(exit, 20.0, 8.0),
        ]
    };
    let x = RoadType::Intersection;
    push("turn_right", x, Car, through("x_w_in_0", "x_w_0_r", "x_s_out_0"), vec![TurnRight]);
    push("turn_left", x, Car, through("x_w_in_2", "x_w_2_l", "x_n_out_2"), vec![TurnLeft]);
    push("cross_junction", x, Car, through("x_w_in_1", "x_w_1_s", "x_e_out_1"), vec![Cross]);
    push("turn_right_north", x, Car, through("x_n_in_0", "x_n_0_r", "x_w_out_0"), vec![TurnRight]);
    push("turn_left_east", x, Car, through("x_e_in_2", "x_e_2_l", "x_s_out_2"), vec![TurnLeft]);
    let t = RoadType::TJunction;
    push("turn_right", t, Car, through("t_w_in_0", "t_w_0_r", "t_s_out_0"), vec![TurnRight]);
    push("turn_left", t, Car, through("t_e_in_1", "t_e_1_l", "t_s_out_1"), vec![TurnLeft]);
    push("cross_junction", t, Car, through("t_w_in_1", "t_w_1_s", "t_e_out_1"), vec![Cross]);
    push("turn_left_south", t, Car, through("t_s_in_1", "t_s_1_l", "t_w_out_1"), vec![TurnLeft]);
    push("turn_right_south", t, Car, through("t_s_in_0", "t_s_0_r", "t_e_out_0"), vec![TurnRight]);
    out
}

/// Scenario text with the ego on the straight road and the given participant lines.
fn program(extra: &str) -> ConcreteScenario {
    parse(&format!(
        "map standard;\nego car {{ start (\"lane_222\" -> 10); destination (\"lane_224\" -> 100); }}\n{extra}"
    ))
    .unwrap_or_else(|e| panic!("adversarial program does not parse: {e:?}\n{extra}"))
}

/// Scenarios that break exactly one feasibility constraint.
pub fn adversarial_corpus() -> Vec<(Constraint, ConcreteScenario)> {
    let mut out = Vec::new();
    // moving backwards or against the lane direction
    for (lane, a, b) in [
        ("lane_222", 80.0, 40.0),
        ("lane_223", 60.0, 20.0),
        ("lane_224", 50.0, 10.0),
        ("lane_225", 120.0, 30.0),
        ("lane_223", 140.0, 139.0),
    ] {
        out.push((
            Constraint::Heading,
            program(&format!("npc a car ((\"{lane}\" -> {a}, , 5), (\"{lane}\" -> {b}, , 5));")),
        ));
    }
    out.push((
        Constraint::Heading,
        program("npc a car ((\"lane_224\" -> 20, , 5), (\"lane_222\" -> 100, , 5));"),
    ));
    out.push((
        Constraint::Heading,
        program("npc a car ((\"x_w_out_1\" -> 10, , 5), (\"x_w_out_1\" -> 60, , 5), (\"x_w_in_1\" -> 90, , 5));"),
    ));
    for (start, dest) in [("100", "20"), ("140", "0")] {
        out.push((
            Constraint::Heading,
            parse(&format!(
                "map standard;\nego car {{ start (\"lane_222\" -> {start}); destination (\"lane_222\" -> {dest}); }}"
            ))
            .unwrap(),
        ));
    }
    out.push((
        Constraint::Heading,
        parse("map standard;\nego car { start (\"lane_224\" -> 10); destination (\"lane_222\" -> 50); }").unwrap(),
    ));
    // overlapping starts, off-lane or unknown positions
    for off in [11.0, 12.5, 14.0] {
        out.push((
            Constraint::Spatial,
            program(&format!("npc a car ((\"lane_222\" -> {off}, , 5), (\"lane_222\" -> 80, , 5));")),
        ));
    }
    out.push((
        Constraint::Spatial,
        program("npc a car ((\"lane_223\" -> 40, , 5), (\"lane_223\" -> 90, , 5));\nnpc b truck ((\"lane_223\" -> 43, , 5), (\"lane_223\" -> 95, , 5));"),
    ));
    for lat in [2.2, -2.5, 3.0] {
        out.push((
            Constraint::Spatial,
            program(&format!("npc a car ((\"lane_223\" -> 40, {lat}, 5), (\"lane_223\" -> 90, , 5));")),
        ));
    }
    out.push((
        Constraint::Spatial,
        program("npc a car (((40, 8), , 5), (\"lane_223\" -> 90, , 5));"),
    ));
    out.push((
        Constraint::Spatial,
        program("npc a car ((\"lane_999\" -> 40, , 5), (\"lane_223\" -> 90, , 5));"),
    ));
    out.push((
        Constraint::Spatial,
        program("npc a truck ((\"lane_223\" -> 40, , 5), ((90, 30), , 5));"),
    ));
    // speeds above the limit or negative
    for (k, v) in [(0, 14.5), (1, 20.0), (0, 30.0), (1, 13.95)] {
        let (a, b) = if k == 0 { (v, 5.0) } else { (5.0, v) };
        out.push((
            Constraint::Speed,
            program(&format!("npc a car ((\"lane_223\" -> 30, , {a}), (\"lane_223\" -> 120, , {b}));")),
        ));
    }
    out.push((
        Constraint::Speed,
        program("npc a car ((\"lane_223\" -> 30, , 5), (\"lane_223\" -> 90, , 8), (\"lane_225\" -> 40, , 16));"),
    ));
    out.push((
        Constraint::Speed,
        program("npc a truck ((\"x_w_in_1\" -> 20, , 18), (\"x_w_in_1\" -> 90, , 10));"),
    ));
    out.push((
        Constraint::Speed,
        program("npc a car ((\"t_w_in_0\" -> 10, , 6), (\"t_w_in_0\" -> 90, , 25));"),
    ));
    let mut neg = program("npc a car ((\"lane_223\" -> 30, , 5), (\"lane_223\" -> 120, , 5));");
    neg.npcs[0].waypoints[1].speed = -1.0;
    out.push((Constraint::Speed, neg));
    let mut nan = program("npc a car ((\"lane_223\" -> 30, , 5), (\"lane_223\" -> 120, , 5));");
    nan.npcs[0].waypoints[0].speed = f64::NAN;
    out.push((Constraint::Speed, nan));
    let mut fast_walker = program("pedestrian p (((40, -4), , 1.4), ((60, -4), , 1.4));");
    fast_walker.pedestrians[0].waypoints[1].speed = 15.0;
    out.push((Constraint::Speed, fast_walker));
    // schedules that cannot be kept
    for (at, v) in [(1.0, 5.0), (2.0, 8.0), (4.0, 10.0)] {
        out.push((
            Constraint::Temporal,
            program(&format!("npc a car ((\"lane_223\" -> 30, , {v}), (\"lane_223\" -> 130, , {v}, at {at}));")),
        ));
    }
    let mut backwards = program("npc a car ((\"lane_223\" -> 30, , 5, at 5), (\"lane_223\" -> 60, , 5, at 8));");
    backwards.npcs[0].waypoints[1].time = Some(3.0);
    out.push((Constraint::Temporal, backwards));
    let mut early = program("npc a car ((\"lane_223\" -> 30, , 5), (\"lane_223\" -> 60, , 5));");
    early.npcs[0].waypoints[0].time = Some(-1.0);
    out.push((Constraint::Temporal, early));
    out.push((
        Constraint::Temporal,
        program("npc a car ((\"lane_223\" -> 30, , 0), (\"lane_223\" -> 60, , 0));"),
    ));
    out.push((
        Constraint::Temporal,
        program("npc a car ((\"lane_223\" -> 30, , 0), (\"lane_223\" -> 35, , 13));"),
    ));
    out.push((
        Constraint::Temporal,
        program("npc a car ((\"lane_223\" -> 30, , 13), (\"lane_223\" -> 34, , 0));"),
    ));
    out.push((
        Constraint::Temporal,
        program("npc a car ((\"lane_223\" -> 30, , 2), (\"lane_223\" -> 34, , 12));"),
    ));
    out.push((
        Constraint::Temporal,
        program("pedestrian p (((40, -4), , 0), ((60, -4), , 0));"),
    ));
    out
}

fn spec(role: Role, vt: VehicleType, b: &[Action], pos: Option<RelativePosition>) -> ParticipantSpec {
    ParticipantSpec {
        role,
        vehicle_type: vt,
        behaviors: b.to_vec(),
        relative_position: pos,
    }
}

fn abstract_of(road: RoadType, ps: Vec<ParticipantSpec>) -> AbstractScenario {
    AbstractScenario {
        road_type: road,
        traffic_signal: None,
        participants: ps,
        notes: vec![],
    }
}

pub fn slow_npc_abstract() -> AbstractScenario {
    abstract_of(
        RoadType::Straight,
        vec![
            spec(Role::Ego, VehicleType::Car, &[Action::FollowLane], None),
            spec(
                Role::Npc,
                VehicleType::Car,
                &[Action::Decelerate, Action::FollowLane],
                Some(RelativePosition::Ahead),
            ),
        ],
    )
}

/// Twenty abstract scenarios over the three road types.
pub fn abstract_catalogue() -> Vec<AbstractScenario> {
    use Action::*;
    use RelativePosition as P;
    use RoadType::{Intersection, Straight, TJunction};
    let ego = |b: &[Action]| spec(Role::Ego, VehicleType::Car, b, None);
    let npc = |b: &[Action], p: P| spec(Role::Npc, VehicleType::Car, b, Some(p));
    let truck = |b: &[Action], p: P| spec(Role::Npc, VehicleType::Truck, b, Some(p));
    let ped = |b: &[Action], p: P| spec(Role::Pedestrian, VehicleType::None, b, Some(p));
    vec![
        abstract_of(Straight, vec![ego(&[FollowLane]), npc(&[FollowLane, Decelerate], P::Ahead)]),
        abstract_of(Straight, vec![ego(&[ChangeLeft]), npc(&[FollowLane, Accelerate], P::LeftBehind)]),
        abstract_of(Straight, vec![ego(&[FollowLane]), truck(&[Brake], P::Ahead)]),
        abstract_of(Straight, vec![ego(&[FollowLane]), npc(&[ChangeRight], P::LeftFront)]),
        abstract_of(Straight, vec![ego(&[DriveThrough]), npc(&[FollowLane, Stop], P::Ahead)]),
        abstract_of(Straight, vec![ego(&[FollowLane]), ped(&[Stand, Cross], P::Ahead)]),
        abstract_of(Straight, vec![ego(&[FollowLane]), ped(&[WalkAlong], P::RightFront)]),
        abstract_of(Straight, vec![ego(&[ChangeLeft]), npc(&[FollowLane], P::Behind), npc(&[Accelerate], P::LeftFront)]),
        abstract_of(Intersection, vec![ego(&[TurnLeft]), npc(&[Cross], P::Opposite)]),
        abstract_of(Intersection, vec![ego(&[Cross]), npc(&[TurnRight], P::LeftVertical)]),
        abstract_of(Intersection, vec![ego(&[TurnRight]), ped(&[Cross], P::RightVertical)]),
        abstract_of(Intersection, vec![ego(&[Cross]), truck(&[TurnLeft], P::RightVertical)]),
        abstract_of(Intersection, vec![ego(&[ChangeLeft, TurnLeft]), npc(&[FollowLane, Cross], P::Ahead)]),
        abstract_of(Intersection, vec![ego(&[Cross]), npc(&[Stop], P::Opposite), ped(&[WalkAcross], P::LeftVertical)]),
        abstract_of(TJunction, vec![ego(&[TurnRight]), npc(&[TurnLeft], P::Opposite)]),
        abstract_of(TJunction, vec![ego(&[Cross]), npc(&[TurnRight], P::RightVertical)]),
        abstract_of(TJunction, vec![ego(&[TurnLeft]), npc(&[FollowLane, Cross], P::Behind)]),
        abstract_of(TJunction, vec![ego(&[Cross]), ped(&[Stand, Cross], P::Ahead)]),
        abstract_of(TJunction, vec![ego(&[ChangeRight, TurnRight]), npc(&[Decelerate], P::RightFront)]),
        abstract_of(TJunction, vec![ego(&[Cross]), npc(&[Accelerate, TurnLeft], P::Opposite)]),
    ]
}
