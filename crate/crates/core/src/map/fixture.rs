//! The bundled map: a straight two-lane road, a four-way intersection and a
//! T-junction, far enough apart not to interact.

use super::{LaneDef, MapFile, RoadMap};
use crate::geom::Vec2;
use crate::vocab::RoadType;
use std::f64::consts::{FRAC_PI_2, PI};

pub const LANE_WIDTH: f64 = 3.75;
const SPEED: f64 = 13.9;
const TURN_SPEED: f64 = 8.3;
const ARM_LENGTH: f64 = 100.0;

fn lane(id: &str, pts: Vec<Vec2>, road_type: RoadType, segment: &str) -> LaneDef {
    LaneDef {
        id: id.to_string(),
        centerline: pts.iter().map(|p| [round6(p.x), round6(p.y)]).collect(),
        width: LANE_WIDTH,
        speed_limit: SPEED,
        left_neighbor: None,
        right_neighbor: None,
        successors: Vec::new(),
        road_type,
        segment: segment.to_string(),
        junction: false,
    }
}

fn round6(v: f64) -> f64 {
    let r = (v * 1e6).round() / 1e6;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

fn straight_road() -> Vec<LaneDef> {
    let seg = "straight_1";
    let mk = |id: &str, x0: f64, x1: f64, y: f64| {
        lane(
            id,
            vec![Vec2::new(x0, y), Vec2::new(x1, y)],
            RoadType::Straight,
            seg,
        )
    };
    let mut l222 = mk("lane_222", 0.0, 150.0, 0.0);
    let mut l223 = mk("lane_223", 0.0, 150.0, LANE_WIDTH);
    let mut l224 = mk("lane_224", 150.0, 300.0, 0.0);
    let mut l225 = mk("lane_225", 150.0, 300.0, LANE_WIDTH);
    l222.left_neighbor = Some("lane_223".into());
    l223.right_neighbor = Some("lane_222".into());
    l224.left_neighbor = Some("lane_225".into());
    l225.right_neighbor = Some("lane_224".into());
    l222.successors = vec!["lane_224".into()];
    l223.successors = vec!["lane_225".into()];
    vec![l222, l223, l224, l225]
}

struct Arm {
    name: &'static str,
    /// Direction from the junction centre along the arm.
    theta: f64,
}

/// Arc from `a` (heading `ha`) to `b`, bending around `center`.
fn arc(a: Vec2, b: Vec2, center: Vec2, steps: usize) -> Vec<Vec2> {
    let r = a.dist(center);
    let t0 = (a - center).angle();
    let mut dt = crate::geom::wrap_angle((b - center).angle() - t0);
    if dt.abs() < 1e-9 {
        dt = 0.0;
    }
    (0..=steps)
        .map(|k| {
            let t = t0 + dt * k as f64 / steps as f64;
            center + Vec2::from_angle(t) * r
        })
        .collect()
}

/// Intersection of the lines `p + s*u` and `q + t*v`.
fn line_meet(p: Vec2, u: Vec2, q: Vec2, v: Vec2) -> Vec2 {
    let s = (q - p).cross(v) / u.cross(v);
    p + u * s
}

fn junction(
    prefix: &str,
    segment: &str,
    road_type: RoadType,
    center: Vec2,
    half: f64,
    lanes: usize,
    arms: &[Arm],
) -> Vec<LaneDef> {
    let mut out = Vec::new();
    let offset = |k: usize| LANE_WIDTH * (lanes as f64 - k as f64 - 0.5);
    let name = |arm: &str, dir: &str, k: usize| format!("{prefix}_{arm}_{dir}_{k}");
    for arm in arms {
        let out_dir = Vec2::from_angle(arm.theta);
        let in_heading = arm.theta + PI;
        let in_right = Vec2::from_angle(in_heading - FRAC_PI_2);
        let out_right = Vec2::from_angle(arm.theta - FRAC_PI_2);
        for k in 0..lanes {
            let far = center + out_dir * (half + ARM_LENGTH);
            let near = center + out_dir * half;
            let mut inc = lane(
                &name(arm.name, "in", k),
                vec![far + in_right * offset(k), near + in_right * offset(k)],
                road_type,
                segment,
            );
            let mut outg = lane(
                &name(arm.name, "out", k),
                vec![near + out_right * offset(k), far + out_right * offset(k)],
                road_type,
                segment,
            );
            if k + 1 < lanes {
                inc.left_neighbor = Some(name(arm.name, "in", k + 1));
                outg.left_neighbor = Some(name(arm.name, "out", k + 1));
            }
            if k > 0 {
                inc.right_neighbor = Some(name(arm.name, "in", k - 1));
                outg.right_neighbor = Some(name(arm.name, "out", k - 1));
            }
            out.push(inc);
            out.push(outg);
        }
    }
    for from in arms {
        let heading = from.theta + PI;
        for (tag, turn) in [("r", -FRAC_PI_2), ("s", 0.0), ("l", FRAC_PI_2)] {
            let target = crate::geom::wrap_angle(heading + turn);
            let Some(to) = arms
                .iter()
                .find(|a| crate::geom::wrap_angle(a.theta - target).abs() < 1e-6)
            else {
                continue;
            };
            for k in 0..lanes {
                let in_id = name(from.name, "in", k);
                let out_id = name(to.name, "out", k);
                let in_lane = out.iter().find(|l| l.id == in_id).unwrap();
                let out_lane = out.iter().find(|l| l.id == out_id).unwrap();
                let a = Vec2::new(in_lane.centerline[1][0], in_lane.centerline[1][1]);
                let b = Vec2::new(out_lane.centerline[0][0], out_lane.centerline[0][1]);
                let pts = if tag == "s" {
                    vec![a, b]
                } else {
                    let ua = Vec2::from_angle(heading).perp();
                    let ub = Vec2::from_angle(to.theta).perp();
                    arc(a, b, line_meet(a, ua, b, ub), 12)
                };
                let id = format!("{prefix}_{}_{k}_{tag}", from.name);
                let mut c = lane(&id, pts, road_type, segment);
                c.junction = true;
                if tag != "s" {
                    c.speed_limit = TURN_SPEED;
                }
                c.successors = vec![out_id];
                out.iter_mut()
                    .find(|l| l.id == in_id)
                    .unwrap()
                    .successors
                    .push(id.clone());
                out.push(c);
            }
        }
    }
    out
}

pub fn standard_map() -> RoadMap {
    let mut lanes = straight_road();
    let four = [
        Arm {
            name: "w",
            theta: PI,
        },
        Arm {
            name: "n",
            theta: FRAC_PI_2,
        },
        Arm {
            name: "e",
            theta: 0.0,
        },
        Arm {
            name: "s",
            theta: -FRAC_PI_2,
        },
    ];
    lanes.extend(junction(
        "x",
        "cross_1",
        RoadType::Intersection,
        Vec2::new(600.0, 0.0),
        16.0,
        3,
        &four,
    ));
    let three = [
        Arm {
            name: "w",
            theta: PI,
        },
        Arm {
            name: "e",
            theta: 0.0,
        },
        Arm {
            name: "s",
            theta: -FRAC_PI_2,
        },
    ];
    lanes.extend(junction(
        "t",
        "tee_1",
        RoadType::TJunction,
        Vec2::new(1200.0, 0.0),
        12.0,
        2,
        &three,
    ));
    RoadMap::from_file(MapFile {
        id: "standard".into(),
        lanes,
    })
    .expect("fixture map is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn connector_geometry() {
        let m = standard_map();
        let right = m.lane("x_w_0_r").unwrap();
        let r = right.length() / FRAC_PI_2;
        assert!((r - 6.625).abs() < 0.05, "radius {r}");
        assert!(crate::geom::wrap_angle(right.end_heading() - right.start_heading()) < -1.2);
        let left = m.lane("x_w_2_l").unwrap();
        assert!(crate::geom::wrap_angle(left.end_heading() - left.start_heading()) > 1.2);
        assert!(m.lane("x_w_1_s").unwrap().length() == 32.0);
        // the T-junction has no northern arm
        assert!(m.lane("t_w_0_l").is_none());
        assert!(m.lane("t_s_1_l").is_some());
        let wi = m.lane("x_w_in_0").unwrap();
        assert_eq!(wi.def.successors, vec!["x_w_0_r", "x_w_0_s", "x_w_0_l"]);
    }
}
