use super::RoadMap;
use crate::geom::wrap_angle;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_4;

/// How a route moves from one lane to the next.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Maneuver {
    /// Continue onto a successor outside a junction.
    Continue,
    ChangeLeft,
    ChangeRight,
    TurnLeft,
    TurnRight,
    /// Straight through a junction.
    Straight,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Route {
    pub lanes: Vec<usize>,
    /// `maneuvers[i]` leads from `lanes[i]` to `lanes[i + 1]`.
    pub maneuvers: Vec<Maneuver>,
}

const CHANGE_COST: f64 = 5.0;
const CHANGE_AFTER_JUNCTION: f64 = 60.0;

impl RoadMap {
    /// Turn class of a junction connector from its heading change.
    pub fn connector_maneuver(&self, lane: usize) -> Maneuver {
        let l = self.lane_at(lane);
        let dh = wrap_angle(l.end_heading() - l.start_heading());
        if dh > FRAC_PI_4 {
            Maneuver::TurnLeft
        } else if dh < -FRAC_PI_4 {
            Maneuver::TurnRight
        } else {
            Maneuver::Straight
        }
    }

    fn follows_junction(&self, lane: usize) -> bool {
        self.predecessors(lane)
            .iter()
            .any(|&p| self.lane_at(p).def.junction)
    }

    fn edges(&self, lane: usize) -> Vec<(usize, f64, Maneuver)> {
        let mut out = Vec::new();
        let len = self.lane_at(lane).length();
        for s in self.successors(lane) {
            let m = if self.lane_at(s).def.junction {
                self.connector_maneuver(s)
            } else {
                Maneuver::Continue
            };
            out.push((s, len, m));
        }
        let change = CHANGE_COST
            + if self.follows_junction(lane) {
                CHANGE_AFTER_JUNCTION
            } else {
                0.0
            };
        if let Some(l) = self.left_of(lane) {
            out.push((l, change, Maneuver::ChangeLeft));
        }
        if let Some(r) = self.right_of(lane) {
            out.push((r, change, Maneuver::ChangeRight));
        }
        out
    }

    /// Cheapest lane sequence from `start` to `dest`. Lane changes are cheap
    /// before junctions and expensive after them. Ties break on lane index.
    pub fn plan_route(&self, start: (usize, f64), dest: (usize, f64)) -> Option<Route> {
        if start.0 == dest.0 && dest.1 >= start.1 {
            return Some(Route {
                lanes: vec![start.0],
                maneuvers: vec![],
            });
        }
        // a destination behind the start on the same lane needs a path that
        // leaves the lane through a successor; states are (lane, advanced)
        let n = self.lanes().len() * 2;
        let first = start.0 * 2 + usize::from(start.0 != dest.0);
        let goal = dest.0 * 2 + 1;
        let mut dist = vec![f64::INFINITY; n];
        let mut prev: Vec<Option<(usize, Maneuver)>> = vec![None; n];
        let mut done = vec![false; n];
        dist[first] = 0.0;
        loop {
            let mut u = None;
            for i in 0..n {
                if !done[i] && dist[i].is_finite() && u.map_or(true, |j: usize| dist[i] < dist[j]) {
                    u = Some(i);
                }
            }
            let u = u?;
            if u == goal {
                break;
            }
            done[u] = true;
            for (lane, w, m) in self.edges(u / 2) {
                let lateral = matches!(m, Maneuver::ChangeLeft | Maneuver::ChangeRight);
                let v = lane * 2 + usize::from(u % 2 == 1 || !lateral);
                if done[v] {
                    continue;
                }
                let d = dist[u] + w;
                if d < dist[v] {
                    dist[v] = d;
                    prev[v] = Some((u, m));
                }
            }
        }
        let mut lanes = vec![dest.0];
        let mut maneuvers = Vec::new();
        let mut cur = goal;
        while let Some((p, m)) = prev[cur] {
            lanes.push(p / 2);
            maneuvers.push(m);
            cur = p;
        }
        lanes.reverse();
        maneuvers.reverse();
        Some(Route { lanes, maneuvers })
    }
}

#[cfg(test)]
mod tests {
    use super::super::standard_map;
    use super::*;

    fn ids(m: &RoadMap, r: &Route) -> Vec<String> {
        r.lanes
            .iter()
            .map(|&i| m.lane_at(i).id().to_string())
            .collect()
    }

    #[test]
    fn lane_change_and_turn_routes() {
        let m = standard_map();
        let l = |id: &str| m.lane_index(id).unwrap();
        let r = m
            .plan_route((l("lane_222"), 10.0), (l("lane_223"), 110.0))
            .unwrap();
        assert_eq!(r.maneuvers, vec![Maneuver::ChangeLeft]);
        let r = m
            .plan_route((l("lane_222"), 10.0), (l("lane_224"), 50.0))
            .unwrap();
        assert_eq!(r.maneuvers, vec![Maneuver::Continue]);
        let r = m
            .plan_route((l("x_w_in_1"), 10.0), (l("x_s_out_0"), 30.0))
            .unwrap();
        assert_eq!(
            r.maneuvers,
            vec![
                Maneuver::ChangeRight,
                Maneuver::TurnRight,
                Maneuver::Continue
            ]
        );
        assert_eq!(
            ids(&m, &r),
            vec!["x_w_in_1", "x_w_in_0", "x_w_0_r", "x_s_out_0"]
        );
        let r = m
            .plan_route((l("x_w_in_1"), 10.0), (l("x_e_out_1"), 30.0))
            .unwrap();
        assert_eq!(r.maneuvers, vec![Maneuver::Straight, Maneuver::Continue]);
        assert!(m
            .plan_route((l("lane_224"), 10.0), (l("lane_222"), 30.0))
            .is_none());
        // behind on the same lane, with or without changing lanes on the way
        assert!(m
            .plan_route((l("lane_222"), 100.0), (l("lane_222"), 20.0))
            .is_none());
        assert!(m
            .plan_route((l("x_w_in_1"), 60.0), (l("x_w_in_1"), 5.0))
            .is_none());
    }
}
