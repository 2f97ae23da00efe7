use super::{InspectParams, TrajPoint, Trajectory};
use crate::map::RoadMap;
use serde::Serialize;

/// Inclusive sample range; neighbouring segments share their boundary sample.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MotionSegment {
    pub start_index: usize,
    pub end_index: usize,
    /// Lanes under the samples, in order of first appearance.
    pub lanes: Vec<String>,
}

/// Deviation of sample `i` from the straight-line interpolation between
/// samples `a` and `b`.
fn deviation(p: &[TrajPoint], a: usize, b: usize, i: usize, w_v: f64) -> f64 {
    let (pa, pb, pi) = (&p[a], &p[b], &p[i]);
    let f = (pi.t - pa.t) / (pb.t - pa.t);
    let lerp = |u: f64, v: f64| u + (v - u) * f;
    let dp = (pi.x - lerp(pa.x, pb.x)).hypot(pi.y - lerp(pa.y, pb.y));
    let dv = (pi.vx - lerp(pa.vx, pb.vx)).hypot(pi.vy - lerp(pa.vy, pb.vy));
    dp + w_v * dv
}

/// Split points in `[a, b]`, found top-down at the largest deviation.
pub(crate) fn breakpoints(
    p: &[TrajPoint],
    a: usize,
    b: usize,
    params: &InspectParams,
) -> Vec<usize> {
    let mut cuts = vec![a, b];
    let mut stack = vec![(a, b)];
    while let Some((lo, hi)) = stack.pop() {
        if hi <= lo + 1 {
            continue;
        }
        let (mut worst, mut at) = (0.0, lo);
        for i in lo + 1..hi {
            let d = deviation(p, lo, hi, i, params.velocity_weight);
            if d > worst {
                worst = d;
                at = i;
            }
        }
        if worst > params.tau {
            cuts.push(at);
            stack.push((lo, at));
            stack.push((at, hi));
        }
    }
    cuts.sort_unstable();
    cuts.dedup();
    absorb_short(p, cuts, params)
}

fn absorb_short(p: &[TrajPoint], mut cuts: Vec<usize>, params: &InspectParams) -> Vec<usize> {
    let short = |c: &[usize], k: usize| {
        let (a, b) = (c[k], c[k + 1]);
        b - a + 1 < params.min_segment_samples || p[b].t - p[a].t < params.min_segment_duration
    };
    loop {
        if cuts.len() <= 2 {
            return cuts;
        }
        let Some(k) = (0..cuts.len() - 1).find(|&k| short(&cuts, k)) else {
            return cuts;
        };
        // drop the boundary shared with the previous segment, or the next one for the first
        let drop = if k == 0 { 1 } else { k };
        cuts.remove(drop);
    }
}

pub(crate) fn to_segments(
    traj: &Trajectory,
    cuts: &[usize],
    map: Option<&RoadMap>,
) -> Vec<MotionSegment> {
    cuts.windows(2)
        .map(|w| {
            let mut lanes: Vec<String> = Vec::new();
            if let Some(m) = map {
                for q in &traj.points[w[0]..=w[1]] {
                    if let Some((i, _)) = m.locate(q.pos()) {
                        let id = m.lane_at(i).id();
                        if !lanes.iter().any(|l| l == id) {
                            lanes.push(id.to_string());
                        }
                    }
                }
            }
            MotionSegment {
                start_index: w[0],
                end_index: w[1],
                lanes,
            }
        })
        .collect()
}

/// Splits a trajectory where its motion departs from linear interpolation.
/// Fewer than three samples give a single segment.
pub fn segment_motions(
    traj: &Trajectory,
    map: &RoadMap,
    params: &InspectParams,
) -> Vec<MotionSegment> {
    if traj.points.is_empty() {
        return Vec::new();
    }
    let last = traj.points.len() - 1;
    let cuts = if traj.points.len() < 3 {
        vec![0, last]
    } else {
        breakpoints(&traj.points, 0, last, params)
    };
    let cuts = if cuts.len() < 2 { vec![0, last] } else { cuts };
    to_segments(traj, &cuts, Some(map))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::standard_map;

    fn traj(f: impl Fn(f64) -> (f64, f64, f64, f64), secs: f64) -> Trajectory {
        let n = (secs / 0.1).round() as usize;
        Trajectory {
            points: (0..=n)
                .map(|k| {
                    let t = k as f64 * 0.1;
                    let (x, y, vx, vy) = f(t);
                    TrajPoint { t, x, y, vx, vy }
                })
                .collect(),
        }
    }

    #[test]
    fn constant_speed_is_one_segment() {
        let map = standard_map();
        let t = traj(|t| (10.0 + 8.0 * t, 0.0, 8.0, 0.0), 10.0);
        let s = segment_motions(&t, &map, &InspectParams::default());
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].lanes, vec!["lane_222"]);
    }

    #[test]
    fn hard_stop_splits_once() {
        let map = standard_map();
        // cruise at 10 m/s for 5 s, then stand still
        let t = traj(
            |t| {
                if t < 5.0 {
                    (10.0 * t, 0.0, 10.0, 0.0)
                } else {
                    (50.0, 0.0, 0.0, 0.0)
                }
            },
            10.0,
        );
        let s = segment_motions(&t, &map, &InspectParams::default());
        assert_eq!(s.len(), 2, "{s:?}");
        assert!((t.points[s[0].end_index].t - 5.0).abs() < 0.11);
    }

    #[test]
    fn lane_change_gives_three_segments() {
        let map = standard_map();
        let (v, vy) = (10.0, 1.25);
        let t = traj(
            |t| {
                if t < 3.0 {
                    (10.0 + v * t, 0.0, v, 0.0)
                } else if t < 6.0 {
                    (40.0 + v * (t - 3.0), vy * (t - 3.0), v, vy)
                } else {
                    (70.0 + v * (t - 6.0), 3.75, v, 0.0)
                }
            },
            9.0,
        );
        let s = segment_motions(&t, &map, &InspectParams::default());
        assert_eq!(s.len(), 3, "{s:?}");
    }

    #[test]
    fn short_input_is_single_segment() {
        let map = standard_map();
        let t = traj(|t| (t, 0.0, 1.0, 0.0), 0.1);
        assert_eq!(
            segment_motions(&t, &map, &InspectParams::default()).len(),
            1
        );
    }
}
