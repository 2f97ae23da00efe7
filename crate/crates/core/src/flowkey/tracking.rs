//! Moving-object detection and track association over a frame sequence.

use super::image::GrayFrame;
use super::lk::{FlowPair, LkParams};
use super::{build_motion_states, FlowError, MotionStateVector, Track};
use crate::num::Scalar;
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrackerParams<T> {
    pub lk: LkParams<T>,
    /// Flow magnitude above which a pixel counts as moving (px/frame).
    pub motion_threshold: T,
    /// Largest expected per-frame displacement; the association gate is twice this.
    pub max_displacement: T,
    /// Intensity change that makes a pixel a flow candidate.
    pub change_threshold: T,
    /// Components smaller than this are discarded as noise.
    pub min_component: usize,
}

impl<T: Scalar> Default for TrackerParams<T> {
    fn default() -> Self {
        TrackerParams {
            lk: LkParams::default(),
            motion_threshold: T::lit(0.25),
            max_displacement: T::lit(2.0),
            change_threshold: T::lit(0.5),
            min_component: 6,
        }
    }
}

/// A connected group of moving pixels between two frames.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Detection<T> {
    pub cx: T,
    pub cy: T,
    pub vx: T,
    pub vy: T,
    pub size: usize,
}

fn median_of<T: Scalar>(v: Vec<T>) -> T {
    crate::num::median(&v).unwrap_or(T::zero())
}

/// Finds moving objects between `prev` and `next`.
pub fn detect_objects<T: Scalar>(
    prev: &GrayFrame,
    next: &GrayFrame,
    params: &TrackerParams<T>,
) -> Result<Vec<Detection<T>>, FlowError> {
    let pair = FlowPair::new(prev, next, params.lk)?;
    let (w, h) = (pair.width(), pair.height());
    let r = pair.half_window();
    if w <= 2 * r + 2 || h <= 2 * r + 2 {
        return Ok(Vec::new());
    }
    // candidates: pixels near a temporal change
    let mut changed = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            changed[y * w + x] = pair.temporal_difference(x, y) > params.change_threshold;
        }
    }
    let grow = 2usize;
    let mut flow: Vec<Option<(T, T)>> = vec![None; w * h];
    for y in r..h - r {
        for x in r..w - r {
            let near = (y.saturating_sub(grow)..=(y + grow).min(h - 1)).any(|yy| {
                (x.saturating_sub(grow)..=(x + grow).min(w - 1)).any(|xx| changed[yy * w + xx])
            });
            if !near {
                continue;
            }
            let p = pair.track(T::lit(x as f64), T::lit(y as f64))?;
            if p.tracked && p.vx.hypot(p.vy) > params.motion_threshold {
                flow[y * w + x] = Some((p.vx, p.vy));
            }
        }
    }
    // 8-connected components of moving pixels
    let mut label = vec![usize::MAX; w * h];
    let mut out = Vec::new();
    for start in 0..w * h {
        if flow[start].is_none() || label[start] != usize::MAX {
            continue;
        }
        let id = out.len();
        let mut stack = vec![start];
        label[start] = id;
        let mut members = Vec::new();
        while let Some(i) = stack.pop() {
            members.push(i);
            let (x, y) = ((i % w) as isize, (i / w) as isize);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                        continue;
                    }
                    let j = ny as usize * w + nx as usize;
                    if flow[j].is_some() && label[j] == usize::MAX {
                        label[j] = id;
                        stack.push(j);
                    }
                }
            }
        }
        if members.len() < params.min_component {
            out.push(None);
            continue;
        }
        let n = T::lit(members.len() as f64);
        let cx = members
            .iter()
            .fold(T::zero(), |a, &i| a + T::lit((i % w) as f64))
            / n;
        let cy = members
            .iter()
            .fold(T::zero(), |a, &i| a + T::lit((i / w) as f64))
            / n;
        let vx = median_of(members.iter().map(|&i| flow[i].unwrap().0).collect());
        let vy = median_of(members.iter().map(|&i| flow[i].unwrap().1).collect());
        out.push(Some(Detection {
            cx,
            cy,
            vx,
            vy,
            size: members.len(),
        }));
    }
    Ok(out.into_iter().flatten().collect())
}

struct Active<T> {
    id: u32,
    start: usize,
    positions: Vec<(T, T)>,
    last_centroid: (T, T),
    last_flow: (T, T),
}

/// Associates per-pair detections into tracks. `detections[f]` holds the
/// objects moving between frames `f` and `f + 1`. Positions are integrated
/// from the measured flow, starting at the first centroid.
pub fn associate<T: Scalar>(detections: &[Vec<Detection<T>>], gate: T) -> Vec<Track<T>> {
    let mut next_id = 1u32;
    let mut active: Vec<Active<T>> = Vec::new();
    let mut done: Vec<Active<T>> = Vec::new();
    for (f, dets) in detections.iter().enumerate() {
        let mut pairs = Vec::new();
        for (ti, t) in active.iter().enumerate() {
            let px = t.last_centroid.0 + t.last_flow.0;
            let py = t.last_centroid.1 + t.last_flow.1;
            for (di, d) in dets.iter().enumerate() {
                let dist = (d.cx - px).hypot(d.cy - py);
                if dist <= gate {
                    pairs.push((dist, ti, di));
                }
            }
        }
        pairs.sort_by(|a, b| {
            a.0.partial_cmp(&b.0)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.1.cmp(&b.1))
                .then(a.2.cmp(&b.2))
        });
        let mut track_used = vec![false; active.len()];
        let mut det_used = vec![false; dets.len()];
        let mut assignment = vec![None; active.len()];
        for (_, ti, di) in pairs {
            if !track_used[ti] && !det_used[di] {
                track_used[ti] = true;
                det_used[di] = true;
                assignment[ti] = Some(di);
            }
        }
        let mut still = Vec::new();
        for (ti, mut t) in active.into_iter().enumerate() {
            match assignment[ti] {
                Some(di) => {
                    let d = dets[di];
                    let &(x, y) = t.positions.last().unwrap();
                    t.positions.push((x + d.vx, y + d.vy));
                    t.last_centroid = (d.cx, d.cy);
                    t.last_flow = (d.vx, d.vy);
                    still.push(t);
                }
                None => done.push(t),
            }
        }
        for (di, d) in dets.iter().enumerate() {
            if !det_used[di] {
                still.push(Active {
                    id: next_id,
                    start: f,
                    positions: vec![(d.cx, d.cy), (d.cx + d.vx, d.cy + d.vy)],
                    last_centroid: (d.cx, d.cy),
                    last_flow: (d.vx, d.vy),
                });
                next_id += 1;
            }
        }
        active = still;
    }
    done.extend(active);
    done.sort_by_key(|t| t.id);
    done.into_iter()
        .map(|t| Track {
            id: t.id,
            samples: t
                .positions
                .iter()
                .enumerate()
                .map(|(k, &(x, y))| (t.start + k, x, y))
                .collect(),
        })
        .collect()
}

/// Full pixel path: detect, associate and summarise each frame.
pub fn extract_motion_states<T: Scalar>(
    frames: &[GrayFrame],
    params: &TrackerParams<T>,
) -> Result<Vec<MotionStateVector<T>>, FlowError> {
    if frames.is_empty() {
        return Err(FlowError::EmptyInput("no frames".into()));
    }
    let detections: Vec<Vec<Detection<T>>> = frames
        .par_windows(2)
        .map(|w| detect_objects(&w[0], &w[1], params))
        .collect::<Result<_, _>>()?;
    let tracks = associate(&detections, T::lit(2.0) * params.max_displacement);
    build_motion_states(&tracks, frames.len())
}
