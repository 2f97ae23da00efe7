//! Key-frame extraction from traffic video.
//!
//! Frames are converted to grayscale, moving objects are tracked with
//! Lucas-Kanade flow, and each frame is summarised as a motion state
//! (one row per object). A frame is kept when its state deviates from the
//! interpolation of its neighbours by more than a threshold.

pub mod image;
pub mod lk;
pub mod synthetic;
pub mod tracking;

use crate::num::{median, Scalar};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub use image::{
    decode_pnm, encode_pgm, encode_ppm, load_frame_dir, to_grayscale, GrayFrame, RgbFrame,
};
pub use lk::{lucas_kanade_flow, FlowPoint, LkParams};
pub use tracking::{extract_motion_states, TrackerParams};

#[derive(Debug, thiserror::Error)]
pub enum FlowError {
    #[error("dimension mismatch: {0}")]
    Dimensions(String),
    #[error("point ({0}, {1}) is too close to the frame border")]
    PointOutOfBounds(f64, f64),
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("track {id} has a gap of {gap} frames before frame {frame}")]
    TrackGap { id: u32, frame: usize, gap: usize },
    #[error("malformed track: {0}")]
    MalformedTrack(String),
    #[error("frame format: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One object's state in a frame: position and per-frame displacement (px).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectState<T> {
    pub id: u32,
    pub x: T,
    pub y: T,
    pub vx: T,
    pub vy: T,
}

/// All object states of one frame, ordered by id.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MotionStateVector<T> {
    pub frame_index: usize,
    pub rows: Vec<ObjectState<T>>,
}

impl<T: Scalar> MotionStateVector<T> {
    pub fn new(frame_index: usize, mut rows: Vec<ObjectState<T>>) -> Self {
        rows.sort_by_key(|r| r.id);
        MotionStateVector { frame_index, rows }
    }

    fn by_id(&self) -> BTreeMap<u32, &ObjectState<T>> {
        self.rows.iter().map(|r| (r.id, r)).collect()
    }
}

/// A tracked object's positions. Frames must increase; a single missing
/// frame is filled by linear interpolation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Track<T> {
    pub id: u32,
    pub samples: Vec<(usize, T, T)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KeyFrameSequence<T> {
    pub indices: Vec<usize>,
    /// Deviation for each retained index; endpoints record zero.
    pub deviations: Vec<T>,
    pub tau: T,
    pub alpha: T,
}

/// Serialized motion-state sequence used as the alternate extractor input.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowFieldFile {
    pub states: Vec<MotionStateVector<f64>>,
}

/// Builds one state vector per frame from object tracks.
/// Velocities are backward differences; a track's first frame copies its first displacement.
pub fn build_motion_states<T: Scalar>(
    tracks: &[Track<T>],
    frame_count: usize,
) -> Result<Vec<MotionStateVector<T>>, FlowError> {
    let mut frames: Vec<Vec<ObjectState<T>>> = vec![Vec::new(); frame_count];
    let mut seen = std::collections::BTreeSet::new();
    for track in tracks {
        if !seen.insert(track.id) {
            return Err(FlowError::MalformedTrack(format!(
                "duplicate id {}",
                track.id
            )));
        }
        let mut filled: Vec<(usize, T, T)> = Vec::with_capacity(track.samples.len());
        for &(f, x, y) in &track.samples {
            if !(x.is_finite() && y.is_finite()) {
                return Err(FlowError::MalformedTrack(format!(
                    "non-finite position in track {}",
                    track.id
                )));
            }
            if let Some(&(pf, px, py)) = filled.last() {
                if f <= pf {
                    return Err(FlowError::MalformedTrack(format!(
                        "track {} frames not increasing at {f}",
                        track.id
                    )));
                }
                match f - pf {
                    1 => {}
                    2 => {
                        let half = T::lit(0.5);
                        filled.push((pf + 1, px + (x - px) * half, py + (y - py) * half));
                    }
                    g => {
                        return Err(FlowError::TrackGap {
                            id: track.id,
                            frame: f,
                            gap: g - 1,
                        })
                    }
                }
            }
            filled.push((f, x, y));
        }
        for (k, &(f, x, y)) in filled.iter().enumerate() {
            if f >= frame_count {
                return Err(FlowError::MalformedTrack(format!(
                    "track {} reaches frame {f} of {frame_count}",
                    track.id
                )));
            }
            let (vx, vy) = if filled.len() < 2 {
                (T::zero(), T::zero())
            } else {
                let (a, b) = if k == 0 { (0, 1) } else { (k - 1, k) };
                (filled[b].1 - filled[a].1, filled[b].2 - filled[a].2)
            };
            frames[f].push(ObjectState {
                id: track.id,
                x,
                y,
                vx,
                vy,
            });
        }
    }
    Ok(frames
        .into_iter()
        .enumerate()
        .map(|(i, rows)| MotionStateVector::new(i, rows))
        .collect())
}

/// Componentwise blend of rows present in both vectors.
pub fn interpolate_state<T: Scalar>(
    prev: &MotionStateVector<T>,
    next: &MotionStateVector<T>,
    alpha: T,
) -> Result<MotionStateVector<T>, FlowError> {
    if !(alpha >= T::zero() && alpha <= T::one()) {
        return Err(FlowError::InvalidParameter(format!(
            "interpolation weight {:?} outside [0, 1]",
            alpha
        )));
    }
    let next_rows = next.by_id();
    let keep = T::one() - alpha;
    let rows = prev
        .rows
        .iter()
        .filter_map(|p| {
            next_rows.get(&p.id).map(|n| ObjectState {
                id: p.id,
                x: keep * p.x + alpha * n.x,
                y: keep * p.y + alpha * n.y,
                vx: keep * p.vx + alpha * n.vx,
                vy: keep * p.vy + alpha * n.vy,
            })
        })
        .collect();
    Ok(MotionStateVector {
        frame_index: prev.frame_index,
        rows,
    })
}

/// Sum over shared ids of position distance plus weighted velocity distance,
/// plus `unmatched_penalty` for each id present in only one vector.
pub fn motion_deviation<T: Scalar>(
    actual: &MotionStateVector<T>,
    interpolated: &MotionStateVector<T>,
    velocity_weight: T,
    unmatched_penalty: T,
) -> T {
    let a = actual.by_id();
    let b = interpolated.by_id();
    let mut total = T::zero();
    for (id, ra) in &a {
        match b.get(id) {
            Some(rb) => total = total + row_deviation(ra, rb, velocity_weight),
            None => total = total + unmatched_penalty,
        }
    }
    for id in b.keys() {
        if !a.contains_key(id) {
            total = total + unmatched_penalty;
        }
    }
    total
}

pub fn row_deviation<T: Scalar>(a: &ObjectState<T>, b: &ObjectState<T>, velocity_weight: T) -> T {
    (a.x - b.x).hypot(a.y - b.y) + velocity_weight * (a.vx - b.vx).hypot(a.vy - b.vy)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KeyFrameParams<T> {
    pub alpha: T,
    /// Fixed threshold; `None` selects `max(min_tau, 3 * median deviation)`.
    pub tau: Option<T>,
    pub velocity_weight: T,
    pub min_tau: T,
}

impl<T: Scalar> Default for KeyFrameParams<T> {
    fn default() -> Self {
        KeyFrameParams {
            alpha: T::lit(0.2),
            tau: None,
            velocity_weight: T::one(),
            min_tau: T::lit(0.5),
        }
    }
}

/// Interior deviations, computed with the given unmatched-id penalty.
fn interior_deviations<T: Scalar>(
    states: &[MotionStateVector<T>],
    alpha: T,
    velocity_weight: T,
    penalty: T,
) -> Result<Vec<T>, FlowError> {
    (1..states.len() - 1)
        .map(|f| {
            let p = interpolate_state(&states[f - 1], &states[f + 1], alpha)?;
            Ok(motion_deviation(&states[f], &p, velocity_weight, penalty))
        })
        .collect()
}

/// Keeps frames whose deviation exceeds the threshold, plus both endpoints.
pub fn extract_key_frames<T: Scalar>(
    states: &[MotionStateVector<T>],
    params: &KeyFrameParams<T>,
) -> Result<KeyFrameSequence<T>, FlowError> {
    if states.len() < 3 {
        return Err(FlowError::EmptyInput(format!(
            "{} frames, need at least 3",
            states.len()
        )));
    }
    if !(params.alpha >= T::zero() && params.alpha <= T::one()) {
        return Err(FlowError::InvalidParameter("alpha outside [0, 1]".into()));
    }
    let tau = match params.tau {
        Some(t) => {
            if t.is_nan() || t < T::zero() {
                return Err(FlowError::InvalidParameter(
                    "tau must be non-negative".into(),
                ));
            }
            t
        }
        None => {
            let matched =
                interior_deviations(states, params.alpha, params.velocity_weight, T::zero())?;
            let m = median(&matched).unwrap_or(T::zero());
            params.min_tau.max(T::lit(3.0) * m)
        }
    };
    let penalty = if tau.is_finite() {
        T::lit(2.0) * tau
    } else {
        T::max_value()
    };
    let devs = interior_deviations(states, params.alpha, params.velocity_weight, penalty)?;
    let last = states.len() - 1;
    let mut indices = vec![0];
    let mut deviations = vec![T::zero()];
    for (k, &d) in devs.iter().enumerate() {
        if d > tau {
            indices.push(k + 1);
            deviations.push(d);
        }
    }
    indices.push(last);
    deviations.push(T::zero());
    Ok(KeyFrameSequence {
        indices,
        deviations,
        tau,
        alpha: params.alpha,
    })
}
