//! Rendered test scenes with known object motion.

use super::image::GrayFrame;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

const SIZE: i32 = 12;
const BACKGROUND: u8 = 20;

/// A textured square following an integer pixel path (top-left corner per frame).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub path: Vec<(i32, i32)>,
    pub phase: f64,
}

impl SceneObject {
    pub fn linear(x0: i32, y0: i32, dx: i32, dy: i32, seed: u32, frames: usize) -> Self {
        let path = (0..frames as i32)
            .map(|f| (x0 + dx * f, y0 + dy * f))
            .collect();
        SceneObject {
            path,
            phase: seed as f64 * 0.7,
        }
    }

    /// Path from a start corner and one displacement per transition.
    pub fn from_steps(x0: i32, y0: i32, steps: &[(i32, i32)], seed: u32) -> Self {
        let mut path = vec![(x0, y0)];
        for &(dx, dy) in steps {
            let &(x, y) = path.last().unwrap();
            path.push((x + dx, y + dy));
        }
        SceneObject {
            path,
            phase: seed as f64 * 0.7,
        }
    }

    /// Centre of the object in frame `f`.
    pub fn center(&self, f: usize) -> (f64, f64) {
        let (x, y) = self.path[f];
        (
            x as f64 + (SIZE - 1) as f64 / 2.0,
            y as f64 + (SIZE - 1) as f64 / 2.0,
        )
    }

    fn texture(&self, u: i32, v: i32) -> u8 {
        let (u, v) = (u as f64, v as f64);
        let val = 140.0
            + 55.0 * (0.52 * u + self.phase).sin() * (0.47 * v + 0.3).cos()
            + 35.0 * (0.31 * (u - v) + 1.1 * self.phase).sin();
        val.round().clamp(60.0, 255.0) as u8
    }
}

pub fn render_scene(
    width: usize,
    height: usize,
    objects: &[SceneObject],
    frames: usize,
) -> Vec<GrayFrame> {
    (0..frames)
        .map(|f| {
            let mut g = GrayFrame::filled(width, height, BACKGROUND);
            g.timestamp = f as f64;
            for o in objects {
                let (ox, oy) = o.path[f.min(o.path.len() - 1)];
                for v in 0..SIZE {
                    for u in 0..SIZE {
                        let (x, y) = (ox + u, oy + v);
                        if x >= 0 && y >= 0 && (x as usize) < width && (y as usize) < height {
                            g.pixels[y as usize * width + x as usize] = o.texture(u, v);
                        }
                    }
                }
            }
            g
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Stop,
    SpeedUp,
    SlowDown,
    Turn,
    Reverse,
    None,
}

/// A rendered scene and the frames at which motion changes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticScene {
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    pub objects: Vec<SceneObject>,
    pub kind: EventKind,
    pub events: Vec<usize>,
}

impl SyntheticScene {
    pub fn render(&self) -> Vec<GrayFrame> {
        render_scene(self.width, self.height, &self.objects, self.frames)
    }

    /// Ground-truth tracks: positions while the object is moving between
    /// consecutive frames, plus the frame it arrives at.
    pub fn tracks(&self) -> Vec<super::Track<f64>> {
        let mut out = Vec::new();
        let mut id = 1;
        for o in &self.objects {
            let mut samples = Vec::new();
            for f in 0..self.frames - 1 {
                let moving = o.path[f] != o.path[(f + 1).min(o.path.len() - 1)];
                if moving {
                    if samples.is_empty() {
                        let (x, y) = o.center(f);
                        samples.push((f, x, y));
                    }
                    let (x, y) = o.center(f + 1);
                    samples.push((f + 1, x, y));
                } else if !samples.is_empty() {
                    break;
                }
            }
            if !samples.is_empty() {
                out.push(super::Track { id, samples });
                id += 1;
            }
        }
        out
    }
}

/// Single-object scene: `steps` before and after `event` describe the motion change.
fn event_scene(
    kind: EventKind,
    event: usize,
    frames: usize,
    rng: &mut ChaCha8Rng,
    seed: u32,
) -> SyntheticScene {
    let (before, after): ((i32, i32), (i32, i32)) = match kind {
        EventKind::Stop => ((1, 0), (0, 0)),
        EventKind::SpeedUp => ((1, 0), (2, 0)),
        EventKind::SlowDown => ((2, 0), (1, 0)),
        EventKind::Turn => ((1, 0), (0, 1)),
        EventKind::Reverse => ((2, 0), (-1, 0)),
        EventKind::None => ((1, 0), (1, 0)),
    };
    let flip = rng.random_bool(0.5);
    let sign = if flip { -1 } else { 1 };
    let steps: Vec<(i32, i32)> = (0..frames - 1)
        .map(|f| {
            let (dx, dy) = if f < event { before } else { after };
            (dx * sign, dy)
        })
        .collect();
    let (mut minx, mut maxx) = (0, 0);
    let mut x = 0;
    for s in &steps {
        x += s.0;
        minx = minx.min(x);
        maxx = maxx.max(x);
    }
    let width = 140usize;
    let x0 = 10 - minx + rng.random_range(0..=(width as i32 - 20 - SIZE - (maxx - minx)).max(0));
    let y0 = rng.random_range(8..14);
    let mut objects = vec![SceneObject::from_steps(x0, y0, &steps, seed)];
    // a second, unperturbed mover in its own band
    if rng.random_bool(0.5) && kind != EventKind::Turn {
        let v = if rng.random_bool(0.5) { 1 } else { -1 };
        let x1 = if v > 0 { 12 } else { width as i32 - 12 - SIZE };
        objects.push(SceneObject::linear(x1, 44, v, 0, seed + 101, frames));
    }
    let events = if kind == EventKind::None {
        vec![]
    } else {
        vec![event]
    };
    SyntheticScene {
        width,
        height: 64,
        frames,
        objects,
        kind,
        events,
    }
}

/// Deterministic scene suite: `events` scenes cycling through the event
/// kinds, followed by `controls` constant-velocity scenes.
pub fn event_suite(seed: u64, events: usize, controls: usize) -> Vec<SyntheticScene> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kinds = [
        EventKind::Stop,
        EventKind::SpeedUp,
        EventKind::SlowDown,
        EventKind::Turn,
        EventKind::Reverse,
    ];
    let frames = 24;
    let mut out = Vec::new();
    for i in 0..events {
        let e = rng.random_range(6..=16);
        out.push(event_scene(
            kinds[i % kinds.len()],
            e,
            frames,
            &mut rng,
            i as u32,
        ));
    }
    for i in 0..controls {
        out.push(event_scene(
            EventKind::None,
            0,
            frames,
            &mut rng,
            (events + i) as u32,
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_is_deterministic_and_in_bounds() {
        let a = event_suite(7, 10, 3);
        assert_eq!(a, event_suite(7, 10, 3));
        for s in &a {
            for o in &s.objects {
                for &(x, y) in &o.path {
                    assert!(x >= 6 && x + SIZE <= s.width as i32 - 6, "{x}");
                    assert!(y >= 6 && y + SIZE <= s.height as i32 - 6, "{y}");
                }
            }
        }
    }

    #[test]
    fn truth_tracks_end_at_stop() {
        let o = SceneObject::from_steps(10, 10, &[(1, 0), (1, 0), (0, 0), (0, 0)], 0);
        let s = SyntheticScene {
            width: 60,
            height: 40,
            frames: 5,
            objects: vec![o],
            kind: EventKind::Stop,
            events: vec![2],
        };
        let t = s.tracks();
        assert_eq!(
            t[0].samples.iter().map(|s| s.0).collect::<Vec<_>>(),
            vec![0, 1, 2]
        );
    }
}
