use scenforge_core::flowkey::synthetic::{event_suite, EventKind};
use scenforge_core::flowkey::{
    build_motion_states, extract_key_frames, extract_motion_states, KeyFrameParams, TrackerParams,
};

fn params() -> KeyFrameParams<f64> {
    KeyFrameParams {
        alpha: 0.5,
        ..Default::default()
    }
}

#[test]
fn pixel_path_recovers_events() {
    for (i, scene) in event_suite(11, 15, 5).iter().enumerate() {
        let states =
            extract_motion_states(&scene.render(), &TrackerParams::<f64>::default()).unwrap();
        let k = extract_key_frames(&states, &params()).unwrap();
        let interior: Vec<_> = k.indices[1..k.indices.len() - 1].to_vec();
        if scene.kind == EventKind::None {
            assert!(
                interior.is_empty(),
                "control {i}: {:?} {:?}",
                interior,
                k.deviations
            );
        }
        for &e in &scene.events {
            assert!(
                interior.iter().any(|&f| f.abs_diff(e) <= 1),
                "scene {i} {:?} event {e}: {:?}",
                scene.kind,
                interior
            );
        }
    }
}

#[test]
fn truth_tracks_agree_with_pixel_path() {
    for scene in event_suite(5, 10, 2) {
        let truth = build_motion_states(&scene.tracks(), scene.frames).unwrap();
        let from_pixels =
            extract_motion_states(&scene.render(), &TrackerParams::<f64>::default()).unwrap();
        let a = extract_key_frames(&truth, &params()).unwrap();
        let b = extract_key_frames(&from_pixels, &params()).unwrap();
        // frames next to a speed change sit on the threshold, so allow one frame of slack
        for (x, y) in [(&a, &b), (&b, &a)] {
            for i in &x.indices {
                assert!(
                    y.indices.iter().any(|j| j.abs_diff(*i) <= 1),
                    "{:?}: {:?} vs {:?}",
                    scene.kind,
                    a.indices,
                    b.indices
                );
            }
        }
    }
}
