//! Regenerates the bundled fixture set under `fixtures/`.
//!
//! cargo run -p scenforge --example make_fixtures

use scenforge_core::flowkey::synthetic::{event_suite, EventKind, SyntheticScene};
use scenforge_core::flowkey::image::write_pgm;
use scenforge_core::flowkey::{build_motion_states, FlowFieldFile};
use scenforge_core::map::standard_map;
use serde_json::json;
use std::path::Path;

fn scene(kind: EventKind) -> SyntheticScene {
    event_suite(2024, 5, 0)
        .into_iter()
        .find(|s| s.kind == kind)
        .expect("suite covers every event kind")
}

fn write(path: &Path, text: &str) {
    std::fs::create_dir_all(path.parent().unwrap()).unwrap();
    std::fs::write(path, text).unwrap();
}

fn frames(dir: &Path, s: &SyntheticScene) {
    std::fs::create_dir_all(dir).unwrap();
    for (i, f) in s.render().iter().enumerate() {
        write_pgm(&dir.join(format!("frame_{i:03}.pgm")), f).unwrap();
    }
}

fn main() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    write(&root.join("map.json"), &format!("{}\n", standard_map().to_json()));

    let v = root.join("slow_npc");
    frames(&v.join("frames"), &scene(EventKind::SlowDown));
    let log = json!({
        "road_type": "straight road",
        "participants": [
            {"role": "ego", "vehicle_type": "car", "behaviors": ["follow lane"]},
            {"role": "npc", "vehicle_type": "car", "relative_position": "ahead",
             "behaviors": ["decelerate", "follow lane"]}
        ]
    });
    write(&v.join("annotations.json"), &serde_json::to_string_pretty(&log).unwrap());

    let v = root.join("crossing_pedestrian");
    frames(&v.join("frames"), &scene(EventKind::Stop));
    let log = json!({
        "road_type": "intersection",
        "traffic_signal": "none",
        "participants": [
            {"role": "ego", "vehicle_type": "car", "behaviors": ["turn right"]},
            {"role": "pedestrian", "relative_position": "right vertical", "behaviors": ["cross"]}
        ]
    });
    write(&v.join("annotations.json"), &serde_json::to_string_pretty(&log).unwrap());

    let v = root.join("oncoming_turn");
    let s = scene(EventKind::Turn);
    let states = build_motion_states(&s.tracks(), s.frames).unwrap();
    write(
        &v.join("flow.json"),
        &serde_json::to_string_pretty(&FlowFieldFile { states }).unwrap(),
    );
    let log = json!({
        "road_type": "t junction",
        "participants": [
            {"role": "ego", "vehicle_type": "car", "behaviors": ["turn right"]},
            {"role": "npc", "vehicle_type": "car", "relative_position": "opposite",
             "behaviors": ["turn left"]}
        ]
    });
    write(&v.join("annotations.json"), &serde_json::to_string_pretty(&log).unwrap());
}
