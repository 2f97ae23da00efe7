use scenforge_core::flowkey::image::write_pgm;
use scenforge_core::flowkey::synthetic::{event_suite, EventKind};
use scenforge_core::flowkey::{build_motion_states, FlowFieldFile};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenforge(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scenforge"))
        .arg("--out")
        .arg(out)
        .args(args)
        .env_remove("SCENFORGE_LLM_URL")
        .env_remove("SCENFORGE_LLM_KEY")
        .output()
        .unwrap()
}

fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(rel)
}

fn key_frames(path: &Path) -> Vec<usize> {
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    serde_json::from_value(v["indices"].clone()).unwrap()
}

#[test]
fn missing_frame_directory_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope");
    let r = scenforge(dir.path(), &["extract", "--frames", missing.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(2), "{}", String::from_utf8_lossy(&r.stderr));
    assert!(!dir.path().join("manifest.json").exists());
}

#[test]
fn synth_before_abstract_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = fixture("pipeline.toml");
    let r = scenforge(dir.path(), &["--config", config.to_str().unwrap(), "synth"]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("abstract"));
}

#[test]
fn remote_provider_needs_an_endpoint() {
    let dir = tempfile::tempdir().unwrap();
    let ann = fixture("slow_npc/annotations.json");
    let r = scenforge(
        dir.path(),
        &["abstract", "--provider", "remote", "--annotations", ann.to_str().unwrap()],
    );
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("SCENFORGE_LLM_URL"));
}

#[test]
fn report_on_empty_results_counts_zero() {
    let dir = tempfile::tempdir().unwrap();
    let search = dir.path().join("search/lanekeeper");
    std::fs::create_dir_all(&search).unwrap();
    std::fs::write(search.join("violations.jsonl"), "").unwrap();
    let r = scenforge(dir.path(), &["report"]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let summary = std::fs::read_to_string(dir.path().join("report/summary.md")).unwrap();
    assert!(summary.contains("| lanekeeper | 0 | 0 | 0 | 0 | 0 | 0 |"), "{summary}");
    assert!(summary.contains("Total violations: 0"));
}

#[test]
fn flow_and_frames_agree_on_key_frames() {
    let dir = tempfile::tempdir().unwrap();
    let scenes = event_suite(77, 4, 0);
    let scene = scenes
        .iter()
        .find(|s| s.kind != EventKind::None)
        .unwrap();
    let frames = dir.path().join("frames");
    std::fs::create_dir_all(&frames).unwrap();
    for (i, img) in scene.render().iter().enumerate() {
        write_pgm(&frames.join(format!("frame_{i:03}.pgm")), img).unwrap();
    }
    let states = build_motion_states(&scene.tracks(), scene.frames).unwrap();
    let flow = dir.path().join("flow.json");
    std::fs::write(&flow, serde_json::to_string(&FlowFieldFile { states }).unwrap()).unwrap();
    let out = dir.path().join("out");
    for (id, flag, path) in [("pixels", "--frames", &frames), ("truth", "--flow", &flow)] {
        let r = scenforge(&out, &["extract", flag, path.to_str().unwrap(), "--video", id]);
        assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    }
    let a = key_frames(&out.join("videos/pixels/key_frames.json"));
    let b = key_frames(&out.join("videos/truth/key_frames.json"));
    assert!(a.len() > 2, "{a:?}");
    for (x, y) in [(&a, &b), (&b, &a)] {
        for i in x {
            assert!(y.iter().any(|j| j.abs_diff(*i) <= 1), "{a:?} vs {b:?}");
        }
    }
}

#[test]
fn explicit_chain_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let ann = fixture("slow_npc/annotations.json");
    let ok = |r: Output| assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    ok(scenforge(out, &["abstract", "--annotations", ann.to_str().unwrap(), "--video", "v"]));
    let abs = out.join("videos/v/abstract.json");
    ok(scenforge(out, &["--seed", "3", "synth", "--abstract", abs.to_str().unwrap()]));
    let scn = out.join("videos/v/scenario.scn");
    ok(scenforge(
        out,
        &["inspect", "--scenario", scn.to_str().unwrap(), "--abstract", abs.to_str().unwrap()],
    ));
    let inspect = std::fs::read_to_string(out.join("videos/v/inspect.json")).unwrap();
    assert!(inspect.contains("\"equivalent\": true"), "{inspect}");
    let r = scenforge(out, &["search", "--abstract", abs.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(2), "search without a seed");
}
