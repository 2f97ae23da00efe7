use super::{read_json, Session};
use crate::error::{CliError, Result};
use scenforge_core::map::{MapFile, RoadMap};
use scenforge_core::scenlang;
use scenforge_core::search::{classify_violation, SearchConfig, ViolationKind, ViolationRecord};
use scenforge_core::sim::{create_policy, monitor_assertions, run_scenario, ExecutionTrace, Verdict};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const REPLAY_FORMAT: &str = "scenforge-replay/1";

/// Everything needed to rerun one violation exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplayFile {
    pub format: String,
    pub violation: String,
    pub source_video: String,
    pub policy: String,
    pub seed: u64,
    pub kind: ViolationKind,
    pub scenario: String,
    pub verdicts: Vec<Verdict>,
    pub map: MapFile,
    pub search: SearchConfig,
}

impl ReplayFile {
    pub fn new(record: &ViolationRecord, map: MapFile, search: &SearchConfig) -> Self {
        ReplayFile {
            format: REPLAY_FORMAT.into(),
            violation: record.id.clone(),
            source_video: record.source_video.clone(),
            policy: record.policy.clone(),
            seed: record.seed,
            kind: record.kind,
            scenario: record.scenario.clone(),
            verdicts: record.verdicts.clone(),
            map,
            search: search.clone(),
        }
    }
}

#[derive(Debug, Default, clap::Args)]
pub struct ReplayArgs {
    /// Replay file; without it every replay under the output directory is checked.
    pub file: Option<PathBuf>,
    /// Writes the simulation trace as JSON lines.
    #[arg(long, requires = "file")]
    pub trace: Option<PathBuf>,
}

pub struct Rerun {
    pub trace: ExecutionTrace,
    pub verdicts: Vec<Verdict>,
    pub kind: Option<ViolationKind>,
}

pub fn rerun(path: &Path, replay: &ReplayFile) -> Result<Rerun> {
    if replay.format != REPLAY_FORMAT {
        return Err(CliError::input(path, format!("unknown format `{}`", replay.format)));
    }
    let map = RoadMap::from_file(replay.map.clone()).map_err(|e| CliError::input(path, e))?;
    let scenario = scenlang::parse(&replay.scenario).map_err(|d| {
        CliError::input(
            path,
            d.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; "),
        )
    })?;
    let mut policy = create_policy(&replay.policy, &replay.search.policy)
        .map_err(|e| CliError::input(path, e))?;
    let trace = run_scenario(&scenario, &map, policy.as_mut(), &replay.search.sim)
        .map_err(|e| CliError::domain(format!("{}: {e}", path.display())))?;
    let verdicts = monitor_assertions(&trace, &scenario.assertions);
    let kind = classify_violation(&verdicts, &trace, &replay.search).ok();
    Ok(Rerun {
        trace,
        verdicts,
        kind,
    })
}

fn replays_under(out: &Path) -> Result<Vec<PathBuf>> {
    let root = out.join("search");
    let mut files = Vec::new();
    if !root.is_dir() {
        return Ok(files);
    }
    let mut policies: Vec<PathBuf> = std::fs::read_dir(&root)
        .map_err(|e| CliError::io(&root, e))?
        .filter_map(|e| e.ok().map(|e| e.path().join("replays")))
        .filter(|p| p.is_dir())
        .collect();
    policies.sort();
    for dir in policies {
        let mut here: Vec<PathBuf> = std::fs::read_dir(&dir)
            .map_err(|e| CliError::io(&dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "replay"))
            .collect();
        here.sort();
        files.extend(here);
    }
    Ok(files)
}

#[derive(Serialize)]
struct ReplayCheck {
    file: String,
    violation: String,
    policy: String,
    expected: ViolationKind,
    found: Option<ViolationKind>,
    reproduced: bool,
}

pub fn run(s: &mut Session, args: &ReplayArgs) -> Result<()> {
    let files = match &args.file {
        Some(f) => vec![f.clone()],
        None => replays_under(&s.out)?,
    };
    let mut checks = Vec::new();
    for f in &files {
        let replay: ReplayFile = read_json(f)?;
        let r = rerun(f, &replay)?;
        let reproduced = r.kind == Some(replay.kind) && r.verdicts == replay.verdicts;
        println!(
            "{}: {} under {} -> {}",
            replay.violation,
            replay.kind,
            replay.policy,
            if reproduced { "reproduced" } else { "NOT reproduced" }
        );
        if let Some(t) = &args.trace {
            s.write(t, r.trace.to_jsonl().as_bytes())?;
        }
        checks.push(ReplayCheck {
            file: crate::manifest::relative(&s.out, f),
            violation: replay.violation,
            policy: replay.policy,
            expected: replay.kind,
            found: r.kind,
            reproduced,
        });
    }
    if args.file.is_none() {
        let path = s.out.join("search").join("replay_check.json");
        s.write_json(&path, &checks)?;
    }
    let failed: Vec<&str> = checks
        .iter()
        .filter(|c| !c.reproduced)
        .map(|c| c.file.as_str())
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Domain(format!("not reproduced: {}", failed.join(", "))))
    }
}
