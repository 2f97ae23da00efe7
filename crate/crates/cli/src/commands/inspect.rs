use super::{derive_id, read_abstract, read_scenario, read_text, Session, ABSTRACT, INSPECTION, SCENARIO};
use crate::error::{CliError, Result};
use scenforge_core::inspect::{
    check_semantic_equivalence, extract_action_sequence, EquivalenceReport, TrajPoint, TrajRecord,
    Trajectory,
};
use scenforge_core::map::RoadMap;
use scenforge_core::scenlang::ConcreteScenario;
use scenforge_core::sim::EGO_ID;
use scenforge_core::vocab::{Action, ParticipantType};
use serde::Serialize;
use std::path::{Path, PathBuf};

#[derive(Debug, Default, clap::Args)]
pub struct InspectArgs {
    #[arg(long, requires = "abstract_file")]
    pub scenario: Option<PathBuf>,
    #[arg(long = "abstract", requires = "scenario")]
    pub abstract_file: Option<PathBuf>,
    #[arg(long)]
    pub map: Option<PathBuf>,
    /// Trajectory log (JSON lines) whose participants are classified as well.
    #[arg(long)]
    pub trajectory: Option<PathBuf>,
    #[arg(long)]
    pub video: Option<String>,
    /// Report output file.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
pub struct TrajectoryActions {
    pub participant: String,
    pub actions: Vec<Action>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Serialize)]
struct Inspection<'a> {
    video: &'a str,
    #[serde(flatten)]
    report: &'a EquivalenceReport,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    trajectories: Vec<TrajectoryActions>,
}

pub fn run(s: &mut Session, args: &InspectArgs) -> Result<()> {
    let jobs: Vec<(String, PathBuf, PathBuf, PathBuf)> =
        match (&args.scenario, &args.abstract_file) {
            (Some(sc), Some(ab)) => {
                let id = args.video.clone().unwrap_or_else(|| derive_id(sc));
                let out = args
                    .output
                    .clone()
                    .unwrap_or_else(|| s.video_dir(&id).join(INSPECTION));
                vec![(id, sc.clone(), ab.clone(), out)]
            }
            _ => s
                .video_ids()?
                .into_iter()
                .map(|id| {
                    let dir = s.video_dir(&id);
                    (id, dir.join(SCENARIO), dir.join(ABSTRACT), dir.join(INSPECTION))
                })
                .collect(),
        };
    let map = s.map(args.map.as_deref())?;
    let mut failed = Vec::new();
    for (id, sc, ab, out) in jobs {
        for p in [&sc, &ab] {
            if !p.exists() {
                return Err(CliError::Usage(format!(
                    "{} is missing; run the earlier stages first",
                    p.display()
                )));
            }
        }
        let scenario = read_scenario(&sc)?;
        let abs = read_abstract(&ab)?;
        let report = check_semantic_equivalence(&scenario, &map, &abs, &s.config.inspect)
            .map_err(|e| CliError::domain(format!("{id}: {e}")))?;
        let trajectories = match &args.trajectory {
            Some(p) => classify_log(p, &scenario, &map, s)?,
            None => Vec::new(),
        };
        if !report.equivalent {
            failed.push(id.clone());
        }
        log::info!("{id}: equivalent = {}", report.equivalent);
        s.write_json(
            &out,
            &Inspection {
                video: &id,
                report: &report,
                trajectories,
            },
        )?;
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Domain(format!(
            "not equivalent to the abstract: {}",
            failed.join(", ")
        )))
    }
}

/// Reads a trajectory log, one record per line, grouped by participant in
/// order of first appearance.
pub fn read_trajectory_log(path: &Path) -> Result<Vec<(String, Trajectory)>> {
    let mut out: Vec<(String, Trajectory)> = Vec::new();
    for (n, line) in read_text(path)?.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let r: TrajRecord = serde_json::from_str(line)
            .map_err(|e| CliError::input(path, format!("line {}: {e}", n + 1)))?;
        let p = TrajPoint {
            t: r.t,
            x: r.x,
            y: r.y,
            vx: r.vx,
            vy: r.vy,
        };
        match out.iter_mut().find(|(name, _)| *name == r.participant) {
            Some((_, t)) => t.points.push(p),
            None => out.push((r.participant, Trajectory { points: vec![p] })),
        }
    }
    Ok(out)
}

fn classify_log(
    path: &Path,
    scenario: &ConcreteScenario,
    map: &RoadMap,
    s: &Session,
) -> Result<Vec<TrajectoryActions>> {
    Ok(read_trajectory_log(path)?
        .into_iter()
        .map(|(name, traj)| {
            let kind = if name == EGO_ID {
                scenario.ego.vehicle_type
            } else {
                scenario
                    .participant(&name)
                    .map_or(ParticipantType::Car, |p| p.participant_type)
            };
            let (actions, error) =
                match extract_action_sequence(&traj, kind, map, &s.config.inspect) {
                    Ok(a) => (a, None),
                    Err(e) => (Vec::new(), Some(e.to_string())),
                };
            TrajectoryActions {
                participant: name,
                actions,
                error,
            }
        })
        .collect())
}
