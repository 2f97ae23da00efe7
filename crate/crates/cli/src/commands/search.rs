use super::replay::ReplayFile;
use super::{
    derive_id, read_abstract, read_scenario, Session, ABSTRACT, SCENARIO, SUMMARY, VIOLATIONS,
};
use crate::error::{CliError, Result};
use scenforge_core::search::{run_search, SearchConfig, SearchContext, SearchError, ViolationKind, ViolationRecord};
use scenforge_core::sim::builtin_policies;
use scenforge_core::synth::{generate_concrete, GenerationMode};
use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::PathBuf;

#[derive(Debug, Default, clap::Args)]
pub struct SearchArgs {
    #[arg(long = "abstract")]
    pub abstract_file: Option<PathBuf>,
    #[arg(long)]
    pub map: Option<PathBuf>,
    /// Policy under test; repeat for several. Defaults to the config's list.
    #[arg(long)]
    pub policy: Vec<String>,
    /// Seed scenario(s); generated from the abstract when absent.
    #[arg(long, requires = "abstract_file")]
    pub scenario: Vec<PathBuf>,
    #[arg(long)]
    pub video: Option<String>,
    /// Outer evaluation budget.
    #[arg(long)]
    pub budget: Option<usize>,
}

struct Job {
    id: String,
    abstract_path: PathBuf,
    seeds: Vec<PathBuf>,
}

pub const SUMMARY_HEADER: &str = "video,abstract_id,policy,seed,evaluations,violations,tests_to_first_violation,collision,traffic_disruption,rule_violation,universal,max_rv,essential_participants";

pub fn run(s: &mut Session, args: &SearchArgs) -> Result<()> {
    let seed = s.require_seed()?;
    let policies = if args.policy.is_empty() {
        s.config.policies.clone()
    } else {
        args.policy.clone()
    };
    if policies.is_empty() {
        return Err(CliError::Usage("no policy given".into()));
    }
    for p in &policies {
        if p == "scripted" || !builtin_policies().contains(&p.as_str()) {
            return Err(CliError::Usage(format!(
                "`{p}` is not a searchable policy; choose from {}",
                builtin_policies()
                    .iter()
                    .filter(|n| **n != "scripted")
                    .copied()
                    .collect::<Vec<_>>()
                    .join(", ")
            )));
        }
    }
    let jobs = match &args.abstract_file {
        Some(p) => vec![Job {
            id: args.video.clone().unwrap_or_else(|| derive_id(p)),
            abstract_path: p.clone(),
            seeds: args.scenario.clone(),
        }],
        None => s
            .video_ids()?
            .into_iter()
            .map(|id| {
                let dir = s.video_dir(&id);
                Job {
                    abstract_path: dir.join(ABSTRACT),
                    seeds: vec![dir.join(SCENARIO)],
                    id,
                }
            })
            .collect(),
    };
    for job in &jobs {
        for p in std::iter::once(&job.abstract_path).chain(&job.seeds) {
            if !p.exists() {
                return Err(CliError::Usage(format!(
                    "{} is missing; run the earlier stages first",
                    p.display()
                )));
            }
        }
    }
    let map = s.map(args.map.as_deref())?;
    let costs = s.costs()?;
    let mut config: SearchConfig = s.config.search.clone();
    config.seed = seed;
    config.inspect = s.config.inspect.clone();
    if let Some(b) = args.budget {
        config.outer_budget = b;
    }
    config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let map_file = map.to_file();
    for policy in &policies {
        let dir = s.policy_dir(policy);
        let mut lines = String::new();
        let mut summary = format!("{SUMMARY_HEADER}\n");
        let mut counter = 0;
        for job in &jobs {
            let abs = read_abstract(&job.abstract_path)?;
            let seeds = if job.seeds.is_empty() {
                vec![generate_concrete(
                    &abs,
                    &map,
                    GenerationMode::Template,
                    seed,
                    &s.config.synth,
                    &s.config.inspect,
                )
                .map_err(|e| CliError::domain(format!("{}: {e}", job.id)))?]
            } else {
                job.seeds
                    .iter()
                    .map(|p| read_scenario(p))
                    .collect::<Result<Vec<_>>>()?
            };
            let ctx = SearchContext {
                map: &map,
                abstract_scenario: &abs,
                policy,
                costs: &costs,
                config: &config,
            };
            let abstract_id = crate::manifest::relative(&s.out, &job.abstract_path);
            let outcome = run_search(&ctx, &seeds, &job.id, &abstract_id).map_err(|e| match e {
                SearchError::Config(m) => CliError::Usage(m),
                other => CliError::domain(format!("{} / {policy}: {other}", job.id)),
            })?;
            let mut records = outcome.records;
            for r in &mut records {
                counter += 1;
                r.id = format!("violation_{counter:04}");
            }
            log::info!(
                "{} / {policy}: {} evaluations, {} violation(s)",
                job.id,
                outcome.outer.evaluations,
                records.len()
            );
            summary += &summary_row(&job.id, &abstract_id, policy, seed, outcome.outer.evaluations, &records);
            for r in &records {
                lines += &serde_json::to_string(r).expect("record serializes");
                lines.push('\n');
                let replay = ReplayFile::new(r, map_file.clone(), &config);
                s.write_json(&dir.join("replays").join(format!("{}.replay", r.id)), &replay)?;
            }
        }
        s.write(&dir.join(VIOLATIONS), lines.as_bytes())?;
        s.write(&dir.join(SUMMARY), summary.as_bytes())?;
    }
    Ok(())
}

pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn summary_row(
    video: &str,
    abstract_id: &str,
    policy: &str,
    seed: u64,
    evaluations: usize,
    records: &[ViolationRecord],
) -> String {
    let count = |k: ViolationKind| records.iter().filter(|r| r.kind == k).count();
    let first = records
        .iter()
        .map(|r| r.evaluation + 1)
        .min()
        .map_or(String::new(), |e| e.to_string());
    let max_rv = records.iter().map(|r| r.rv).fold(0.0, f64::max);
    let essential: BTreeSet<&str> = records
        .iter()
        .flat_map(|r| r.essential_participants.iter().map(String::as_str))
        .collect();
    let mut row = String::new();
    let _ = writeln!(
        row,
        "{},{},{},{seed},{evaluations},{},{first},{},{},{},{},{max_rv:.3},{}",
        csv_field(video),
        csv_field(abstract_id),
        csv_field(policy),
        records.len(),
        count(ViolationKind::Collision),
        count(ViolationKind::TrafficDisruption),
        count(ViolationKind::RuleViolation),
        records.iter().filter(|r| r.universal).count(),
        csv_field(&essential.into_iter().collect::<Vec<_>>().join(";")),
    );
    row
}
