use super::search::csv_field;
use super::{read_abstract, read_text, Session, ABSTRACT, INSPECTION, VIOLATIONS};
use crate::error::{CliError, Result};
use scenforge_core::abstraction::{abstract_scene, AnnotationLog, MockProvider, ProviderRequest};
use scenforge_core::metrics::{category_elements, csc, sua, Category};
use scenforge_core::search::{ViolationKind, ViolationRecord};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Debug, Default, clap::Args)]
pub struct ReportArgs {
    /// Violation files to aggregate; defaults to every search result under the output directory.
    #[arg(long)]
    pub violations: Vec<PathBuf>,
}

const KINDS: [ViolationKind; 3] = [
    ViolationKind::Collision,
    ViolationKind::TrafficDisruption,
    ViolationKind::RuleViolation,
];

pub const POLICY_HEADER: &str = "video,violations,tests_to_first_violation,collision,traffic_disruption,rule_violation,universal,mean_rv,max_rv";

fn read_records(path: &Path) -> Result<Vec<ViolationRecord>> {
    read_text(path)?
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| {
            serde_json::from_str(l).map_err(|e| CliError::input(path, format!("line {}: {e}", n + 1)))
        })
        .collect()
}

fn discover(out: &Path) -> Result<Vec<(Option<String>, PathBuf)>> {
    let root = out.join("search");
    if !root.is_dir() {
        return Ok(Vec::new());
    }
    let mut found: Vec<(Option<String>, PathBuf)> = std::fs::read_dir(&root)
        .map_err(|e| CliError::io(&root, e))?
        .filter_map(|e| e.ok())
        .map(|e| {
            (
                Some(e.file_name().to_string_lossy().into_owned()),
                e.path().join(VIOLATIONS),
            )
        })
        .filter(|(_, p)| p.is_file())
        .collect();
    found.sort();
    Ok(found)
}

pub fn run(s: &mut Session, args: &ReportArgs) -> Result<()> {
    let inputs = if args.violations.is_empty() {
        discover(&s.out)?
    } else {
        args.violations.iter().map(|p| (None, p.clone())).collect()
    };
    // policy -> video -> records
    let mut by_policy: BTreeMap<String, BTreeMap<String, Vec<ViolationRecord>>> = BTreeMap::new();
    for (policy, path) in &inputs {
        if !path.exists() {
            return Err(CliError::io(path, std::io::ErrorKind::NotFound.into()));
        }
        if let Some(p) = policy {
            by_policy.entry(p.clone()).or_default();
        }
        for r in read_records(path)? {
            by_policy
                .entry(r.policy.clone())
                .or_default()
                .entry(r.source_video.clone())
                .or_default()
                .push(r);
        }
    }
    let dir = s.out.join("report");
    for (policy, videos) in &by_policy {
        let mut csv = format!("{POLICY_HEADER}\n");
        for (video, records) in videos {
            csv += &policy_row(video, records);
        }
        s.write(&dir.join(format!("{policy}.csv")), csv.as_bytes())?;
    }
    let metrics = scenario_metrics(s)?;
    if let Some(m) = &metrics {
        let mut csv = String::from("metric,category,value\n");
        for (name, cat, v) in m {
            let _ = writeln!(csv, "{name},{cat},{v:.6}");
        }
        s.write(&dir.join("metrics.csv"), csv.as_bytes())?;
    }
    let md = summary_markdown(&by_policy, metrics.as_deref());
    s.write(&dir.join("summary.md"), md.as_bytes())?;
    Ok(())
}

fn policy_row(video: &str, records: &[ViolationRecord]) -> String {
    let count = |k: ViolationKind| records.iter().filter(|r| r.kind == k).count();
    let first = records
        .iter()
        .map(|r| r.evaluation + 1)
        .min()
        .map_or(String::new(), |e| e.to_string());
    let n = records.len();
    let mean = if n == 0 {
        0.0
    } else {
        records.iter().map(|r| r.rv).sum::<f64>() / n as f64
    };
    let max = records.iter().map(|r| r.rv).fold(0.0, f64::max);
    format!(
        "{},{n},{first},{},{},{},{},{mean:.3},{max:.3}\n",
        csv_field(video),
        count(ViolationKind::Collision),
        count(ViolationKind::TrafficDisruption),
        count(ViolationKind::RuleViolation),
        records.iter().filter(|r| r.universal).count(),
    )
}

type Metric = (String, String, f64);

/// CSC from the inspection reports and SUA against the annotation logs, for
/// the videos of the run config that have them.
fn scenario_metrics(s: &Session) -> Result<Option<Vec<Metric>>> {
    let mut ids = Vec::new();
    let mut verdicts = Vec::new();
    let mut extracted: BTreeMap<&'static str, (Vec<_>, Vec<_>)> = BTreeMap::new();
    for v in &s.config.videos {
        let dir = s.video_dir(&v.id);
        let inspection = dir.join(INSPECTION);
        if inspection.exists() {
            let value: serde_json::Value = serde_json::from_str(&read_text(&inspection)?)
                .map_err(|e| CliError::input(&inspection, e))?;
            let feasible = value["feasibility"]["diagnostics"]
                .as_array()
                .is_some_and(|d| d.is_empty());
            let diffs = value["diffs"].as_array().map_or(0, |d| d.len());
            let abs = read_abstract(&dir.join(ABSTRACT))?;
            let elements = abs.others().count();
            // one verdict per participant plus one for feasibility
            let mut per_element = vec![true; elements];
            for slot in per_element.iter_mut().take(diffs) {
                *slot = false;
            }
            per_element.push(feasible);
            ids.push(v.id.clone());
            verdicts.push((v.id.clone(), per_element));
        }
        let abstract_path = dir.join(ABSTRACT);
        if let (Some(ann), true) = (&v.annotations, abstract_path.exists()) {
            let log = AnnotationLog::load(ann).map_err(|e| CliError::Usage(e.to_string()))?;
            let request = ProviderRequest {
                annotation: Some(log),
                ..Default::default()
            };
            let (_, truth) =
                abstract_scene(&MockProvider, &request, 0).map_err(|e| CliError::input(ann, e))?;
            let found = read_abstract(&abstract_path)?;
            for c in Category::ALL {
                let e = extracted.entry(category_name(c)).or_default();
                e.0.push(category_elements(&found, c));
                e.1.push(category_elements(&truth, c));
            }
        }
    }
    if verdicts.is_empty() && extracted.is_empty() {
        return Ok(None);
    }
    let mut out = Vec::new();
    if !verdicts.is_empty() {
        let v = csc(&verdicts, &ids).map_err(CliError::domain)?;
        out.push(("csc".into(), "all".into(), v));
    }
    for (cat, (found, truth)) in extracted {
        // categories without ground-truth elements have no score
        if let Ok(v) = sua(&found, &truth) {
            out.push(("sua".into(), cat.into(), v));
        }
    }
    Ok(Some(out))
}

fn category_name(c: Category) -> &'static str {
    match c {
        Category::Road => "road",
        Category::EgoTask => "ego_task",
        Category::Participant => "participant",
        Category::RelativePosition => "relative_position",
    }
}

fn summary_markdown(
    by_policy: &BTreeMap<String, BTreeMap<String, Vec<ViolationRecord>>>,
    metrics: Option<&[Metric]>,
) -> String {
    let mut md = String::from("# Search report\n\n");
    md += "| policy | videos | violations | collision | traffic_disruption | rule_violation | universal |\n";
    md += "|---|---|---|---|---|---|---|\n";
    let mut totals = [0usize; 3];
    let mut all = 0;
    for (policy, videos) in by_policy {
        let records: Vec<&ViolationRecord> = videos.values().flatten().collect();
        let c: Vec<usize> = KINDS
            .iter()
            .map(|k| records.iter().filter(|r| r.kind == *k).count())
            .collect();
        for (t, x) in totals.iter_mut().zip(&c) {
            *t += x;
        }
        all += records.len();
        let _ = writeln!(
            md,
            "| {policy} | {} | {} | {} | {} | {} | {} |",
            videos.len(),
            records.len(),
            c[0],
            c[1],
            c[2],
            records.iter().filter(|r| r.universal).count()
        );
    }
    let _ = writeln!(md, "\nTotal violations: {all}\n\n## Violation kinds\n\n```");
    let width = totals.iter().copied().max().unwrap_or(0).max(1);
    for (k, n) in KINDS.iter().zip(totals) {
        let bar = "#".repeat((n * 40).div_ceil(width));
        let _ = writeln!(md, "{:<19}{n:>6} {bar}", k.to_string());
    }
    md += "```\n";
    if let Some(m) = metrics {
        md += "\n## Scenario metrics\n\n| metric | category | value |\n|---|---|---|\n";
        for (name, cat, v) in m {
            let _ = writeln!(md, "| {name} | {cat} | {v:.4} |");
        }
    }
    md
}
