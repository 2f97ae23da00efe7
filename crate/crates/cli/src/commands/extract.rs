use super::{derive_id, read_json, Session, KEY_FRAMES, MOTION_STATES};
use crate::error::{CliError, Result};
use scenforge_core::flowkey::{
    extract_key_frames, extract_motion_states, load_frame_dir, FlowError, FlowFieldFile,
    KeyFrameParams, TrackerParams,
};
use scenforge_core::MotionStateVector;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Default, clap::Args)]
pub struct ExtractArgs {
    /// Directory of PGM/PPM frames, ordered by file name.
    #[arg(long, conflicts_with = "flow")]
    pub frames: Option<PathBuf>,
    /// Flow-field JSON holding motion states directly.
    #[arg(long)]
    pub flow: Option<PathBuf>,
    #[arg(long)]
    pub video: Option<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub interval: Option<usize>,
    /// Key-frame output file.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

/// Key frames of one video.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KeyFramesFile {
    pub video: String,
    pub frame_count: usize,
    /// Seconds between the frames the indices refer to.
    pub frame_period: f64,
    pub alpha: f64,
    pub tau: f64,
    pub indices: Vec<usize>,
    pub deviations: Vec<f64>,
}

fn flow_error(path: &Path, e: FlowError) -> CliError {
    match e {
        FlowError::Io(io) => CliError::io(path, io),
        FlowError::Format(m) => CliError::input(path, m),
        other => CliError::domain(format!("{}: {other}", path.display())),
    }
}

enum Source<'a> {
    Frames(&'a Path),
    Flow(&'a Path),
}

pub fn run(s: &mut Session, args: &ExtractArgs) -> Result<()> {
    let mut jobs: Vec<(String, PathBuf, bool, PathBuf)> = Vec::new();
    if let Some(p) = args.frames.as_ref().or(args.flow.as_ref()) {
        let id = args.video.clone().unwrap_or_else(|| derive_id(p));
        let out = args
            .output
            .clone()
            .unwrap_or_else(|| s.video_dir(&id).join(KEY_FRAMES));
        jobs.push((id, p.clone(), args.frames.is_some(), out));
    } else {
        for v in &s.config.videos {
            let (p, is_frames) = match (&v.frames, &v.flow) {
                (Some(f), _) => (f.clone(), true),
                (None, Some(f)) => (f.clone(), false),
                (None, None) => unreachable!("checked at config load"),
            };
            jobs.push((v.id.clone(), p, is_frames, s.video_dir(&v.id).join(KEY_FRAMES)));
        }
        if jobs.is_empty() {
            s.video_ids()?;
        }
    }
    for (id, input, is_frames, out) in jobs {
        let source = if is_frames {
            Source::Frames(&input)
        } else {
            Source::Flow(&input)
        };
        let (states, kf) = extract_one(s, &id, source, args)?;
        log::info!(
            "{id}: {} key frames out of {}",
            kf.indices.len(),
            kf.frame_count
        );
        s.write_json(&out, &kf)?;
        let states_path = out.with_file_name(MOTION_STATES);
        s.write_json(&states_path, &FlowFieldFile { states })?;
    }
    Ok(())
}

fn extract_one(
    s: &Session,
    id: &str,
    source: Source<'_>,
    args: &ExtractArgs,
) -> Result<(Vec<MotionStateVector>, KeyFramesFile)> {
    let c = &s.config.extract;
    let interval = args.interval.unwrap_or(c.interval);
    let states = match source {
        Source::Frames(dir) => {
            if !dir.is_dir() {
                return Err(CliError::io(dir, std::io::ErrorKind::NotFound.into()));
            }
            let frames =
                load_frame_dir(dir, interval, c.frame_period).map_err(|e| flow_error(dir, e))?;
            extract_motion_states(&frames, &TrackerParams::<f64>::default())
                .map_err(|e| flow_error(dir, e))?
        }
        Source::Flow(path) => {
            let f: FlowFieldFile = read_json(path)?;
            f.states.into_iter().step_by(interval.max(1)).collect()
        }
    };
    let params = KeyFrameParams {
        alpha: args.alpha.unwrap_or(c.alpha),
        tau: args.tau.or(c.tau),
        velocity_weight: c.velocity_weight,
        min_tau: c.min_tau,
    };
    let k = extract_key_frames(&states, &params).map_err(CliError::domain)?;
    let kf = KeyFramesFile {
        video: id.to_string(),
        frame_count: states.len(),
        frame_period: c.frame_period * interval as f64,
        alpha: k.alpha,
        tau: k.tau,
        indices: k.indices,
        deviations: k.deviations,
    };
    Ok((states, kf))
}
