use super::extract::KeyFramesFile;
use super::{derive_id, read_json, Session, ABSTRACT, DESCRIPTION, KEY_FRAMES};
use crate::config::ProviderMode;
use crate::error::{CliError, Result};
use scenforge_core::abstraction::{
    abstract_scene, build_understanding_prompt, AbstractionError, AnnotationLog, ProviderRequest,
};
use scenforge_core::flowkey::{encode_pgm, load_frame_dir};
use std::path::{Path, PathBuf};

#[derive(Debug, Default, clap::Args)]
pub struct AbstractArgs {
    /// Annotation log; required by the mock provider.
    #[arg(long)]
    pub annotations: Option<PathBuf>,
    /// Key frames written by `extract`.
    #[arg(long)]
    pub key_frames: Option<PathBuf>,
    /// Frame directory the key frames index into; images go to the remote provider.
    #[arg(long)]
    pub frames: Option<PathBuf>,
    #[arg(long)]
    pub video: Option<String>,
    #[arg(long, value_enum)]
    pub provider: Option<ProviderMode>,
    /// Abstract scenario output file.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

struct Job {
    id: String,
    annotations: Option<PathBuf>,
    key_frames: Option<PathBuf>,
    frames: Option<PathBuf>,
    output: PathBuf,
}

pub fn run(s: &mut Session, args: &AbstractArgs) -> Result<()> {
    let jobs = if let Some(p) = args.annotations.as_ref().or(args.key_frames.as_ref()) {
        let id = args.video.clone().unwrap_or_else(|| derive_id(p));
        vec![Job {
            output: args
                .output
                .clone()
                .unwrap_or_else(|| s.video_dir(&id).join(ABSTRACT)),
            id,
            annotations: args.annotations.clone(),
            key_frames: args.key_frames.clone(),
            frames: args.frames.clone(),
        }]
    } else {
        s.video_ids()?
            .into_iter()
            .map(|id| {
                let v = s.config.video(&id).expect("listed video");
                let kf = s.video_dir(&id).join(KEY_FRAMES);
                if !kf.exists() {
                    return Err(CliError::Usage(format!(
                        "{} is missing; run `extract` first",
                        kf.display()
                    )));
                }
                Ok(Job {
                    annotations: v.annotations.clone(),
                    key_frames: Some(kf),
                    frames: v.frames.clone(),
                    output: s.video_dir(&id).join(ABSTRACT),
                    id,
                })
            })
            .collect::<Result<Vec<_>>>()?
    };
    let provider = s.provider(args.provider)?;
    for job in jobs {
        let request = build_request(s, &job)?;
        let (desc, abs) = abstract_scene(provider.as_ref(), &request, s.config.max_reprompts)
            .map_err(|e| match e {
                AbstractionError::Config(m) => CliError::Usage(format!("{}: {m}", job.id)),
                other => CliError::domain(format!("{}: {other}", job.id)),
            })?;
        log::info!(
            "{}: {} road, {} participants",
            job.id,
            abs.road_type,
            abs.participants.len()
        );
        s.write(&job.output, format!("{}\n", abs.to_json()).as_bytes())?;
        let mut text = desc.raw_text.clone();
        if !text.ends_with('\n') {
            text.push('\n');
        }
        s.write(&job.output.with_file_name(DESCRIPTION), text.as_bytes())?;
    }
    Ok(())
}

fn build_request(s: &Session, job: &Job) -> Result<ProviderRequest> {
    let annotation = match &job.annotations {
        Some(p) => {
            let log = AnnotationLog::load(p).map_err(|e| CliError::Usage(e.to_string()))?;
            log.check().map_err(|e| CliError::input(p, e))?;
            Some(log)
        }
        None => None,
    };
    let kf: Option<KeyFramesFile> = job.key_frames.as_deref().map(read_json).transpose()?;
    let frame_count = kf.as_ref().map_or(1, |k| k.indices.len().max(1));
    let prompt = build_understanding_prompt(frame_count).map_err(CliError::domain)?;
    let images = match (&kf, &job.frames) {
        (Some(k), Some(dir)) if annotation.is_none() => key_frame_images(s, dir, k)?,
        _ => Vec::new(),
    };
    Ok(ProviderRequest {
        prompt,
        images,
        annotation,
    })
}

fn key_frame_images(s: &Session, dir: &Path, k: &KeyFramesFile) -> Result<Vec<Vec<u8>>> {
    let c = &s.config.extract;
    let frames = load_frame_dir(dir, c.interval, c.frame_period)
        .map_err(|e| CliError::input(dir, e))?;
    k.indices
        .iter()
        .map(|&i| {
            frames
                .get(i)
                .map(encode_pgm)
                .ok_or_else(|| CliError::input(dir, format!("key frame {i} is out of range")))
        })
        .collect()
}
