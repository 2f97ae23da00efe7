use super::{derive_id, read_abstract, Session, ABSTRACT, SCENARIO};
use crate::config::ProviderMode;
use crate::error::{CliError, Result};
use scenforge_core::scenlang;
use scenforge_core::synth::{generate_concrete, GenerationMode};
use std::path::PathBuf;

#[derive(Debug, Default, clap::Args)]
pub struct SynthArgs {
    /// Abstract scenario written by `abstract`.
    #[arg(long = "abstract")]
    pub abstract_file: Option<PathBuf>,
    #[arg(long)]
    pub map: Option<PathBuf>,
    #[arg(long)]
    pub video: Option<String>,
    /// Template generation unless `remote`.
    #[arg(long, value_enum)]
    pub provider: Option<ProviderMode>,
    /// Scenario program output file.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

pub fn run(s: &mut Session, args: &SynthArgs) -> Result<()> {
    let jobs: Vec<(String, PathBuf, PathBuf)> = match &args.abstract_file {
        Some(p) => {
            let id = args.video.clone().unwrap_or_else(|| derive_id(p));
            let out = args
                .output
                .clone()
                .unwrap_or_else(|| s.video_dir(&id).join(SCENARIO));
            vec![(id, p.clone(), out)]
        }
        None => s
            .video_ids()?
            .into_iter()
            .map(|id| {
                let dir = s.video_dir(&id);
                (id, dir.join(ABSTRACT), dir.join(SCENARIO))
            })
            .collect(),
    };
    let map = s.map(args.map.as_deref())?;
    let seed = s.seed.unwrap_or(0);
    let mode = args.provider.unwrap_or(s.config.provider);
    let provider = match mode {
        ProviderMode::Remote => Some(s.provider(Some(mode))?),
        ProviderMode::Mock => None,
    };
    for (id, input, out) in jobs {
        if !input.exists() {
            return Err(CliError::Usage(format!(
                "{} is missing; run `abstract` first",
                input.display()
            )));
        }
        let abs = read_abstract(&input)?;
        let gen_mode = match &provider {
            Some(p) => GenerationMode::Remote(p.as_ref()),
            None => GenerationMode::Template,
        };
        let scenario = generate_concrete(
            &abs,
            &map,
            gen_mode,
            seed,
            &s.config.synth,
            &s.config.inspect,
        )
        .map_err(|e| CliError::domain(format!("{id}: {e}")))?;
        log::info!(
            "{id}: {} npc(s), {} pedestrian(s)",
            scenario.npcs.len(),
            scenario.pedestrians.len()
        );
        s.write(&out, scenlang::print(&scenario).as_bytes())?;
    }
    Ok(())
}
