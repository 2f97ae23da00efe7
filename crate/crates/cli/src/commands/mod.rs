//! Subcommand implementations. Each command either works on explicit file
//! arguments or, without them, on every video listed in the run config.

pub mod describe;
pub mod extract;
pub mod inspect;
pub mod replay;
pub mod report;
pub mod search;
pub mod synth;

use crate::config::{ProviderMode, RunConfig};
use crate::error::{CliError, Result};
use crate::manifest::write_atomic;
use scenforge_core::abstraction::{
    AbstractScenario, MockProvider, RemoteConfig, RemoteProvider, SceneProvider,
};
use scenforge_core::map::{standard_map, RoadMap};
use scenforge_core::metrics::CostModelFile;
use scenforge_core::CostModel;
use serde::de::DeserializeOwned;
use serde::Serialize;
use std::path::{Path, PathBuf};

pub const KEY_FRAMES: &str = "key_frames.json";
pub const MOTION_STATES: &str = "motion_states.json";
pub const ABSTRACT: &str = "abstract.json";
pub const DESCRIPTION: &str = "description.txt";
pub const SCENARIO: &str = "scenario.scn";
pub const INSPECTION: &str = "inspect.json";
pub const VIOLATIONS: &str = "violations.jsonl";
pub const SUMMARY: &str = "summary.csv";

/// State shared by one command invocation.
pub struct Session {
    pub config: RunConfig,
    pub out: PathBuf,
    pub seed: Option<u64>,
    written: Vec<PathBuf>,
}

impl Session {
    pub fn new(config: RunConfig, out: PathBuf, seed: Option<u64>) -> Self {
        Session {
            config,
            out,
            seed,
            written: Vec::new(),
        }
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    pub fn write(&mut self, path: &Path, bytes: &[u8]) -> Result<()> {
        write_atomic(path, bytes)?;
        log::debug!("wrote {}", path.display());
        self.written.push(path.to_path_buf());
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, path: &Path, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value).expect("artifact serializes");
        text.push('\n');
        self.write(path, text.as_bytes())
    }

    pub fn video_dir(&self, id: &str) -> PathBuf {
        self.out.join("videos").join(id)
    }

    pub fn policy_dir(&self, policy: &str) -> PathBuf {
        self.out.join("search").join(policy)
    }

    pub fn video_ids(&self) -> Result<Vec<String>> {
        if self.config.videos.is_empty() {
            return Err(CliError::Usage(
                "no input given and the run config lists no videos".into(),
            ));
        }
        Ok(self.config.videos.iter().map(|v| v.id.clone()).collect())
    }

    pub fn require_seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| {
            CliError::Usage("a seed is required: pass --seed or set `seed` in the config".into())
        })
    }

    pub fn map(&self, flag: Option<&Path>) -> Result<RoadMap> {
        match flag.or(self.config.map.as_deref()) {
            Some(p) => {
                if !p.exists() {
                    return Err(CliError::io(p, std::io::ErrorKind::NotFound.into()));
                }
                RoadMap::load(p).map_err(|e| CliError::input(p, e))
            }
            None => Ok(standard_map()),
        }
    }

    pub fn costs(&self) -> Result<CostModel> {
        match &self.config.costs {
            Some(p) => {
                let file: CostModelFile = read_json(p)?;
                CostModel::from_file(&file).map_err(|e| CliError::input(p, e))
            }
            None => Ok(CostModel::standard()),
        }
    }

    /// The configured provider. Remote mode refuses to start without an endpoint.
    pub fn provider(&self, mode: Option<ProviderMode>) -> Result<Box<dyn SceneProvider>> {
        match mode.unwrap_or(self.config.provider) {
            ProviderMode::Mock => Ok(Box::new(MockProvider)),
            ProviderMode::Remote => {
                let rc = RemoteConfig::from_env().map_err(|e| CliError::Usage(e.to_string()))?;
                Ok(Box::new(RemoteProvider::new(rc)))
            }
        }
    }
}

/// Reads a file produced by an earlier stage or given by the user.
pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_text(path)?).map_err(|e| CliError::input(path, e))
}

pub fn read_abstract(path: &Path) -> Result<AbstractScenario> {
    let a: AbstractScenario = read_json(path)?;
    a.validate().map_err(|e| CliError::input(path, e))?;
    Ok(a)
}

pub fn read_scenario(path: &Path) -> Result<scenforge_core::scenlang::ConcreteScenario> {
    let text = read_text(path)?;
    scenforge_core::scenlang::parse(&text).map_err(|d| {
        CliError::input(
            path,
            d.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; "),
        )
    })
}

/// Video id for a file given on the command line: its stem, or the name of
/// its directory when the stem is a standard artifact name.
pub fn derive_id(path: &Path) -> String {
    const STANDARD: &[&str] = &[
        "key_frames",
        "motion_states",
        "abstract",
        "scenario",
        "frames",
        "flow",
        "annotations",
    ];
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    if STANDARD.contains(&stem.as_str()) {
        if let Some(dir) = path
            .parent()
            .and_then(|p| p.file_name())
            .map(|s| s.to_string_lossy().into_owned())
        {
            return dir;
        }
    }
    if stem.is_empty() {
        "video".into()
    } else {
        stem
    }
}
