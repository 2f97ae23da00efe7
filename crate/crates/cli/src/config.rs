//! Run configuration (TOML).

use crate::error::{CliError, Result};
use scenforge_core::inspect::InspectParams;
use scenforge_core::search::SearchConfig;
use scenforge_core::synth::SynthParams;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ProviderMode {
    #[default]
    Mock,
    Remote,
}

/// One input video: a frame directory or a flow-field file, plus an
/// optional annotation log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VideoInput {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frames: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flow: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotations: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExtractConfig {
    /// Keep every n-th frame.
    pub interval: usize,
    /// Seconds between consecutive frames.
    pub frame_period: f64,
    pub alpha: f64,
    pub tau: Option<f64>,
    pub velocity_weight: f64,
    pub min_tau: f64,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        ExtractConfig {
            interval: 1,
            frame_period: 0.1,
            alpha: 0.5,
            tau: None,
            velocity_weight: 1.0,
            min_tau: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: Option<u64>,
    /// Output directory; not part of the configuration hash.
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
    /// Map file; the built-in standard map when absent.
    pub map: Option<PathBuf>,
    /// Behavior cost table; the default table when absent.
    pub costs: Option<PathBuf>,
    pub provider: ProviderMode,
    pub max_reprompts: usize,
    pub policies: Vec<String>,
    pub extract: ExtractConfig,
    pub synth: SynthParams,
    pub inspect: InspectParams,
    pub search: SearchConfig,
    #[serde(rename = "video")]
    pub videos: Vec<VideoInput>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: None,
            out: None,
            map: None,
            costs: None,
            provider: ProviderMode::Mock,
            max_reprompts: 2,
            policies: vec!["lanekeeper".into()],
            extract: ExtractConfig::default(),
            synth: SynthParams::default(),
            inspect: InspectParams::default(),
            search: SearchConfig::default(),
            videos: Vec::new(),
        }
    }
}

impl RunConfig {
    /// Reads a config file. Relative paths inside it are resolved against
    /// the file's directory, and every referenced path must exist.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut c: RunConfig = toml::from_str(&text).map_err(|e| CliError::input(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        c.resolve(base);
        c.check(path)?;
        Ok(c)
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(x) = p.as_mut() {
                if x.is_relative() {
                    *x = base.join(&*x);
                }
            }
        };
        fix(&mut self.out);
        fix(&mut self.map);
        fix(&mut self.costs);
        for v in &mut self.videos {
            fix(&mut v.frames);
            fix(&mut v.flow);
            fix(&mut v.annotations);
        }
    }

    fn check(&self, path: &Path) -> Result<()> {
        let missing = |p: &Path| CliError::Usage(format!(
            "{}: referenced path {} does not exist",
            path.display(),
            p.display()
        ));
        let mut refs: Vec<&PathBuf> = self.map.iter().chain(&self.costs).collect();
        let mut ids = std::collections::BTreeSet::new();
        for v in &self.videos {
            if !ids.insert(v.id.as_str()) {
                return Err(CliError::Usage(format!("duplicate video id `{}`", v.id)));
            }
            if v.id.is_empty() || v.id.contains(['/', '\\']) || v.id.starts_with('.') {
                return Err(CliError::Usage(format!("invalid video id `{}`", v.id)));
            }
            if v.frames.is_some() == v.flow.is_some() {
                return Err(CliError::Usage(format!(
                    "video `{}` needs exactly one of `frames` or `flow`",
                    v.id
                )));
            }
            refs.extend(v.frames.iter().chain(&v.flow).chain(&v.annotations));
        }
        if let Some(p) = refs.into_iter().find(|p| !p.exists()) {
            return Err(missing(p));
        }
        if self.extract.interval == 0 {
            return Err(CliError::Usage("extract.interval must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.extract.alpha) {
            return Err(CliError::Usage("extract.alpha must lie in [0, 1]".into()));
        }
        self.search
            .validate()
            .map_err(|e| CliError::Usage(e.to_string()))
    }

    pub fn video(&self, id: &str) -> Option<&VideoInput> {
        self.videos.iter().find(|v| v.id == id)
    }
}
