//! Run manifest: what each stage wrote, plus timings.

use crate::error::{CliError, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const CONFIG_SNAPSHOT: &str = "run_config.json";

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    /// Files written by the stage, relative to the output directory when inside it.
    pub artifacts: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub started_unix_ms: u128,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    /// SHA-256 of the stored config snapshot.
    pub config_hash: String,
    pub config: String,
    pub stages: BTreeMap<String, StageRecord>,
    /// Wall-clock data; excluded from `content_hash`.
    pub timings: BTreeMap<String, Timing>,
    /// SHA-256 over everything above except `timings`.
    pub content_hash: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Writes through a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let name = path
        .file_name()
        .ok_or_else(|| CliError::Usage(format!("{} is not a file path", path.display())))?;
    let mut tmp = path.to_path_buf();
    tmp.set_file_name(format!(".{}.tmp", name.to_string_lossy()));
    std::fs::write(&tmp, bytes).map_err(|e| CliError::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

impl RunManifest {
    pub fn new(config_hash: String) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config_hash,
            config: CONFIG_SNAPSHOT.into(),
            stages: BTreeMap::new(),
            timings: BTreeMap::new(),
            content_hash: String::new(),
        }
    }

    /// Existing manifest in `out`, reset when the config changed.
    pub fn open(out: &Path, config_hash: &str) -> Result<Self> {
        let path = out.join(MANIFEST_FILE);
        if !path.exists() {
            return Ok(Self::new(config_hash.into()));
        }
        let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        let m: RunManifest = serde_json::from_str(&text).map_err(|e| CliError::input(&path, e))?;
        if m.config_hash != config_hash {
            log::info!("config changed since the last run; starting a new manifest");
            return Ok(Self::new(config_hash.into()));
        }
        Ok(m)
    }

    pub fn record(&mut self, stage: &str, out: &Path, written: &[PathBuf], started: SystemTime, seconds: f64) {
        let mut artifacts: Vec<String> = written.iter().map(|p| relative(out, p)).collect();
        artifacts.sort();
        artifacts.dedup();
        self.stages.insert(stage.into(), StageRecord { artifacts });
        let started_unix_ms = started
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis())
            .unwrap_or(0);
        self.timings.insert(
            stage.into(),
            Timing {
                started_unix_ms,
                seconds,
            },
        );
    }

    pub fn compute_content_hash(&self) -> String {
        let mut stable = self.clone();
        stable.timings.clear();
        stable.content_hash.clear();
        sha256_hex(serde_json::to_string(&stable).expect("manifest serializes").as_bytes())
    }

    pub fn save(&mut self, out: &Path) -> Result<()> {
        self.content_hash = self.compute_content_hash();
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        write_atomic(&out.join(MANIFEST_FILE), text.as_bytes())
    }
}

/// `p` relative to `base` with forward slashes, or `p` unchanged when outside it.
pub fn relative(base: &Path, p: &Path) -> String {
    match p.strip_prefix(base) {
        Ok(r) => r
            .components()
            .map(|c| c.as_os_str().to_string_lossy().into_owned())
            .collect::<Vec<_>>()
            .join("/"),
        Err(_) => p.display().to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn timings_do_not_change_the_hash() {
        let out = Path::new("/run");
        let mut a = RunManifest::new("abc".into());
        a.record("synth", out, &[out.join("v/s.scn")], UNIX_EPOCH, 1.0);
        let mut b = a.clone();
        b.record("synth", out, &[out.join("v/s.scn")], SystemTime::now(), 2.5);
        assert_eq!(a.compute_content_hash(), b.compute_content_hash());
        assert_eq!(a.stages["synth"].artifacts, vec!["v/s.scn"]);
        b.record("synth", out, &[PathBuf::from("/elsewhere/s.scn")], UNIX_EPOCH, 1.0);
        assert_ne!(a.compute_content_hash(), b.compute_content_hash());
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x/y.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }
}
