//! Run manifests written next to every artifact.
//!
//! The body is the full config in `key = value` form; command, timestamps,
//! seeds and artifact paths ride along as `#` comment lines, so
//! `--config <manifest>` replays the run.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use crate::config::RunConfig;

pub const MANIFEST_HEADER: &str = "# AMCMANIFEST1";

#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub command: String,
    pub config: RunConfig,
    pub seeds: Vec<u64>,
    pub artifacts: Vec<PathBuf>,
    pub started: u64,
    pub finished: u64,
}

pub fn now_secs() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// `<artifact>.manifest`.
pub fn manifest_path(artifact: &Path) -> PathBuf {
    let mut name = artifact.as_os_str().to_owned();
    name.push(".manifest");
    PathBuf::from(name)
}

impl RunManifest {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        RunManifest {
            command: command.to_string(),
            config: config.clone(),
            seeds: Vec::new(),
            artifacts: Vec::new(),
            started: now_secs(),
            finished: 0,
        }
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        writeln!(s, "{MANIFEST_HEADER}").unwrap();
        writeln!(s, "# command = {}", self.command).unwrap();
        writeln!(s, "# started = {}", self.started).unwrap();
        writeln!(s, "# finished = {}", self.finished).unwrap();
        for a in &self.artifacts {
            writeln!(s, "# artifact = {}", a.display()).unwrap();
        }
        if !self.seeds.is_empty() {
            let seeds: Vec<String> = self.seeds.iter().map(|v| v.to_string()).collect();
            writeln!(s, "# seeds = {}", seeds.join(",")).unwrap();
        }
        s.push_str(&self.config.render());
        s
    }

    /// Writes `<primary artifact>.manifest` and returns its path.
    pub fn finish(mut self, primary: &Path) -> std::io::Result<PathBuf> {
        self.finished = now_secs();
        let path = manifest_path(primary);
        std::fs::write(&path, self.render())?;
        Ok(path)
    }
}
