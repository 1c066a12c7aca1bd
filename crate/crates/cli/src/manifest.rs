use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

/// Record of one command run. Every file the command writes is listed here
/// and in no other manifest.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Option<String>,
    pub overrides: BTreeMap<String, String>,
    pub outdir: String,
    pub version: String,
    pub wall_seconds: f64,
    pub exit_code: i32,
    pub outputs: Vec<String>,
}

/// Collects output files while a command runs.
pub struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
    started: Instant,
}

impl Outputs {
    pub fn create(dir: &Path) -> std::io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Outputs { dir: dir.to_path_buf(), files: Vec::new(), started: Instant::now() })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> std::io::Result<PathBuf> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents)?;
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_string());
        }
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> std::io::Result<PathBuf> {
        let text = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
        self.write(name, &(text + "\n"))
    }

    pub fn is_empty(&self) -> bool {
        self.files.is_empty()
    }

    /// Writes `manifest-<command>.json` and returns its path.
    pub fn finish(
        self,
        command: &str,
        config: Option<String>,
        overrides: Vec<(String, String)>,
        exit_code: i32,
    ) -> std::io::Result<PathBuf> {
        let m = RunManifest {
            command: command.to_string(),
            config,
            overrides: overrides.into_iter().collect(),
            outdir: self.dir.display().to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_seconds: self.started.elapsed().as_secs_f64(),
            exit_code,
            outputs: self.files,
        };
        let path = self.dir.join(format!("manifest-{command}.json"));
        std::fs::write(&path, serde_json::to_string_pretty(&m).map_err(std::io::Error::other)? + "\n")?;
        Ok(path)
    }
}
