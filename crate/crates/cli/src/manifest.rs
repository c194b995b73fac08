use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Serialize;

use crate::error::CliResult;

/// Provenance written next to every output file as `<file>.manifest.json`.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    /// Arguments that reproduce the run, including any seed drawn at run time.
    pub argv: Vec<String>,
    pub options: serde_json::Value,
    pub version: String,
    pub seeds: Vec<u64>,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub duration_secs: f64,
}

impl RunManifest {
    pub fn new(command: &str, options: serde_json::Value) -> Self {
        Self {
            command: command.to_string(),
            argv: std::env::args().collect(),
            options,
            version: pfsic_core::VERSION.to_string(),
            seeds: Vec::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            duration_secs: 0.0,
        }
    }

    /// Records a seed; when it was drawn rather than passed, appends it to `argv`.
    pub fn record_seed(&mut self, seed: u64, drawn: bool) {
        self.seeds.push(seed);
        if drawn {
            self.argv.push("--seed".into());
            self.argv.push(seed.to_string());
        }
    }

    pub fn write_sidecars(&mut self, elapsed: Duration) -> CliResult<()> {
        self.duration_secs = elapsed.as_secs_f64();
        let text = serde_json::to_string_pretty(self)? + "\n";
        for out in &self.outputs {
            std::fs::write(sidecar_path(out), &text)?;
        }
        Ok(())
    }
}

pub fn sidecar_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}
