//! Run manifest written next to every output.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command_line: Vec<String>,
    pub command: String,
    pub threads: Option<usize>,
    pub parallel_backend: bool,
    pub seeds: Vec<u64>,
    pub config: Value,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub wall_time_s: f64,
}

/// Collects manifest fields while a command runs.
pub struct Recorder {
    started: Instant,
    manifest: RunManifest,
}

impl Recorder {
    pub fn new(command: &str, threads: Option<usize>) -> Self {
        Self {
            started: Instant::now(),
            manifest: RunManifest {
                tool: "conepack",
                version: env!("CARGO_PKG_VERSION"),
                command_line: std::env::args().collect(),
                command: command.to_string(),
                threads,
                parallel_backend: conepack_core::Execution::Parallel.is_concurrent(),
                seeds: Vec::new(),
                config: Value::Null,
                inputs: Vec::new(),
                outputs: Vec::new(),
                wall_time_s: 0.0,
            },
        }
    }

    pub fn seed(&mut self, seed: u64) {
        self.manifest.seeds.push(seed);
    }

    pub fn config<T: Serialize>(&mut self, config: &T) {
        self.manifest.config = serde_json::to_value(config).unwrap_or(Value::Null);
    }

    pub fn input(&mut self, what: impl Into<String>) {
        self.manifest.inputs.push(what.into());
    }

    pub fn output(&mut self, path: &Path) {
        self.manifest.outputs.push(path.display().to_string());
    }

    pub fn finish(mut self) -> RunManifest {
        self.manifest.wall_time_s = self.started.elapsed().as_secs_f64();
        self.manifest
    }
}

/// `<out>.manifest.json` next to the primary output.
pub fn sidecar_path(out: &Path, suffix: &str) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(suffix);
    PathBuf::from(name)
}
