use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use cyclegzsl::training::TrainConfig;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const RUN_MANIFEST: &str = "run_manifest.json";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Running,
    Complete,
}

/// Provenance of a run directory. Written before training and finalized afterwards;
/// the config snapshot is the fully resolved configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: TrainConfig,
    pub config_hash: String,
    pub dataset_dir: String,
    pub dataset_name: String,
    pub dataset_hash: String,
    pub code_version: String,
    pub seed: u64,
    /// Worker-thread cap from `GZSL_THREADS`; the optimization itself is sequential.
    pub threads: usize,
    pub started_unix: u64,
    pub finished_unix: Option<u64>,
    pub status: RunStatus,
    /// cycle-wgan run a cycle-uwgan run was fine-tuned from.
    pub source_run: Option<String>,
    pub warnings: Vec<String>,
    pub outputs: Vec<String>,
}

pub fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

/// `GZSL_THREADS`, default 1.
pub fn thread_cap() -> Result<usize, CliError> {
    match std::env::var("GZSL_THREADS") {
        Err(_) => Ok(1),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(CliError::Usage(format!("GZSL_THREADS must be a positive integer, got {v:?}"))),
        },
    }
}

impl RunManifest {
    pub fn save(&self, dir: &Path) -> Result<(), CliError> {
        let path = dir.join(RUN_MANIFEST);
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(&path, text + "\n").map_err(|e| cyclegzsl::Error::io(&path, e))?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self, CliError> {
        let path = dir.join(RUN_MANIFEST);
        let text = fs::read_to_string(&path).map_err(|e| cyclegzsl::Error::io(&path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| cyclegzsl::Error::Parse { path: path.clone(), detail: e.to_string() }.into())
    }
}
