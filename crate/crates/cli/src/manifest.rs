use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use microsynth_core::table::{write_csv, Table};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct HashedFile {
    pub role: String,
    pub path: String,
    pub sha256: String,
}

/// Provenance record written next to every run's outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: String,
    pub inputs: Vec<HashedFile>,
    pub configs: Vec<HashedFile>,
    pub master_seed: Option<u64>,
    pub parameters: serde_json::Value,
    pub threads: usize,
    pub started_unix_seconds: u64,
    pub wall_clock_seconds: f64,
    pub outputs: Vec<HashedFile>,
    #[serde(skip)]
    started: Option<Instant>,
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    let mut f = fs::File::open(path).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?;
    let mut h = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = f
            .read(&mut buf)
            .map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(hex::encode(h.finalize()))
}

fn hashed(role: &str, path: &Path) -> Result<HashedFile, CliError> {
    Ok(HashedFile {
        role: role.to_string(),
        path: path.display().to_string(),
        sha256: sha256_file(path)?,
    })
}

impl RunManifest {
    pub fn start(subcommand: &str) -> RunManifest {
        RunManifest {
            schema_version: SCHEMA_VERSION,
            tool: "microsynth",
            version: env!("CARGO_PKG_VERSION"),
            subcommand: subcommand.to_string(),
            inputs: Vec::new(),
            configs: Vec::new(),
            master_seed: None,
            parameters: serde_json::Value::Null,
            threads: rayon::current_num_threads(),
            started_unix_seconds: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
            wall_clock_seconds: 0.0,
            outputs: Vec::new(),
            started: Some(Instant::now()),
        }
    }

    pub fn input(&mut self, role: &str, path: &Path) -> Result<(), CliError> {
        self.inputs.push(hashed(role, path)?);
        Ok(())
    }

    pub fn config(&mut self, role: &str, path: &Path) -> Result<(), CliError> {
        self.configs.push(hashed(role, path)?);
        Ok(())
    }

    pub fn output(&mut self, role: &str, path: &Path) -> Result<(), CliError> {
        self.outputs.push(hashed(role, path)?);
        Ok(())
    }

    pub fn finish(mut self, path: &Path) -> Result<(), CliError> {
        self.wall_clock_seconds = self.started.map_or(0.0, |s| s.elapsed().as_secs_f64());
        write_json(path, &self)
    }
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Output(e.to_string()))?;
    text.push('\n');
    write_bytes(path, text.as_bytes())
}

fn create_parent(path: &Path) -> Result<(), CliError> {
    match path.parent().filter(|p| !p.as_os_str().is_empty()) {
        Some(parent) => fs::create_dir_all(parent).map_err(|e| CliError::Output(format!("{}: {e}", parent.display()))),
        None => Ok(()),
    }
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    create_parent(path)?;
    fs::write(path, bytes).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))
}

pub fn write_table(path: &Path, table: &Table) -> Result<(), CliError> {
    create_parent(path)?;
    write_csv(table, path).map_err(|e| CliError::Output(e.to_string()))
}

/// `<path>.manifest.json` unless overridden.
pub fn manifest_path(out: &Path, explicit: Option<&PathBuf>) -> PathBuf {
    explicit.cloned().unwrap_or_else(|| {
        let mut s = out.as_os_str().to_owned();
        s.push(".manifest.json");
        PathBuf::from(s)
    })
}
