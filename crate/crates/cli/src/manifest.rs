//! Run manifests written beside every output.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Context;
use serde::Serialize;
use sha2::{Digest, Sha256};

use salient_core::dataio::{sibling_path, write_json};
use salient_core::rng;

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: &'static str,
    pub flags: serde_json::Value,
    pub seed: Option<u64>,
    pub version: &'static str,
    pub rng_scheme: &'static str,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<PathBuf>,
    /// Seconds since the Unix epoch; the only field that varies between reruns.
    pub created_unix: u64,
}

impl RunManifest {
    pub fn new<T: Serialize>(subcommand: &'static str, flags: &T, seed: Option<u64>) -> anyhow::Result<Self> {
        Ok(Self {
            subcommand,
            flags: serde_json::to_value(flags)?,
            seed,
            version: env!("CARGO_PKG_VERSION"),
            rng_scheme: rng::SCHEME,
            inputs: Vec::new(),
            outputs: Vec::new(),
            created_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
        })
    }

    /// Records the SHA-256 of each existing input file.
    pub fn inputs<'a>(mut self, paths: impl IntoIterator<Item = &'a Path>) -> anyhow::Result<Self> {
        for p in paths {
            let bytes = std::fs::read(p).with_context(|| format!("reading {}", p.display()))?;
            self.inputs.push(InputDigest {
                path: p.to_path_buf(),
                sha256: hex::encode(Sha256::digest(&bytes)),
            });
        }
        Ok(self)
    }

    pub fn output(mut self, path: &Path) -> Self {
        self.outputs.push(path.to_path_buf());
        self
    }

    /// Writes `<out>.manifest.json`.
    pub fn write_beside(&self, out: &Path) -> anyhow::Result<()> {
        write_json(&sibling_path(out, ".manifest.json"), self)?;
        Ok(())
    }

    /// Writes `<dir>/manifest.json`.
    pub fn write_in(&self, dir: &Path) -> anyhow::Result<()> {
        write_json(&dir.join("manifest.json"), self)?;
        Ok(())
    }
}
