//! Run manifests: everything needed to replay a run and check that the
//! replay produced the same bytes.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use dppa_core::algorithms::Algorithm;
use dppa_core::theory::AnalysisReport;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub version: u32,
    /// Instance path, relative to the manifest's directory unless absolute.
    pub instance: String,
    pub instance_sha256: String,
    pub algorithm: Algorithm,
    pub eta: f64,
    /// The stepsize as given on the command line.
    pub eta_expr: String,
    pub rounds: u64,
    pub init: String,
    /// Trajectory CSV path, relative to the manifest's directory unless absolute.
    pub trajectory: String,
    pub trajectory_sha256: String,
    pub rounds_completed: u64,
    pub diverged: bool,
    pub constants: AnalysisReport,
}

fn is_sha256_hex(s: &str) -> bool {
    s.len() == 64 && s.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f'))
}

impl RunManifest {
    pub fn validate(&self) -> Result<()> {
        if self.version != MANIFEST_VERSION {
            bail!("unsupported manifest version {}", self.version);
        }
        if !is_sha256_hex(&self.instance_sha256) || !is_sha256_hex(&self.trajectory_sha256) {
            bail!("digests must be 64 lowercase hex characters");
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            bail!("eta must be positive, got {}", self.eta);
        }
        if self.rounds == 0 || self.rounds_completed > self.rounds {
            bail!(
                "rounds_completed {} is inconsistent with rounds {}",
                self.rounds_completed,
                self.rounds
            );
        }
        if !self.diverged && self.rounds_completed != self.rounds {
            bail!("a run that did not diverge must complete all rounds");
        }
        if self.init != "zeros" {
            bail!("unsupported initial state {:?}", self.init);
        }
        if self.instance.is_empty() || self.trajectory.is_empty() {
            bail!("instance and trajectory paths must be non-empty");
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: RunManifest = serde_json::from_str(s).context("malformed manifest")?;
        m.validate()?;
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        let mut s =
            serde_json::to_string_pretty(self).expect("manifest serialization is infallible");
        s.push('\n');
        s
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn instance_path(&self, manifest_path: &Path) -> PathBuf {
        resolve(manifest_path, &self.instance)
    }

    pub fn trajectory_path(&self, manifest_path: &Path) -> PathBuf {
        resolve(manifest_path, &self.trajectory)
    }
}

fn resolve(manifest_path: &Path, p: &str) -> PathBuf {
    let p = Path::new(p);
    if p.is_absolute() {
        return p.to_path_buf();
    }
    manifest_path.parent().unwrap_or(Path::new("")).join(p)
}

/// How `target` is recorded in a manifest stored at `manifest_path`: the bare
/// file name when both share a directory, otherwise an absolute path.
pub fn record_path(manifest_path: &Path, target: &Path) -> Result<String> {
    let abs = |p: &Path| -> Result<PathBuf> {
        let parent = match p.parent() {
            Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
            _ => PathBuf::from("."),
        };
        let dir = parent
            .canonicalize()
            .with_context(|| format!("resolving {}", parent.display()))?;
        Ok(dir.join(p.file_name().context("path has no file name")?))
    };
    let m = abs(manifest_path)?;
    let t = abs(target)?;
    if m.parent() == t.parent() {
        Ok(t.file_name().unwrap().to_string_lossy().into_owned())
    } else {
        Ok(t.to_string_lossy().into_owned())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// `traj.csv` -> `traj.manifest.json`.
pub fn default_manifest_path(csv: &Path) -> PathBuf {
    let stem = csv
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    csv.with_file_name(format!("{stem}.manifest.json"))
}
