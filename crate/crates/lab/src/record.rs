//! Result records and the content-addressed result cache.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::LabError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub config_hash: String,
    pub artifact_version: String,
    pub experiment: ExperimentKind,
    pub seed: u64,
    /// Artifact paths relative to the output directory.
    pub outputs: Vec<String>,
    pub summary: BTreeMap<String, f64>,
    pub assertions: Vec<Assertion>,
}

impl ResultRecord {
    pub fn new(config: &ExperimentConfig) -> Self {
        Self {
            config_hash: config_hash(config),
            artifact_version: env!("CARGO_PKG_VERSION").into(),
            experiment: config.experiment,
            seed: config.seed,
            outputs: Vec::new(),
            summary: BTreeMap::new(),
            assertions: Vec::new(),
        }
    }

    pub fn scalar(&mut self, key: impl Into<String>, value: f64) {
        self.summary.insert(key.into(), value);
    }

    pub fn check(&mut self, name: impl Into<String>, pass: bool, detail: impl Into<String>) {
        self.assertions.push(Assertion {
            name: name.into(),
            pass,
            detail: detail.into(),
        });
    }

    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Assertion> {
        self.assertions.iter().filter(|a| !a.pass)
    }

    /// Plain structured text (TOML). Floats print in shortest round-trip
    /// form, so equal records give identical bytes.
    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("records serialize")
    }

    pub fn from_text(text: &str) -> Result<Self, LabError> {
        toml::from_str(text).map_err(|e| LabError::Record(e.to_string()))
    }
}

/// SHA-256 of the canonical config text, in hex.
pub fn config_hash(config: &ExperimentConfig) -> String {
    let digest = Sha256::digest(config.canonical().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Cache of records under `<out>/cache/<hash>/record.toml`.
#[derive(Debug, Clone)]
pub struct Cache {
    root: PathBuf,
}

impl Cache {
    pub fn new(out_dir: &Path) -> Self {
        Self {
            root: out_dir.join("cache"),
        }
    }

    pub fn path(&self, hash: &str) -> PathBuf {
        self.root.join(hash).join("record.toml")
    }

    pub fn load(&self, hash: &str) -> Result<Option<ResultRecord>, LabError> {
        let path = self.path(hash);
        match std::fs::read_to_string(&path) {
            Ok(text) => Ok(Some(ResultRecord::from_text(&text)?)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(LabError::io(&path, e)),
        }
    }

    /// Writes through a temporary file and a rename, so readers never see a
    /// partial record.
    pub fn store(&self, record: &ResultRecord) -> Result<PathBuf, LabError> {
        let path = self.path(&record.config_hash);
        let dir = path.parent().expect("cache path has a parent");
        std::fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
        let tmp = dir.join(format!("record.toml.{}.tmp", std::process::id()));
        let mut f = std::fs::File::create(&tmp).map_err(|e| LabError::io(&tmp, e))?;
        f.write_all(record.to_text().as_bytes())
            .map_err(|e| LabError::io(&tmp, e))?;
        f.sync_all().map_err(|e| LabError::io(&tmp, e))?;
        std::fs::rename(&tmp, &path).map_err(|e| LabError::io(&path, e))?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn records_round_trip_and_cache() {
        let config = ExperimentConfig::builtin(ExperimentKind::Group, 9);
        let mut r = ResultRecord::new(&config);
        r.scalar("x", 0.1 + 0.2);
        r.scalar("tiny", 1e-300);
        r.check("ok", true, "fine");
        let back = ResultRecord::from_text(&r.to_text()).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.summary["x"].to_bits(), (0.1f64 + 0.2).to_bits());

        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::new(dir.path());
        assert_eq!(cache.load(&r.config_hash).unwrap(), None);
        cache.store(&r).unwrap();
        assert_eq!(cache.load(&r.config_hash).unwrap(), Some(r));
    }

    #[test]
    fn hash_tracks_content() {
        let a = ExperimentConfig::builtin(ExperimentKind::Group, 9);
        let mut b = a.clone();
        b.output.dir = "other".into();
        assert_eq!(config_hash(&a), config_hash(&b));
        b.seed = 10;
        assert_ne!(config_hash(&a), config_hash(&b));
        assert_eq!(config_hash(&a).len(), 64);
    }
}
