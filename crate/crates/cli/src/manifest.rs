//! Run manifests: what a command read, what it wrote, and the digests of both.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Value,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub tool_version: String,
}

/// A recorded digest that no longer matches the file on disk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mismatch {
    pub path: PathBuf,
    pub recorded: String,
    pub actual: Option<String>,
}

pub fn sha256_file(path: &Path) -> io::Result<String> {
    let bytes = fs::read(path)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn digests(paths: &[PathBuf]) -> io::Result<Vec<FileDigest>> {
    paths
        .iter()
        .map(|p| {
            Ok(FileDigest {
                path: p.clone(),
                sha256: sha256_file(p)?,
            })
        })
        .collect()
}

impl RunManifest {
    pub fn record(command: &str, config: Value, inputs: &[PathBuf], outputs: &[PathBuf]) -> io::Result<Self> {
        Ok(RunManifest {
            command: command.to_string(),
            config,
            inputs: digests(inputs)?,
            outputs: digests(outputs)?,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        })
    }

    pub fn write(&self, path: &Path) -> io::Result<()> {
        let mut text = serde_json::to_string_pretty(self).map_err(io::Error::other)?;
        text.push('\n');
        fs::write(path, text)
    }

    pub fn read(path: &Path) -> io::Result<Self> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
    }

    /// Recomputes every digest and lists the ones that changed.
    pub fn verify(&self) -> Vec<Mismatch> {
        self.inputs
            .iter()
            .chain(&self.outputs)
            .filter_map(|d| {
                let actual = sha256_file(&d.path).ok();
                (actual.as_deref() != Some(d.sha256.as_str())).then(|| Mismatch {
                    path: d.path.clone(),
                    recorded: d.sha256.clone(),
                    actual,
                })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn known_digest() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("abc");
        fs::write(&p, "abc").unwrap();
        assert_eq!(
            sha256_file(&p).unwrap(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn verify_detects_edits() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("in.csv");
        let output = dir.path().join("out.txt");
        fs::write(&input, "id,a\nr1,1\n").unwrap();
        fs::write(&output, "done\n").unwrap();
        let m = RunManifest::record("weights", json!({"policy": "mean"}), std::slice::from_ref(&input), std::slice::from_ref(&output)).unwrap();
        let path = dir.path().join("m.json");
        m.write(&path).unwrap();
        let back = RunManifest::read(&path).unwrap();
        assert_eq!(back, m);
        assert!(back.verify().is_empty());
        fs::write(&output, "changed\n").unwrap();
        let bad = back.verify();
        assert_eq!(bad.len(), 1);
        assert_eq!(bad[0].path, output);
    }
}
