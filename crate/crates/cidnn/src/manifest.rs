//! Tab-separated dataset manifests.
//!
//! One entry per line: `speech<TAB>noise<TAB>offset<TAB>split<TAB>label`.
//! `offset` is the noise start in seconds (negative means a seeded random
//! offset), `split` is one of `train`/`validation`/`test` and `label` names
//! the noise type for report grouping. Blank lines and `#` comments are
//! skipped; relative paths resolve against the manifest's directory.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl std::str::FromStr for Split {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "train" => Ok(Split::Train),
            "validation" => Ok(Split::Validation),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split {other:?}")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ManifestEntry {
    pub speech_path: PathBuf,
    pub noise_path: PathBuf,
    pub noise_offset_seconds: f64,
    pub split: Split,
    pub noise_type: String,
}

#[derive(Debug, Clone)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn with_split(&self, split: Split) -> Vec<ManifestEntry> {
        self.entries.iter().filter(|e| e.split == split).cloned().collect()
    }

    /// Sorted unique noise labels.
    pub fn noise_types(&self) -> Vec<String> {
        let mut labels: Vec<String> =
            self.entries.iter().map(|e| e.noise_type.clone()).collect();
        labels.sort();
        labels.dedup();
        labels
    }
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<Manifest> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let err = |line: usize, reason: String| Error::Manifest {
        path: path.to_path_buf(),
        reason: format!("line {line}: {reason}"),
    };

    let mut entries = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim_end();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 5 {
            return Err(err(lineno + 1, format!("expected 5 tab-separated fields, got {}", fields.len())));
        }
        let resolve = |p: &str| -> PathBuf {
            let pb = PathBuf::from(p);
            if pb.is_absolute() {
                pb
            } else {
                base.join(pb)
            }
        };
        let speech_path = resolve(fields[0]);
        let noise_path = resolve(fields[1]);
        for p in [&speech_path, &noise_path] {
            if !p.exists() {
                return Err(err(lineno + 1, format!("path not found: {}", p.display())));
            }
        }
        let noise_offset_seconds: f64 = fields[2]
            .parse()
            .map_err(|_| err(lineno + 1, format!("bad offset {:?}", fields[2])))?;
        let split: Split =
            fields[3].parse().map_err(|e: String| err(lineno + 1, e))?;
        let noise_type = fields[4].trim().to_string();
        if noise_type.is_empty() {
            return Err(err(lineno + 1, "empty noise label".into()));
        }
        entries.push(ManifestEntry {
            speech_path,
            noise_path,
            noise_offset_seconds,
            split,
            noise_type,
        });
    }
    Ok(Manifest { entries })
}
