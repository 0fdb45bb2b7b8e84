//! Line-oriented corpus manifests: one utterance per line, tab-separated
//! fields `id, clean feature path, noisy feature path or "-", snr_db or "-",
//! noise kind or "-"`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub id: String,
    pub clean_path: PathBuf,
    pub noisy_path: Option<PathBuf>,
    pub snr_db: Option<f64>,
    pub noise_kind: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for e in &self.entries {
            let noisy = e
                .noisy_path
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_else(|| "-".into());
            let snr = e.snr_db.map(|v| v.to_string()).unwrap_or_else(|| "-".into());
            let kind = e.noise_kind.clone().unwrap_or_else(|| "-".into());
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                e.id,
                e.clean_path.display(),
                noisy,
                snr,
                kind
            )
            .expect("string write");
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut entries = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 5 {
                return Err(Error::format(
                    path,
                    format!("line {}: expected 5 tab-separated fields, got {}", lineno + 1, fields.len()),
                ));
            }
            let snr_db = match fields[3] {
                "-" => None,
                s => Some(s.parse::<f64>().map_err(|_| {
                    Error::format(path, format!("line {}: bad snr '{s}'", lineno + 1))
                })?),
            };
            entries.push(ManifestEntry {
                id: fields[0].to_string(),
                clean_path: PathBuf::from(fields[1]),
                noisy_path: match fields[2] {
                    "-" => None,
                    p => Some(PathBuf::from(p)),
                },
                snr_db,
                noise_kind: match fields[4] {
                    "-" => None,
                    k => Some(k.to_string()),
                },
            });
        }
        let m = Manifest { entries };
        m.validate_ids(path)?;
        Ok(m)
    }

    pub fn validate_ids(&self, path: &Path) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for e in &self.entries {
            if !seen.insert(&e.id) {
                return Err(Error::format(path, format!("duplicate id '{}'", e.id)));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn sample() -> Manifest {
        Manifest {
            entries: vec![
                ManifestEntry {
                    id: "utt0000".into(),
                    clean_path: "feats/utt0000.clean.ftr".into(),
                    noisy_path: Some("feats/utt0000.noisy.ftr".into()),
                    snr_db: Some(7.25),
                    noise_kind: Some("pink".into()),
                },
                ManifestEntry {
                    id: "utt0001".into(),
                    clean_path: "feats/utt0001.clean.ftr".into(),
                    noisy_path: None,
                    snr_db: None,
                    noise_kind: None,
                },
            ],
        }
    }

    #[test]
    fn round_trip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("m.tsv");
        let m = sample();
        m.write(&path).unwrap();
        let back = Manifest::read(&path).unwrap();
        assert_eq!(m, back);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("utt0001\tfeats/utt0001.clean.ftr\t-\t-\t-"));
    }

    #[test]
    fn duplicate_ids_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("m.tsv");
        let mut m = sample();
        m.entries[1].id = "utt0000".into();
        m.write(&path).unwrap();
        assert!(matches!(Manifest::read(&path), Err(Error::Format { .. })));
    }

    #[test]
    fn wrong_field_count_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("m.tsv");
        std::fs::write(&path, "id\tonly\tthree\n").unwrap();
        assert!(matches!(Manifest::read(&path), Err(Error::Format { .. })));
    }
}
