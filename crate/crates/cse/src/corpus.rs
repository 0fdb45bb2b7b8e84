//! Synthetic corpus construction on disk: waveform synthesis, SNR mixing,
//! feature extraction, manifests — plus loaders that bring a manifest back
//! as training-ready matrices.

use std::path::{Path, PathBuf};

use cse_core::features::{
    append_deltas, compute_global_stats, log_mel, normalize, FbankConfig, FeatureSequence,
    NormStats,
};
use cse_core::synth::{mix_at_snr, synth_clean, synth_noise, utterance_rng, SynthConfig};
use cse_core::Mat;
use rand::Rng;

use crate::error::{Error, Result};
use crate::ftr::{read_features, write_features};
use crate::manifest::{Manifest, ManifestEntry};

pub const DELTA_WINDOW: usize = 2;

/// One utterance end to end: clean waveform, a noise mix drawn from the
/// config's SNR range and noise kinds, and both feature streams.
/// Deterministic per (seed, utterance id).
fn synth_utterance(
    cfg: &SynthConfig,
    utt: u64,
) -> Result<(FeatureSequence, FeatureSequence, f64, &'static str)> {
    let mut rng = utterance_rng(cfg.seed, utt);
    let duration = rng.random_range(cfg.duration_range.0..=cfg.duration_range.1);
    let clean = synth_clean(&mut rng, duration, cfg.sample_rate);
    let kind = cfg.noise_kinds[rng.random_range(0..cfg.noise_kinds.len())];
    let snr_db = rng.random_range(cfg.snr_range.0..=cfg.snr_range.1);
    let noise = synth_noise(&mut rng, kind, clean.samples.len(), cfg.sample_rate);
    let (noisy, _clip) = mix_at_snr(&clean, &noise, snr_db)?;

    let fbank = FbankConfig::for_sample_rate(cfg.sample_rate);
    let clean_static = log_mel(&clean, &fbank)?;
    let noisy_static = log_mel(&noisy, &fbank)?;
    let noisy_aug = append_deltas(&noisy_static, DELTA_WINDOW)?;
    Ok((clean_static, noisy_aug, snr_db, kind.name()))
}

/// Frame-synchronized parallel corpus: per utterance a 29-dim clean FTR1
/// file and an 87-dim noisy FTR1 file from the same source signal. Returns
/// the manifest path.
pub fn build_parallel(cfg: &SynthConfig, dir: &Path, name: &str) -> Result<PathBuf> {
    cfg.validate()?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut entries = Vec::with_capacity(cfg.n_utterances);
    for utt in 0..cfg.n_utterances as u64 {
        let (clean, noisy, snr_db, kind) = synth_utterance(cfg, utt)?;
        let id = format!("{name}{utt:04}");
        let clean_path = dir.join(format!("{id}.clean.ftr"));
        let noisy_path = dir.join(format!("{id}.noisy.ftr"));
        write_features(&clean_path, &clean)?;
        write_features(&noisy_path, &noisy)?;
        entries.push(ManifestEntry {
            id,
            clean_path,
            noisy_path: Some(noisy_path),
            snr_db: Some(snr_db),
            noise_kind: Some(kind.to_string()),
        });
    }
    let manifest_path = dir.join(format!("{name}.manifest.tsv"));
    Manifest { entries }.write(&manifest_path)?;
    Ok(manifest_path)
}

/// Unparalleled corpus: the first half of the ids becomes the noisy set
/// (87-dim mixed features), the second half the clean set (29-dim features);
/// no utterance appears in both. Returns (noisy manifest, clean manifest).
pub fn build_unparallel(cfg: &SynthConfig, dir: &Path, name: &str) -> Result<(PathBuf, PathBuf)> {
    cfg.validate()?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let half = cfg.n_utterances / 2;
    let mut noisy_entries = Vec::new();
    let mut clean_entries = Vec::new();
    for utt in 0..cfg.n_utterances as u64 {
        let (clean, noisy, snr_db, kind) = synth_utterance(cfg, utt)?;
        let id = format!("{name}{utt:04}");
        if (utt as usize) < half {
            let noisy_path = dir.join(format!("{id}.noisy.ftr"));
            write_features(&noisy_path, &noisy)?;
            // the clean column stays empty on purpose: this signal's clean
            // features must not leak into the unparalleled setting
            noisy_entries.push(ManifestEntry {
                id,
                clean_path: PathBuf::from("-"),
                noisy_path: Some(noisy_path),
                snr_db: Some(snr_db),
                noise_kind: Some(kind.to_string()),
            });
        } else {
            let clean_path = dir.join(format!("{id}.clean.ftr"));
            write_features(&clean_path, &clean)?;
            clean_entries.push(ManifestEntry {
                id,
                clean_path,
                noisy_path: None,
                snr_db: None,
                noise_kind: None,
            });
        }
    }
    let noisy_manifest = dir.join(format!("{name}.noisy.manifest.tsv"));
    let clean_manifest = dir.join(format!("{name}.clean.manifest.tsv"));
    Manifest { entries: noisy_entries }.write(&noisy_manifest)?;
    Manifest { entries: clean_entries }.write(&clean_manifest)?;
    Ok((noisy_manifest, clean_manifest))
}

/// A loaded parallel corpus, unnormalized.
pub struct ParallelCorpus {
    pub ids: Vec<String>,
    /// (87-dim noisy, 29-dim clean) per utterance
    pub pairs: Vec<(FeatureSequence, FeatureSequence)>,
}

impl ParallelCorpus {
    pub fn load(manifest_path: &Path) -> Result<Self> {
        let manifest = Manifest::read(manifest_path)?;
        let mut ids = Vec::new();
        let mut pairs = Vec::new();
        for e in &manifest.entries {
            let noisy_path = e.noisy_path.as_ref().ok_or_else(|| {
                Error::format(manifest_path, format!("{}: no noisy features", e.id))
            })?;
            let noisy = read_features(noisy_path)?;
            let clean = read_features(&e.clean_path)?;
            if noisy.frames() != clean.frames() {
                return Err(Error::format(
                    manifest_path,
                    format!(
                        "{}: frame counts differ ({} noisy vs {} clean)",
                        e.id,
                        noisy.frames(),
                        clean.frames()
                    ),
                ));
            }
            ids.push(e.id.clone());
            pairs.push((noisy, clean));
        }
        Ok(ParallelCorpus { ids, pairs })
    }

    /// Global statistics of each stream across the whole corpus.
    pub fn stats(&self) -> Result<(NormStats, NormStats)> {
        let noisy: Vec<FeatureSequence> = self.pairs.iter().map(|(n, _)| n.clone()).collect();
        let clean: Vec<FeatureSequence> = self.pairs.iter().map(|(_, c)| c.clone()).collect();
        Ok((compute_global_stats(&noisy)?, compute_global_stats(&clean)?))
    }

    /// Normalized raw matrices in trainer layout.
    pub fn normalized(&self, noisy_stats: &NormStats, clean_stats: &NormStats) -> Result<Vec<(Mat, Mat)>> {
        self.pairs
            .iter()
            .map(|(n, c)| {
                Ok((
                    normalize(n, noisy_stats)?.data,
                    normalize(c, clean_stats)?.data,
                ))
            })
            .collect()
    }
}

/// One side of an unparalleled corpus, unnormalized.
pub struct FeatureSet {
    pub ids: Vec<String>,
    pub seqs: Vec<FeatureSequence>,
}

impl FeatureSet {
    /// `noisy` selects which manifest column to read.
    pub fn load(manifest_path: &Path, noisy: bool) -> Result<Self> {
        let manifest = Manifest::read(manifest_path)?;
        let mut ids = Vec::new();
        let mut seqs = Vec::new();
        for e in &manifest.entries {
            let path = if noisy {
                e.noisy_path.as_ref().ok_or_else(|| {
                    Error::format(manifest_path, format!("{}: no noisy features", e.id))
                })?
            } else {
                &e.clean_path
            };
            ids.push(e.id.clone());
            seqs.push(read_features(path)?);
        }
        Ok(FeatureSet { ids, seqs })
    }

    pub fn stats(&self) -> Result<NormStats> {
        Ok(compute_global_stats(&self.seqs)?)
    }

    pub fn normalized(&self, stats: &NormStats) -> Result<Vec<Mat>> {
        self.seqs
            .iter()
            .map(|s| Ok(normalize(s, stats)?.data))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use cse_core::synth::NoiseKind;
    use tempfile::tempdir;

    fn tiny_cfg() -> SynthConfig {
        SynthConfig {
            n_utterances: 4,
            duration_range: (0.3, 0.5),
            sample_rate: 8000,
            snr_range: (0.0, 15.0),
            noise_kinds: vec![NoiseKind::White, NoiseKind::Pink],
            seed: 77,
        }
    }

    #[test]
    fn parallel_build_is_synchronized_and_deterministic() {
        let dir = tempdir().unwrap();
        let m1 = build_parallel(&tiny_cfg(), &dir.path().join("a"), "train").unwrap();
        let corpus = ParallelCorpus::load(&m1).unwrap();
        assert_eq!(corpus.pairs.len(), 4);
        for (noisy, clean) in &corpus.pairs {
            assert_eq!(noisy.frames(), clean.frames());
            assert_eq!(noisy.dim(), 87);
            assert_eq!(clean.dim(), 29);
        }
        // same seed, fresh directory -> byte-identical features and manifest text
        let m2 = build_parallel(&tiny_cfg(), &dir.path().join("b"), "train").unwrap();
        let c2 = ParallelCorpus::load(&m2).unwrap();
        for ((n1, c1), (n2, c2)) in corpus.pairs.iter().zip(&c2.pairs) {
            assert_eq!(n1.data, n2.data);
            assert_eq!(c1.data, c2.data);
        }
    }

    #[test]
    fn unparallel_sets_are_disjoint() {
        let dir = tempdir().unwrap();
        let (nm, cm) = build_unparallel(&tiny_cfg(), dir.path(), "u").unwrap();
        let noisy = FeatureSet::load(&nm, true).unwrap();
        let clean = FeatureSet::load(&cm, false).unwrap();
        assert_eq!(noisy.ids.len(), 2);
        assert_eq!(clean.ids.len(), 2);
        assert!(noisy.ids.iter().all(|id| !clean.ids.contains(id)));
        assert!(noisy.seqs.iter().all(|s| s.dim() == 87));
        assert!(clean.seqs.iter().all(|s| s.dim() == 29));
    }

    #[test]
    fn stats_and_normalization_pipeline() {
        let dir = tempdir().unwrap();
        let m = build_parallel(&tiny_cfg(), dir.path(), "t").unwrap();
        let corpus = ParallelCorpus::load(&m).unwrap();
        let (ns, cs) = corpus.stats().unwrap();
        assert_eq!(ns.dim(), 87);
        assert_eq!(cs.dim(), 29);
        let pairs = corpus.normalized(&ns, &cs).unwrap();
        // normalized corpus re-normalizes to identity stats
        let seqs: Vec<FeatureSequence> = pairs
            .iter()
            .map(|(n, _)| {
                FeatureSequence::new(n.clone(), cse_core::features::DimKind::Augmented87).unwrap()
            })
            .collect();
        let s = compute_global_stats(&seqs).unwrap();
        for (m, sd) in s.mean.iter().zip(&s.std) {
            assert!(m.abs() < 1e-10);
            assert!((sd - 1.0).abs() < 1e-10);
        }
    }
}
