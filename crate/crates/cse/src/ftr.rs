//! Binary feature files.
//!
//! FTR1: magic `FTR1`, u32 LE frame count T, u32 LE dimension D, u8 kind
//! code (0 = static29, 1 = augmented87, 2 = arbitrary), then T*D f32 LE
//! values row-major.
//!
//! NRM1: magic `NRM1`, u32 LE dimension D, D f64 LE means, D f64 LE stds.
//!
//! Values pass through f32 on the way to disk, so load-save round-trips are
//! bit-exact even though the in-memory type is f64.

use std::fs;
use std::path::Path;

use cse_core::features::{DimKind, FeatureSequence, NormStats};
use cse_core::Mat;

use crate::error::{Error, Result};

pub fn write_features(path: &Path, seq: &FeatureSequence) -> Result<()> {
    let (t, d) = (seq.data.rows(), seq.data.cols());
    let mut out = Vec::with_capacity(13 + t * d * 4);
    out.extend_from_slice(b"FTR1");
    out.extend_from_slice(&(t as u32).to_le_bytes());
    out.extend_from_slice(&(d as u32).to_le_bytes());
    out.push(seq.kind.code());
    for &v in seq.data.as_slice() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_features(path: &Path) -> Result<FeatureSequence> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < 13 || &bytes[0..4] != b"FTR1" {
        return Err(Error::format(path, "not an FTR1 file"));
    }
    let t = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let d = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let kind = DimKind::from_code(bytes[12])
        .map_err(|_| Error::format(path, format!("unknown dim kind code {}", bytes[12])))?;
    let expected = 13 + t * d * 4;
    if bytes.len() != expected {
        return Err(Error::format(
            path,
            format!("payload length {} vs expected {expected}", bytes.len()),
        ));
    }
    let mut data = Vec::with_capacity(t * d);
    for b in bytes[13..].chunks_exact(4) {
        data.push(f32::from_le_bytes(b.try_into().unwrap()) as f64);
    }
    let mat = Mat::from_vec(t, d, data);
    FeatureSequence::new(mat, kind).map_err(|e| Error::format(path, e.to_string()))
}

pub fn write_stats(path: &Path, stats: &NormStats) -> Result<()> {
    let d = stats.dim();
    let mut out = Vec::with_capacity(8 + d * 16);
    out.extend_from_slice(b"NRM1");
    out.extend_from_slice(&(d as u32).to_le_bytes());
    for &m in &stats.mean {
        out.extend_from_slice(&m.to_le_bytes());
    }
    for &s in &stats.std {
        out.extend_from_slice(&s.to_le_bytes());
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_stats(path: &Path) -> Result<NormStats> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < 8 || &bytes[0..4] != b"NRM1" {
        return Err(Error::format(path, "not an NRM1 file"));
    }
    let d = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    if bytes.len() != 8 + d * 16 {
        return Err(Error::format(path, "payload length mismatch"));
    }
    let read_f64s = |range: &[u8]| -> Vec<f64> {
        range
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
            .collect()
    };
    let mean = read_f64s(&bytes[8..8 + d * 8]);
    let std = read_f64s(&bytes[8 + d * 8..]);
    if std.iter().any(|&s| !(s.is_finite() && s > 0.0)) || mean.iter().any(|m| !m.is_finite()) {
        return Err(Error::format(path, "degenerate statistics"));
    }
    Ok(NormStats { mean, std })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use tempfile::tempdir;

    #[test]
    fn feature_round_trip_is_bit_exact() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("a.ftr");
        let mat = Mat::from_fn(7, 29, |t, c| ((t * 29 + c) as f64 * 0.173).sin() * 4.0);
        let seq = FeatureSequence::new(mat, DimKind::Static29).unwrap();
        write_features(&path, &seq).unwrap();
        let first = fs::read(&path).unwrap();
        let back = read_features(&path).unwrap();
        assert_eq!(back.kind, DimKind::Static29);
        write_features(&path, &back).unwrap();
        assert_eq!(first, fs::read(&path).unwrap());
    }

    #[test]
    fn stats_round_trip_is_bit_exact() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("a.nrm");
        let stats = NormStats {
            mean: (0..29).map(|i| (i as f64).sin() * 3.0).collect(),
            std: (0..29).map(|i| 0.1 + (i as f64 * 0.3).cos().abs()).collect(),
        };
        write_stats(&path, &stats).unwrap();
        let back = read_stats(&path).unwrap();
        assert_eq!(stats.mean, back.mean);
        assert_eq!(stats.std, back.std);
    }

    #[test]
    fn corrupted_magic_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.ftr");
        fs::write(&path, b"XXXX\0\0\0\0\0\0\0\0\0").unwrap();
        assert!(matches!(read_features(&path), Err(Error::Format { .. })));
        fs::write(&path, b"XXXX\0\0\0\0").unwrap();
        assert!(matches!(read_stats(&path), Err(Error::Format { .. })));
    }

    #[test]
    fn truncated_payload_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("short.ftr");
        let seq = FeatureSequence::new(Mat::from_fn(3, 4, |t, c| (t + c) as f64), DimKind::Arbitrary)
            .unwrap();
        write_features(&path, &seq).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        bytes.truncate(bytes.len() - 3);
        fs::write(&path, &bytes).unwrap();
        assert!(matches!(read_features(&path), Err(Error::Format { .. })));
    }

    proptest! {
        #[test]
        fn arbitrary_features_round_trip(
            rows in 1usize..6,
            cols in 1usize..8,
            seed in 0u64..1000,
        ) {
            let dir = tempdir().unwrap();
            let path = dir.path().join("p.ftr");
            let mat = Mat::from_fn(rows, cols, |t, c| {
                let k = seed.wrapping_mul(31).wrapping_add((t * cols + c) as u64);
                ((k % 10007) as f64 - 5000.0) / 997.0
            });
            let seq = FeatureSequence::new(mat, DimKind::Arbitrary).unwrap();
            write_features(&path, &seq).unwrap();
            let once = fs::read(&path).unwrap();
            let back = read_features(&path).unwrap();
            prop_assert_eq!(back.data.rows(), rows);
            write_features(&path, &back).unwrap();
            prop_assert_eq!(once, fs::read(&path).unwrap());
        }
    }
}
