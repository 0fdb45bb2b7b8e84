//! Mono PCM-16 little-endian WAV read/write. Nothing else is supported;
//! anything fancier in the header is an explicit error, not a guess.

use std::fs;
use std::path::Path;

use cse_core::features::Waveform;

use crate::error::{Error, Result};

/// Samples are scaled to [-1, 1] by 1/32768, so i16::MIN maps to exactly -1.
const SCALE: f64 = 32768.0;

pub fn read_wav(path: &Path) -> Result<Waveform> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let fail = |reason: &str| Error::format(path, reason);
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(fail("not a RIFF/WAVE file"));
    }
    let mut pos = 12;
    let mut fmt: Option<(u16, u16, u32, u16)> = None; // format, channels, rate, bits
    let mut data: Option<&[u8]> = None;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32::from_le_bytes(bytes[pos + 4..pos + 8].try_into().unwrap()) as usize;
        let body_end = pos + 8 + size;
        if body_end > bytes.len() {
            return Err(fail("chunk overruns file"));
        }
        let body = &bytes[pos + 8..body_end];
        match id {
            b"fmt " => {
                if size < 16 {
                    return Err(fail("fmt chunk too short"));
                }
                fmt = Some((
                    u16::from_le_bytes(body[0..2].try_into().unwrap()),
                    u16::from_le_bytes(body[2..4].try_into().unwrap()),
                    u32::from_le_bytes(body[4..8].try_into().unwrap()),
                    u16::from_le_bytes(body[14..16].try_into().unwrap()),
                ));
            }
            b"data" => data = Some(body),
            _ => {}
        }
        // chunks are word-aligned
        pos = body_end + (size & 1);
    }
    let (format, channels, rate, bits) = fmt.ok_or_else(|| fail("missing fmt chunk"))?;
    if format != 1 {
        return Err(fail(&format!("unsupported WAV format code {format} (PCM only)")));
    }
    if channels != 1 {
        return Err(fail(&format!("unsupported channel count {channels} (mono only)")));
    }
    if bits != 16 {
        return Err(fail(&format!("unsupported bit depth {bits} (16-bit only)")));
    }
    if rate == 0 {
        return Err(fail("zero sample rate"));
    }
    let data = data.ok_or_else(|| fail("missing data chunk"))?;
    if data.len() % 2 != 0 {
        return Err(fail("odd data chunk length"));
    }
    let samples: Vec<f64> = data
        .chunks_exact(2)
        .map(|b| i16::from_le_bytes([b[0], b[1]]) as f64 / SCALE)
        .collect();
    Ok(Waveform { samples, sample_rate: rate })
}

pub fn write_wav(path: &Path, wave: &Waveform) -> Result<()> {
    let n = wave.samples.len();
    let data_len = (n * 2) as u32;
    let mut out = Vec::with_capacity(44 + n * 2);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes()); // PCM
    out.extend_from_slice(&1u16.to_le_bytes()); // mono
    out.extend_from_slice(&wave.sample_rate.to_le_bytes());
    out.extend_from_slice(&(wave.sample_rate * 2).to_le_bytes()); // byte rate
    out.extend_from_slice(&2u16.to_le_bytes()); // block align
    out.extend_from_slice(&16u16.to_le_bytes()); // bits
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for &s in &wave.samples {
        let v = (s * SCALE).round().clamp(i16::MIN as f64, i16::MAX as f64) as i16;
        out.extend_from_slice(&v.to_le_bytes());
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn known_samples_scale_exactly() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("t.wav");
        // hand-build a file containing [0, 16384, -32768]
        let mut wave = Waveform { samples: vec![0.0, 0.5, -1.0], sample_rate: 8000 };
        write_wav(&path, &wave).unwrap();
        let back = read_wav(&path).unwrap();
        assert_eq!(back.samples, vec![0.0, 0.5, -1.0]);
        assert_eq!(back.sample_rate, 8000);
        // and the raw bytes really are those PCM values
        let bytes = std::fs::read(&path).unwrap();
        let pcm = &bytes[44..];
        assert_eq!(pcm, &[0, 0, 0, 0x40, 0x00, 0x80]);
        wave.samples.clear();
        write_wav(&path, &wave).unwrap();
        assert!(read_wav(&path).unwrap().samples.is_empty());
    }

    #[test]
    fn sine_round_trip_error_below_one_lsb() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("sine.wav");
        let rate = 16000u32;
        let samples: Vec<f64> = (0..rate)
            .map(|i| (2.0 * std::f64::consts::PI * 440.0 * i as f64 / rate as f64).sin())
            .collect();
        let wave = Waveform { samples: samples.clone(), sample_rate: rate };
        write_wav(&path, &wave).unwrap();
        let back = read_wav(&path).unwrap();
        let max_err = samples
            .iter()
            .zip(&back.samples)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        // full-scale peaks clamp to 32767, so exactly one LSB is attainable
        assert!(max_err <= 1.0 / 32768.0, "max error {max_err}");
    }

    #[test]
    fn eight_bit_and_stereo_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.wav");
        let wave = Waveform { samples: vec![0.0; 16], sample_rate: 8000 };
        write_wav(&path, &wave).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[34] = 8; // bits per sample
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(read_wav(&path), Err(Error::Format { .. })));
        bytes[34] = 16;
        bytes[22] = 2; // channels
        std::fs::write(&path, &bytes).unwrap();
        let err = read_wav(&path).unwrap_err();
        assert!(err.to_string().contains("channel"));
    }

    #[test]
    fn malformed_header_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("junk.wav");
        std::fs::write(&path, b"definitely not a wav").unwrap();
        assert!(matches!(read_wav(&path), Err(Error::Format { .. })));
    }
}
