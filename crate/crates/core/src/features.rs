//! Log-mel filterbank front end: framing, mel weighting, delta augmentation
//! and global mean-variance normalization.
//!
//! The trained networks consume 29-dimensional static log-mel features on the
//! clean side and 87-dimensional static+delta+delta-delta vectors on the
//! noisy side, each stream standardized by its own global statistics.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fft::power_spectrum;
use crate::mat::Mat;

pub const STATIC_DIM: usize = 29;
pub const AUGMENTED_DIM: usize = 3 * STATIC_DIM;

#[derive(Debug, Clone)]
pub struct Waveform {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::Config("sample_rate must be positive".into()));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::Data("non-finite sample in waveform".into()));
        }
        Ok(Waveform { samples, sample_rate })
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DimKind {
    Static29,
    Augmented87,
    Arbitrary,
}

impl DimKind {
    pub fn code(self) -> u8 {
        match self {
            DimKind::Static29 => 0,
            DimKind::Augmented87 => 1,
            DimKind::Arbitrary => 2,
        }
    }

    pub fn from_code(c: u8) -> Result<Self> {
        match c {
            0 => Ok(DimKind::Static29),
            1 => Ok(DimKind::Augmented87),
            2 => Ok(DimKind::Arbitrary),
            _ => Err(Error::Data(format!("unknown dim_kind code {c}"))),
        }
    }
}

/// A T×D sequence of per-frame feature vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSequence {
    pub data: Mat,
    pub kind: DimKind,
}

impl FeatureSequence {
    pub fn new(data: Mat, kind: DimKind) -> Result<Self> {
        if data.rows() == 0 {
            return Err(Error::Data("feature sequence must have T >= 1".into()));
        }
        if !data.all_finite() {
            return Err(Error::Numeric("non-finite feature entry".into()));
        }
        let d = data.cols();
        match kind {
            DimKind::Static29 if d != STATIC_DIM => {
                return Err(Error::Dim(format!("static29 requires D=29, got {d}")))
            }
            DimKind::Augmented87 if d != AUGMENTED_DIM => {
                return Err(Error::Dim(format!("augmented87 requires D=87, got {d}")))
            }
            _ => {}
        }
        Ok(FeatureSequence { data, kind })
    }

    pub fn frames(&self) -> usize {
        self.data.rows()
    }

    pub fn dim(&self) -> usize {
        self.data.cols()
    }
}

#[derive(Debug, Clone)]
pub struct FbankConfig {
    pub frame_length_ms: f64,
    pub frame_hop_ms: f64,
    pub fft_size: usize,
    pub n_mels: usize,
    pub fmin_hz: f64,
    pub fmax_hz: f64,
    /// additive floor applied before the natural log
    pub floor: f64,
}

impl Default for FbankConfig {
    fn default() -> Self {
        // 25 ms / 10 ms Hamming framing; fft_size is adjusted to the next
        // power of two >= window length when built via `for_sample_rate`.
        FbankConfig {
            frame_length_ms: 25.0,
            frame_hop_ms: 10.0,
            fft_size: 512,
            n_mels: STATIC_DIM,
            fmin_hz: 20.0,
            fmax_hz: 8000.0,
            floor: 1e-10,
        }
    }
}

impl FbankConfig {
    /// Default config with fft_size and fmax adapted to a sample rate.
    pub fn for_sample_rate(sample_rate: u32) -> Self {
        let mut cfg = FbankConfig::default();
        let win = (cfg.frame_length_ms * sample_rate as f64 / 1000.0) as usize;
        cfg.fft_size = win.next_power_of_two();
        cfg.fmax_hz = sample_rate as f64 / 2.0;
        cfg
    }

    pub fn window_samples(&self, sample_rate: u32) -> usize {
        libm::round(self.frame_length_ms * sample_rate as f64 / 1000.0) as usize
    }

    pub fn hop_samples(&self, sample_rate: u32) -> usize {
        libm::round(self.frame_hop_ms * sample_rate as f64 / 1000.0) as usize
    }

    pub fn validate(&self, sample_rate: u32) -> Result<()> {
        let nyquist = sample_rate as f64 / 2.0;
        if !(self.fmin_hz >= 0.0 && self.fmin_hz < self.fmax_hz && self.fmax_hz <= nyquist) {
            return Err(Error::Config(format!(
                "need 0 <= fmin < fmax <= nyquist ({} < {} <= {nyquist})",
                self.fmin_hz, self.fmax_hz
            )));
        }
        if self.n_mels < 1 {
            return Err(Error::Config("n_mels must be >= 1".into()));
        }
        if self.floor <= 0.0 {
            return Err(Error::Config("floor must be positive".into()));
        }
        let win = self.window_samples(sample_rate);
        if win == 0 || self.hop_samples(sample_rate) == 0 {
            return Err(Error::Config("frame length/hop too small".into()));
        }
        if self.fft_size < win {
            return Err(Error::Config(format!(
                "fft_size {} smaller than window {win}",
                self.fft_size
            )));
        }
        if !self.fft_size.is_power_of_two() {
            return Err(Error::Config("fft_size must be a power of two".into()));
        }
        Ok(())
    }
}

fn hz_to_mel(f: f64) -> f64 {
    2595.0 * libm::log10(1.0 + f / 700.0)
}

fn mel_to_hz(m: f64) -> f64 {
    700.0 * (libm::pow(10.0, m / 2595.0) - 1.0)
}

/// Triangular mel filterbank weights, one row per band, over the `n_bins`
/// positive-frequency FFT bins. Peak weight is 1 (no area normalization).
pub fn mel_filterbank(cfg: &FbankConfig, sample_rate: u32) -> Mat {
    let n_bins = cfg.fft_size / 2 + 1;
    let mel_lo = hz_to_mel(cfg.fmin_hz);
    let mel_hi = hz_to_mel(cfg.fmax_hz);
    // n_mels + 2 edge points, evenly spaced on the mel scale
    let edges: Vec<f64> = (0..cfg.n_mels + 2)
        .map(|i| mel_to_hz(mel_lo + (mel_hi - mel_lo) * i as f64 / (cfg.n_mels + 1) as f64))
        .collect();
    let bin_hz = sample_rate as f64 / cfg.fft_size as f64;
    Mat::from_fn(cfg.n_mels, n_bins, |b, k| {
        let f = k as f64 * bin_hz;
        let (lo, mid, hi) = (edges[b], edges[b + 1], edges[b + 2]);
        if f <= lo || f >= hi {
            0.0
        } else if f <= mid {
            (f - lo) / (mid - lo)
        } else {
            (hi - f) / (hi - mid)
        }
    })
}

/// Center frequency (Hz) of mel band `band`; handy for tone tests.
pub fn mel_band_center_hz(cfg: &FbankConfig, band: usize) -> f64 {
    let mel_lo = hz_to_mel(cfg.fmin_hz);
    let mel_hi = hz_to_mel(cfg.fmax_hz);
    mel_to_hz(mel_lo + (mel_hi - mel_lo) * (band + 1) as f64 / (cfg.n_mels + 1) as f64)
}

pub fn hamming_window(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|i| 0.54 - 0.46 * libm::cos(2.0 * core::f64::consts::PI * i as f64 / (n - 1) as f64))
        .collect()
}

/// Log-mel filterbank features: Hamming-windowed power spectrum, triangular
/// mel weighting, natural log of (energy + floor). T = 1 + (N - win)/hop.
pub fn log_mel(wave: &Waveform, cfg: &FbankConfig) -> Result<FeatureSequence> {
    cfg.validate(wave.sample_rate)?;
    let win = cfg.window_samples(wave.sample_rate);
    let hop = cfg.hop_samples(wave.sample_rate);
    let n = wave.samples.len();
    if n < win {
        return Err(Error::Data(format!(
            "waveform too short: {n} samples, window is {win}"
        )));
    }
    let n_frames = 1 + (n - win) / hop;
    let window = hamming_window(win);
    let fbank = mel_filterbank(cfg, wave.sample_rate);
    let kind = if cfg.n_mels == STATIC_DIM {
        DimKind::Static29
    } else {
        DimKind::Arbitrary
    };

    let mut out = Mat::zeros(n_frames, cfg.n_mels);
    let mut frame = vec![0.0; win];
    for t in 0..n_frames {
        let start = t * hop;
        for i in 0..win {
            frame[i] = wave.samples[start + i] * window[i];
        }
        let power = power_spectrum(&frame, cfg.fft_size);
        let row = out.row_mut(t);
        for b in 0..cfg.n_mels {
            let mut e = 0.0;
            for (w, p) in fbank.row(b).iter().zip(power.iter()) {
                e += w * p;
            }
            row[b] = libm::log(e + cfg.floor);
        }
    }
    FeatureSequence::new(out, kind)
}

/// Regression delta of a T×D matrix:
/// d_t = sum_{n=1..w} n (c_{t+n} - c_{t-n}) / (2 sum n^2), edges clamped.
pub fn delta(data: &Mat, window: usize) -> Mat {
    assert!(window >= 1);
    let t_len = data.rows();
    let d = data.cols();
    let denom: f64 = 2.0 * (1..=window).map(|n| (n * n) as f64).sum::<f64>();
    let clamp = |t: isize| -> usize { t.clamp(0, t_len as isize - 1) as usize };
    Mat::from_fn(t_len, d, |t, c| {
        let mut acc = 0.0;
        for n in 1..=window {
            let fwd = data[(clamp(t as isize + n as isize), c)];
            let bwd = data[(clamp(t as isize - n as isize), c)];
            acc += n as f64 * (fwd - bwd);
        }
        acc / denom
    })
}

/// [static | delta | delta-delta] on a raw matrix; works for any D.
pub fn delta_append(data: &Mat, window: usize) -> Mat {
    let d1 = delta(data, window);
    let d2 = delta(&d1, window);
    let (t_len, d) = (data.rows(), data.cols());
    Mat::from_fn(t_len, 3 * d, |t, c| {
        if c < d {
            data[(t, c)]
        } else if c < 2 * d {
            d1[(t, c - d)]
        } else {
            d2[(t, c - 2 * d)]
        }
    })
}

/// Static29 -> Augmented87 delta augmentation.
pub fn append_deltas(seq: &FeatureSequence, window: usize) -> Result<FeatureSequence> {
    if seq.kind != DimKind::Static29 {
        return Err(Error::Dim(
            "append_deltas expects a static29 sequence".into(),
        ));
    }
    FeatureSequence::new(delta_append(&seq.data, window), DimKind::Augmented87)
}

/// Global per-dimension mean and standard deviation (population, 1/N).
#[derive(Debug, Clone, PartialEq)]
pub struct NormStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl NormStats {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Identity stats (mean 0, std 1) of a given dimensionality.
    pub fn identity(dim: usize) -> Self {
        NormStats {
            mean: vec![0.0; dim],
            std: vec![1.0; dim],
        }
    }
}

/// Pool mean/std over all frames of all sequences. Two-pass, population
/// (1/N) convention.
pub fn compute_global_stats(corpus: &[FeatureSequence]) -> Result<NormStats> {
    let d = corpus
        .first()
        .ok_or_else(|| Error::Data("empty corpus".into()))?
        .dim();
    let mut n = 0usize;
    let mut mean = vec![0.0; d];
    for seq in corpus {
        if seq.dim() != d {
            return Err(Error::Dim(format!(
                "mixed dimensions in corpus: {} vs {d}",
                seq.dim()
            )));
        }
        for t in 0..seq.frames() {
            for (m, x) in mean.iter_mut().zip(seq.data.row(t)) {
                *m += x;
            }
        }
        n += seq.frames();
    }
    if n < 2 {
        return Err(Error::Data("need at least 2 frames for stats".into()));
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut var = vec![0.0; d];
    for seq in corpus {
        for t in 0..seq.frames() {
            for ((v, m), x) in var.iter_mut().zip(mean.iter()).zip(seq.data.row(t)) {
                let dev = x - m;
                *v += dev * dev;
            }
        }
    }
    let mut std = vec![0.0; d];
    for (i, (s, v)) in std.iter_mut().zip(var.iter()).enumerate() {
        let sd = libm::sqrt(v / n as f64);
        if sd == 0.0 {
            return Err(Error::DegenerateStats(i));
        }
        *s = sd;
    }
    Ok(NormStats { mean, std })
}

fn check_dims(seq: &FeatureSequence, stats: &NormStats) -> Result<()> {
    if seq.dim() != stats.dim() {
        return Err(Error::Dim(format!(
            "sequence dim {} vs stats dim {}",
            seq.dim(),
            stats.dim()
        )));
    }
    Ok(())
}

pub fn normalize(seq: &FeatureSequence, stats: &NormStats) -> Result<FeatureSequence> {
    check_dims(seq, stats)?;
    let data = Mat::from_fn(seq.frames(), seq.dim(), |t, c| {
        (seq.data[(t, c)] - stats.mean[c]) / stats.std[c]
    });
    FeatureSequence::new(data, seq.kind)
}

pub fn denormalize(seq: &FeatureSequence, stats: &NormStats) -> Result<FeatureSequence> {
    check_dims(seq, stats)?;
    let data = Mat::from_fn(seq.frames(), seq.dim(), |t, c| {
        seq.data[(t, c)] * stats.std[c] + stats.mean[c]
    });
    FeatureSequence::new(data, seq.kind)
}
