//! Synthetic speech-like signals and noise, mixed at controlled SNR.
//! Stands in for recorded corpora so training and evaluation run at desk
//! scale with full determinism.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::features::Waveform;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    White,
    Pink,
    /// Low-pass filtered white noise, energy concentrated under ~200 Hz.
    Rumble,
}

impl NoiseKind {
    pub fn name(self) -> &'static str {
        match self {
            NoiseKind::White => "white",
            NoiseKind::Pink => "pink",
            NoiseKind::Rumble => "rumble",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "white" => Ok(NoiseKind::White),
            "pink" => Ok(NoiseKind::Pink),
            "rumble" => Ok(NoiseKind::Rumble),
            _ => Err(Error::Config(format!("unknown noise kind '{s}'"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub n_utterances: usize,
    /// seconds, inclusive range
    pub duration_range: (f64, f64),
    pub sample_rate: u32,
    /// dB, inclusive range
    pub snr_range: (f64, f64),
    pub noise_kinds: Vec<NoiseKind>,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_utterances: 200,
            duration_range: (1.0, 3.0),
            sample_rate: 16000,
            snr_range: (0.0, 20.0),
            noise_kinds: vec![NoiseKind::White, NoiseKind::Pink, NoiseKind::Rumble],
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_utterances == 0 {
            return Err(Error::Config("n_utterances must be >= 1".into()));
        }
        let (lo, hi) = self.duration_range;
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return Err(Error::Config("invalid duration range".into()));
        }
        let (slo, shi) = self.snr_range;
        if !(slo.is_finite() && shi.is_finite() && shi >= slo) {
            return Err(Error::Config("invalid snr range".into()));
        }
        if self.noise_kinds.is_empty() {
            return Err(Error::Config("need at least one noise kind".into()));
        }
        Ok(())
    }
}

/// Per-utterance RNG derived from a base seed and an utterance id, so
/// synthesis is order-independent and embarrassingly parallel.
pub fn utterance_rng(base_seed: u64, utt_id: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(
        base_seed
            .wrapping_mul(0x9e37_79b9_7f4a_7c15)
            .wrapping_add(utt_id.wrapping_mul(0xbf58_476d_1ce4_e5b9)),
    )
}

/// Speech-like signal: 3-8 harmonics of a slowly wandering fundamental
/// (80-300 Hz) with per-harmonic amplitude envelopes and a few silence gaps,
/// peak-normalized to 0.5.
pub fn synth_clean(rng: &mut ChaCha8Rng, duration_s: f64, sample_rate: u32) -> Waveform {
    let n = (duration_s * sample_rate as f64) as usize;
    let dt = 1.0 / sample_rate as f64;
    let f0_base = rng.random_range(80.0..300.0);
    let f0_mod_rate = rng.random_range(0.5..3.0);
    let f0_mod_depth = rng.random_range(0.02..0.12);
    let n_harm = rng.random_range(3..=8usize);
    let harm_amp: Vec<f64> = (0..n_harm)
        .map(|h| rng.random_range(0.2..1.0) / (h + 1) as f64)
        .collect();
    let harm_env_rate: Vec<f64> = (0..n_harm).map(|_| rng.random_range(0.3..2.5)).collect();
    let harm_env_phase: Vec<f64> = (0..n_harm)
        .map(|_| rng.random_range(0.0..core::f64::consts::TAU))
        .collect();

    // a few raised-cosine silence gaps
    let n_gaps = rng.random_range(1..=3usize);
    let gaps: Vec<(f64, f64)> = (0..n_gaps)
        .map(|_| {
            let center = rng.random_range(0.1..0.9) * duration_s;
            let width = rng.random_range(0.05..0.15) * duration_s;
            (center, width)
        })
        .collect();

    let mut phase = 0.0f64;
    let mut samples = Vec::with_capacity(n);
    for i in 0..n {
        let t = i as f64 * dt;
        let f0 = f0_base * (1.0 + f0_mod_depth * libm::sin(core::f64::consts::TAU * f0_mod_rate * t));
        phase += core::f64::consts::TAU * f0 * dt;
        let mut s = 0.0;
        for h in 0..n_harm {
            let env = 0.6
                + 0.4
                    * libm::sin(
                        core::f64::consts::TAU * harm_env_rate[h] * t + harm_env_phase[h],
                    );
            s += harm_amp[h] * env * libm::sin((h + 1) as f64 * phase);
        }
        let mut gate = 1.0;
        for &(center, width) in &gaps {
            let d = libm::fabs(t - center);
            if d < width {
                gate *= 0.5 - 0.5 * libm::cos(core::f64::consts::PI * d / width);
            }
        }
        samples.push(s * gate);
    }

    let peak = samples.iter().fold(0.0f64, |m, &s| m.max(libm::fabs(s)));
    if peak > 0.0 {
        let k = 0.5 / peak;
        samples.iter_mut().for_each(|s| *s *= k);
    }
    Waveform {
        samples,
        sample_rate,
    }
}

/// Noise of a given kind and length, roughly unit-scale (mixing rescales it
/// anyway).
pub fn synth_noise(rng: &mut ChaCha8Rng, kind: NoiseKind, len: usize, _sample_rate: u32) -> Vec<f64> {
    match kind {
        NoiseKind::White => (0..len).map(|_| rng.random_range(-1.0..1.0)).collect(),
        NoiseKind::Pink => {
            // Paul Kellet's economy pink filter over white noise
            let (mut b0, mut b1, mut b2) = (0.0, 0.0, 0.0);
            (0..len)
                .map(|_| {
                    let w: f64 = rng.random_range(-1.0..1.0);
                    b0 = 0.99765 * b0 + w * 0.0990460;
                    b1 = 0.96300 * b1 + w * 0.2965164;
                    b2 = 0.57000 * b2 + w * 1.0526913;
                    (b0 + b1 + b2 + w * 0.1848) * 0.2
                })
                .collect()
        }
        NoiseKind::Rumble => {
            // one-pole lowpass, cutoff far below speech harmonics
            let alpha = 0.98;
            let mut y = 0.0;
            (0..len)
                .map(|_| {
                    let w: f64 = rng.random_range(-1.0..1.0);
                    y = alpha * y + (1.0 - alpha) * w;
                    y * 10.0
                })
                .collect()
        }
    }
}

fn power(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
}

/// Scale the noise so that 10*log10(P_clean / P_noise) = snr_db, add, and
/// clip to [-1, 1]. Returns the mixture and the fraction of clipped samples.
pub fn mix_at_snr(clean: &Waveform, noise: &[f64], snr_db: f64) -> Result<(Waveform, f64)> {
    if noise.len() != clean.samples.len() {
        return Err(Error::Data(format!(
            "length mismatch: clean {} vs noise {}",
            clean.samples.len(),
            noise.len()
        )));
    }
    let p_clean = power(&clean.samples);
    if p_clean == 0.0 {
        return Err(Error::Data("clean signal has zero energy".into()));
    }
    let p_noise = power(noise);
    if p_noise == 0.0 {
        return Err(Error::Data("noise signal has zero energy".into()));
    }
    let target_noise_power = p_clean / libm::pow(10.0, snr_db / 10.0);
    let k = libm::sqrt(target_noise_power / p_noise);
    let mut clipped = 0usize;
    let samples: Vec<f64> = clean
        .samples
        .iter()
        .zip(noise)
        .map(|(c, n)| {
            let v = c + k * n;
            if v.abs() > 1.0 {
                clipped += 1;
                v.clamp(-1.0, 1.0)
            } else {
                v
            }
        })
        .collect();
    let clip_fraction = clipped as f64 / samples.len() as f64;
    Ok((
        Waveform {
            samples,
            sample_rate: clean.sample_rate,
        },
        clip_fraction,
    ))
}
