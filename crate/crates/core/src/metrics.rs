//! Objective enhancement metrics over log-mel feature sequences: frame MSE,
//! segmental SNR and log-spectral distance.

use alloc::format;

use crate::error::{Error, Result};
use crate::losses::mse_seq;
use crate::mat::Mat;

pub const SEGSNR_FLOOR_DB: f64 = -10.0;
pub const SEGSNR_CEIL_DB: f64 = 35.0;

/// dB per natural-log unit of power (10 / ln 10).
const DB_PER_NAT: f64 = 4.342944819032518;

fn check_shapes(a: &Mat, b: &Mat) -> Result<()> {
    if !a.same_shape(b) {
        return Err(Error::Dim(format!(
            "metric shapes {}x{} vs {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    Ok(())
}

/// Mean-over-frames, sum-over-dims squared error.
pub fn frame_mse(enhanced: &Mat, clean: &Mat) -> Result<f64> {
    Ok(mse_seq(enhanced, clean)?.0)
}

/// Per-frame SNR 10*log10(||clean_t||^2 / ||clean_t - enhanced_t||^2),
/// clamped to [-10, +35] dB, averaged over frames.
pub fn segmental_snr(enhanced: &Mat, clean: &Mat) -> Result<f64> {
    check_shapes(enhanced, clean)?;
    let t_len = clean.rows();
    let mut acc = 0.0;
    for t in 0..t_len {
        let mut sig = 0.0;
        let mut err = 0.0;
        for (e, c) in enhanced.row(t).iter().zip(clean.row(t)) {
            sig += c * c;
            let d = c - e;
            err += d * d;
        }
        let snr = if err == 0.0 {
            SEGSNR_CEIL_DB
        } else if sig == 0.0 {
            SEGSNR_FLOOR_DB
        } else {
            (10.0 * libm::log10(sig / err)).clamp(SEGSNR_FLOOR_DB, SEGSNR_CEIL_DB)
        };
        acc += snr;
    }
    Ok(acc / t_len as f64)
}

/// Log-spectral distance in dB: per frame the RMS difference across bands of
/// the (natural-log) spectra converted to dB, averaged over frames.
pub fn log_spectral_distance(enhanced: &Mat, clean: &Mat) -> Result<f64> {
    check_shapes(enhanced, clean)?;
    let (t_len, d) = (clean.rows(), clean.cols());
    let mut acc = 0.0;
    for t in 0..t_len {
        let mut sq = 0.0;
        for (e, c) in enhanced.row(t).iter().zip(clean.row(t)) {
            let diff_db = (e - c) * DB_PER_NAT;
            sq += diff_db * diff_db;
        }
        acc += libm::sqrt(sq / d as f64);
    }
    Ok(acc / t_len as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identical_sequences_are_perfect() {
        let a = Mat::from_fn(6, 4, |t, c| (t * c) as f64 * 0.3 - 1.0);
        assert_eq!(frame_mse(&a, &a).unwrap(), 0.0);
        assert_eq!(segmental_snr(&a, &a).unwrap(), SEGSNR_CEIL_DB);
        assert_eq!(log_spectral_distance(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn lsd_goes_to_zero_with_vanishing_noise() {
        let clean = Mat::from_fn(5, 3, |t, c| (t + c) as f64 * 0.2);
        let mut prev = f64::INFINITY;
        for eps in [1e-1, 1e-3, 1e-5] {
            let noisy = Mat::from_fn(5, 3, |t, c| clean[(t, c)] + eps * ((t * 3 + c) as f64).sin());
            let lsd = log_spectral_distance(&noisy, &clean).unwrap();
            assert!(lsd < prev);
            prev = lsd;
        }
        assert!(prev < 1e-4);
    }

    #[test]
    fn matches_naive_loop_oracles() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let a = Mat::from_fn(9, 5, |_, _| rng.random_range(-3.0..3.0));
        let b = Mat::from_fn(9, 5, |_, _| rng.random_range(-3.0..3.0));

        // frame mse oracle
        let mut mse = 0.0;
        for t in 0..9 {
            for c in 0..5 {
                mse += (a[(t, c)] - b[(t, c)]).powi(2);
            }
        }
        mse /= 9.0;
        assert!((frame_mse(&a, &b).unwrap() - mse).abs() < 1e-9);

        // segmental snr oracle
        let mut seg = 0.0;
        for t in 0..9 {
            let sig: f64 = (0..5).map(|c| b[(t, c)].powi(2)).sum();
            let err: f64 = (0..5).map(|c| (b[(t, c)] - a[(t, c)]).powi(2)).sum();
            seg += (10.0 * (sig / err).log10()).clamp(-10.0, 35.0);
        }
        seg /= 9.0;
        assert!((segmental_snr(&a, &b).unwrap() - seg).abs() < 1e-9);

        // lsd oracle
        let k = 10.0 / 10f64.ln();
        let mut lsd = 0.0;
        for t in 0..9 {
            let sq: f64 = (0..5).map(|c| ((a[(t, c)] - b[(t, c)]) * k).powi(2)).sum();
            lsd += (sq / 5.0).sqrt();
        }
        lsd /= 9.0;
        assert!((log_spectral_distance(&a, &b).unwrap() - lsd).abs() < 1e-9);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let a = Mat::zeros(3, 4);
        let b = Mat::zeros(3, 5);
        assert!(segmental_snr(&a, &b).is_err());
        assert!(log_spectral_distance(&a, &b).is_err());
    }
}
