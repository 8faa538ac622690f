//! Active-speech-level measurement and SNR-controlled mixture construction.
//!
//! The speech level follows the ITU-T P.56 method-B recipe in a simplified
//! form: the rectified signal is smoothed by two cascaded first-order
//! filters with a 30 ms time constant, activity is counted against a ladder
//! of thresholds (0.79 dB apart) with a 200 ms hangover, and the active level
//! is read off where the gap between the per-threshold level estimate and the
//! threshold crosses the 15.9 dB margin. Bit-exactness with the ITU reference
//! tool is not claimed; noise levels use plain long-term RMS.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dsp::{TimeSignal, SAMPLE_RATE};
use crate::error::{Error, Result};

/// Envelope smoothing time constant in seconds.
const SMOOTH_TC: f64 = 0.03;
/// Hangover in seconds.
const HANGOVER: f64 = 0.2;
/// Margin between active level and threshold at the selection point, dB.
const MARGIN_DB: f64 = 15.9;
/// Threshold ladder spacing in dB.
const LADDER_STEP_DB: f64 = 0.79;
/// Ladder extent above/below the long-term RMS level, dB.
const LADDER_ABOVE_DB: f64 = 20.0;
const LADDER_BELOW_DB: f64 = 60.0;

/// The SNR grid the basic module is trained on.
pub const TRAINING_SNRS_DB: [f64; 6] = [-5.0, 0.0, 5.0, 10.0, 15.0, 20.0];
/// Per-stage SNR improvement designed into the noisy targets.
pub const TARGET_DELTA_DB: f64 = 5.0;

/// A speech/noise pair with the SNR it should be mixed at.
#[derive(Debug, Clone)]
pub struct MixtureSpec<'a> {
    pub speech: &'a TimeSignal,
    pub noise: &'a TimeSignal,
    pub input_snr_db: f64,
    /// SNR gain of the enhanced target relative to the mixture.
    pub target_gain_db: f64,
}

/// 10*log10 with a -400 dB floor for silence.
pub fn db_from_power(p: f64) -> f64 {
    if p <= 1e-40 {
        -400.0
    } else {
        10.0 * p.log10()
    }
}

/// Long-term RMS level of a signal in dB relative to full scale.
pub fn rms_level_db(signal: &TimeSignal) -> f64 {
    db_from_power(signal.energy() / signal.len().max(1) as f64)
}

/// Active speech level in dB relative to full scale (P.56 method-B style).
///
/// Errors with [`Error::NoActiveSpeech`] on an all-zero signal.
pub fn active_speech_level(signal: &TimeSignal) -> Result<f64> {
    let n = signal.len();
    let sq = signal.energy();
    if n == 0 || sq <= 0.0 {
        return Err(Error::NoActiveSpeech);
    }
    let rms_db = db_from_power(sq / n as f64);

    // Threshold ladder anchored at the long-term RMS level so the measure is
    // exactly scale-equivariant.
    let num_thresholds =
        ((LADDER_ABOVE_DB + LADDER_BELOW_DB) / LADDER_STEP_DB).ceil() as usize + 1;
    let threshold_db: Vec<f64> = (0..num_thresholds)
        .map(|j| rms_db + LADDER_ABOVE_DB - j as f64 * LADDER_STEP_DB)
        .collect();
    let threshold_lin: Vec<f64> =
        threshold_db.iter().map(|db| 10f64.powf(db / 20.0)).collect();

    let g = (-1.0 / (SAMPLE_RATE as f64 * SMOOTH_TC)).exp();
    let hang = (HANGOVER * SAMPLE_RATE as f64).round() as u32;
    let mut p = 0.0;
    let mut q = 0.0;
    let mut active = vec![0u64; num_thresholds];
    let mut hangover = vec![hang; num_thresholds];
    for &s in signal.samples() {
        p = g * p + (1.0 - g) * s.abs();
        q = g * q + (1.0 - g) * p;
        for j in 0..num_thresholds {
            if q >= threshold_lin[j] {
                active[j] += 1;
                hangover[j] = 0;
            } else if hangover[j] < hang {
                active[j] += 1;
                hangover[j] += 1;
            }
        }
    }

    // Scan from the highest threshold down; the gap between the level
    // estimate over active samples and the threshold grows monotonically.
    // Interpolate at the margin crossing.
    let mut prev: Option<(f64, f64)> = None; // (level_db, gap_db)
    for j in 0..num_thresholds {
        if active[j] == 0 {
            continue;
        }
        let level_db = db_from_power(sq / active[j] as f64);
        let gap = level_db - threshold_db[j];
        if gap >= MARGIN_DB {
            return Ok(match prev {
                Some((prev_level, prev_gap)) if gap > prev_gap => {
                    let t = (MARGIN_DB - prev_gap) / (gap - prev_gap);
                    prev_level + t * (level_db - prev_level)
                }
                _ => level_db,
            });
        }
        prev = Some((level_db, gap));
    }
    // The margin was never reached (degenerate, e.g. extremely short input):
    // fall back to the level estimate at the lowest threshold.
    let last = active.iter().rposition(|a| *a > 0).unwrap();
    Ok(db_from_power(sq / active[last] as f64))
}

/// Scales the noise so the mixture hits the requested SNR and returns
/// `(speech + scaled_noise, scaled_noise)`.
///
/// SNR is defined as active speech level minus long-term noise RMS level.
/// The noise must be at least as long as the speech; excess is trimmed.
pub fn mix_at_snr(spec: &MixtureSpec) -> Result<(TimeSignal, TimeSignal)> {
    if spec.noise.len() < spec.speech.len() {
        return Err(Error::LengthMismatch(format!(
            "noise ({} samples) shorter than speech ({} samples)",
            spec.noise.len(),
            spec.speech.len()
        )));
    }
    let noise = TimeSignal::from_samples(spec.noise.samples()[..spec.speech.len()].to_vec());
    let speech_level = active_speech_level(spec.speech)?;
    let noise_level = rms_level_db(&noise);
    if noise.energy() <= 0.0 {
        return Err(Error::SilentNoise);
    }
    let gain_db = speech_level - noise_level - spec.input_snr_db;
    let scaled = noise.scaled(10f64.powf(gain_db / 20.0));
    let mixture = spec.speech.add(&scaled)?;
    Ok((mixture, scaled))
}

/// Builds the enhanced target: the same noise realization attenuated so the
/// target SNR sits `delta_db` above the mixture SNR.
pub fn make_noisy_target(
    speech: &TimeSignal,
    scaled_noise: &TimeSignal,
    delta_db: f64,
) -> Result<TimeSignal> {
    if speech.len() != scaled_noise.len() {
        return Err(Error::LengthMismatch(format!(
            "speech has {} samples, scaled noise {}",
            speech.len(),
            scaled_noise.len()
        )));
    }
    speech.add(&scaled_noise.scaled(10f64.powf(-delta_db / 20.0)))
}

/// Cuts a speech-length noise segment starting at `offset_seconds`.
///
/// A negative offset asks for a seeded pseudo-random offset; noise shorter
/// than the requested segment is an error (no looping).
pub fn crop_noise(
    noise: &TimeSignal,
    offset_seconds: f64,
    len: usize,
    seed: u64,
) -> Result<TimeSignal> {
    if noise.len() < len {
        return Err(Error::LengthMismatch(format!(
            "noise ({} samples) shorter than requested segment ({len} samples)",
            noise.len()
        )));
    }
    let max_start = noise.len() - len;
    let start = if offset_seconds < 0.0 {
        if max_start == 0 {
            0
        } else {
            ChaCha8Rng::seed_from_u64(seed).gen_range(0..=max_start)
        }
    } else {
        let s = (offset_seconds * SAMPLE_RATE as f64).round() as usize;
        if s > max_start {
            return Err(Error::LengthMismatch(format!(
                "noise offset {offset_seconds} s leaves fewer than {len} samples"
            )));
        }
        s
    };
    Ok(TimeSignal::from_samples(noise.samples()[start..start + len].to_vec()))
}
