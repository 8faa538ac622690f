//! Objective evaluation: filtered speech/noise components, SNR improvement,
//! segmental speech-to-speech-distortion ratio, weighted log-average
//! kurtosis ratio and short-time objective intelligibility.
//!
//! All component-based measures score the *filtered* components: the total
//! mask of the system under test is applied separately to the clean speech
//! and the noise, so quality can be attributed per component. ΔSNR compares
//! active-speech level against long-term noise RMS, exactly like the mixing
//! stage. SSDR and WLAKR use their own 256/128 framing restricted to the
//! interior of the overlap-add reconstruction.

mod evaluate;
mod resample;
mod stoi;

pub use evaluate::{evaluate, EvalOptions, MethodSpec, MetricsReport, ReportRow};
pub use resample::resample_16k_to_10k;
pub use stoi::stoi;

use crate::dsp::{synthesize, Spectrogram, TimeSignal, FRAME_LEN, FRAME_SHIFT};
use crate::error::{Error, Result};
use crate::levels::{active_speech_level, rms_level_db};
use crate::mask::{apply_masks, StageMasks};

/// SSDR per-frame clamp range in dB.
pub const SSDR_MIN_DB: f64 = -10.0;
pub const SSDR_MAX_DB: f64 = 30.0;
/// SSDR time-alignment search range in samples.
pub const SSDR_ALIGN_RANGE: isize = 64;
/// Frames within this many dB of the loudest frame count as speech-active.
pub const SSDR_ACTIVE_RANGE_DB: f64 = 30.0;
/// ΔSNR reported when the filtered noise is silent.
pub const DELTA_SNR_CAP_DB: f64 = 99.0;
/// Variance floor below which WLAKR skips a frame.
pub const WLAKR_EPS: f64 = 1e-12;

/// Filtered clean-speech and noise components of an enhanced mixture.
#[derive(Debug, Clone)]
pub struct ComponentPair {
    pub speech: TimeSignal,
    pub noise: TimeSignal,
}

/// Applies the identical total mask to the clean-speech and noise
/// spectrograms separately and reconstructs both.
pub fn filtered_components(
    total_mask: &StageMasks,
    clean_spec: &Spectrogram,
    noise_spec: &Spectrogram,
) -> Result<ComponentPair> {
    if clean_spec.num_frames() != noise_spec.num_frames() {
        return Err(Error::ShapeMismatch(format!(
            "clean has {} frames, noise {}",
            clean_spec.num_frames(),
            noise_spec.num_frames()
        )));
    }
    let speech = synthesize(&apply_masks(clean_spec, total_mask)?)?;
    let noise = synthesize(&apply_masks(noise_spec, total_mask)?)?;
    Ok(ComponentPair { speech, noise })
}

/// SNR improvement in dB: `(ASL(s~) - RMS(d~)) - (ASL(s) - RMS(d))`.
///
/// A silent filtered noise component caps at [`DELTA_SNR_CAP_DB`].
pub fn delta_snr(
    speech: &TimeSignal,
    noise: &TimeSignal,
    filtered_speech: &TimeSignal,
    filtered_noise: &TimeSignal,
) -> Result<f64> {
    let snr_in = active_speech_level(speech)? - rms_level_db(noise);
    if filtered_noise.energy() <= 0.0 {
        return Ok(DELTA_SNR_CAP_DB);
    }
    let snr_out = active_speech_level(filtered_speech)? - rms_level_db(filtered_noise);
    Ok((snr_out - snr_in).min(DELTA_SNR_CAP_DB))
}

/// Frame start offsets for the frame-based measures: the overlap-add
/// interior, one shift in from each end (leaves alignment slack too).
fn interior_frames(len: usize) -> Vec<usize> {
    let lo = FRAME_SHIFT;
    let hi = len.saturating_sub(FRAME_SHIFT + FRAME_LEN);
    (lo..=hi).step_by(FRAME_SHIFT).collect()
}

/// Segmental speech-to-speech-distortion ratio in dB.
///
/// Frames whose clean energy is within 30 dB of the loudest frame are the
/// active set; each frame's ratio of filtered-speech energy to distortion
/// energy is clamped to [-10, 30] dB and averaged. A single alignment shift
/// in [-64, 64] samples, chosen to maximize that average, is applied to the
/// filtered signal.
pub fn ssdr(speech: &TimeSignal, filtered_speech: &TimeSignal) -> Result<f64> {
    if speech.len() != filtered_speech.len() {
        return Err(Error::LengthMismatch(format!(
            "speech has {} samples, filtered speech {}",
            speech.len(),
            filtered_speech.len()
        )));
    }
    let starts = interior_frames(speech.len());
    let mut frame_energy = Vec::with_capacity(starts.len());
    for &start in &starts {
        let e: f64 = speech.samples()[start..start + FRAME_LEN].iter().map(|s| s * s).sum();
        frame_energy.push(e);
    }
    let peak = frame_energy.iter().cloned().fold(0.0, f64::max);
    let floor = peak * 10f64.powf(-SSDR_ACTIVE_RANGE_DB / 10.0);
    let active: Vec<usize> = (0..starts.len())
        .filter(|&i| frame_energy[i] > floor && frame_energy[i] > 0.0)
        .collect();
    if active.is_empty() {
        return Err(Error::NoActiveFrames);
    }

    let score_at = |delta: isize| -> f64 {
        let mut total = 0.0;
        for &i in &active {
            let start = starts[i];
            let mut sig = 0.0;
            let mut dist = 0.0;
            for n in start..start + FRAME_LEN {
                let shifted = filtered_speech.samples()[(n as isize + delta) as usize];
                sig += shifted * shifted;
                let d = shifted - speech.samples()[n];
                dist += d * d;
            }
            let ratio_db = if dist <= 0.0 {
                SSDR_MAX_DB
            } else if sig <= 0.0 {
                SSDR_MIN_DB
            } else {
                (10.0 * (sig / dist).log10()).clamp(SSDR_MIN_DB, SSDR_MAX_DB)
            };
            total += ratio_db;
        }
        total / active.len() as f64
    };

    let mut best = f64::NEG_INFINITY;
    for delta in -SSDR_ALIGN_RANGE..=SSDR_ALIGN_RANGE {
        let s = score_at(delta);
        if s > best {
            best = s;
        }
    }
    Ok(best)
}

/// Sample kurtosis m4/m2^2 about the mean; `None` when the variance is
/// below [`WLAKR_EPS`].
fn kurtosis(samples: &[f64]) -> Option<f64> {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let mut m2 = 0.0;
    let mut m4 = 0.0;
    for &s in samples {
        let d = s - mean;
        m2 += d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m4 /= n;
    if m2 < WLAKR_EPS {
        None
    } else {
        Some(m4 / (m2 * m2))
    }
}

/// Weighted log-average kurtosis ratio between the original and filtered
/// noise; zero means the noise statistics are untouched. Callers report the
/// absolute value.
pub fn wlakr(noise: &TimeSignal, filtered_noise: &TimeSignal) -> Result<f64> {
    if noise.len() != filtered_noise.len() {
        return Err(Error::LengthMismatch(format!(
            "noise has {} samples, filtered noise {}",
            noise.len(),
            filtered_noise.len()
        )));
    }
    if noise.energy() <= 0.0 {
        return Err(Error::SilentNoise);
    }
    let starts = interior_frames(noise.len());
    let mut total_energy = 0.0;
    let mut scores = Vec::new();
    for &start in &starts {
        let ref_frame = &noise.samples()[start..start + FRAME_LEN];
        let test_frame = &filtered_noise.samples()[start..start + FRAME_LEN];
        let energy: f64 = ref_frame.iter().map(|s| s * s).sum();
        total_energy += energy;
        if let (Some(k_ref), Some(k_test)) = (kurtosis(ref_frame), kurtosis(test_frame)) {
            scores.push((energy, (k_test / k_ref).log10()));
        }
    }
    if total_energy <= 0.0 {
        return Err(Error::SilentNoise);
    }
    Ok(scores.iter().map(|(e, s)| e / total_energy * s).sum())
}
