//! Short-time objective intelligibility (Taal et al. 2010 procedure).
//!
//! Both signals are resampled to 10 kHz and decomposed into 256-sample
//! Hann-windowed frames (50% overlap, 512-point FFT) grouped into 15
//! one-third-octave bands starting at 150 Hz. Frames more than 40 dB below
//! the loudest clean frame are dropped. Band envelopes are compared over
//! 384 ms segments (30 frames): the degraded envelope is normalized to the
//! clean one, clipped at -15 dB SDR, and scored by linear correlation.
//! The final score averages the correlations over all bands and segments.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::dsp::TimeSignal;
use crate::error::{Error, Result};

use super::resample::resample_16k_to_10k;

const FRAME: usize = 256;
const HOP: usize = 128;
const FFT_LEN: usize = 512;
const NUM_BANDS: usize = 15;
const LOWEST_CENTER_HZ: f64 = 150.0;
const SEGMENT_FRAMES: usize = 30;
const DYN_RANGE_DB: f64 = 40.0;
const BETA_DB: f64 = -15.0;
const RESAMPLED_RATE: f64 = 10_000.0;

/// FFT-bin membership of each one-third-octave band.
fn band_bins() -> [(usize, usize); NUM_BANDS] {
    let mut bands = [(0usize, 0usize); NUM_BANDS];
    let bin_hz = RESAMPLED_RATE / FFT_LEN as f64;
    for (j, band) in bands.iter_mut().enumerate() {
        let center = LOWEST_CENTER_HZ * 2f64.powf(j as f64 / 3.0);
        let lo = center / 2f64.powf(1.0 / 6.0);
        let hi = center * 2f64.powf(1.0 / 6.0);
        let k_lo = (lo / bin_hz).ceil() as usize;
        let k_hi = ((hi / bin_hz).ceil() as usize).min(FFT_LEN / 2 + 1);
        *band = (k_lo, k_hi.max(k_lo + 1));
    }
    bands
}

/// Hann-windowed band envelopes, one row per frame.
fn band_envelopes(samples: &[f64], keep: Option<&[bool]>) -> Vec<[f64; NUM_BANDS]> {
    let window: Vec<f64> = (0..FRAME)
        .map(|n| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * (n + 1) as f64 / (FRAME + 1) as f64).cos())
        .collect();
    let bands = band_bins();
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(FFT_LEN);
    let mut out = Vec::new();
    let mut frame_idx = 0usize;
    let mut start = 0usize;
    while start + FRAME <= samples.len() {
        let retain = keep.is_none_or(|k| k[frame_idx]);
        if retain {
            let mut buf = vec![Complex64::new(0.0, 0.0); FFT_LEN];
            for n in 0..FRAME {
                buf[n] = Complex64::new(samples[start + n] * window[n], 0.0);
            }
            fft.process(&mut buf);
            let mut row = [0.0; NUM_BANDS];
            for (j, &(lo, hi)) in bands.iter().enumerate() {
                let energy: f64 = buf[lo..hi].iter().map(|c| c.norm_sqr()).sum();
                row[j] = energy.sqrt();
            }
            out.push(row);
        }
        frame_idx += 1;
        start += HOP;
    }
    out
}

/// Frame energies of the windowed clean signal, for silent-frame removal.
fn frame_energies(samples: &[f64]) -> Vec<f64> {
    let window: Vec<f64> = (0..FRAME)
        .map(|n| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * (n + 1) as f64 / (FRAME + 1) as f64).cos())
        .collect();
    let mut out = Vec::new();
    let mut start = 0usize;
    while start + FRAME <= samples.len() {
        let e: f64 = (0..FRAME).map(|n| {
            let v = samples[start + n] * window[n];
            v * v
        }).sum();
        out.push(e);
        start += HOP;
    }
    out
}

/// Short-time objective intelligibility of `degraded` against `clean`,
/// in [-1, 1] (practically [0, 1]).
pub fn stoi(clean: &TimeSignal, degraded: &TimeSignal) -> Result<f64> {
    if clean.len() != degraded.len() {
        return Err(Error::LengthMismatch(format!(
            "clean has {} samples, degraded {}",
            clean.len(),
            degraded.len()
        )));
    }
    let x = resample_16k_to_10k(clean);
    let y = resample_16k_to_10k(degraded);

    let energies = frame_energies(&x);
    if energies.is_empty() {
        return Err(Error::SignalTooShort("no complete frames for intelligibility".into()));
    }
    let peak = energies.iter().cloned().fold(0.0, f64::max);
    if peak <= 0.0 {
        return Err(Error::NoActiveSpeech);
    }
    let floor = peak * 10f64.powf(-DYN_RANGE_DB / 10.0);
    let keep: Vec<bool> = energies.iter().map(|e| *e > floor).collect();

    let x_env = band_envelopes(&x, Some(&keep));
    let y_env = band_envelopes(&y, Some(&keep));
    if x_env.len() < SEGMENT_FRAMES {
        return Err(Error::SignalTooShort(format!(
            "only {} active frames, need at least {SEGMENT_FRAMES} for intelligibility",
            x_env.len()
        )));
    }

    let clip = 1.0 + 10f64.powf(-BETA_DB / 20.0);
    let mut total = 0.0;
    let mut count = 0usize;
    for m in SEGMENT_FRAMES..=x_env.len() {
        let seg = m - SEGMENT_FRAMES..m;
        for j in 0..NUM_BANDS {
            let xs: Vec<f64> = x_env[seg.clone()].iter().map(|r| r[j]).collect();
            let ys: Vec<f64> = y_env[seg.clone()].iter().map(|r| r[j]).collect();
            let x_norm = xs.iter().map(|v| v * v).sum::<f64>().sqrt();
            let y_norm = ys.iter().map(|v| v * v).sum::<f64>().sqrt();
            let alpha = if y_norm > 0.0 { x_norm / y_norm } else { 0.0 };
            let clipped: Vec<f64> =
                ys.iter().zip(&xs).map(|(y, x)| (y * alpha).min(x * clip)).collect();

            let n = SEGMENT_FRAMES as f64;
            let x_mean = xs.iter().sum::<f64>() / n;
            let y_mean = clipped.iter().sum::<f64>() / n;
            let mut num = 0.0;
            let mut xd = 0.0;
            let mut yd = 0.0;
            for (x, y) in xs.iter().zip(&clipped) {
                num += (x - x_mean) * (y - y_mean);
                xd += (x - x_mean) * (x - x_mean);
                yd += (y - y_mean) * (y - y_mean);
            }
            let denom = (xd * yd).sqrt();
            if denom > 0.0 {
                total += num / denom;
                count += 1;
            }
        }
    }
    if count == 0 {
        return Err(Error::NoActiveSpeech);
    }
    Ok(total / count as f64)
}
