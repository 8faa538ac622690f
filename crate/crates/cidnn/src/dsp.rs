//! Framing, windowing, forward/inverse DFT and overlap-add reconstruction.
//!
//! Everything in the frequency domain works on half-spectra of a 256-point
//! DFT (bins 0..=128) over frames of 256 samples advanced by 128, windowed
//! with a periodic Hann window. That window sums to exactly one at 50%
//! overlap, so analysis-only windowing followed by plain overlap-add
//! reconstructs the interior of the signal.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Samples per analysis frame (also the DFT size).
pub const FRAME_LEN: usize = 256;
/// Frame advance in samples (50% overlap).
pub const FRAME_SHIFT: usize = 128;
/// Number of unique bins of a real 256-point DFT.
pub const NUM_BINS: usize = FRAME_LEN / 2 + 1;
/// The only sample rate this toolkit operates at.
pub const SAMPLE_RATE: u32 = 16_000;

/// A mono waveform at 16 kHz, samples nominally in [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSignal {
    samples: Vec<f64>,
}

impl TimeSignal {
    /// Wraps raw samples, rejecting non-finite values.
    pub fn new(samples: Vec<f64>) -> Result<Self> {
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::NonFinite(format!("sample {i} of time signal")));
        }
        Ok(TimeSignal { samples })
    }

    /// Wraps samples that are known to be finite (e.g. arithmetic on
    /// already-validated signals).
    pub fn from_samples(samples: Vec<f64>) -> Self {
        debug_assert!(samples.iter().all(|s| s.is_finite()));
        TimeSignal { samples }
    }

    pub fn zeros(len: usize) -> Self {
        TimeSignal { samples: vec![0.0; len] }
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample_rate(&self) -> u32 {
        SAMPLE_RATE
    }

    /// Root mean square over the whole signal.
    pub fn rms(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        (self.energy() / self.samples.len() as f64).sqrt()
    }

    /// Sum of squared samples.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s * s).sum()
    }

    /// Returns `self + other`, sample by sample.
    pub fn add(&self, other: &TimeSignal) -> Result<TimeSignal> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch(format!(
                "cannot add signals of {} and {} samples",
                self.len(),
                other.len()
            )));
        }
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a + b)
            .collect();
        Ok(TimeSignal { samples })
    }

    /// Returns `gain * self`.
    pub fn scaled(&self, gain: f64) -> TimeSignal {
        TimeSignal { samples: self.samples.iter().map(|s| s * gain).collect() }
    }
}

/// One half-spectrum frame: bins 0..=128 of a 256-point DFT.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFrame {
    pub bins: [Complex64; NUM_BINS],
}

impl SpectralFrame {
    pub fn zero() -> Self {
        SpectralFrame { bins: [Complex64::new(0.0, 0.0); NUM_BINS] }
    }

    /// Per-bin magnitudes.
    pub fn magnitudes(&self) -> [f64; NUM_BINS] {
        let mut m = [0.0; NUM_BINS];
        for (dst, bin) in m.iter_mut().zip(self.bins.iter()) {
            *dst = bin.norm();
        }
        m
    }

    /// Per-bin power (squared magnitude).
    pub fn powers(&self) -> [f64; NUM_BINS] {
        let mut p = [0.0; NUM_BINS];
        for (dst, bin) in p.iter_mut().zip(self.bins.iter()) {
            *dst = bin.norm_sqr();
        }
        p
    }
}

/// A sequence of half-spectrum frames with the fixed 256/128 framing.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub frames: Vec<SpectralFrame>,
}

impl Spectrogram {
    pub fn num_frames(&self) -> usize {
        self.frames.len()
    }

    /// Magnitudes of every frame, row per frame.
    pub fn magnitudes(&self) -> Vec<[f64; NUM_BINS]> {
        self.frames.iter().map(|f| f.magnitudes()).collect()
    }
}

/// The periodic Hann window `w(n) = 0.5 - 0.5 cos(2 pi n / 256)`.
pub fn hann_window() -> [f64; FRAME_LEN] {
    let mut w = [0.0; FRAME_LEN];
    for (n, v) in w.iter_mut().enumerate() {
        *v = 0.5 - 0.5 * (2.0 * std::f64::consts::PI * n as f64 / FRAME_LEN as f64).cos();
    }
    w
}

fn fft_pair() -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    let mut planner = FftPlanner::new();
    let forward = planner.plan_fft_forward(FRAME_LEN);
    let inverse = planner.plan_fft_inverse(FRAME_LEN);
    (forward, inverse)
}

/// Number of complete frames covering a signal of `len` samples.
pub fn num_frames(len: usize) -> usize {
    if len < FRAME_LEN {
        0
    } else {
        (len - FRAME_LEN) / FRAME_SHIFT + 1
    }
}

/// Windows, transforms and stacks every complete frame of `signal`.
///
/// Frame `l` covers samples `[l*128, l*128 + 256)`; trailing samples that do
/// not fill a frame are dropped.
pub fn analyze(signal: &TimeSignal) -> Result<Spectrogram> {
    if signal.len() < FRAME_LEN {
        return Err(Error::SignalTooShort(format!(
            "analyze needs at least {FRAME_LEN} samples, got {}",
            signal.len()
        )));
    }
    let window = hann_window();
    let (forward, _) = fft_pair();
    let count = num_frames(signal.len());
    let mut frames = Vec::with_capacity(count);
    let mut buf = vec![Complex64::new(0.0, 0.0); FRAME_LEN];
    for l in 0..count {
        let start = l * FRAME_SHIFT;
        for (n, b) in buf.iter_mut().enumerate() {
            *b = Complex64::new(signal.samples[start + n] * window[n], 0.0);
        }
        forward.process(&mut buf);
        let mut frame = SpectralFrame::zero();
        frame.bins.copy_from_slice(&buf[..NUM_BINS]);
        // Real input: bins 0 and 128 are real up to rounding noise.
        frame.bins[0].im = 0.0;
        frame.bins[NUM_BINS - 1].im = 0.0;
        frames.push(frame);
    }
    Ok(Spectrogram { frames })
}

/// Inverse transform plus overlap-add.
///
/// Each half-spectrum is mirrored to a conjugate-symmetric full spectrum,
/// inverse-transformed and added at its frame offset. No synthesis window is
/// applied; the first and last 128 samples fall outside the constant
/// overlap-add region and are returned as-is.
pub fn synthesize(spec: &Spectrogram) -> Result<TimeSignal> {
    if spec.frames.is_empty() {
        return Err(Error::SignalTooShort("cannot synthesize an empty spectrogram".into()));
    }
    let (_, inverse) = fft_pair();
    let out_len = (spec.frames.len() - 1) * FRAME_SHIFT + FRAME_LEN;
    let mut out = vec![0.0; out_len];
    let mut buf = vec![Complex64::new(0.0, 0.0); FRAME_LEN];
    let scale = 1.0 / FRAME_LEN as f64;
    for (l, frame) in spec.frames.iter().enumerate() {
        buf[..NUM_BINS].copy_from_slice(&frame.bins);
        for k in NUM_BINS..FRAME_LEN {
            buf[k] = frame.bins[FRAME_LEN - k].conj();
        }
        inverse.process(&mut buf);
        let start = l * FRAME_SHIFT;
        for (n, b) in buf.iter().enumerate() {
            out[start + n] += b.re * scale;
        }
    }
    Ok(TimeSignal::from_samples(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_signal(len: usize, seed: u64) -> TimeSignal {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        TimeSignal::from_samples((0..len).map(|_| rng.gen_range(-1.0..1.0)).collect())
    }

    /// Direct O(K^2) DFT of one windowed frame, the oracle for `analyze`.
    fn naive_dft_frame(samples: &[f64]) -> Vec<Complex64> {
        let window = hann_window();
        let k_len = FRAME_LEN as f64;
        (0..NUM_BINS)
            .map(|k| {
                let mut acc = Complex64::new(0.0, 0.0);
                for (n, s) in samples.iter().enumerate() {
                    let phase = -2.0 * std::f64::consts::PI * k as f64 * n as f64 / k_len;
                    acc += window[n] * s * Complex64::new(phase.cos(), phase.sin());
                }
                acc
            })
            .collect()
    }

    #[test]
    fn zero_signal_gives_zero_frames() {
        let spec = analyze(&TimeSignal::zeros(512)).unwrap();
        assert_eq!(spec.num_frames(), 3);
        for frame in &spec.frames {
            for bin in frame.bins.iter() {
                assert_eq!(*bin, Complex64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn cosine_at_bin_16_concentrates_there() {
        // 1 kHz at 16 kHz sampling is exactly bin 16 of a 256-point DFT.
        let f = 16.0 / FRAME_LEN as f64;
        let samples: Vec<f64> =
            (0..2048).map(|n| (2.0 * std::f64::consts::PI * f * n as f64).cos()).collect();
        let spec = analyze(&TimeSignal::from_samples(samples)).unwrap();
        for frame in &spec.frames[1..spec.num_frames() - 1] {
            let mags = frame.magnitudes();
            let peak = mags
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap()
                .0;
            assert_eq!(peak, 16);
            // The Hann mainlobe spans bins 15..=17; everything else is far down.
            let off: f64 = mags
                .iter()
                .enumerate()
                .filter(|(k, _)| *k + 2 < 16 || *k > 18)
                .map(|(_, m)| *m)
                .fold(0.0, f64::max);
            assert!(off < mags[16] * 1e-10, "sidelobe energy {off} vs peak {}", mags[16]);
        }
    }

    #[test]
    fn analyze_matches_naive_dft() {
        let signal = random_signal(1024, 7);
        let spec = analyze(&signal).unwrap();
        for (l, frame) in spec.frames.iter().enumerate() {
            let start = l * FRAME_SHIFT;
            let oracle = naive_dft_frame(&signal.samples()[start..start + FRAME_LEN]);
            for (a, b) in frame.bins.iter().zip(&oracle) {
                let scale = b.norm().max(1.0);
                assert!((a - b).norm() / scale < 1e-9, "frame {l}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn too_short_is_an_error() {
        let err = analyze(&TimeSignal::zeros(255)).unwrap_err();
        assert!(err.to_string().contains("too short"));
    }

    #[test]
    fn empty_spectrogram_is_an_error() {
        assert!(synthesize(&Spectrogram { frames: vec![] }).is_err());
    }

    #[test]
    fn round_trip_restores_interior() {
        for seed in 0..5 {
            let signal = random_signal(4000, seed);
            let rec = synthesize(&analyze(&signal).unwrap()).unwrap();
            let lo = FRAME_SHIFT;
            let hi = rec.len() - FRAME_SHIFT;
            let mut err = 0.0f64;
            let mut norm = 0.0f64;
            for n in lo..hi {
                let d = rec.samples()[n] - signal.samples()[n];
                err += d * d;
                norm += signal.samples()[n] * signal.samples()[n];
            }
            assert!((err / norm).sqrt() < 1e-10, "relative L2 {}", (err / norm).sqrt());
        }
    }

    #[test]
    fn all_zero_spectrogram_synthesizes_silence() {
        let spec = Spectrogram { frames: vec![SpectralFrame::zero(); 4] };
        let out = synthesize(&spec).unwrap();
        assert_eq!(out.len(), 3 * FRAME_SHIFT + FRAME_LEN);
        assert!(out.samples().iter().all(|s| *s == 0.0));
    }

    #[test]
    fn analyze_synthesize_idempotent_on_interior_frames() {
        // Random symmetric-valid spectrogram -> signal -> spectrogram: the
        // interior frames of the second analysis must reproduce the first.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut frames = Vec::new();
        for _ in 0..8 {
            let mut f = SpectralFrame::zero();
            for k in 0..NUM_BINS {
                let im = if k == 0 || k == NUM_BINS - 1 { 0.0 } else { rng.gen_range(-1.0..1.0) };
                f.bins[k] = Complex64::new(rng.gen_range(-1.0..1.0), im);
            }
            frames.push(f);
        }
        let spec = Spectrogram { frames };
        let signal = synthesize(&spec).unwrap();
        let spec2 = analyze(&signal).unwrap();
        let signal2 = synthesize(&spec2).unwrap();
        assert_eq!(signal.len(), signal2.len());
        let lo = FRAME_SHIFT;
        let hi = signal.len() - FRAME_SHIFT;
        let mut err = 0.0f64;
        let mut norm = 0.0f64;
        for n in lo..hi {
            let d = signal2.samples()[n] - signal.samples()[n];
            err += d * d;
            norm += signal.samples()[n] * signal.samples()[n];
        }
        assert!((err / norm).sqrt() < 1e-9);
    }

    #[test]
    fn parseval_holds_per_frame() {
        let signal = random_signal(1024, 3);
        let window = hann_window();
        let spec = analyze(&signal).unwrap();
        for (l, frame) in spec.frames.iter().enumerate() {
            let start = l * FRAME_SHIFT;
            let time_energy: f64 = (0..FRAME_LEN)
                .map(|n| {
                    let v = signal.samples()[start + n] * window[n];
                    v * v
                })
                .sum();
            let mut freq_energy = frame.bins[0].norm_sqr() + frame.bins[NUM_BINS - 1].norm_sqr();
            for bin in &frame.bins[1..NUM_BINS - 1] {
                freq_energy += 2.0 * bin.norm_sqr();
            }
            freq_energy /= FRAME_LEN as f64;
            assert!(
                (time_energy - freq_energy).abs() / time_energy < 1e-9,
                "frame {l}: {time_energy} vs {freq_energy}"
            );
        }
    }
}
