//! Deterministic synthetic test signals: harmonic-plus-formant "speech" and
//! three noise flavours (white, babble surrogate, lowpass rumble).
//!
//! These are not meant to sound natural; they reproduce the statistics that
//! matter for this toolkit — harmonic structure under slowly moving
//! resonances, syllabic on/off envelopes, and noise with contrasting
//! spectral shapes — while staying fully seeded.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::dsp::{TimeSignal, SAMPLE_RATE};

/// Two-pole resonator with unit peak-ish gain, direct form II.
struct Resonator {
    b0: f64,
    a1: f64,
    a2: f64,
    z1: f64,
    z2: f64,
}

impl Resonator {
    fn new(freq_hz: f64, bandwidth_hz: f64) -> Self {
        let fs = SAMPLE_RATE as f64;
        let r = (-std::f64::consts::PI * bandwidth_hz / fs).exp();
        let theta = 2.0 * std::f64::consts::PI * freq_hz / fs;
        Resonator {
            b0: (1.0 - r) * (1.0 - r * (2.0 * theta).cos()).sqrt().max(0.05),
            a1: -2.0 * r * theta.cos(),
            a2: r * r,
            z1: 0.0,
            z2: 0.0,
        }
    }

    fn retune(&mut self, freq_hz: f64, bandwidth_hz: f64) {
        let fresh = Resonator::new(freq_hz, bandwidth_hz);
        self.b0 = fresh.b0;
        self.a1 = fresh.a1;
        self.a2 = fresh.a2;
    }

    fn process(&mut self, x: f64) -> f64 {
        let w = x * self.b0 - self.a1 * self.z1 - self.a2 * self.z2;
        self.z2 = self.z1;
        self.z1 = w;
        w
    }
}

fn normalize_peak(samples: &mut [f64], peak: f64) {
    let max = samples.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    if max > 0.0 {
        let g = peak / max;
        for s in samples.iter_mut() {
            *s *= g;
        }
    }
}

fn normalize_rms(samples: &mut [f64], rms: f64) {
    let cur = (samples.iter().map(|s| s * s).sum::<f64>() / samples.len() as f64).sqrt();
    if cur > 0.0 {
        let g = rms / cur;
        for s in samples.iter_mut() {
            *s *= g;
        }
    }
}

fn speech_like_with_activity(duration_s: f64, seed: u64, activity: f64) -> TimeSignal {
    let fs = SAMPLE_RATE as f64;
    let n = (duration_s * fs).round() as usize;
    let mut rng = ChaCha20Rng::seed_from_u64(seed ^ 0x5bee_c400);
    let base_f0 = rng.gen_range(95.0..220.0);

    let mut out = vec![0.0; n];
    let mut formants = [
        Resonator::new(500.0, 80.0),
        Resonator::new(1500.0, 120.0),
        Resonator::new(2700.0, 180.0),
    ];
    let mut fricative = Resonator::new(4200.0, 900.0);
    let mut glottal_lp = 0.0; // one-pole pulse shaping state

    let ramp = (0.02 * fs) as usize;
    let mut pos = 0usize;
    let mut phase = 0.0f64;
    while pos < n {
        let voiced = rng.gen::<f64>() > 0.18;
        let syllable = rng.gen_range((0.12 * fs) as usize..(0.40 * fs) as usize);
        let gap_scale = (1.0 - activity).max(0.0) / activity.max(0.05);
        let gap = (syllable as f64 * gap_scale * rng.gen_range(0.5..1.5)) as usize;
        let f0_start = base_f0 * rng.gen_range(0.85..1.2);
        let f0_end = base_f0 * rng.gen_range(0.85..1.2);
        let amp = rng.gen_range(0.5..1.0);
        let targets = [
            rng.gen_range(320.0..850.0),
            rng.gen_range(950.0..2300.0),
            rng.gen_range(2400.0..3200.0),
        ];
        let bandwidths = [rng.gen_range(60.0..110.0), rng.gen_range(90.0..160.0), 180.0];
        for (f, (&freq, &bw)) in formants.iter_mut().zip(targets.iter().zip(&bandwidths)) {
            f.retune(freq, bw);
        }

        let len = syllable.min(n - pos);
        for i in 0..len {
            let t = i as f64 / syllable as f64;
            let f0 = f0_start + (f0_end - f0_start) * t;
            let env = if i < ramp {
                0.5 - 0.5 * (std::f64::consts::PI * i as f64 / ramp as f64).cos()
            } else if i + ramp > syllable {
                0.5 - 0.5 * (std::f64::consts::PI * (syllable - i) as f64 / ramp as f64).cos()
            } else {
                1.0
            };
            let sample = if voiced {
                // Impulse train shaped by a leaky integrator, then formants.
                phase += f0 / fs;
                let pulse = if phase >= 1.0 {
                    phase -= 1.0;
                    1.0
                } else {
                    0.0
                };
                glottal_lp = 0.9 * glottal_lp + pulse;
                let jitter = 1.0 + 0.02 * rng.gen_range(-1.0..1.0);
                let mut v = 0.0;
                for f in formants.iter_mut() {
                    v += f.process(glottal_lp * jitter);
                }
                v
            } else {
                fricative.process(rng.gen_range(-1.0..1.0)) * 0.4
            };
            out[pos + i] = amp * env * sample;
        }
        pos += len + gap;
    }
    normalize_peak(&mut out, 0.25);
    TimeSignal::from_samples(out)
}

/// A seeded speech-like utterance: voiced syllables with moving formants,
/// occasional fricative bursts, and pauses (roughly 65% activity).
pub fn speech_like(duration_s: f64, seed: u64) -> TimeSignal {
    speech_like_with_activity(duration_s, seed, 0.65)
}

/// Stationary white Gaussian noise at RMS 0.1.
pub fn white_noise(duration_s: f64, seed: u64) -> TimeSignal {
    let n = (duration_s * SAMPLE_RATE as f64).round() as usize;
    let mut rng = ChaCha20Rng::seed_from_u64(seed ^ 0x0f_f5e7);
    let mut out = vec![0.0; n];
    for s in out.iter_mut() {
        // Box-Muller
        let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
        let u2: f64 = rng.gen_range(0.0..1.0);
        *s = (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
    }
    normalize_rms(&mut out, 0.1);
    TimeSignal::from_samples(out)
}

/// Babble surrogate: six dense speech-like streams summed.
pub fn babble_noise(duration_s: f64, seed: u64) -> TimeSignal {
    let n = (duration_s * SAMPLE_RATE as f64).round() as usize;
    let mut out = vec![0.0; n];
    for speaker in 0..6u64 {
        let s = speech_like_with_activity(duration_s, seed ^ (0xbabb_1e00 + speaker), 0.92);
        for (o, v) in out.iter_mut().zip(s.samples()) {
            *o += v;
        }
    }
    normalize_rms(&mut out, 0.1);
    TimeSignal::from_samples(out)
}

/// Lowpass rumble: white noise through two one-pole filters at ~400 Hz.
pub fn lowpass_noise(duration_s: f64, seed: u64) -> TimeSignal {
    let white = white_noise(duration_s, seed ^ 0x10_3a55);
    let fs = SAMPLE_RATE as f64;
    let a = (-2.0 * std::f64::consts::PI * 400.0 / fs).exp();
    let mut out = Vec::with_capacity(white.len());
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    for &x in white.samples() {
        s1 = a * s1 + (1.0 - a) * x;
        s2 = a * s2 + (1.0 - a) * s1;
        out.push(s2);
    }
    normalize_rms(&mut out, 0.1);
    TimeSignal::from_samples(out)
}
