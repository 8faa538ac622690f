//! Classical spectral-weighting baseline: minimum-statistics noise tracking,
//! decision-directed a priori SNR estimation and the WF/LSA/SG gain rules.
//!
//! The noise tracker is the simplified fixed-smoothing form: the periodogram
//! is smoothed with beta = 0.85 and the noise PSD is 1.5 times the minimum
//! over a sliding window of 8 sub-windows of 12 frames each (96 frames).

use std::collections::VecDeque;

use crate::dsp::{analyze, synthesize, TimeSignal, NUM_BINS, SAMPLE_RATE};
use crate::error::{Error, Result};
use crate::mask::{apply_masks, StageMasks};

/// Power floor for PSD estimates and divisions.
pub const EPS_POWER: f64 = 1e-12;
/// Periodogram smoothing factor.
pub const SMOOTHING_BETA: f64 = 0.85;
/// Bias compensation applied to the tracked minimum.
pub const BIAS_COMP: f64 = 1.5;
/// Frames per minima sub-window.
pub const SUBWINDOW_LEN: usize = 12;
/// Number of sub-windows in the sliding minima window.
pub const NUM_SUBWINDOWS: usize = 8;
/// Decision-directed smoothing factor.
pub const DD_ALPHA: f64 = 0.98;
/// Default a priori SNR floor (power ratio), -15 dB.
pub const XI_MIN_DB: f64 = -15.0;
/// Default gain floor (amplitude), -15 dB.
pub const GAIN_MIN_DB: f64 = -15.0;
/// Super-Gaussian prior shape constants of the joint-MAP amplitude estimator.
pub const SG_MU: f64 = 1.74;
pub const SG_NU: f64 = 0.126;

/// Minimum-statistics noise PSD tracker.
#[derive(Debug, Clone)]
pub struct NoiseTracker {
    smoothed: [f64; NUM_BINS],
    current_min: [f64; NUM_BINS],
    frames_in_subwindow: usize,
    history: VecDeque<[f64; NUM_BINS]>,
    frame_counter: u64,
}

impl Default for NoiseTracker {
    fn default() -> Self {
        Self::new()
    }
}

impl NoiseTracker {
    pub fn new() -> Self {
        NoiseTracker {
            smoothed: [0.0; NUM_BINS],
            current_min: [f64::INFINITY; NUM_BINS],
            frames_in_subwindow: 0,
            history: VecDeque::with_capacity(NUM_SUBWINDOWS),
            frame_counter: 0,
        }
    }

    /// Advances the tracker by one power frame and returns the noise PSD,
    /// floored at [`EPS_POWER`].
    pub fn track(&mut self, power: &[f64; NUM_BINS]) -> [f64; NUM_BINS] {
        for k in 0..NUM_BINS {
            let p = power[k].max(0.0);
            self.smoothed[k] = if self.frame_counter == 0 {
                p
            } else {
                SMOOTHING_BETA * self.smoothed[k] + (1.0 - SMOOTHING_BETA) * p
            };
            self.current_min[k] = self.current_min[k].min(self.smoothed[k]);
        }
        self.frame_counter += 1;
        self.frames_in_subwindow += 1;

        let mut noise = [0.0; NUM_BINS];
        for k in 0..NUM_BINS {
            let mut m = self.current_min[k];
            for sub in &self.history {
                m = m.min(sub[k]);
            }
            noise[k] = (BIAS_COMP * m).max(EPS_POWER);
        }

        if self.frames_in_subwindow == SUBWINDOW_LEN {
            if self.history.len() == NUM_SUBWINDOWS {
                self.history.pop_front();
            }
            self.history.push_back(self.current_min);
            self.current_min = [f64::INFINITY; NUM_BINS];
            self.frames_in_subwindow = 0;
        }
        noise
    }
}

/// Previous-frame enhanced amplitude state of the decision-directed
/// estimator.
#[derive(Debug, Clone)]
pub struct DdState {
    prev_amp_sq: [f64; NUM_BINS],
}

impl Default for DdState {
    fn default() -> Self {
        Self::new()
    }
}

impl DdState {
    pub fn new() -> Self {
        DdState { prev_amp_sq: [0.0; NUM_BINS] }
    }

    /// Stores the enhanced amplitudes of the frame just processed
    /// (`|G * Y|^2` per bin).
    pub fn update_amplitudes(&mut self, amp_sq: &[f64; NUM_BINS]) {
        self.prev_amp_sq = *amp_sq;
    }
}

/// Decision-directed a priori SNR:
/// `xi = alpha * prev_amp_sq / noise + (1 - alpha) * max(gamma - 1, 0)`,
/// floored at `xi_min` (a power ratio).
pub fn dd_apriori_snr(
    dd: &DdState,
    gamma: &[f64; NUM_BINS],
    noise_psd: &[f64; NUM_BINS],
    alpha: f64,
    xi_min: f64,
) -> [f64; NUM_BINS] {
    let mut xi = [0.0; NUM_BINS];
    for k in 0..NUM_BINS {
        let noise = noise_psd[k].max(EPS_POWER);
        let ml = (gamma[k] - 1.0).max(0.0);
        xi[k] = (alpha * dd.prev_amp_sq[k] / noise + (1.0 - alpha) * ml).max(xi_min);
    }
    xi
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GainKind {
    WienerFilter,
    LogSpectralAmplitude,
    SuperGaussian,
}

impl std::str::FromStr for GainKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "wf" => Ok(GainKind::WienerFilter),
            "lsa" => Ok(GainKind::LogSpectralAmplitude),
            "sg" => Ok(GainKind::SuperGaussian),
            other => Err(Error::InvalidArgument(format!(
                "unknown gain rule {other:?} (expected wf, lsa or sg)"
            ))),
        }
    }
}

impl GainKind {
    pub fn name(self) -> &'static str {
        match self {
            GainKind::WienerFilter => "wf",
            GainKind::LogSpectralAmplitude => "lsa",
            GainKind::SuperGaussian => "sg",
        }
    }
}

/// A spectral weighting rule with its floors.
#[derive(Debug, Clone, Copy)]
pub struct GainRule {
    pub kind: GainKind,
    /// Floor on the a priori SNR, linear power ratio.
    pub xi_min: f64,
    /// Floor on the gain, linear amplitude.
    pub g_min: f64,
}

impl GainRule {
    pub fn new(kind: GainKind) -> Self {
        GainRule {
            kind,
            xi_min: 10f64.powf(XI_MIN_DB / 10.0),
            g_min: 10f64.powf(GAIN_MIN_DB / 20.0),
        }
    }
}

/// Exponential integral E1 via the alternating series (small arguments) or a
/// continued fraction (large arguments).
pub fn expint_e1(x: f64) -> f64 {
    assert!(x > 0.0, "E1 needs a positive argument");
    if x > 700.0 {
        return 0.0; // exp(-x) underflows anyway
    }
    if x < 1.0 {
        // E1(x) = -gamma - ln x + sum (-1)^{n+1} x^n / (n * n!)
        const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
        let mut sum = 0.0;
        let mut term = 1.0;
        for n in 1..200 {
            term *= -x / n as f64;
            let contrib = -term / n as f64;
            sum += contrib;
            if contrib.abs() < 1e-18 {
                break;
            }
        }
        -EULER_GAMMA - x.ln() + sum
    } else {
        // Modified Lentz continued fraction, as in the standard references.
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..200 {
            let a = -(i as f64) * (i as f64);
            b += 2.0;
            d = 1.0 / (a * d + b);
            c = b + a / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-15 {
                break;
            }
        }
        h * (-x).exp()
    }
}

/// Spectral gain for one bin; always in `[g_min, 1]`.
pub fn gain(rule: &GainRule, xi: f64, gamma: f64) -> f64 {
    let xi = xi.max(rule.xi_min);
    let gamma = gamma.max(1e-10);
    let raw = match rule.kind {
        GainKind::WienerFilter => xi / (1.0 + xi),
        GainKind::LogSpectralAmplitude => {
            let v = xi * gamma / (1.0 + xi);
            xi / (1.0 + xi) * (0.5 * expint_e1(v.max(1e-12))).exp()
        }
        GainKind::SuperGaussian => {
            // Joint-MAP amplitude estimate under a super-Gaussian prior:
            // G = u + sqrt(u^2 + nu / (2 gamma)), u = 1/2 - mu / (4 sqrt(xi gamma)).
            let u = 0.5 - SG_MU / (4.0 * (xi * gamma).sqrt());
            u + (u * u + SG_NU / (2.0 * gamma)).sqrt()
        }
    };
    raw.clamp(rule.g_min, 1.0)
}

/// Frame-by-frame classical enhancement; returns the enhanced signal and the
/// per-frame gain masks for component decomposition.
pub fn enhance_classical(
    signal: &TimeSignal,
    rule: &GainRule,
) -> Result<(TimeSignal, StageMasks)> {
    if signal.len() < SAMPLE_RATE as usize {
        return Err(Error::SignalTooShort(format!(
            "classical enhancement needs at least 1 s of audio, got {} samples",
            signal.len()
        )));
    }
    let spec = analyze(signal)?;
    let masks = classical_masks(&spec, rule);
    let out_spec = apply_masks(&spec, &masks)?;
    let enhanced = synthesize(&out_spec)?;
    Ok((enhanced, masks))
}

/// The mask sequence of the classical pipeline for an already-analyzed
/// spectrogram.
pub fn classical_masks(spec: &crate::dsp::Spectrogram, rule: &GainRule) -> StageMasks {
    let mut tracker = NoiseTracker::new();
    let mut dd = DdState::new();
    let mut masks = StageMasks { masks: Vec::with_capacity(spec.num_frames()) };
    for frame in &spec.frames {
        let power = frame.powers();
        let noise = tracker.track(&power);
        let mut gamma = [0.0; NUM_BINS];
        for k in 0..NUM_BINS {
            gamma[k] = power[k] / noise[k];
        }
        let xi = dd_apriori_snr(&dd, &gamma, &noise, DD_ALPHA, rule.xi_min);
        let mut row = [0.0; NUM_BINS];
        let mut amp_sq = [0.0; NUM_BINS];
        for k in 0..NUM_BINS {
            let g = gain(rule, xi[k], gamma[k]);
            row[k] = g;
            amp_sq[k] = g * g * power[k];
        }
        dd.update_amplitudes(&amp_sq);
        masks.masks.push(row);
    }
    masks
}
