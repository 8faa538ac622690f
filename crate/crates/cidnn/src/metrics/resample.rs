//! Polyphase rational resampling from 16 kHz to 10 kHz (up 5, down 8).

use crate::dsp::TimeSignal;

const UP: usize = 5;
const DOWN: usize = 8;
/// Windowed-sinc prototype length: 2 * 10 * max(UP, DOWN) + 1.
const TAPS: usize = 161;

/// Lowpass prototype at the upsampled rate: sinc cutoff at pi/DOWN, Hann
/// window, passband gain UP.
fn prototype() -> [f64; TAPS] {
    let mut h = [0.0; TAPS];
    let center = (TAPS - 1) as f64 / 2.0;
    let cutoff = 1.0 / DOWN as f64; // fraction of Nyquist at the high rate
    for (n, tap) in h.iter_mut().enumerate() {
        let t = n as f64 - center;
        let sinc = if t == 0.0 {
            cutoff
        } else {
            (std::f64::consts::PI * cutoff * t).sin() / (std::f64::consts::PI * t)
        };
        let window =
            0.5 - 0.5 * (2.0 * std::f64::consts::PI * n as f64 / (TAPS - 1) as f64).cos();
        *tap = UP as f64 * sinc * window;
    }
    h
}

/// Resamples a 16 kHz signal to 10 kHz. The zero-stuffed convolution is
/// evaluated polyphase style, touching only the nonzero input samples.
pub fn resample_16k_to_10k(signal: &TimeSignal) -> Vec<f64> {
    let h = prototype();
    let x = signal.samples();
    let n_out = (x.len() * UP).div_ceil(DOWN);
    let mut out = Vec::with_capacity(n_out);
    for m in 0..n_out {
        let pos = m * DOWN; // index in the upsampled stream
        let mut acc = 0.0;
        // x[i] sits at upsampled index UP*i; tap index is pos - UP*i.
        let i_max = pos / UP;
        let i_min = (pos + 1).saturating_sub(TAPS).div_ceil(UP);
        for i in i_min..=i_max.min(x.len() - 1) {
            acc += x[i] * h[pos - UP * i];
        }
        out.push(acc);
    }
    out
}
