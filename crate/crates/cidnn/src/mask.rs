//! Between spectrograms and the network: input normalization, context-frame
//! feature windows, mask application and the per-frame training loss.
//!
//! The network consumes windows of normalized magnitude frames and emits a
//! real mask per bin; the enhanced spectrum is the complex input frame scaled
//! by that mask, so the phase is always the noisy phase.

use ndarray::Array2;

use crate::dsp::{SpectralFrame, Spectrogram, NUM_BINS};
use crate::error::{Error, Result};
use crate::nn::Mlp;

/// Std floor of the input normalizer.
pub const EPS_STD: f64 = 1e-8;
/// Context frames on each side of the center frame for the basic module.
pub const BASIC_CONTEXT: usize = 2;
/// Input width of the basic module: 5 x 129.
pub const BASIC_INPUT_DIM: usize = (2 * BASIC_CONTEXT + 1) * NUM_BINS;

/// Per-bin mean and standard deviation of training-set input magnitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct NormStats {
    pub mean: [f64; NUM_BINS],
    pub std: [f64; NUM_BINS],
}

impl NormStats {
    /// Identity normalization (zero mean, unit std); occasionally useful in
    /// tests and for untrained models.
    pub fn identity() -> Self {
        NormStats { mean: [0.0; NUM_BINS], std: [1.0; NUM_BINS] }
    }
}

/// Per-bin statistics over a corpus of magnitude frames, pooled across all
/// conditions. Std is floored at [`EPS_STD`]. Needs at least 1000 frames.
pub fn compute_norm_stats<'a, I>(frames: I) -> Result<NormStats>
where
    I: IntoIterator<Item = &'a [f64; NUM_BINS]>,
{
    let mut count = 0u64;
    let mut sum = [0.0f64; NUM_BINS];
    let mut sum_sq = [0.0f64; NUM_BINS];
    for frame in frames {
        for k in 0..NUM_BINS {
            sum[k] += frame[k];
            sum_sq[k] += frame[k] * frame[k];
        }
        count += 1;
    }
    if count < 1000 {
        return Err(Error::InvalidArgument(format!(
            "normalization statistics need at least 1000 frames, got {count}"
        )));
    }
    let n = count as f64;
    let mut stats = NormStats { mean: [0.0; NUM_BINS], std: [0.0; NUM_BINS] };
    for k in 0..NUM_BINS {
        let mean = sum[k] / n;
        let var = (sum_sq[k] / n - mean * mean).max(0.0);
        stats.mean[k] = mean;
        stats.std[k] = var.sqrt().max(EPS_STD);
    }
    Ok(stats)
}

/// One normalized input window: `2*context + 1` frames of 129 bins each,
/// centered on a frame, with out-of-range context replicated from the edges.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureWindow {
    pub values: Vec<f64>,
}

/// Magnitudes of frames `center-context ..= center+context`, each normalized
/// per bin, concatenated. Context frames beyond the spectrogram edges repeat
/// the first/last frame.
pub fn make_features(
    magnitudes: &[[f64; NUM_BINS]],
    stats: &NormStats,
    center: usize,
    context: usize,
) -> FeatureWindow {
    debug_assert!(center < magnitudes.len());
    let mut values = Vec::with_capacity((2 * context + 1) * NUM_BINS);
    let last = magnitudes.len() - 1;
    for offset in -(context as isize)..=(context as isize) {
        let idx = (center as isize + offset).clamp(0, last as isize) as usize;
        let frame = &magnitudes[idx];
        for k in 0..NUM_BINS {
            values.push((frame[k] - stats.mean[k]) / stats.std[k]);
        }
    }
    FeatureWindow { values }
}

/// Feature rows for every frame of a spectrogram, ready for a batched
/// forward pass.
pub fn feature_matrix(
    magnitudes: &[[f64; NUM_BINS]],
    stats: &NormStats,
    context: usize,
) -> Array2<f64> {
    let width = (2 * context + 1) * NUM_BINS;
    let mut out = Array2::zeros((magnitudes.len(), width));
    for (l, mut row) in out.rows_mut().into_iter().enumerate() {
        let window = make_features(magnitudes, stats, l, context);
        for (dst, src) in row.iter_mut().zip(&window.values) {
            *dst = *src;
        }
    }
    out
}

/// Real per-bin masks in [0, 1], one row per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct StageMasks {
    pub masks: Vec<[f64; NUM_BINS]>,
}

impl StageMasks {
    pub fn ones(num_frames: usize) -> Self {
        StageMasks { masks: vec![[1.0; NUM_BINS]; num_frames] }
    }

    pub fn num_frames(&self) -> usize {
        self.masks.len()
    }

    /// Element-wise product of a sequence of per-stage masks.
    pub fn product(stages: &[StageMasks]) -> Result<StageMasks> {
        let first = stages
            .first()
            .ok_or_else(|| Error::ShapeMismatch("no stages to multiply".into()))?;
        let mut total = first.clone();
        for stage in &stages[1..] {
            if stage.num_frames() != total.num_frames() {
                return Err(Error::ShapeMismatch("stage mask frame counts differ".into()));
            }
            for (acc, m) in total.masks.iter_mut().zip(&stage.masks) {
                for k in 0..NUM_BINS {
                    acc[k] *= m[k];
                }
            }
        }
        Ok(total)
    }
}

/// Multiplies each complex frame by its real mask (phase untouched).
pub fn apply_masks(spec: &Spectrogram, masks: &StageMasks) -> Result<Spectrogram> {
    if spec.num_frames() != masks.num_frames() {
        return Err(Error::ShapeMismatch(format!(
            "{} frames but {} mask rows",
            spec.num_frames(),
            masks.num_frames()
        )));
    }
    let frames = spec
        .frames
        .iter()
        .zip(&masks.masks)
        .map(|(frame, mask)| {
            let mut out = SpectralFrame::zero();
            for k in 0..NUM_BINS {
                out.bins[k] = frame.bins[k] * mask[k];
            }
            out
        })
        .collect();
    Ok(Spectrogram { frames })
}

/// Context radius implied by a network's input width.
pub fn context_of(mlp: &Mlp) -> Result<usize> {
    let in_dim = mlp.in_dim();
    if in_dim % NUM_BINS != 0 || (in_dim / NUM_BINS) % 2 == 0 {
        return Err(Error::ShapeMismatch(format!(
            "input width {in_dim} is not an odd multiple of {NUM_BINS}"
        )));
    }
    Ok((in_dim / NUM_BINS - 1) / 2)
}

/// Runs one enhancement stage over a whole spectrogram.
///
/// Every frame's feature window goes through the network in eval mode; the
/// resulting masks scale the complex input frames.
pub fn enhance_stage(
    mlp: &Mlp,
    stats: &NormStats,
    spec: &Spectrogram,
) -> Result<(Spectrogram, StageMasks)> {
    if mlp.out_dim() != NUM_BINS {
        return Err(Error::ShapeMismatch(format!(
            "network emits {} values per frame, expected {NUM_BINS}",
            mlp.out_dim()
        )));
    }
    let context = context_of(mlp)?;
    let magnitudes = spec.magnitudes();
    let features = feature_matrix(&magnitudes, stats, context);
    let raw = mlp.forward_eval(&features)?;
    let mut masks = StageMasks { masks: vec![[0.0; NUM_BINS]; spec.num_frames()] };
    for (row, mask) in raw.rows().into_iter().zip(masks.masks.iter_mut()) {
        for (dst, &v) in mask.iter_mut().zip(row.iter()) {
            *dst = v.clamp(0.0, 1.0);
        }
    }
    let out = apply_masks(spec, &masks)?;
    Ok((out, masks))
}

/// Mean squared magnitude error over the 129 unique bins of one frame.
pub fn frame_loss(est_mag: &[f64; NUM_BINS], target_mag: &[f64; NUM_BINS]) -> f64 {
    let mut acc = 0.0;
    for k in 0..NUM_BINS {
        let d = est_mag[k] - target_mag[k];
        acc += d * d;
    }
    acc / NUM_BINS as f64
}
