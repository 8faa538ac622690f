//! Serial concatenation of the identical trained stage.
//!
//! Stage 1 consumes the noisy spectrogram, stage `r+1` consumes stage `r`'s
//! output, always with the same parameters and normalization statistics and
//! always in eval mode. The final spectrum is the input times the product of
//! all stage masks, and the phase stays the noisy phase throughout. Each
//! whole-utterance spectrogram is fed through unchanged; the sliding-window
//! context arithmetic is exposed by [`required_context`] for latency
//! accounting.

use crate::dsp::Spectrogram;
use crate::error::{Error, Result};
use crate::mask::{enhance_stage, NormStats, StageMasks};
use crate::nn::Mlp;

/// How many stages to run and with which trained stage.
pub struct CiConfig<'a> {
    pub stages: usize,
    pub mlp: &'a Mlp,
    pub stats: &'a NormStats,
}

/// Runs `stages` identical enhancement stages and records every stage's
/// masks.
pub fn ci_enhance(
    cfg: &CiConfig,
    noisy: &Spectrogram,
) -> Result<(Spectrogram, Vec<StageMasks>)> {
    if cfg.stages == 0 {
        return Err(Error::InvalidArgument("stage count must be at least 1".into()));
    }
    let mut current = noisy.clone();
    let mut per_stage = Vec::with_capacity(cfg.stages);
    for _ in 0..cfg.stages {
        let (next, masks) = enhance_stage(cfg.mlp, cfg.stats, &current)?;
        per_stage.push(masks);
        current = next;
    }
    Ok((current, per_stage))
}

/// Input context needed to produce one output frame after `stages` stages:
/// `(left, right, total)` frames. Each stage adds 2 frames on each side.
pub fn required_context(stages: usize) -> Result<(usize, usize, usize)> {
    if stages == 0 {
        return Err(Error::InvalidArgument("stage count must be at least 1".into()));
    }
    let side = 2 * stages;
    Ok((side, side, 2 * side + 1))
}
