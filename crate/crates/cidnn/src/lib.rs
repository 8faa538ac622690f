//! Spectral-mask speech enhancement built around a single reusable DNN stage.
//!
//! The toolkit covers the whole workflow:
//!
//! - [`dsp`]: framing, windowing, DFT and overlap-add reconstruction,
//! - [`levels`]: active-speech-level measurement and SNR-controlled mixing,
//! - [`nn`]: a self-contained feed-forward network engine (batch norm,
//!   bypasses, dropout, backprop, Adam),
//! - [`mask`] / [`train`]: feature windows, input normalization, mask
//!   application and the training loop,
//! - [`ci`]: serial concatenation of the identical trained stage,
//! - [`classical`]: minimum-statistics + decision-directed baselines with
//!   WF/LSA/SG gain rules,
//! - [`metrics`]: filtered-component decomposition, ΔSNR, SSDR, WLAKR, STOI
//!   and the evaluation runner,
//! - [`wav`] / [`model`] / [`manifest`] / [`config`]: file I/O for audio,
//!   trained models, dataset manifests and run configuration.
//!
//! The `cidnn` binary exposes all of this as `mix`, `stats`, `train`,
//! `enhance` and `evaluate` subcommands.

pub mod ci;
pub mod classical;
pub mod config;
pub mod dsp;
pub mod error;
pub mod levels;
pub mod manifest;
pub mod mask;
pub mod metrics;
pub mod model;
pub mod nn;
pub mod synth;
pub mod train;
pub mod wav;

#[cfg(doctest)]
mod book;

pub use error::{Error, Result};
