//! Dataset assembly for multi-SNR noisy-target training and the training
//! loop itself.
//!
//! Every manifest utterance is mixed at each SNR of the grid; the input is
//! the noisy spectrogram and the target is either the same mixture with its
//! noise attenuated (`noisy_delta`, the staged-enhancement recipe) or the
//! clean spectrogram (`clean`, the conventional baseline). One training
//! example is one frame. The loss is computed on Eq.-style composed
//! magnitudes — network output times the unnormalized input magnitude —
//! never on the raw network output, so the mask stays implicit.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::dsp::{analyze, NUM_BINS};
use crate::error::{Error, Result};
use crate::levels::{crop_noise, mix_at_snr, make_noisy_target, MixtureSpec, TRAINING_SNRS_DB};
use crate::manifest::{ManifestEntry, Split};
use crate::mask::{compute_norm_stats, frame_loss, NormStats};
use crate::nn::{
    adam_step, init_mlp, matched_width_bypasses, AdamParams, AdamState, Activation, LayerSpec,
    Mlp,
};
use crate::wav::read_wav;

/// Hidden-layer dropout used by all presets.
pub const DROPOUT: f64 = 0.2;
/// Paper-faithful minibatch size.
pub const MINIBATCH: usize = 128;

/// What the network is trained to reproduce.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetKind {
    /// The mixture with its noise attenuated by `target_delta_db`.
    NoisyDelta,
    /// The clean speech spectrogram.
    Clean,
}

impl std::str::FromStr for TargetKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "noisy_delta" => Ok(TargetKind::NoisyDelta),
            "clean" => Ok(TargetKind::Clean),
            other => Err(Error::Config(format!(
                "unknown target kind {other:?} (expected noisy_delta or clean)"
            ))),
        }
    }
}

/// Network size presets.
///
/// `Basic` is the stage module (5-frame input, 1024-512-512-512-256 hidden,
/// 3 bypasses). `Deep2` and `Deep3` are the larger single-network baselines
/// sized like 2- and 3-stage concatenations (9/13-frame inputs, wider stacks,
/// 3 and 6 bypasses).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Basic,
    Deep2,
    Deep3,
}

impl Preset {
    /// Context frames on each side of the center frame.
    pub fn context(self) -> usize {
        match self {
            Preset::Basic => 2,
            Preset::Deep2 => 4,
            Preset::Deep3 => 6,
        }
    }

    fn hidden_dims(self) -> &'static [usize] {
        match self {
            Preset::Basic => &[1024, 512, 512, 512, 256],
            Preset::Deep2 => &[1400, 800, 512, 512, 512, 256],
            Preset::Deep3 => &[1800, 750, 512, 512, 512, 512, 256],
        }
    }

    /// Default SNR gain of the noisy target for this preset.
    pub fn default_target_delta_db(self) -> f64 {
        match self {
            Preset::Basic => 5.0,
            Preset::Deep2 => 10.0,
            Preset::Deep3 => 15.0,
        }
    }

    /// Layer specs: leaky-ReLU hidden layers with batch norm and dropout,
    /// sigmoid output with batch norm.
    pub fn layer_specs(self) -> Vec<LayerSpec> {
        let in_dim = (2 * self.context() + 1) * NUM_BINS;
        let mut dims = vec![in_dim];
        dims.extend_from_slice(self.hidden_dims());
        dims.push(NUM_BINS);
        let last = dims.len() - 2;
        dims.windows(2)
            .enumerate()
            .map(|(i, w)| LayerSpec {
                in_dim: w[0],
                out_dim: w[1],
                activation: if i == last { Activation::Sigmoid } else { Activation::LeakyRelu },
                batch_norm: true,
                dropout: if i == last { 0.0 } else { DROPOUT },
            })
            .collect()
    }

    /// Seeded network with all matched-width bypasses.
    pub fn build(self, seed: u64) -> Mlp {
        let specs = self.layer_specs();
        let bypasses = matched_width_bypasses(&specs);
        init_mlp(&specs, &bypasses, seed).expect("preset specs are consistent")
    }
}

impl std::str::FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "basic" => Ok(Preset::Basic),
            "deep2" => Ok(Preset::Deep2),
            "deep3" => Ok(Preset::Deep3),
            other => Err(Error::Config(format!(
                "unknown preset {other:?} (expected basic, deep2 or deep3)"
            ))),
        }
    }
}

/// Everything the training loop needs to know.
#[derive(Debug, Clone)]
pub struct TrainingConfig {
    pub preset: Preset,
    pub target_kind: TargetKind,
    pub target_delta_db: f64,
    pub snr_levels: Vec<f64>,
    pub minibatch: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Learning-rate multiplier applied after each epoch.
    pub lr_decay: f64,
    pub validation_fraction: f64,
    pub seed: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            preset: Preset::Basic,
            target_kind: TargetKind::NoisyDelta,
            target_delta_db: Preset::Basic.default_target_delta_db(),
            snr_levels: TRAINING_SNRS_DB.to_vec(),
            minibatch: MINIBATCH,
            epochs: 10,
            learning_rate: 1e-4,
            lr_decay: 1.0,
            validation_fraction: 0.2,
            seed: 1,
        }
    }
}

impl TrainingConfig {
    fn validate(&self) -> Result<()> {
        if self.minibatch == 0 {
            return Err(Error::Config("minibatch must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(Error::Config("validation_fraction must lie in [0, 1)".into()));
        }
        if self.snr_levels.is_empty() {
            return Err(Error::Config("snr_levels must not be empty".into()));
        }
        if self.target_kind == TargetKind::NoisyDelta && self.target_delta_db <= 0.0 {
            return Err(Error::Config("target_delta_db must be positive".into()));
        }
        Ok(())
    }
}

/// Input/target magnitude frames of one (utterance, SNR) mixture.
pub struct DatasetEntry {
    pub input_mag: Vec<[f64; NUM_BINS]>,
    pub target_mag: Vec<[f64; NUM_BINS]>,
}

/// A fully materialized frame-level dataset.
pub struct Dataset {
    pub entries: Vec<DatasetEntry>,
    /// Flattened `(entry, frame)` example index.
    pub index: Vec<(u32, u32)>,
}

impl Dataset {
    /// Wraps prebuilt entries and indexes every frame as one example.
    pub fn from_entries(entries: Vec<DatasetEntry>) -> Dataset {
        let mut ds = Dataset { entries, index: Vec::new() };
        ds.rebuild_index();
        ds
    }

    pub fn num_examples(&self) -> usize {
        self.index.len()
    }

    fn rebuild_index(&mut self) {
        self.index.clear();
        for (e, entry) in self.entries.iter().enumerate() {
            for f in 0..entry.input_mag.len() {
                self.index.push((e as u32, f as u32));
            }
        }
    }
}

/// Mixes every utterance at every SNR level and stores input and target
/// magnitudes frame by frame. I/O failures carry the offending path.
pub fn build_dataset(entries: &[ManifestEntry], cfg: &TrainingConfig) -> Result<Dataset> {
    cfg.validate()?;
    let mut dataset = Dataset { entries: Vec::new(), index: Vec::new() };
    for (i, entry) in entries.iter().enumerate() {
        let speech = read_wav(&entry.speech_path)?;
        let noise = read_wav(&entry.noise_path)?;
        let noise_seg = crop_noise(
            &noise,
            entry.noise_offset_seconds,
            speech.len(),
            cfg.seed ^ (i as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15),
        )?;
        for &snr in &cfg.snr_levels {
            let spec = MixtureSpec {
                speech: &speech,
                noise: &noise_seg,
                input_snr_db: snr,
                target_gain_db: cfg.target_delta_db,
            };
            let (mixture, scaled_noise) = mix_at_snr(&spec)?;
            let input_mag = analyze(&mixture)?.magnitudes();
            let target_mag = match cfg.target_kind {
                TargetKind::NoisyDelta => {
                    let target = make_noisy_target(&speech, &scaled_noise, cfg.target_delta_db)?;
                    analyze(&target)?.magnitudes()
                }
                TargetKind::Clean => analyze(&speech)?.magnitudes(),
            };
            debug_assert_eq!(input_mag.len(), target_mag.len());
            dataset.entries.push(DatasetEntry { input_mag, target_mag });
        }
    }
    dataset.rebuild_index();
    Ok(dataset)
}

/// Per-bin normalization statistics over a dataset's input magnitudes.
pub fn dataset_norm_stats(dataset: &Dataset) -> Result<NormStats> {
    compute_norm_stats(dataset.entries.iter().flat_map(|e| e.input_mag.iter()))
}

/// Splits manifest entries into training and validation utterances.
///
/// Entries explicitly marked `validation` are honored; otherwise a seeded
/// `validation_fraction` share of the training utterances is held out.
pub fn split_train_validation<'a>(
    entries: &'a [ManifestEntry],
    cfg: &TrainingConfig,
) -> (Vec<&'a ManifestEntry>, Vec<&'a ManifestEntry>) {
    let train: Vec<&ManifestEntry> =
        entries.iter().filter(|e| e.split == Split::Train).collect();
    let explicit: Vec<&ManifestEntry> =
        entries.iter().filter(|e| e.split == Split::Validation).collect();
    if !explicit.is_empty() {
        return (train, explicit);
    }
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed ^ 0x5EED_5111);
    order.shuffle(&mut rng);
    let val_count = ((train.len() as f64) * cfg.validation_fraction).round() as usize;
    let val_count = val_count.min(train.len().saturating_sub(1));
    let val_set: std::collections::BTreeSet<usize> =
        order[..val_count].iter().copied().collect();
    let mut tr = Vec::new();
    let mut va = Vec::new();
    for (i, e) in train.into_iter().enumerate() {
        if val_set.contains(&i) {
            va.push(e);
        } else {
            tr.push(e);
        }
    }
    (tr, va)
}

/// A trained stage: parameters, input normalization and the text log.
pub struct TrainedModel {
    pub mlp: Mlp,
    pub stats: NormStats,
    pub log: Vec<String>,
}

fn gather_batch(
    dataset: &Dataset,
    stats: &NormStats,
    context: usize,
    examples: &[(u32, u32)],
) -> (Array2<f64>, Array2<f64>, Array2<f64>) {
    let width = (2 * context + 1) * NUM_BINS;
    let b = examples.len();
    let mut features = Array2::zeros((b, width));
    let mut center_mag = Array2::zeros((b, NUM_BINS));
    let mut target = Array2::zeros((b, NUM_BINS));
    for (row, &(e, f)) in examples.iter().enumerate() {
        let entry = &dataset.entries[e as usize];
        let window =
            crate::mask::make_features(&entry.input_mag, stats, f as usize, context);
        for (j, v) in window.values.iter().enumerate() {
            features[[row, j]] = *v;
        }
        for k in 0..NUM_BINS {
            center_mag[[row, k]] = entry.input_mag[f as usize][k];
            target[[row, k]] = entry.target_mag[f as usize][k];
        }
    }
    (features, center_mag, target)
}

/// Mean composed-magnitude loss of a mask batch.
fn batch_loss(mask: &Array2<f64>, center_mag: &Array2<f64>, target: &Array2<f64>) -> f64 {
    let est = mask * center_mag;
    let mut acc = 0.0;
    for (row_est, row_target) in est.rows().into_iter().zip(target.rows()) {
        let mut e = [0.0; NUM_BINS];
        let mut t = [0.0; NUM_BINS];
        for k in 0..NUM_BINS {
            e[k] = row_est[k];
            t[k] = row_target[k];
        }
        acc += frame_loss(&e, &t);
    }
    acc / est.nrows() as f64
}

/// Eval-mode loss over a whole dataset, in chunks.
pub fn evaluate_loss(
    mlp: &Mlp,
    dataset: &Dataset,
    stats: &NormStats,
    context: usize,
) -> Result<f64> {
    if dataset.index.is_empty() {
        return Err(Error::InvalidArgument("empty dataset".into()));
    }
    let mut total = 0.0;
    let mut count = 0usize;
    for chunk in dataset.index.chunks(512) {
        let (features, center, target) = gather_batch(dataset, stats, context, chunk);
        let mask = mlp.forward_eval(&features)?;
        total += batch_loss(&mask, &center, &target) * chunk.len() as f64;
        count += chunk.len();
    }
    Ok(total / count as f64)
}

/// The inner training loop over prebuilt datasets.
///
/// Minibatches are drawn in seeded shuffle order (reshuffled each epoch), the
/// final partial batch is dropped to keep the batch-norm batch size fixed,
/// and the parameters with the best validation loss are returned. With zero
/// epochs the initialized network is returned untouched.
pub fn train_on_dataset(
    mut mlp: Mlp,
    train_set: &Dataset,
    val_set: Option<&Dataset>,
    stats: &NormStats,
    cfg: &TrainingConfig,
) -> Result<TrainedModel> {
    cfg.validate()?;
    let context = crate::mask::context_of(&mlp)?;
    let mut adam = AdamState::new(
        &mlp,
        AdamParams { lr: cfg.learning_rate, ..AdamParams::default() },
    );
    let mut log = Vec::new();
    log.push(format!(
        "train examples {} validation examples {} params {}",
        train_set.num_examples(),
        val_set.map_or(0, |v| v.num_examples()),
        mlp.num_params()
    ));

    let mut best: Option<(f64, Mlp)> = None;
    let mut order = train_set.index.clone();
    let mut step = 0u64;
    for epoch in 0..cfg.epochs {
        let mut shuffle_rng =
            ChaCha20Rng::seed_from_u64(cfg.seed.wrapping_add(1).wrapping_mul(epoch as u64 + 1));
        order.shuffle(&mut shuffle_rng);
        let mut dropout_rng =
            ChaCha20Rng::seed_from_u64(cfg.seed ^ 0xd0_0d ^ ((epoch as u64) << 32));

        let mut epoch_loss = 0.0;
        let mut epoch_batches = 0usize;
        for batch in order.chunks_exact(cfg.minibatch) {
            let (features, center, target) = gather_batch(train_set, stats, context, batch);
            let (mask, cache) = mlp.forward_train(&features, &mut dropout_rng)?;
            let loss = batch_loss(&mask, &center, &target);
            if !loss.is_finite() {
                return Err(Error::Diverged(format!(
                    "non-finite training loss at epoch {epoch} step {step}"
                )));
            }
            // d loss / d mask for the composed magnitudes:
            // L = mean_B mean_K (m*y - t)^2  =>  dL/dm = 2*(m*y - t)*y / (B*K).
            let scale = 2.0 / (mask.nrows() * NUM_BINS) as f64;
            let est = &mask * &center;
            let d_mask = (&est - &target) * &center * scale;
            let grads = mlp.backward(&cache, &d_mask)?;
            adam_step(&mut mlp, &grads, &mut adam)?;
            epoch_loss += loss;
            epoch_batches += 1;
            step += 1;
            if step % 200 == 0 {
                log.push(format!("epoch {epoch} step {step} train_loss {loss:.6}"));
            }
        }
        let mean_train = if epoch_batches > 0 { epoch_loss / epoch_batches as f64 } else { 0.0 };
        let val_loss = match val_set {
            Some(v) if v.num_examples() > 0 => Some(evaluate_loss(&mlp, v, stats, context)?),
            _ => None,
        };
        match val_loss {
            Some(v) => log.push(format!(
                "epoch {epoch} mean_train_loss {mean_train:.6} val_loss {v:.6}"
            )),
            None => log.push(format!("epoch {epoch} mean_train_loss {mean_train:.6}")),
        }
        let selection = val_loss.unwrap_or(mean_train);
        if best.as_ref().is_none_or(|(b, _)| selection < *b) {
            best = Some((selection, mlp.clone()));
        }
        adam.params.lr *= cfg.lr_decay;
    }

    let mlp = match best {
        Some((loss, m)) => {
            log.push(format!("selected parameters with loss {loss:.6}"));
            m
        }
        None => mlp,
    };
    Ok(TrainedModel { mlp, stats: stats.clone(), log })
}

/// End-to-end training from manifest entries: split, mix, normalize, train.
pub fn train(cfg: &TrainingConfig, entries: &[ManifestEntry]) -> Result<TrainedModel> {
    cfg.validate()?;
    let (train_entries, val_entries) = split_train_validation(entries, cfg);
    if train_entries.is_empty() {
        return Err(Error::InvalidArgument("no training utterances in manifest".into()));
    }
    let train_refs: Vec<ManifestEntry> = train_entries.into_iter().cloned().collect();
    let val_refs: Vec<ManifestEntry> = val_entries.into_iter().cloned().collect();
    let train_set = build_dataset(&train_refs, cfg)?;
    let val_set = if val_refs.is_empty() { None } else { Some(build_dataset(&val_refs, cfg)?) };
    let stats = dataset_norm_stats(&train_set)?;
    let mlp = cfg.preset.build(cfg.seed);
    train_on_dataset(mlp, &train_set, val_set.as_ref(), &stats, cfg)
}
