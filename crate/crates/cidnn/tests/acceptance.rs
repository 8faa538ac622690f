//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured values (run with `--nocapture` to see them).
//!
//! The trend criteria train the real stage module once on a synthetic
//! speech-like corpus (white, babble-surrogate and lowpass noise at the six
//! training SNRs with +5 dB noisy targets); that fixture is shared by every
//! test that needs a trained model.

use std::sync::OnceLock;
use std::time::Instant;

use cidnn::ci::{ci_enhance, required_context, CiConfig};
use cidnn::classical::{enhance_classical, GainKind, GainRule};
use cidnn::dsp::{analyze, hann_window, synthesize, TimeSignal, FRAME_LEN, FRAME_SHIFT, NUM_BINS};
use cidnn::levels::{active_speech_level, crop_noise, mix_at_snr, rms_level_db, MixtureSpec};
use cidnn::manifest::{ManifestEntry, Split};
use cidnn::mask::{apply_masks, enhance_stage, NormStats, StageMasks};
use cidnn::metrics::{
    delta_snr, evaluate, filtered_components, ssdr, stoi, wlakr, EvalOptions, MethodSpec,
};
use cidnn::nn::Mlp;
use cidnn::synth;
use cidnn::train::{train, Preset, TargetKind, TrainingConfig};
use cidnn::wav::write_wav;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;

// ---------------------------------------------------------------------------
// Shared fixture: synthetic corpus on disk plus one trained basic module.
// ---------------------------------------------------------------------------

const TRAIN_UTTERANCES: usize = 24;
const TEST_UTTERANCES: usize = 6;
const UTTERANCE_SECONDS: f64 = 6.0;
const NOISE_SECONDS: f64 = 9.0;
const FIXTURE_SEED: u64 = 42;

struct Fixture {
    #[allow(dead_code)]
    dir: tempfile::TempDir,
    entries: Vec<ManifestEntry>,
    mlp: Mlp,
    stats: NormStats,
    train_minutes: f64,
}

fn noise_for(kind: usize, seconds: f64, seed: u64) -> (TimeSignal, &'static str) {
    match kind % 3 {
        0 => (synth::white_noise(seconds, seed), "white"),
        1 => (synth::babble_noise(seconds, seed), "babble"),
        _ => (synth::lowpass_noise(seconds, seed), "lowpass"),
    }
}

fn build_fixture() -> Fixture {
    let dir = tempfile::tempdir().expect("tempdir");
    let mut entries = Vec::new();
    for i in 0..TRAIN_UTTERANCES {
        let speech = synth::speech_like(UTTERANCE_SECONDS, 1000 + i as u64);
        let speech_path = dir.path().join(format!("train_s{i}.wav"));
        write_wav(&speech_path, &speech).unwrap();
        let (noise, label) = noise_for(i, NOISE_SECONDS, 2000 + i as u64);
        let noise_path = dir.path().join(format!("train_n{i}.wav"));
        write_wav(&noise_path, &noise).unwrap();
        entries.push(ManifestEntry {
            speech_path,
            noise_path,
            noise_offset_seconds: 0.0,
            split: Split::Train,
            noise_type: label.to_string(),
        });
    }
    // Held-out utterances and fresh noise realizations of the seen types.
    for i in 0..TEST_UTTERANCES {
        let speech = synth::speech_like(UTTERANCE_SECONDS, 5000 + i as u64);
        let speech_path = dir.path().join(format!("test_s{i}.wav"));
        write_wav(&speech_path, &speech).unwrap();
        let (noise, label) = noise_for(i, NOISE_SECONDS, 6000 + i as u64);
        let noise_path = dir.path().join(format!("test_n{i}.wav"));
        write_wav(&noise_path, &noise).unwrap();
        entries.push(ManifestEntry {
            speech_path,
            noise_path,
            noise_offset_seconds: 0.0,
            split: Split::Test,
            noise_type: label.to_string(),
        });
    }

    let cfg = TrainingConfig {
        preset: Preset::Basic,
        target_kind: TargetKind::NoisyDelta,
        target_delta_db: 5.0,
        minibatch: 128,
        epochs: 8,
        learning_rate: 3e-4,
        lr_decay: 0.7,
        validation_fraction: 0.2,
        seed: FIXTURE_SEED,
        ..TrainingConfig::default()
    };
    let started = Instant::now();
    let trained = train(&cfg, &entries).expect("fixture training");
    let train_minutes = started.elapsed().as_secs_f64() / 60.0;
    Fixture { dir, entries, mlp: trained.mlp, stats: trained.stats, train_minutes }
}

fn fixture() -> &'static Fixture {
    static FIXTURE: OnceLock<Fixture> = OnceLock::new();
    FIXTURE.get_or_init(build_fixture)
}

fn test_entries(fx: &Fixture) -> Vec<ManifestEntry> {
    fx.entries.iter().filter(|e| e.split == Split::Test).cloned().collect()
}

// ---------------------------------------------------------------------------
// Criterion 1: STFT round trip.
// ---------------------------------------------------------------------------

#[test]
fn criterion_01_stft_round_trip() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let len = rng.gen_range(2000..6000);
        let signal =
            TimeSignal::from_samples((0..len).map(|_| rng.gen_range(-1.0..1.0)).collect());
        let rec = synthesize(&analyze(&signal).unwrap()).unwrap();
        let mut err = 0.0;
        let mut norm = 0.0;
        for n in FRAME_SHIFT..rec.len() - FRAME_SHIFT {
            let d = rec.samples()[n] - signal.samples()[n];
            err += d * d;
            norm += signal.samples()[n] * signal.samples()[n];
        }
        worst = worst.max((err / norm).sqrt());
    }
    let elapsed = started.elapsed().as_secs_f64();
    assert!(worst < 1e-10, "worst interior relative L2 {worst}");
    assert!(elapsed < 5.0, "took {elapsed:.2} s");
    println!("criterion 01 PASS: round-trip relative L2 {worst:.3e} over 100 signals in {elapsed:.2} s");
}

// ---------------------------------------------------------------------------
// Criterion 2: DFT against naive direct summation.
// ---------------------------------------------------------------------------

#[test]
fn criterion_02_dft_oracle() {
    let window = hann_window();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let samples: Vec<f64> = (0..FRAME_LEN).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut padded = samples.clone();
        padded.extend(std::iter::repeat(0.0).take(FRAME_LEN));
        let spec = analyze(&TimeSignal::from_samples(padded)).unwrap();
        for k in 0..NUM_BINS {
            let mut oracle = Complex64::new(0.0, 0.0);
            for (n, s) in samples.iter().enumerate() {
                let phase = -2.0 * std::f64::consts::PI * k as f64 * n as f64 / FRAME_LEN as f64;
                oracle += window[n] * s * Complex64::new(phase.cos(), phase.sin());
            }
            let got = spec.frames[0].bins[k];
            worst = worst.max((got - oracle).norm() / oracle.norm().max(1.0));
        }
    }
    assert!(worst < 1e-9, "worst relative error {worst}");
    println!("criterion 02 PASS: naive-DFT relative error {worst:.3e}");
}

// ---------------------------------------------------------------------------
// Criterion 3: mixing accuracy over the SNR grid.
// ---------------------------------------------------------------------------

#[test]
fn criterion_03_mixing_accuracy() {
    let grid = [-5.0, 0.0, 5.0, 10.0, 15.0, 20.0];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for case in 0..50u64 {
        let speech = synth::speech_like(2.0, 300 + case);
        let (noise, _) = noise_for(case as usize, 2.5, 400 + case);
        let snr = grid[rng.gen_range(0..grid.len())];
        let (_, scaled) = mix_at_snr(&MixtureSpec {
            speech: &speech,
            noise: &noise,
            input_snr_db: snr,
            target_gain_db: 5.0,
        })
        .unwrap();
        let measured = active_speech_level(&speech).unwrap() - rms_level_db(&scaled);
        worst = worst.max((measured - snr).abs());
    }
    assert!(worst <= 0.1, "worst SNR deviation {worst} dB");
    println!("criterion 03 PASS: worst re-measured SNR deviation {worst:.2e} dB over 50 pairs");
}

// ---------------------------------------------------------------------------
// Criterion 4: finite-difference gradients of the full 645->...->129 module.
// ---------------------------------------------------------------------------

#[test]
fn criterion_04_gradient_fidelity() {
    use cidnn::nn::{LayerSpec, Activation, init_mlp, matched_width_bypasses};
    let started = Instant::now();
    // The full architecture with dropout off for a deterministic loss.
    let specs: Vec<LayerSpec> = {
        let dims = [645, 1024, 512, 512, 512, 256, 129];
        let last = dims.len() - 2;
        dims.windows(2)
            .enumerate()
            .map(|(i, w)| LayerSpec {
                in_dim: w[0],
                out_dim: w[1],
                activation: if i == last { Activation::Sigmoid } else { Activation::LeakyRelu },
                batch_norm: true,
                dropout: 0.0,
            })
            .collect()
    };
    let bypasses = matched_width_bypasses(&specs);
    assert_eq!(bypasses.len(), 3);
    let mlp = init_mlp(&specs, &bypasses, 4).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let batch = ndarray::Array2::from_shape_fn((8, 645), |_| rng.gen_range(-1.5..1.5));
    let target = ndarray::Array2::from_shape_fn((8, 129), |_| rng.gen_range(0.05..0.95));

    let loss_of = |mlp: &Mlp| {
        let mut work = mlp.clone();
        let mut drng = ChaCha8Rng::seed_from_u64(0);
        let (out, _) = work.forward_train(&batch, &mut drng).unwrap();
        0.5 * (&out - &target).mapv(|d| d * d).sum()
    };
    let mut work = mlp.clone();
    let mut drng = ChaCha8Rng::seed_from_u64(0);
    let (out, cache) = work.forward_train(&batch, &mut drng).unwrap();
    let grads = work.backward(&cache, &(&out - &target)).unwrap();

    // Sample a dozen entries from every parameter group (each layer's
    // weights, bias, BN gain, BN bias).
    // Relative error below 1e-4 for gradients of healthy magnitude; tiny
    // gradients (where central differences bottom out on f64 rounding of the
    // loss) are held to an absolute 1e-7 instead.
    let h = 1e-5;
    let num_groups = grads.num_groups();
    let mut checked = 0usize;
    let mut worst_rel: f64 = 0.0;
    let mut worst_abs: f64 = 0.0;
    for group in 0..num_groups {
        let len = grads.group_len(group);
        let mut pick = ChaCha8Rng::seed_from_u64(600 + group as u64);
        for _ in 0..12.min(len) {
            let idx = pick.gen_range(0..len);
            let analytic = grads.group_value(group, idx);
            let mut plus = mlp.clone();
            plus.nudge_param(group, idx, h);
            let mut minus = mlp.clone();
            minus.nudge_param(group, idx, -h);
            let numeric = (loss_of(&plus) - loss_of(&minus)) / (2.0 * h);
            let err = (analytic - numeric).abs();
            let scale = analytic.abs().max(numeric.abs());
            if scale >= 1e-3 {
                assert!(
                    err / scale < 1e-4,
                    "group {group} idx {idx}: analytic {analytic} vs numeric {numeric}"
                );
                worst_rel = worst_rel.max(err / scale);
            } else {
                assert!(
                    err <= 1e-7,
                    "group {group} idx {idx}: analytic {analytic} vs numeric {numeric}"
                );
                worst_abs = worst_abs.max(err);
            }
            checked += 1;
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    assert_eq!(num_groups, 6 * 4, "every layer contributes four groups");
    assert!(elapsed < 120.0, "took {elapsed:.1} s");
    println!(
        "criterion 04 PASS: {checked} gradients across {num_groups} groups, worst relative \
         {worst_rel:.3e}, worst small-gradient absolute {worst_abs:.3e}, {elapsed:.1} s"
    );
}

// ---------------------------------------------------------------------------
// Criterion 5: staged-mask consistency.
// ---------------------------------------------------------------------------

#[test]
fn criterion_05_stage_mask_consistency() {
    let fx = fixture();
    let speech = synth::speech_like(3.0, 77);
    let noise = synth::white_noise(3.5, 78);
    let (mixture, _) = mix_at_snr(&MixtureSpec {
        speech: &speech,
        noise: &noise,
        input_snr_db: 0.0,
        target_gain_db: 5.0,
    })
    .unwrap();
    let spec = analyze(&mixture).unwrap();

    // Product of recorded masks reproduces the staged output.
    let cfg = CiConfig { stages: 3, mlp: &fx.mlp, stats: &fx.stats };
    let (out, per_stage) = ci_enhance(&cfg, &spec).unwrap();
    let total = StageMasks::product(&per_stage).unwrap();
    let via_product = apply_masks(&spec, &total).unwrap();
    let mut worst: f64 = 0.0;
    for (a, b) in out.frames.iter().zip(&via_product.frames) {
        for k in 0..NUM_BINS {
            let scale = a.bins[k].norm().max(1e-30);
            worst = worst.max((a.bins[k] - b.bins[k]).norm() / scale);
        }
    }
    assert!(worst < 1e-12, "mask-product consistency {worst}");

    // R = 1 equals one direct stage, bit for bit.
    let (one, _) = ci_enhance(&CiConfig { stages: 1, ..cfg }, &spec).unwrap();
    let (direct, _) = enhance_stage(&fx.mlp, &fx.stats, &spec).unwrap();
    assert_eq!(one, direct);

    // Composability: 3 stages = 2 stages then 1 stage, bit for bit.
    let (two, _) = ci_enhance(&CiConfig { stages: 2, ..cfg }, &spec).unwrap();
    let (two_plus_one, _) = ci_enhance(&CiConfig { stages: 1, ..cfg }, &two).unwrap();
    assert_eq!(out, two_plus_one);

    println!("criterion 05 PASS: mask product within {worst:.3e}, R=1 and composition bit-exact");
}

// ---------------------------------------------------------------------------
// Criterion 6: context arithmetic.
// ---------------------------------------------------------------------------

#[test]
fn criterion_06_context_arithmetic() {
    assert_eq!(required_context(1).unwrap(), (2, 2, 5));
    assert_eq!(required_context(2).unwrap(), (4, 4, 9));
    assert_eq!(required_context(3).unwrap(), (6, 6, 13));
    println!("criterion 06 PASS: required context 5/9/13 frames for R = 1/2/3");
}

// ---------------------------------------------------------------------------
// Criterion 7: per-bin stage monotonicity on every evaluated utterance.
// ---------------------------------------------------------------------------

#[test]
fn criterion_07_stage_monotonicity() {
    let fx = fixture();
    let mut utterances = 0usize;
    for entry in test_entries(fx) {
        for snr in [0.0, 5.0] {
            let speech = cidnn::wav::read_wav(&entry.speech_path).unwrap();
            let noise_full = cidnn::wav::read_wav(&entry.noise_path).unwrap();
            let noise = crop_noise(&noise_full, 0.0, speech.len(), 0).unwrap();
            let (mixture, _) = mix_at_snr(&MixtureSpec {
                speech: &speech,
                noise: &noise,
                input_snr_db: snr,
                target_gain_db: 5.0,
            })
            .unwrap();
            let spec = analyze(&mixture).unwrap();
            let mut prev = spec.clone();
            for stages in 1..=3 {
                let cfg = CiConfig { stages, mlp: &fx.mlp, stats: &fx.stats };
                let (out, _) = ci_enhance(&cfg, &spec).unwrap();
                for (p, c) in prev.frames.iter().zip(&out.frames) {
                    for k in 0..NUM_BINS {
                        assert!(
                            c.bins[k].norm() <= p.bins[k].norm() * (1.0 + 1e-12),
                            "bin grew at stage {stages}"
                        );
                    }
                }
                prev = out;
            }
            utterances += 1;
        }
    }
    println!("criterion 07 PASS: per-bin magnitudes non-increasing over stages on {utterances} utterances");
}

// ---------------------------------------------------------------------------
// Criterion 8: metric identities.
// ---------------------------------------------------------------------------

#[test]
fn criterion_08_metric_identities() {
    let speech = synth::speech_like(4.0, 88);
    let noise = synth::white_noise(4.0, 89);
    let noise = TimeSignal::from_samples(noise.samples()[..speech.len()].to_vec());

    let d = delta_snr(&speech, &noise, &speech, &noise).unwrap();
    assert!(d.abs() <= 1e-9, "identity delta snr {d}");

    assert_eq!(ssdr(&speech, &speech).unwrap(), 30.0);
    assert_eq!(ssdr(&speech, &TimeSignal::zeros(speech.len())).unwrap(), -10.0);

    let mut delayed = vec![0.0; speech.len()];
    for n in 3..speech.len() {
        delayed[n] = speech.samples()[n - 3];
    }
    assert_eq!(ssdr(&speech, &TimeSignal::from_samples(delayed)).unwrap(), 30.0);

    assert_eq!(wlakr(&noise, &noise).unwrap(), 0.0);

    let s = stoi(&speech, &speech).unwrap();
    assert!((s - 1.0).abs() <= 1e-6, "stoi self-score {s}");

    println!(
        "criterion 08 PASS: dSNR(id) = {d:.1e}, SSDR(s,s) = 30, SSDR(s,0) = -10, \
         3-sample delay recovered, WLAKR(d,d) = 0, STOI(s,s) = {s:.8}"
    );
}

// ---------------------------------------------------------------------------
// Criterion 9: desk-scale training trend across stages.
// ---------------------------------------------------------------------------

fn mean_delta_snr(rows: &[cidnn::metrics::ReportRow], stages: usize, snr: f64) -> f64 {
    let vals: Vec<f64> = rows
        .iter()
        .filter(|r| r.method == "ci" && r.stages == stages && r.input_snr_db == Some(snr))
        .map(|r| r.delta_snr_db)
        .collect();
    assert!(!vals.is_empty(), "no rows for {stages} stages at {snr} dB");
    vals.iter().sum::<f64>() / vals.len() as f64
}

#[test]
fn criterion_09_training_trend() {
    let fx = fixture();
    assert!(
        fx.train_minutes <= 30.0,
        "training took {:.1} min, budget is 30",
        fx.train_minutes
    );
    let entries = test_entries(fx);
    let opts = EvalOptions {
        snrs_db: vec![0.0],
        methods: vec![
            MethodSpec::Ci { stages: 1 },
            MethodSpec::Ci { stages: 2 },
            MethodSpec::Ci { stages: 3 },
        ],
        seed: 9,
        threads: 1,
    };
    let report = evaluate(&entries, Some(&(fx.mlp.clone(), fx.stats.clone())), &opts).unwrap();
    assert!(report.failures.is_empty(), "{:?}", report.failures);
    let d1 = mean_delta_snr(&report.rows, 1, 0.0);
    let d2 = mean_delta_snr(&report.rows, 2, 0.0);
    let d3 = mean_delta_snr(&report.rows, 3, 0.0);
    assert!(d1 >= 3.0, "1-stage dSNR {d1:.2} dB < 3 dB");
    assert!(d1 < d2 && d2 < d3, "trend broken: {d1:.2} -> {d2:.2} -> {d3:.2}");
    println!(
        "criterion 09 PASS: held-out 0 dB dSNR {d1:.2} -> {d2:.2} -> {d3:.2} dB \
         (training {:.1} min)",
        fx.train_minutes
    );
}

// ---------------------------------------------------------------------------
// Criterion 10: the stage behaves like its +5 dB design target.
// ---------------------------------------------------------------------------

#[test]
fn criterion_10_noisy_target_semantics() {
    let fx = fixture();
    let entries = test_entries(fx);
    let opts = EvalOptions {
        snrs_db: vec![0.0, 5.0],
        methods: vec![MethodSpec::Ci { stages: 1 }],
        seed: 10,
        threads: 1,
    };
    let report = evaluate(&entries, Some(&(fx.mlp.clone(), fx.stats.clone())), &opts).unwrap();
    assert!(report.failures.is_empty(), "{:?}", report.failures);
    for snr in [0.0, 5.0] {
        let d = mean_delta_snr(&report.rows, 1, snr);
        assert!(
            (d - 5.0).abs() <= 2.0,
            "at {snr} dB input the stage moved SNR by {d:.2} dB, wanted 5 +/- 2"
        );
        println!("criterion 10 PASS: {snr} dB input re-measures at +{d:.2} dB (target +5 +/- 2)");
    }
}

// ---------------------------------------------------------------------------
// Criterion 11: classical baseline sanity.
// ---------------------------------------------------------------------------

#[test]
fn criterion_11_classical_baselines() {
    for kind in [GainKind::WienerFilter, GainKind::LogSpectralAmplitude, GainKind::SuperGaussian] {
        let rule = GainRule::new(kind);
        let mut deltas = Vec::new();
        for case in 0..3u64 {
            let speech = synth::speech_like(4.0, 110 + case);
            let noise = synth::white_noise(4.5, 120 + case);
            let (mixture, scaled) = mix_at_snr(&MixtureSpec {
                speech: &speech,
                noise: &noise,
                input_snr_db: 0.0,
                target_gain_db: 5.0,
            })
            .unwrap();
            let (_, masks) = enhance_classical(&mixture, &rule).unwrap();
            for row in &masks.masks {
                for &g in row.iter() {
                    assert!(
                        (rule.g_min..=1.0).contains(&g),
                        "{kind:?} gain {g} out of [{}, 1]",
                        rule.g_min
                    );
                }
            }
            let s_spec = analyze(&speech).unwrap();
            let d_spec = analyze(&scaled).unwrap();
            let pair = filtered_components(&masks, &s_spec, &d_spec).unwrap();
            let s_ref = synthesize(&s_spec).unwrap();
            let d_ref = synthesize(&d_spec).unwrap();
            deltas.push(delta_snr(&s_ref, &d_ref, &pair.speech, &pair.noise).unwrap());
        }
        let mean = deltas.iter().sum::<f64>() / deltas.len() as f64;
        assert!(mean > 0.0, "{kind:?} dSNR {mean:.2} dB not positive");
        println!("criterion 11 PASS: {} dSNR {mean:+.2} dB on 0 dB white noise", kind.name());
    }
}

// ---------------------------------------------------------------------------
// Criterion 12: byte-identical train/enhance/evaluate reruns.
// ---------------------------------------------------------------------------

#[test]
fn criterion_12_cli_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    std::fs::create_dir_all(&corpus).unwrap();
    let mut manifest = String::new();
    for i in 0..3u64 {
        let speech = synth::speech_like(4.0, 700 + i);
        write_wav(corpus.join(format!("s{i}.wav")), &speech).unwrap();
        let noise = synth::white_noise(6.0, 800 + i);
        write_wav(corpus.join(format!("n{i}.wav")), &noise).unwrap();
        let split = if i < 2 { "train" } else { "test" };
        manifest.push_str(&format!("s{i}.wav\tn{i}.wav\t0\t{split}\twhite\n"));
    }
    std::fs::write(corpus.join("set.tsv"), manifest).unwrap();

    let run = |tag: &str| -> (Vec<u8>, Vec<u8>, Vec<u8>) {
        let work = dir.path().join(tag);
        std::fs::create_dir_all(&work).unwrap();
        let model = work.join("model.cidnn");
        let config = work.join("train.cfg");
        std::fs::write(
            &config,
            format!(
                "manifest = {}\npreset = basic\nepochs = 1\nlearning_rate = 0.0003\n\
                 seed = 11\nout = {}\nlog = {}\n",
                corpus.join("set.tsv").display(),
                model.display(),
                work.join("train.log").display()
            ),
        )
        .unwrap();
        let bin = env!("CARGO_BIN_EXE_cidnn");
        let run_cmd = |args: &[&str]| {
            let out = std::process::Command::new(bin).args(args).output().expect("spawn cidnn");
            assert!(
                out.status.success(),
                "cidnn {args:?} failed: {}",
                String::from_utf8_lossy(&out.stderr)
            );
        };
        run_cmd(&["train", "--config", config.to_str().unwrap()]);
        let enhanced = work.join("enhanced.wav");
        run_cmd(&[
            "enhance",
            "--model",
            model.to_str().unwrap(),
            "--stages",
            "2",
            corpus.join("s2.wav").to_str().unwrap(),
            enhanced.to_str().unwrap(),
        ]);
        let csv = work.join("report.csv");
        run_cmd(&[
            "evaluate",
            "--manifest",
            corpus.join("set.tsv").to_str().unwrap(),
            "--methods",
            "identity,wf,ci:1,ci:2",
            "--model",
            model.to_str().unwrap(),
            "--snrs",
            "0,5",
            "--seed",
            "11",
            "--out",
            csv.to_str().unwrap(),
        ]);
        (
            std::fs::read(&model).unwrap(),
            std::fs::read(&enhanced).unwrap(),
            std::fs::read(&csv).unwrap(),
        )
    };

    let (model_a, wav_a, csv_a) = run("a");
    let (model_b, wav_b, csv_b) = run("b");
    assert_eq!(model_a, model_b, "model bytes differ between runs");
    assert_eq!(wav_a, wav_b, "enhanced audio differs between runs");
    assert_eq!(csv_a, csv_b, "report differs between runs");
    println!(
        "criterion 12 PASS: byte-identical model ({} B), audio ({} B) and report ({} B)",
        model_a.len(),
        wav_a.len(),
        csv_a.len()
    );
}
