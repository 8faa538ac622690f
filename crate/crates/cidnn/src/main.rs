//! Command-line front end: dataset mixing, normalization statistics,
//! training, enhancement and evaluation.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use cidnn::ci::{ci_enhance, CiConfig};
use cidnn::classical::{enhance_classical, GainRule};
use cidnn::config::Config;
use cidnn::dsp::synthesize;
use cidnn::error::{Error, Result};
use cidnn::levels::{crop_noise, mix_at_snr, MixtureSpec, TRAINING_SNRS_DB};
use cidnn::manifest::{load_manifest, Manifest, ManifestEntry, Split};
use cidnn::metrics::{evaluate, EvalOptions, MethodSpec};
use cidnn::model::{load_model, save_model};
use cidnn::train::{train, Preset, TargetKind, TrainingConfig};
use cidnn::wav::{read_wav, write_wav};

#[derive(Parser)]
#[command(
    name = "cidnn",
    version,
    about = "Staged spectral-mask speech enhancement: mix, train, enhance, evaluate"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mix manifest utterances with their noises at a fixed SNR and write
    /// mixture WAVs plus scaled-noise sidecars.
    Mix {
        #[arg(long)]
        manifest: PathBuf,
        /// Target SNR in dB.
        #[arg(long)]
        snr: f64,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Restrict to one split (train, validation, test) or use all.
        #[arg(long, default_value = "all")]
        split: String,
    },
    /// Compute per-bin input normalization statistics over the training
    /// split and write them as tab-separated text.
    Stats {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Train a network from a `key = value` config file.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the config epoch count.
        #[arg(long)]
        epochs: Option<usize>,
        /// Overrides the config model output path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Enhance one WAV file, either with a trained model (`--model`,
    /// `--stages`) or a classical rule (`--rule wf|lsa|sg`).
    Enhance {
        #[arg(long, conflicts_with = "rule")]
        model: Option<PathBuf>,
        /// Number of identical stages to run.
        #[arg(long, default_value_t = 1)]
        stages: usize,
        #[arg(long)]
        rule: Option<String>,
        input: PathBuf,
        output: PathBuf,
    },
    /// Score methods over the manifest's test split and write the CSV table.
    Evaluate {
        #[arg(long)]
        manifest: PathBuf,
        /// Comma-separated list: identity, wf, lsa, sg, ci:1, ci:2, ci:3, ...
        #[arg(long)]
        methods: String,
        /// Trained model, required for ci methods.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated SNR grid in dB; default -5,0,5,10,15,20.
        #[arg(long)]
        snrs: Option<String>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Worker threads for scoring.
        #[arg(long, default_value_t = 1)]
        threads: u64,
    },
}

fn entries_for_split(manifest: &Manifest, split: &str) -> Result<Vec<ManifestEntry>> {
    match split {
        "all" => Ok(manifest.entries.clone()),
        "train" => Ok(manifest.with_split(Split::Train)),
        "validation" => Ok(manifest.with_split(Split::Validation)),
        "test" => Ok(manifest.with_split(Split::Test)),
        other => Err(Error::InvalidArgument(format!("unknown split {other:?}"))),
    }
}

fn snr_tag(snr: f64) -> String {
    if snr == snr.trunc() {
        format!("{}", snr as i64)
    } else {
        format!("{snr}")
    }
}

fn crop_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

fn cmd_mix(manifest: &Path, snr: f64, out: &Path, seed: u64, split: &str) -> Result<()> {
    let manifest = load_manifest(manifest)?;
    let entries = entries_for_split(&manifest, split)?;
    if entries.is_empty() {
        return Err(Error::InvalidArgument(format!("no entries in split {split:?}")));
    }
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    for (i, entry) in entries.iter().enumerate() {
        let speech = read_wav(&entry.speech_path)?;
        let noise = read_wav(&entry.noise_path)?;
        let segment =
            crop_noise(&noise, entry.noise_offset_seconds, speech.len(), crop_seed(seed, i))?;
        let (mixture, scaled) = mix_at_snr(&MixtureSpec {
            speech: &speech,
            noise: &segment,
            input_snr_db: snr,
            target_gain_db: cidnn::levels::TARGET_DELTA_DB,
        })?;
        let stem = entry
            .speech_path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| format!("utt{i}"));
        let base = format!("{i:03}_{stem}_{}_snr{}", entry.noise_type, snr_tag(snr));
        write_wav(out.join(format!("{base}.wav")), &mixture)?;
        write_wav(out.join(format!("{base}_noise.wav")), &scaled)?;
    }
    println!("wrote {} mixtures to {}", entries.len(), out.display());
    Ok(())
}

fn cmd_stats(manifest: &Path, out: &Path, seed: u64) -> Result<()> {
    let manifest = load_manifest(manifest)?;
    let mut entries = manifest.with_split(Split::Train);
    if entries.is_empty() {
        entries = manifest.entries.clone();
    }
    let cfg = TrainingConfig { seed, ..TrainingConfig::default() };
    let dataset = cidnn::train::build_dataset(&entries, &cfg)?;
    let stats = cidnn::train::dataset_norm_stats(&dataset)?;
    let mut text = String::from("# bin\tmean\tstd\n");
    for k in 0..cidnn::dsp::NUM_BINS {
        text.push_str(&format!("{k}\t{:.12e}\t{:.12e}\n", stats.mean[k], stats.std[k]));
    }
    std::fs::write(out, text).map_err(|e| Error::io(out, e))?;
    println!("wrote normalization statistics for {} bins to {}", cidnn::dsp::NUM_BINS, out.display());
    Ok(())
}

const TRAIN_KEYS: &[&str] = &[
    "manifest",
    "preset",
    "target_kind",
    "target_delta_db",
    "epochs",
    "learning_rate",
    "lr_decay",
    "minibatch",
    "validation_fraction",
    "seed",
    "snr_levels",
    "out",
    "log",
];

fn cmd_train(
    config_path: &Path,
    seed: Option<u64>,
    epochs: Option<usize>,
    out: Option<PathBuf>,
) -> Result<()> {
    let mut file_cfg = Config::load(config_path)?;
    file_cfg.check_keys(TRAIN_KEYS)?;
    if let Some(seed) = seed {
        file_cfg.set("seed", seed);
    }
    if let Some(epochs) = epochs {
        file_cfg.set("epochs", epochs);
    }
    if let Some(out) = &out {
        file_cfg.set("out", out.display());
    }

    let preset: Preset = file_cfg.parse_or("preset", Preset::Basic)?;
    let target_kind: TargetKind = file_cfg.parse_or("target_kind", TargetKind::NoisyDelta)?;
    let cfg = TrainingConfig {
        preset,
        target_kind,
        target_delta_db: file_cfg
            .parse_or("target_delta_db", preset.default_target_delta_db())?,
        snr_levels: file_cfg
            .parse_f64_list("snr_levels")?
            .unwrap_or_else(|| TRAINING_SNRS_DB.to_vec()),
        minibatch: file_cfg.parse_or("minibatch", cidnn::train::MINIBATCH)?,
        epochs: file_cfg.parse_or("epochs", 10)?,
        learning_rate: file_cfg.parse_or("learning_rate", 1e-4)?,
        lr_decay: file_cfg.parse_or("lr_decay", 1.0)?,
        validation_fraction: file_cfg.parse_or("validation_fraction", 0.2)?,
        seed: file_cfg.parse_or("seed", 1)?,
    };
    let manifest_path = {
        let raw = PathBuf::from(file_cfg.require("manifest")?);
        if raw.is_absolute() {
            raw
        } else {
            config_path.parent().unwrap_or_else(|| Path::new(".")).join(raw)
        }
    };
    let out_path = PathBuf::from(file_cfg.get("out").unwrap_or("model.cidnn"));

    let manifest = load_manifest(&manifest_path)?;
    let trained = train(&cfg, &manifest.entries)?;
    let digest = format!(
        "preset={preset:?} target={target_kind:?} delta_db={} snrs={:?} minibatch={} epochs={} lr={} lr_decay={} val={} seed={}",
        cfg.target_delta_db,
        cfg.snr_levels,
        cfg.minibatch,
        cfg.epochs,
        cfg.learning_rate,
        cfg.lr_decay,
        cfg.validation_fraction,
        cfg.seed
    );
    save_model(&out_path, &trained.mlp, &trained.stats, &digest)?;
    let log_text = trained.log.join("\n") + "\n";
    match file_cfg.get("log") {
        Some(log_path) => {
            std::fs::write(log_path, log_text).map_err(|e| Error::io(log_path, e))?
        }
        None => print!("{log_text}"),
    }
    println!("saved model to {}", out_path.display());
    Ok(())
}

fn cmd_enhance(
    model: Option<&Path>,
    stages: usize,
    rule: Option<&str>,
    input: &Path,
    output: &Path,
) -> Result<()> {
    let signal = read_wav(input)?;
    let enhanced = match (model, rule) {
        (Some(model_path), None) => {
            let model = load_model(model_path)?;
            let spec = cidnn::dsp::analyze(&signal)?;
            let (out_spec, _) = ci_enhance(
                &CiConfig { stages, mlp: &model.mlp, stats: &model.stats },
                &spec,
            )?;
            synthesize(&out_spec)?
        }
        (None, Some(rule)) => {
            let rule = GainRule::new(rule.parse()?);
            enhance_classical(&signal, &rule)?.0
        }
        _ => {
            return Err(Error::InvalidArgument(
                "pass exactly one of --model or --rule".into(),
            ))
        }
    };
    write_wav(output, &enhanced)?;
    println!("wrote {}", output.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_evaluate(
    manifest: &Path,
    methods: &str,
    model: Option<&Path>,
    out: &Path,
    snrs: Option<&str>,
    seed: u64,
    threads: u64,
) -> Result<()> {
    let manifest = load_manifest(manifest)?;
    let mut entries = manifest.with_split(Split::Test);
    if entries.is_empty() {
        eprintln!("note: manifest has no test split, evaluating every entry");
        entries = manifest.entries.clone();
    }
    let methods: Vec<MethodSpec> = methods
        .split(',')
        .map(|m| m.trim().parse())
        .collect::<Result<_>>()?;
    let snrs_db = match snrs {
        Some(list) => list
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidArgument(format!("bad SNR {s:?}")))
            })
            .collect::<Result<Vec<f64>>>()?,
        None => TRAINING_SNRS_DB.to_vec(),
    };
    let loaded = match model {
        Some(path) => {
            let m = load_model(path)?;
            Some((m.mlp, m.stats))
        }
        None => None,
    };
    let opts = EvalOptions { snrs_db, methods, seed, threads: threads.max(1) as usize };
    let report = evaluate(&entries, loaded.as_ref(), &opts)?;
    for failure in &report.failures {
        eprintln!("warning: {failure}");
    }
    eprintln!("note: PESQ columns not implemented (ITU P.862)");
    std::fs::write(out, report.to_csv()).map_err(|e| Error::io(out, e))?;
    println!("wrote {} rows to {}", report.rows.len(), out.display());
    Ok(())
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Mix { manifest, snr, out, seed, split } => {
            cmd_mix(&manifest, snr, &out, seed, &split)
        }
        Command::Stats { manifest, out, seed } => cmd_stats(&manifest, &out, seed),
        Command::Train { config, seed, epochs, out } => cmd_train(&config, seed, epochs, out),
        Command::Enhance { model, stages, rule, input, output } => {
            cmd_enhance(model.as_deref(), stages, rule.as_deref(), &input, &output)
        }
        Command::Evaluate { manifest, methods, model, out, snrs, seed, threads } => cmd_evaluate(
            &manifest,
            &methods,
            model.as_deref(),
            &out,
            snrs.as_deref(),
            seed,
            threads,
        ),
    }
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
