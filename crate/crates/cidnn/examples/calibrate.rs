// Temporary calibration harness for the acceptance training fixture.
use cidnn::manifest::{ManifestEntry, Split};
use cidnn::metrics::{evaluate, EvalOptions, MethodSpec};
use cidnn::synth;
use cidnn::train::{train, Preset, TargetKind, TrainingConfig};
use cidnn::wav::write_wav;
use std::path::PathBuf;

fn noise_for(kind: usize, seconds: f64, seed: u64) -> (cidnn::dsp::TimeSignal, &'static str) {
    match kind % 3 {
        0 => (synth::white_noise(seconds, seed), "white"),
        1 => (synth::babble_noise(seconds, seed), "babble"),
        _ => (synth::lowpass_noise(seconds, seed), "lowpass"),
    }
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let epochs: usize = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(8);
    let lr: f64 = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(3e-4);
    let decay: f64 = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(0.7);
    let n_train: usize = args.get(4).map(|s| s.parse().unwrap()).unwrap_or(24);
    let dir = PathBuf::from("/tmp/cal");
    std::fs::create_dir_all(&dir).unwrap();
    let mut entries = Vec::new();
    for i in 0..n_train {
        let sp = dir.join(format!("train_s{i}.wav"));
        if !sp.exists() {
            write_wav(&sp, &synth::speech_like(6.0, 1000 + i as u64)).unwrap();
        }
        let np = dir.join(format!("train_n{i}.wav"));
        let (noise, label) = noise_for(i, 9.0, 2000 + i as u64);
        if !np.exists() {
            write_wav(&np, &noise).unwrap();
        }
        entries.push(ManifestEntry {
            speech_path: sp, noise_path: np, noise_offset_seconds: 0.0,
            split: Split::Train, noise_type: label.to_string(),
        });
    }
    for i in 0..6usize {
        let sp = dir.join(format!("test_s{i}.wav"));
        if !sp.exists() {
            write_wav(&sp, &synth::speech_like(6.0, 5000 + i as u64)).unwrap();
        }
        let np = dir.join(format!("test_n{i}.wav"));
        let (noise, label) = noise_for(i, 9.0, 6000 + i as u64);
        if !np.exists() {
            write_wav(&np, &noise).unwrap();
        }
        entries.push(ManifestEntry {
            speech_path: sp, noise_path: np, noise_offset_seconds: 0.0,
            split: Split::Test, noise_type: label.to_string(),
        });
    }
    let cfg = TrainingConfig {
        preset: Preset::Basic,
        target_kind: TargetKind::NoisyDelta,
        target_delta_db: 5.0,
        minibatch: 128,
        epochs,
        learning_rate: lr,
        lr_decay: decay,
        validation_fraction: 0.2,
        seed: 42,
        ..TrainingConfig::default()
    };
    let t0 = std::time::Instant::now();
    let trained = train(&cfg, &entries).unwrap();
    println!("trained in {:.1} min", t0.elapsed().as_secs_f64() / 60.0);
    for line in &trained.log {
        if true {
            println!("log: {line}");
        }
    }
    cidnn::model::save_model(dir.join("model.cidnn"), &trained.mlp, &trained.stats, "cal").unwrap();

    let test: Vec<ManifestEntry> = entries.iter().filter(|e| e.split == Split::Test).cloned().collect();
    let opts = EvalOptions {
        snrs_db: vec![0.0, 5.0],
        methods: vec![
            MethodSpec::Ci { stages: 1 },
            MethodSpec::Ci { stages: 2 },
            MethodSpec::Ci { stages: 3 },
        ],
        seed: 9,
        threads: 4,
    };
    let report = evaluate(&test, Some(&(trained.mlp, trained.stats)), &opts).unwrap();
    for f in &report.failures { println!("failure: {f}"); }
    for row in &report.rows {
        println!(
            "{} snr={:?} {} r={} dSNR={:.2} ssdr={:.2} wlakr={:.4} stoi={:.3}",
            row.noise_type, row.input_snr_db, row.method, row.stages,
            row.delta_snr_db, row.ssdr_db, row.wlakr_abs, row.stoi
        );
    }
    // Aggregates across noise types.
    for snr in [0.0, 5.0] {
        for stages in 1..=3 {
            let vals: Vec<f64> = report.rows.iter()
                .filter(|r| r.stages == stages && r.input_snr_db == Some(snr))
                .map(|r| r.delta_snr_db).collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            println!("AGG snr={snr} stages={stages} dSNR={mean:.2}");
        }
    }
}
