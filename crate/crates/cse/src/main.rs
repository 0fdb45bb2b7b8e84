//! Command-line driver for the enhancement pipeline: corpus synthesis,
//! feature extraction, training, inference, evaluation and gradient checks.
//!
//! Logs go to stderr; data tables and result paths go to stdout.

use std::collections::HashMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use cse::checkpoint::{self, Checkpoint};
use cse::config::{get as cfg_get, read_config};
use cse::corpus::{build_parallel, build_unparallel, FeatureSet, ParallelCorpus, DELTA_WINDOW};
use cse::ftr::{read_features, write_features, write_stats};
use cse::gradcheck;
use cse::manifest::{Manifest, ManifestEntry};
use cse::wav::read_wav;
use cse_core::disc::DiscSpec;
use cse_core::features::{
    append_deltas, compute_global_stats, log_mel, normalize, FbankConfig,
};
use cse_core::losses::{AcseWeights, CseWeights};
use cse_core::lstm::MappingSpec;
use cse_core::metrics::{frame_mse, log_spectral_distance, segmental_snr};
use cse_core::synth::{NoiseKind, SynthConfig};
use cse_core::train::{
    defaults as net_defaults, enhance, eval_nc, AcseEpochs, CseStageEpochs, Regime, TrainConfig,
    TrainData, Trainer,
};
use cse_core::Mat;

#[derive(Parser)]
#[command(name = "cse", version, about = "Cycle-consistent speech feature enhancement toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus (features + manifest) on disk
    Synth(SynthArgs),
    /// Extract log-mel features from a directory of WAV files
    Extract(ExtractArgs),
    /// Train a mapping network under one of the training regimes
    Train(Box<TrainArgs>),
    /// Run the noisy-to-clean network over feature files
    Enhance(EnhanceArgs),
    /// Score enhanced features against references
    Evaluate(EvaluateArgs),
    /// Verify every analytic gradient against central finite differences
    Gradcheck,
}

#[derive(Args)]
struct SynthArgs {
    /// Output directory for feature files and manifests
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
    /// "parallel" (frame-synchronized pairs) or "unparallel" (disjoint sets)
    #[arg(long, default_value = "parallel")]
    mode: String,
    /// Prefix for utterance ids and manifest filenames
    #[arg(long, default_value = "train")]
    name: String,
    /// Number of utterances [default: 200, toolkit-chosen]
    #[arg(long)]
    n_utterances: Option<usize>,
    /// Shortest utterance in seconds [default: 1.0, toolkit-chosen]
    #[arg(long)]
    duration_min: Option<f64>,
    /// Longest utterance in seconds [default: 3.0, toolkit-chosen]
    #[arg(long)]
    duration_max: Option<f64>,
    /// Sample rate in Hz [default: 16000, toolkit-chosen]
    #[arg(long)]
    sample_rate: Option<u32>,
    /// Lowest mixing SNR in dB [default: 0, toolkit-chosen]
    #[arg(long, allow_negative_numbers = true)]
    snr_min: Option<f64>,
    /// Highest mixing SNR in dB [default: 20, toolkit-chosen]
    #[arg(long, allow_negative_numbers = true)]
    snr_max: Option<f64>,
    /// Comma-separated noise kinds from {white, pink, rumble} [default: all]
    #[arg(long)]
    noise_kinds: Option<String>,
    /// Generation seed [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// key=value file supplying any of the flags above
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct ExtractArgs {
    /// Directory scanned (non-recursively) for .wav files
    #[arg(long, value_name = "DIR")]
    wav_dir: PathBuf,
    /// Output directory for FTR1/NRM1 files and the manifest
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
    /// Delta regression window [default: 2, toolkit-chosen]
    #[arg(long)]
    delta_window: Option<usize>,
}

#[derive(Args)]
struct TrainArgs {
    /// Training regime: baseline | cse | cse-forward | acse
    #[arg(long)]
    regime: Option<String>,
    /// Parallel training manifest (baseline/cse regimes)
    #[arg(long, value_name = "FILE")]
    train_manifest: Option<PathBuf>,
    /// Noisy-set manifest (acse regime)
    #[arg(long, value_name = "FILE")]
    noisy_manifest: Option<PathBuf>,
    /// Clean-set manifest (acse regime)
    #[arg(long, value_name = "FILE")]
    clean_manifest: Option<PathBuf>,
    /// Parallel held-out manifest for per-epoch evaluation
    #[arg(long, value_name = "FILE")]
    heldout_manifest: Option<PathBuf>,
    /// Where to write the final checkpoint
    #[arg(long, value_name = "FILE")]
    checkpoint_out: PathBuf,
    /// Resume from this checkpoint instead of initializing fresh networks
    #[arg(long, value_name = "FILE")]
    resume: Option<PathBuf>,
    /// Append per-epoch log lines to this file (always mirrored to stderr)
    #[arg(long, value_name = "FILE")]
    log: Option<PathBuf>,
    /// Stop once this absolute epoch index is reached (for split runs)
    #[arg(long)]
    stop_after: Option<usize>,
    /// Initialization/shuffling seed [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// SGD learning rate [default: 2e-7, paper-specified]
    #[arg(long)]
    learning_rate: Option<f64>,
    /// SGD momentum [default: 0.5, paper-specified]
    #[arg(long)]
    momentum: Option<f64>,
    /// Global L2 gradient clip [default: off, toolkit-chosen]
    #[arg(long)]
    clip: Option<f64>,
    /// Forward-cycle weight lambda1 [default: 0.6, paper-specified]
    #[arg(long)]
    lambda1: Option<f64>,
    /// Inverse-mapping weight lambda2 [default: 0.4, paper-specified]
    #[arg(long)]
    lambda2: Option<f64>,
    /// Backward-cycle weight lambda3 [default: 1.4, paper-specified]
    #[arg(long)]
    lambda3: Option<f64>,
    /// Backward-cycle weight alpha1 [default: 1.0, paper-specified]
    #[arg(long)]
    alpha1: Option<f64>,
    /// Noisy-discrimination weight alpha2 [default: 8.0, paper-specified]
    #[arg(long)]
    alpha2: Option<f64>,
    /// Clean-discrimination weight alpha3 [default: 8.0, paper-specified]
    #[arg(long)]
    alpha3: Option<f64>,
    /// Noisy identity weight alpha4 [default: 0.5, paper-specified]
    #[arg(long)]
    alpha4: Option<f64>,
    /// Clean identity weight alpha5 [default: 0.5, paper-specified]
    #[arg(long)]
    alpha5: Option<f64>,
    /// Baseline regime epochs [default: 30, toolkit-chosen]
    #[arg(long)]
    baseline_epochs: Option<usize>,
    /// Stage-1 epochs, F alone [default: 5, toolkit-chosen]
    #[arg(long)]
    epochs_pretrain_f: Option<usize>,
    /// Stage-2 epochs, G alone [default: 5, toolkit-chosen]
    #[arg(long)]
    epochs_pretrain_g: Option<usize>,
    /// Stage-3 epochs, forward cycle [default: 10, toolkit-chosen]
    #[arg(long)]
    epochs_forward: Option<usize>,
    /// Stage-4 epochs, both cycles [default: 10, toolkit-chosen]
    #[arg(long)]
    epochs_full: Option<usize>,
    /// Adversarial init epochs [default: 5, toolkit-chosen]
    #[arg(long)]
    epochs_acse_init: Option<usize>,
    /// Adversarial joint epochs [default: 20, toolkit-chosen]
    #[arg(long)]
    epochs_acse_joint: Option<usize>,
    /// Held-out evaluation period in epochs [default: 1, toolkit-chosen]
    #[arg(long)]
    eval_every: Option<usize>,
    /// Delta regression window [default: 2, toolkit-chosen]
    #[arg(long)]
    delta_window: Option<usize>,
    /// LSTM hidden units per layer [default: 512, paper-specified]
    #[arg(long)]
    hidden: Option<usize>,
    /// LSTM projection size [default: 256, paper-specified]
    #[arg(long)]
    proj: Option<usize>,
    /// Number of LSTM layers [default: 2, paper-specified]
    #[arg(long)]
    layers: Option<usize>,
    /// Discriminator hidden units [default: 512, paper-specified]
    #[arg(long)]
    disc_hidden: Option<usize>,
    /// key=value file supplying any of the flags above
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct EnhanceArgs {
    /// Trained checkpoint (the noisy-to-clean network and both stat sets)
    #[arg(long, value_name = "FILE")]
    checkpoint: PathBuf,
    /// Single 87-dim FTR1 input file
    #[arg(long, value_name = "FILE", requires = "output", conflicts_with_all = ["manifest", "out_dir"])]
    input: Option<PathBuf>,
    /// Output path for the single-file mode
    #[arg(long, value_name = "FILE")]
    output: Option<PathBuf>,
    /// Manifest whose noisy column is enhanced in batch
    #[arg(long, value_name = "FILE", requires = "out_dir")]
    manifest: Option<PathBuf>,
    /// Output directory for batch mode; also gets enhanced.manifest.tsv
    #[arg(long, value_name = "DIR")]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Manifest whose clean column points at enhanced features
    #[arg(long, value_name = "FILE")]
    enhanced_manifest: PathBuf,
    /// Parallel manifest with reference clean and original noisy features
    #[arg(long, value_name = "FILE")]
    reference_manifest: PathBuf,
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(a) => cmd_synth(a),
        Command::Extract(a) => cmd_extract(a),
        Command::Train(a) => cmd_train(*a),
        Command::Enhance(a) => cmd_enhance(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Gradcheck => cmd_gradcheck(),
    };
    if let Err(e) = result {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn load_cfg_map(path: &Option<PathBuf>) -> anyhow::Result<(HashMap<String, String>, PathBuf)> {
    match path {
        Some(p) => Ok((read_config(p)?, p.clone())),
        None => Ok((HashMap::new(), PathBuf::new())),
    }
}

/// Flag wins over config value wins over default.
fn resolve<T: std::str::FromStr + Clone>(
    flag: &Option<T>,
    map: &HashMap<String, String>,
    map_path: &Path,
    key: &str,
    default: T,
) -> anyhow::Result<T> {
    if let Some(v) = flag {
        return Ok(v.clone());
    }
    Ok(cfg_get::<T>(map, map_path, key)?.unwrap_or(default))
}

fn cmd_synth(a: SynthArgs) -> anyhow::Result<()> {
    let (map, map_path) = load_cfg_map(&a.config)?;
    let kinds_raw = resolve(&a.noise_kinds, &map, &map_path, "noise-kinds", "white,pink,rumble".into())?;
    let noise_kinds = kinds_raw
        .split(',')
        .map(|s| NoiseKind::parse(s.trim()))
        .collect::<Result<Vec<_>, _>>()?;
    let cfg = SynthConfig {
        n_utterances: resolve(&a.n_utterances, &map, &map_path, "n-utterances", 200)?,
        duration_range: (
            resolve(&a.duration_min, &map, &map_path, "duration-min", 1.0)?,
            resolve(&a.duration_max, &map, &map_path, "duration-max", 3.0)?,
        ),
        sample_rate: resolve(&a.sample_rate, &map, &map_path, "sample-rate", 16000)?,
        snr_range: (
            resolve(&a.snr_min, &map, &map_path, "snr-min", 0.0)?,
            resolve(&a.snr_max, &map, &map_path, "snr-max", 20.0)?,
        ),
        noise_kinds,
        seed: resolve(&a.seed, &map, &map_path, "seed", 0)?,
    };
    match a.mode.as_str() {
        "parallel" => {
            let manifest = build_parallel(&cfg, &a.out_dir, &a.name)?;
            eprintln!("wrote parallel corpus: {} utterances", cfg.n_utterances);
            println!("{}", manifest.display());
        }
        "unparallel" => {
            let (noisy, clean) = build_unparallel(&cfg, &a.out_dir, &a.name)?;
            eprintln!(
                "wrote unparallel corpus: {} noisy + {} clean utterances",
                cfg.n_utterances / 2,
                cfg.n_utterances - cfg.n_utterances / 2
            );
            println!("{}", noisy.display());
            println!("{}", clean.display());
        }
        other => bail!("unknown mode '{other}' (parallel|unparallel)"),
    }
    Ok(())
}

fn cmd_extract(a: ExtractArgs) -> anyhow::Result<()> {
    let window = a.delta_window.unwrap_or(DELTA_WINDOW);
    let mut wavs: Vec<PathBuf> = std::fs::read_dir(&a.wav_dir)
        .with_context(|| format!("reading {}", a.wav_dir.display()))?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "wav"))
        .collect();
    wavs.sort();
    if wavs.is_empty() {
        bail!("no .wav files in {}", a.wav_dir.display());
    }
    std::fs::create_dir_all(&a.out_dir)?;
    let mut statics = Vec::new();
    let mut augmenteds = Vec::new();
    let mut entries = Vec::new();
    for wav_path in &wavs {
        let stem = wav_path
            .file_stem()
            .and_then(|s| s.to_str())
            .context("bad wav filename")?
            .to_string();
        let wave = read_wav(wav_path)?;
        let fbank = FbankConfig::for_sample_rate(wave.sample_rate);
        let static29 = log_mel(&wave, &fbank)?;
        let augmented = append_deltas(&static29, window)?;
        let static_path = a.out_dir.join(format!("{stem}.static.ftr"));
        let augmented_path = a.out_dir.join(format!("{stem}.augmented.ftr"));
        write_features(&static_path, &static29)?;
        write_features(&augmented_path, &augmented)?;
        entries.push(ManifestEntry {
            id: stem,
            clean_path: static_path,
            noisy_path: Some(augmented_path),
            snr_db: None,
            noise_kind: None,
        });
        statics.push(static29);
        augmenteds.push(augmented);
    }
    write_stats(&a.out_dir.join("static.nrm"), &compute_global_stats(&statics)?)?;
    write_stats(&a.out_dir.join("augmented.nrm"), &compute_global_stats(&augmenteds)?)?;
    let manifest_path = a.out_dir.join("extract.manifest.tsv");
    Manifest { entries }.write(&manifest_path)?;
    eprintln!("extracted {} utterances", wavs.len());
    println!("{}", manifest_path.display());
    Ok(())
}

fn parse_regime(s: &str) -> anyhow::Result<Regime> {
    Ok(match s {
        "cse-forward" => Regime::CseForward,
        other => Regime::parse(other)?,
    })
}

fn cmd_train(a: TrainArgs) -> anyhow::Result<()> {
    let (map, map_path) = load_cfg_map(&a.config)?;
    let defaults = TrainConfig::default();
    let regime_raw = match &a.regime {
        Some(r) => r.clone(),
        None => cfg_get::<String>(&map, &map_path, "regime")?
            .context("--regime is required (baseline|cse|cse-forward|acse)")?,
    };
    let regime = parse_regime(&regime_raw)?;
    let clip = match a.clip {
        Some(c) => Some(c),
        None => cfg_get::<f64>(&map, &map_path, "clip")?,
    };
    let cfg = TrainConfig {
        regime,
        baseline_epochs: resolve(&a.baseline_epochs, &map, &map_path, "baseline-epochs", defaults.baseline_epochs)?,
        cse_stages: CseStageEpochs {
            pretrain_f: resolve(&a.epochs_pretrain_f, &map, &map_path, "epochs-pretrain-f", 5)?,
            pretrain_g: resolve(&a.epochs_pretrain_g, &map, &map_path, "epochs-pretrain-g", 5)?,
            forward: resolve(&a.epochs_forward, &map, &map_path, "epochs-forward", 10)?,
            full: resolve(&a.epochs_full, &map, &map_path, "epochs-full", 10)?,
        },
        acse_epochs: AcseEpochs {
            init: resolve(&a.epochs_acse_init, &map, &map_path, "epochs-acse-init", 5)?,
            joint: resolve(&a.epochs_acse_joint, &map, &map_path, "epochs-acse-joint", 20)?,
        },
        seed: resolve(&a.seed, &map, &map_path, "seed", 0)?,
        cse_weights: CseWeights {
            lambda1: resolve(&a.lambda1, &map, &map_path, "lambda1", 0.6)?,
            lambda2: resolve(&a.lambda2, &map, &map_path, "lambda2", 0.4)?,
            lambda3: resolve(&a.lambda3, &map, &map_path, "lambda3", 1.4)?,
        },
        acse_weights: AcseWeights {
            alpha1: resolve(&a.alpha1, &map, &map_path, "alpha1", 1.0)?,
            alpha2: resolve(&a.alpha2, &map, &map_path, "alpha2", 8.0)?,
            alpha3: resolve(&a.alpha3, &map, &map_path, "alpha3", 8.0)?,
            alpha4: resolve(&a.alpha4, &map, &map_path, "alpha4", 0.5)?,
            alpha5: resolve(&a.alpha5, &map, &map_path, "alpha5", 0.5)?,
        },
        learning_rate: resolve(&a.learning_rate, &map, &map_path, "learning-rate", defaults.learning_rate)?,
        momentum: resolve(&a.momentum, &map, &map_path, "momentum", defaults.momentum)?,
        clip,
        eval_every: resolve(&a.eval_every, &map, &map_path, "eval-every", 1)?,
        record_steps: false,
        delta_window: resolve(&a.delta_window, &map, &map_path, "delta-window", DELTA_WINDOW)?,
    };
    let hidden = resolve(&a.hidden, &map, &map_path, "hidden", net_defaults::HIDDEN)?;
    let proj = resolve(&a.proj, &map, &map_path, "proj", net_defaults::PROJ)?;
    let layers = resolve(&a.layers, &map, &map_path, "layers", net_defaults::LAYERS)?;
    let disc_hidden =
        resolve(&a.disc_hidden, &map, &map_path, "disc-hidden", net_defaults::DISC_HIDDEN)?;

    // data
    enum Data {
        Parallel(Vec<(Mat, Mat)>),
        Unparallel { noisy: Vec<Mat>, clean: Vec<Mat> },
    }
    let (data, noisy_stats, clean_stats) = match regime {
        Regime::Baseline | Regime::CseForward | Regime::CseFull => {
            let manifest = a
                .train_manifest
                .as_ref()
                .context("--train-manifest is required for this regime")?;
            let corpus = ParallelCorpus::load(manifest)?;
            let (ns, cs) = corpus.stats()?;
            let pairs = corpus.normalized(&ns, &cs)?;
            eprintln!("loaded {} parallel utterances", pairs.len());
            (Data::Parallel(pairs), ns, cs)
        }
        Regime::Acse => {
            let nm = a
                .noisy_manifest
                .as_ref()
                .context("--noisy-manifest is required for acse")?;
            let cm = a
                .clean_manifest
                .as_ref()
                .context("--clean-manifest is required for acse")?;
            let noisy_set = FeatureSet::load(nm, true)?;
            let clean_set = FeatureSet::load(cm, false)?;
            let ns = noisy_set.stats()?;
            let cs = clean_set.stats()?;
            let noisy = noisy_set.normalized(&ns)?;
            let clean = clean_set.normalized(&cs)?;
            eprintln!("loaded {} noisy + {} clean utterances", noisy.len(), clean.len());
            (Data::Unparallel { noisy, clean }, ns, cs)
        }
    };
    let heldout: Option<Vec<(Mat, Mat)>> = match &a.heldout_manifest {
        Some(m) => {
            let corpus = ParallelCorpus::load(m)?;
            Some(corpus.normalized(&noisy_stats, &clean_stats)?)
        }
        None => None,
    };

    let mut trainer = match &a.resume {
        Some(path) => {
            let ckp = checkpoint::load(path)?;
            if ckp.trainer.cfg.regime != regime {
                bail!(
                    "checkpoint regime {} does not match requested {}",
                    ckp.trainer.cfg.regime.name(),
                    regime.name()
                );
            }
            eprintln!("resumed from {} at epoch {}", path.display(), ckp.trainer.epoch);
            ckp.trainer
        }
        None => Trainer::new(
            cfg,
            MappingSpec { hidden, proj, layers, ..net_defaults::f_spec() },
            MappingSpec { hidden, proj, layers, ..net_defaults::g_spec() },
            DiscSpec { hidden: disc_hidden, ..net_defaults::d_noisy_spec() },
            DiscSpec { hidden: disc_hidden, ..net_defaults::d_clean_spec() },
        )?,
    };

    let mut log_file = match &a.log {
        Some(p) => Some(
            std::fs::OpenOptions::new()
                .create(true)
                .append(true)
                .open(p)
                .with_context(|| format!("opening log {}", p.display()))?,
        ),
        None => None,
    };
    let stop_after = a.stop_after.unwrap_or(usize::MAX);
    while !trainer.finished() && trainer.epoch < stop_after {
        let record = match &data {
            Data::Parallel(pairs) => trainer.run_epoch(&TrainData::Parallel(pairs))?,
            Data::Unparallel { noisy, clean } => {
                trainer.run_epoch(&TrainData::Unparallel { noisy, clean })?
            }
        };
        let mut line = format!("{}\t{}", record.epoch, record.stage.name());
        for (name, value) in &record.losses {
            line.push_str(&format!("\t{name}={value:.6e}"));
        }
        if let Some(h) = &heldout {
            if (record.epoch + 1) % trainer.cfg.eval_every.max(1) == 0 {
                let nc = eval_nc(&trainer.f, h)?;
                line.push_str(&format!("\theldout_nc={nc:.6e}"));
            }
        }
        eprintln!("{line}");
        if let Some(f) = &mut log_file {
            writeln!(f, "{line}")?;
        }
    }

    let ckp = Checkpoint { trainer, noisy_stats, clean_stats };
    checkpoint::save(&a.checkpoint_out, &ckp)?;
    eprintln!("saved checkpoint at epoch {}", ckp.trainer.epoch);
    println!("{}", a.checkpoint_out.display());
    Ok(())
}

fn enhance_one(
    ckp: &Checkpoint,
    input: &Path,
    output: &Path,
) -> anyhow::Result<()> {
    let noisy = read_features(input)?;
    let normalized = normalize(&noisy, &ckp.noisy_stats)?;
    let enhanced = enhance(&ckp.trainer.f, &normalized, &ckp.clean_stats)?;
    write_features(output, &enhanced)?;
    Ok(())
}

fn cmd_enhance(a: EnhanceArgs) -> anyhow::Result<()> {
    let ckp = checkpoint::load(&a.checkpoint)?;
    match (&a.input, &a.manifest) {
        (Some(input), None) => {
            let output = a.output.as_ref().context("--output is required with --input")?;
            enhance_one(&ckp, input, output)?;
            println!("{}", output.display());
        }
        (None, Some(manifest_path)) => {
            let out_dir = a.out_dir.as_ref().context("--out-dir is required with --manifest")?;
            std::fs::create_dir_all(out_dir)?;
            let manifest = Manifest::read(manifest_path)?;
            let mut entries = Vec::new();
            for e in &manifest.entries {
                let noisy_path = e
                    .noisy_path
                    .as_ref()
                    .with_context(|| format!("{}: manifest has no noisy features", e.id))?;
                let out = out_dir.join(format!("{}.enhanced.ftr", e.id));
                enhance_one(&ckp, noisy_path, &out)?;
                entries.push(ManifestEntry {
                    id: e.id.clone(),
                    clean_path: out,
                    noisy_path: None,
                    snr_db: None,
                    noise_kind: None,
                });
            }
            let out_manifest = out_dir.join("enhanced.manifest.tsv");
            Manifest { entries }.write(&out_manifest)?;
            eprintln!("enhanced {} utterances", manifest.entries.len());
            println!("{}", out_manifest.display());
        }
        _ => bail!("use either --input/--output or --manifest/--out-dir"),
    }
    Ok(())
}

fn cmd_evaluate(a: EvaluateArgs) -> anyhow::Result<()> {
    let enhanced = Manifest::read(&a.enhanced_manifest)?;
    let reference = Manifest::read(&a.reference_manifest)?;
    let by_id: HashMap<&str, &ManifestEntry> =
        reference.entries.iter().map(|e| (e.id.as_str(), e)).collect();
    println!("id\tframes\tmse\tsegsnr\tlsd\tmse_noisy\tsegsnr_noisy\tlsd_noisy");
    let mut sums = [0.0f64; 6];
    let mut n = 0usize;
    for e in &enhanced.entries {
        let r = by_id
            .get(e.id.as_str())
            .with_context(|| format!("{}: not in reference manifest", e.id))?;
        let enh = read_features(&e.clean_path)?;
        let clean = read_features(&r.clean_path)?;
        let noisy_path = r
            .noisy_path
            .as_ref()
            .with_context(|| format!("{}: reference has no noisy features", e.id))?;
        let noisy = read_features(noisy_path)?;
        // passthrough baseline: the static third of the noisy stream
        let noisy_static = Mat::from_fn(noisy.frames(), clean.dim(), |t, c| noisy.data[(t, c)]);
        let row = [
            frame_mse(&enh.data, &clean.data)?,
            segmental_snr(&enh.data, &clean.data)?,
            log_spectral_distance(&enh.data, &clean.data)?,
            frame_mse(&noisy_static, &clean.data)?,
            segmental_snr(&noisy_static, &clean.data)?,
            log_spectral_distance(&noisy_static, &clean.data)?,
        ];
        println!(
            "{}\t{}\t{:.6}\t{:.3}\t{:.4}\t{:.6}\t{:.3}\t{:.4}",
            e.id, enh.frames(), row[0], row[1], row[2], row[3], row[4], row[5]
        );
        for (s, v) in sums.iter_mut().zip(row) {
            *s += v;
        }
        n += 1;
    }
    if n == 0 {
        bail!("empty enhanced manifest");
    }
    let mean: Vec<f64> = sums.iter().map(|s| s / n as f64).collect();
    println!(
        "MEAN\t{n}\t{:.6}\t{:.3}\t{:.4}\t{:.6}\t{:.3}\t{:.4}",
        mean[0], mean[1], mean[2], mean[3], mean[4], mean[5]
    );
    println!(
        "DELTA_VS_NOISY\t-\t{:.6}\t{:.3}\t{:.4}\t-\t-\t-",
        mean[0] - mean[3],
        mean[1] - mean[4],
        mean[2] - mean[5]
    );
    Ok(())
}

fn cmd_gradcheck() -> anyhow::Result<()> {
    let results = gradcheck::run_all();
    let mut failed = 0;
    for r in &results {
        let status = if r.passed() { "PASS" } else { "FAIL" };
        println!("{}\t{:.3e}\t{status}", r.name, r.max_rel_error);
        if !r.passed() {
            failed += 1;
        }
    }
    if failed > 0 {
        bail!("{failed} gradient checks exceeded {}", gradcheck::TOLERANCE);
    }
    eprintln!("all {} gradient checks passed", results.len());
    Ok(())
}
