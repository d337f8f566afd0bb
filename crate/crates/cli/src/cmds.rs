//! Subcommand implementations.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::Subcommand;

use vauth_core::attack::{
    fp_decay_montecarlo, run_impersonation_attack, run_injection_attack, run_mangled_attack,
    run_replay_attack, MfccParams, UniformScores,
};
use vauth_core::config::TrainConfig;
use vauth_core::decision::{
    load_model, save_model, train_classifier, write_training_csv, ClassifierModel, Label,
};
use vauth_core::pipeline::{batch_match, build_training_set, match_pair, BatchOutcome};
use vauth_core::synth::{
    make_noise, synth_command_corpus, synth_phoneme_bank, NoiseKind, PhonemeKind,
};
use vauth_core::wav::{read_wav, write_wav, WavEncoding};
use vauth_core::{PipelineConfig, SampledSignal};
use vauth_gateway::{serve, ServerConfig};

pub fn cmd_match(
    cfg: &PipelineConfig,
    acc_path: &Path,
    mic_path: &Path,
    model_path: &Path,
    json_out: Option<PathBuf>,
    cleaned_out: Option<PathBuf>,
    dump_segments: Option<PathBuf>,
) -> anyhow::Result<u8> {
    let acc = read_wav(acc_path).with_context(|| format!("reading {}", acc_path.display()))?;
    let mic = read_wav(mic_path).with_context(|| format!("reading {}", mic_path.display()))?;
    let model = load_model(model_path)?;
    let report = match_pair(&acc, &mic, &model, cfg)?;

    if let Some(path) = &cleaned_out {
        if let Some(cleaned) = &report.cleaned_mic {
            write_wav(path, &cleaned.to_signal()?, WavEncoding::Pcm16)?;
        }
    }
    if let Some(path) = &dump_segments {
        std::fs::write(path, serde_json::to_string_pretty(&report.segments)?)?;
    }
    let json = serde_json::to_string_pretty(&report)?;
    match json_out {
        Some(path) => std::fs::write(path, json)?,
        None => println!("{json}"),
    }
    Ok(if report.decision.is_match() { 0 } else { 1 })
}

/// Loads a 44-recording bank either from a directory manifest or from the
/// synthesizer.
fn load_bank(
    bank_dir: Option<PathBuf>,
    synth_seed: u64,
) -> anyhow::Result<(Vec<SampledSignal>, Vec<SampledSignal>, Vec<PhonemeKind>)> {
    match bank_dir {
        Some(dir) => {
            let manifest_path = dir.join("manifest.json");
            let manifest: serde_json::Value =
                serde_json::from_str(&std::fs::read_to_string(&manifest_path).with_context(
                    || format!("reading {}", manifest_path.display()),
                )?)?;
            let entries = manifest["entries"]
                .as_array()
                .context("manifest has no entries array")?;
            if entries.len() != 44 {
                bail!("bank must hold exactly 44 recordings, found {}", entries.len());
            }
            let mut acc = Vec::new();
            let mut mic = Vec::new();
            let mut kinds = Vec::new();
            for e in entries {
                let acc_file = e["acc"].as_str().context("entry without acc file")?;
                let mic_file = e["mic"].as_str().context("entry without mic file")?;
                acc.push(read_wav(&dir.join(acc_file))?);
                mic.push(read_wav(&dir.join(mic_file))?);
                kinds.push(match e["kind"].as_str() {
                    Some("vowel") => PhonemeKind::Vowel,
                    _ => PhonemeKind::Consonant,
                });
            }
            Ok((acc, mic, kinds))
        }
        None => {
            let bank = synth_phoneme_bank(synth_seed)?;
            let acc = bank.iter().map(|e| e.pair.acc.clone()).collect();
            let mic = bank.iter().map(|e| e.pair.mic.clone()).collect();
            let kinds = bank.iter().map(|e| e.kind).collect();
            Ok((acc, mic, kinds))
        }
    }
}

pub fn cmd_train(
    cfg: &PipelineConfig,
    bank_dir: Option<PathBuf>,
    synth_seed: u64,
    replication: usize,
    out: &Path,
    csv_out: Option<PathBuf>,
    verbose: bool,
) -> anyhow::Result<u8> {
    if replication == 0 {
        bail!("replication must be at least 1");
    }
    let (acc, mic, _) = load_bank(bank_dir, synth_seed)?;
    if verbose {
        eprintln!("building training set from {} recording pairs", acc.len());
    }
    let examples = build_training_set(&acc, &mic, replication, cfg)?;
    let n_pos = examples.iter().filter(|e| e.label == Label::Match).count();
    let n_neg = examples.len() - n_pos;

    let mut model = train_classifier(&examples, &TrainConfig::default())?;
    model.meta.config_digest = cfg.digest();

    let correct = examples
        .iter()
        .filter(|e| {
            (model.decision_value(&e.fv) > 0.0) == (e.label == Label::Match)
        })
        .count();
    let accuracy = correct as f64 / examples.len() as f64;

    save_model(&model, out)?;
    if let Some(path) = csv_out {
        write_training_csv(&examples, &path)?;
    }
    println!(
        "trained on {} examples ({} positive after x{} replication, {} negative)",
        examples.len(),
        n_pos,
        replication,
        n_neg
    );
    println!("training accuracy: {:.2}%", accuracy * 100.0);
    println!("model written to {}", out.display());
    Ok(0)
}

#[derive(Subcommand)]
pub enum SynthCommand {
    /// Write the 44-phoneme bank as paired WAV files plus a manifest.
    Bank {
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a multi-speaker command corpus.
    Corpus {
        #[arg(long, default_value_t = 4)]
        speakers: usize,
        #[arg(long, default_value_t = 6)]
        utterances: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write one noise fixture.
    Noise {
        /// white | periodic | spike
        #[arg(long)]
        kind: String,
        #[arg(long, default_value_t = 0.1)]
        level: f64,
        #[arg(long, default_value_t = 2.0)]
        duration: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

pub fn cmd_synth(what: SynthCommand, seed: u64) -> anyhow::Result<u8> {
    match what {
        SynthCommand::Bank { out } => {
            std::fs::create_dir_all(&out)?;
            let bank = synth_phoneme_bank(seed)?;
            let mut entries = Vec::new();
            for (i, e) in bank.iter().enumerate() {
                let acc_file = format!("{i:02}_{}_acc.wav", e.name);
                let mic_file = format!("{i:02}_{}_mic.wav", e.name);
                write_wav(&out.join(&acc_file), &e.pair.acc, WavEncoding::Float32)?;
                write_wav(&out.join(&mic_file), &e.pair.mic, WavEncoding::Float32)?;
                entries.push(serde_json::json!({
                    "index": i,
                    "name": e.name,
                    "kind": match e.kind { PhonemeKind::Vowel => "vowel", PhonemeKind::Consonant => "consonant" },
                    "f0_hz": e.f0_hz,
                    "acc": acc_file,
                    "mic": mic_file,
                    "truth": e.pair.truth,
                }));
            }
            let manifest = serde_json::json!({ "seed": seed, "entries": entries });
            std::fs::write(
                out.join("manifest.json"),
                serde_json::to_string_pretty(&manifest)?,
            )?;
            println!("wrote 44 pairs to {}", out.display());
            Ok(0)
        }
        SynthCommand::Corpus {
            speakers,
            utterances,
            out,
        } => {
            std::fs::create_dir_all(&out)?;
            let corpus = synth_command_corpus(seed, speakers, utterances)?;
            let mut entries = Vec::new();
            for sp in &corpus {
                for (u, pair) in sp.utterances.iter().enumerate() {
                    let acc_file = format!("sp{:02}_utt{:02}_acc.wav", sp.speaker_id, u);
                    let mic_file = format!("sp{:02}_utt{:02}_mic.wav", sp.speaker_id, u);
                    write_wav(&out.join(&acc_file), &pair.acc, WavEncoding::Float32)?;
                    write_wav(&out.join(&mic_file), &pair.mic, WavEncoding::Float32)?;
                    entries.push(serde_json::json!({
                        "speaker": sp.speaker_id,
                        "utterance": u,
                        "f0_base_hz": sp.f0_base_hz,
                        "acc": acc_file,
                        "mic": mic_file,
                        "truth": pair.truth,
                    }));
                }
            }
            std::fs::write(
                out.join("manifest.json"),
                serde_json::to_string_pretty(&serde_json::json!({
                    "seed": seed, "entries": entries
                }))?,
            )?;
            println!(
                "wrote {} utterances for {} speakers to {}",
                speakers * utterances,
                speakers,
                out.display()
            );
            Ok(0)
        }
        SynthCommand::Noise {
            kind,
            level,
            duration,
            out,
        } => {
            let kind = match kind.as_str() {
                "white" => NoiseKind::White,
                "periodic" => NoiseKind::Periodic,
                "spike" => NoiseKind::Spike,
                other => bail!("unknown noise kind {other}"),
            };
            let signal = make_noise(kind, level, duration, seed);
            write_wav(&out, &signal, WavEncoding::Float32)?;
            println!("wrote {}", out.display());
            Ok(0)
        }
    }
}

fn obtain_model(
    cfg: &PipelineConfig,
    model_path: Option<PathBuf>,
    seed: u64,
    verbose: bool,
) -> anyhow::Result<ClassifierModel> {
    match model_path {
        Some(path) => Ok(load_model(&path)?),
        None => {
            if verbose {
                eprintln!("no model given; training on the synthetic bank (seed {seed})");
            }
            let (acc, mic, _) = load_bank(None, seed)?;
            let examples = build_training_set(&acc, &mic, 5, cfg)?;
            let mut model = train_classifier(&examples, &TrainConfig::default())?;
            model.meta.config_digest = cfg.digest();
            Ok(model)
        }
    }
}

/// TP/FP per phoneme-class block, shaped like the detection-accuracy table.
fn phoneme_table(outcome: &BatchOutcome, kinds: &[PhonemeKind]) -> Vec<serde_json::Value> {
    let n = outcome.n;
    let block = |mic_kind: Option<PhonemeKind>, acc_kind: Option<PhonemeKind>| {
        let mut tp_n = 0usize;
        let mut tp_hit = 0usize;
        let mut fp_n = 0usize;
        let mut fp_hit = 0usize;
        for i in 0..n {
            for j in 0..n {
                if acc_kind.is_some_and(|k| kinds[i] != k)
                    || mic_kind.is_some_and(|k| kinds[j] != k)
                {
                    continue;
                }
                let matched = outcome.report(i, j).decision.is_match();
                if i == j {
                    tp_n += 1;
                    tp_hit += usize::from(matched);
                } else {
                    fp_n += 1;
                    fp_hit += usize::from(matched);
                }
            }
        }
        let tp = if tp_n == 0 {
            serde_json::Value::Null
        } else {
            serde_json::json!(100.0 * tp_hit as f64 / tp_n as f64)
        };
        serde_json::json!({
            "mic": mic_kind.map(|k| format!("{k:?}").to_lowercase()).unwrap_or("all".into()),
            "acc": acc_kind.map(|k| format!("{k:?}").to_lowercase()).unwrap_or("all".into()),
            "tp_pct": tp,
            "fp_pct": 100.0 * fp_hit as f64 / fp_n.max(1) as f64,
        })
    };
    vec![
        block(Some(PhonemeKind::Consonant), Some(PhonemeKind::Consonant)),
        block(Some(PhonemeKind::Consonant), Some(PhonemeKind::Vowel)),
        block(Some(PhonemeKind::Vowel), Some(PhonemeKind::Consonant)),
        block(Some(PhonemeKind::Vowel), Some(PhonemeKind::Vowel)),
        block(None, None),
    ]
}

fn write_json_and_csv(
    out: &Path,
    name: &str,
    json: &serde_json::Value,
    csv_header: &str,
    csv_rows: &[String],
) -> anyhow::Result<()> {
    std::fs::create_dir_all(out)?;
    std::fs::write(
        out.join(format!("{name}.json")),
        serde_json::to_string_pretty(json)?,
    )?;
    let mut csv = String::from(csv_header);
    csv.push('\n');
    for row in csv_rows {
        csv.push_str(row);
        csv.push('\n');
    }
    std::fs::write(out.join(format!("{name}.csv")), csv)?;
    Ok(())
}

pub fn cmd_bench(
    cfg: &PipelineConfig,
    suite: &str,
    out: &Path,
    model_path: Option<PathBuf>,
    seed: u64,
    verbose: bool,
) -> anyhow::Result<u8> {
    match suite {
        "phoneme" => {
            let model = obtain_model(cfg, model_path, seed, verbose)?;
            let (acc, mic, kinds) = load_bank(None, seed)?;
            let pairs: Vec<(SampledSignal, SampledSignal)> =
                acc.into_iter().zip(mic).collect();
            let outcome = batch_match(&pairs, &model, cfg);
            let table = phoneme_table(&outcome, &kinds);
            let rows: Vec<String> = table
                .iter()
                .map(|r| {
                    format!(
                        "{},{},{},{:.2}",
                        r["mic"].as_str().unwrap(),
                        r["acc"].as_str().unwrap(),
                        r["tp_pct"]
                            .as_f64()
                            .map(|v| format!("{v:.2}"))
                            .unwrap_or_else(|| "-".into()),
                        r["fp_pct"].as_f64().unwrap()
                    )
                })
                .collect();
            let json = serde_json::json!({
                "suite": "phoneme",
                "seed": seed,
                "config_digest": cfg.digest(),
                "tp_rate": outcome.table.tp_rate(),
                "fp_rate": outcome.table.fp_rate(),
                "blocks": table,
            });
            write_json_and_csv(out, "phoneme", &json, "mic,acc,tp_pct,fp_pct", &rows)?;
            println!(
                "phoneme bank: TP {:.1}% FP {:.2}%",
                100.0 * outcome.table.tp_rate(),
                100.0 * outcome.table.fp_rate()
            );
            Ok(0)
        }
        "command" => {
            let model = obtain_model(cfg, model_path, seed, verbose)?;
            let corpus = synth_command_corpus(seed, 4, 5)?;
            let pairs: Vec<(SampledSignal, SampledSignal)> = corpus
                .iter()
                .flat_map(|sp| {
                    sp.utterances
                        .iter()
                        .map(|u| (u.acc.clone(), u.mic.clone()))
                })
                .collect();
            let outcome = batch_match(&pairs, &model, cfg);
            let json = serde_json::json!({
                "suite": "command",
                "seed": seed,
                "config_digest": cfg.digest(),
                "n_utterances": pairs.len(),
                "tp_rate": outcome.table.tp_rate(),
                "fp_rate": outcome.table.fp_rate(),
            });
            let rows = vec![format!(
                "{},{:.4},{:.4}",
                pairs.len(),
                outcome.table.tp_rate(),
                outcome.table.fp_rate()
            )];
            write_json_and_csv(out, "command", &json, "n,tp_rate,fp_rate", &rows)?;
            println!(
                "command corpus: TP {:.1}% FP {:.2}%",
                100.0 * outcome.table.tp_rate(),
                100.0 * outcome.table.fp_rate()
            );
            Ok(0)
        }
        "attack" => {
            let model = obtain_model(cfg, model_path, seed, verbose)?;
            run_attack_suite(cfg, &model, out, seed)
        }
        "fpdecay" => {
            let dist = UniformScores::new(0.0, 0.5);
            let rows = fp_decay_montecarlo(&dist, 0.4, &[1, 2, 4, 8, 16], 100_000, seed)?;
            let csv_rows: Vec<String> = rows
                .iter()
                .map(|r| {
                    format!(
                        "{},{},{},{}",
                        r.n, r.empirical_fp, r.hoeffding_bound, r.mc_stderr
                    )
                })
                .collect();
            let json = serde_json::json!({
                "suite": "fpdecay",
                "seed": seed,
                "threshold": 0.4,
                "rows": rows,
            });
            write_json_and_csv(
                out,
                "fpdecay",
                &json,
                "n,empirical_fp,hoeffding_bound,mc_stderr",
                &csv_rows,
            )?;
            for r in &rows {
                println!(
                    "n={:<3} empirical {:.6} bound {:.6}",
                    r.n, r.empirical_fp, r.hoeffding_bound
                );
            }
            Ok(0)
        }
        other => bail!("unknown suite {other} (phoneme|command|attack|fpdecay)"),
    }
}

fn run_attack_suite(
    cfg: &PipelineConfig,
    model: &ClassifierModel,
    out: &Path,
    seed: u64,
) -> anyhow::Result<u8> {
    let corpus = synth_command_corpus(seed, 3, 4)?;
    let flat: Vec<_> = corpus
        .iter()
        .flat_map(|sp| sp.utterances.iter().cloned())
        .collect();

    let mangled = run_mangled_attack(
        &flat,
        model,
        cfg,
        &MfccParams::default(),
        &[15, 30],
        32,
    );
    let replay = run_replay_attack(&corpus, model, cfg);
    let imper = run_impersonation_attack(&corpus, model, cfg);
    let injection = run_injection_attack(0.5, 10, &flat[0].mic, model, cfg, seed);

    let json = serde_json::json!({
        "suite": "attack",
        "seed": seed,
        "config_digest": cfg.digest(),
        "mangled": mangled,
        "replay": replay,
        "impersonation": imper,
        "injection": injection.report,
        "injection_sweep": injection.rows,
    });
    let rows = vec![
        format!("mangled,{},{},{:.4}", mangled.trials, mangled.accepted, mangled.rejection_rate),
        format!("replay,{},{},{:.4}", replay.trials, replay.accepted, replay.rejection_rate),
        format!(
            "impersonation,{},{},{:.4}",
            imper.trials, imper.accepted, imper.rejection_rate
        ),
        format!(
            "injection,{},{},{:.4}",
            injection.report.trials, injection.report.accepted, injection.report.rejection_rate
        ),
    ];
    write_json_and_csv(out, "attack", &json, "scenario,trials,accepted,rejection_rate", &rows)?;

    let sweep_rows: Vec<String> = injection
        .rows
        .iter()
        .map(|r| format!("{},{}", r.level, u8::from(r.accepted)))
        .collect();
    write_json_and_csv(
        out,
        "injection_sweep",
        &serde_json::json!({ "rows": injection.rows }),
        "level,accepted",
        &sweep_rows,
    )?;

    for (name, r) in [
        ("mangled", &mangled),
        ("replay", &replay),
        ("impersonation", &imper),
        ("injection", &injection.report),
    ] {
        println!(
            "{name}: {}/{} accepted, rejection {:.1}%",
            r.accepted,
            r.trials,
            100.0 * r.rejection_rate
        );
    }
    Ok(0)
}

pub fn cmd_attack(
    cfg: &PipelineConfig,
    scenario: &str,
    model_path: &Path,
    out: &Path,
    seed: u64,
) -> anyhow::Result<u8> {
    let model = load_model(model_path)?;
    match scenario {
        "all" => return run_attack_suite(cfg, &model, out, seed),
        "mangled" | "replay" | "impersonation" | "injection" => {}
        other => bail!("unknown scenario {other}"),
    }
    let corpus = synth_command_corpus(seed, 3, 4)?;
    let flat: Vec<_> = corpus
        .iter()
        .flat_map(|sp| sp.utterances.iter().cloned())
        .collect();
    let report = match scenario {
        "mangled" => run_mangled_attack(
            &flat,
            &model,
            cfg,
            &MfccParams::default(),
            &[15, 30],
            32,
        ),
        "replay" => run_replay_attack(&corpus, &model, cfg),
        "impersonation" => run_impersonation_attack(&corpus, &model, cfg),
        "injection" => {
            let inj = run_injection_attack(0.5, 10, &flat[0].mic, &model, cfg, seed);
            let sweep_rows: Vec<String> = inj
                .rows
                .iter()
                .map(|r| format!("{},{}", r.level, u8::from(r.accepted)))
                .collect();
            write_json_and_csv(
                out,
                "injection_sweep",
                &serde_json::json!({ "rows": inj.rows }),
                "level,accepted",
                &sweep_rows,
            )?;
            inj.report
        }
        _ => unreachable!(),
    };
    let rows = vec![format!(
        "{scenario},{},{},{:.4}",
        report.trials, report.accepted, report.rejection_rate
    )];
    write_json_and_csv(
        out,
        scenario,
        &serde_json::to_value(&report)?,
        "scenario,trials,accepted,rejection_rate",
        &rows,
    )?;
    println!(
        "{scenario}: {}/{} accepted, rejection {:.1}%",
        report.accepted,
        report.trials,
        100.0 * report.rejection_rate
    );
    Ok(0)
}

pub fn cmd_serve(
    cfg: &PipelineConfig,
    listen: &str,
    model_path: &Path,
    timeout_sec: f64,
) -> anyhow::Result<u8> {
    let model = load_model(model_path)?;
    let server_cfg = ServerConfig {
        session_timeout: std::time::Duration::from_secs_f64(timeout_sec),
        pipeline: cfg.clone(),
    };
    serve(listen, model, server_cfg)?;
    Ok(0)
}
